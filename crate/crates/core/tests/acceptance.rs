//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line;
//! run with `--nocapture` to see them.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use mjp_poisson::bounds::{self, SweepSource};
use mjp_poisson::forest::{self, FamilyDescriptor, ForestOptions, ForestWeights, RationalGraph};
use mjp_poisson::graph::{ParamRateGraph, RateGraph, ScalarField, StateSet};
use mjp_poisson::potential::{self, AbsorbingProblem, MfptMethod, QuasipotentialMethod};
use mjp_poisson::random::{self, RandomGraphConfig};
use mjp_poisson::spectral;
use mjp_poisson::trajectory::{self, Start};

/// Collects failures for one criterion and prints its summary line.
struct Criterion {
    id: u32,
    failures: Vec<String>,
    checks: usize,
}

impl Criterion {
    fn new(id: u32) -> Self {
        Self { id, failures: Vec::new(), checks: 0 }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn close(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, || format!("{name}: {got} vs {want} (tol {tol:e})"));
    }

    fn finish(self, summary: &str) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {}: {status} ({} checks; {summary})", self.id, self.checks);
        for f in self.failures.iter().take(10) {
            println!("  {f}");
        }
        assert!(self.failures.is_empty(), "criterion {} failed: {} checks", self.id, self.failures.len());
    }
}

fn two_state() -> RateGraph {
    RateGraph::from_indexed(vec!["a".into(), "b".into()], [(0, 1, 2.0), (1, 0, 1.0)]).unwrap()
}

fn ring3() -> RateGraph {
    RateGraph::from_indexed(
        vec!["1".into(), "2".into(), "3".into()],
        [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
    )
    .unwrap()
}

fn rho_of(g: &RateGraph) -> Vec<f64> {
    spectral::stationary_distribution(&g.generator()).unwrap().into_values()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_rel_entrywise(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// `τ(x,z) = w(x,z)/w(z)` from explicitly enumerated forests.
fn enumerated_tau(g: &RateGraph, x: usize, z: usize) -> f64 {
    let sep = forest::enumerate_family(g, FamilyDescriptor::TwoTreeSeparated { x, y: z }, 8).unwrap();
    let trees = forest::enumerate_family(g, FamilyDescriptor::InTrees { root: z }, 8).unwrap();
    sep.total_weight / trees.total_weight
}

const SEED: u64 = 20_240_601;

#[test]
fn criterion_1_worked_examples() {
    let start = Instant::now();
    let mut c = Criterion::new(1);
    let tol = 1e-10;

    let g = two_state();
    let rho = rho_of(&g);
    c.close("2-state rho(a)", rho[0], 1.0 / 3.0, tol);
    c.close("2-state rho(b)", rho[1], 2.0 / 3.0, tol);
    for m in MfptMethod::ALL {
        let t = potential::mfpt_matrix(&g, m, &ForestOptions::default()).unwrap();
        c.close(&format!("2-state tau(a,b) {}", m.name()), t.get(0, 1), 0.5, tol);
        c.close(&format!("2-state tau(b,a) {}", m.name()), t.get(1, 0), 1.0, tol);
    }
    c.close("2-state tau(a,b) enumerated", enumerated_tau(&g, 0, 1), 0.5, tol);
    c.close("2-state tau(b,a) enumerated", enumerated_tau(&g, 1, 0), 1.0, tol);
    let f = ScalarField::new(vec![2.0 / 3.0, -1.0 / 3.0]);
    for m in QuasipotentialMethod::ALL {
        let v = potential::quasipotential(&g, &f, m, &Default::default()).unwrap().values;
        c.close(&format!("2-state V(a) {}", m.name()), v[0], 2.0 / 9.0, tol);
        c.close(&format!("2-state V(b) {}", m.name()), v[1], -1.0 / 9.0, tol);
    }
    let l = g.generator();
    let gi = spectral::group_inverse(&l).unwrap();
    let want = l.matrix() / 9.0;
    c.check((gi.matrix() - &want).amax() <= tol, || format!("L# = {}", gi.matrix()));
    let t = forest::forest_tables(&g, 8).unwrap();
    let gfor = ForestWeights::from_tables(&t).group_inverse();
    c.check((gfor - &want).amax() <= tol, || "forest L# differs from L/9".into());
    let res_want = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.25, 0.75]);
    let res = spectral::resolvent(&l, 1.0).unwrap();
    c.check((res - &res_want).amax() <= tol, || "resolvent at alpha = 1".into());
    let resf = forest::resolvent_by_forests(&t, 1.0);
    c.check((resf - &res_want).amax() <= tol, || "forest resolvent at alpha = 1".into());
    let k = potential::kemeny_functional(&g, &ForestOptions::default()).unwrap();
    c.close("2-state Kemeny", k.value, 1.0 / 3.0, tol);
    c.close("2-state Kemeny forest", k.forest_value, 1.0 / 3.0, tol);
    let pair = bounds::pair_bound(&g, &f, 0, 1).unwrap();
    c.check(pair.passed, || "pair bound failed".into());
    let e = &pair.entries[0];
    c.close("2-state pair bound equality", e.bound, e.attained, tol);
    c.close("2-state pair bound value", e.attained, 1.0 / 3.0, tol);

    let g = ring3();
    let rho = rho_of(&g);
    for (x, r) in rho.iter().enumerate() {
        c.close(&format!("ring rho({x})"), *r, 1.0 / 3.0, tol);
    }
    for m in MfptMethod::ALL {
        let t = potential::mfpt_matrix(&g, m, &ForestOptions::default()).unwrap();
        c.close(&format!("ring tau(1,2) {}", m.name()), t.get(0, 1), 1.0, tol);
        c.close(&format!("ring tau(1,3) {}", m.name()), t.get(0, 2), 2.0, tol);
    }
    c.close("ring tau(1,2) enumerated", enumerated_tau(&g, 0, 1), 1.0, tol);
    c.close("ring tau(1,3) enumerated", enumerated_tau(&g, 0, 2), 2.0, tol);
    let f = ScalarField::new(vec![1.0, 0.0, -1.0]);
    for m in QuasipotentialMethod::ALL {
        let v = potential::quasipotential(&g, &f, m, &Default::default()).unwrap().values;
        let d = max_abs_diff(v.values(), &[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]);
        c.close(&format!("ring V {}", m.name()), d, 0.0, tol);
    }
    let k = potential::kemeny_functional(&g, &ForestOptions::default()).unwrap();
    c.close("ring Kemeny", k.value, 1.0, tol);
    let w2 = forest::enumerate_family(&g, FamilyDescriptor::Graded { m: 1 }, 8).unwrap();
    c.close("ring W2 enumerated", w2.total_weight, 3.0, tol);
    let w2a = forest::total_two_tree_weight(&g, &ForestOptions::algebraic()).unwrap();
    c.close("ring W2 algebraic", w2a, 3.0, tol);

    let elapsed = start.elapsed();
    c.check(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?}"));
    c.finish(&format!("runtime {elapsed:.2?}"));
}

fn family(seed: u64, count: usize) -> Vec<(RateGraph, rand_chacha::ChaCha8Rng)> {
    random::random_family(seed, count, &RandomGraphConfig::default())
}

#[test]
fn criterion_2_cross_method_agreement() {
    let start = Instant::now();
    let mut c = Criterion::new(2);
    let graphs = family(SEED, 50);
    let opts = ForestOptions::default();
    for (i, (g, mut rng)) in graphs.into_iter().enumerate() {
        let rho = rho_of(&g);
        let f = random::random_field(&mut rng, g.n()).centered(&rho);
        let fs = f.sup_norm();
        let qs: Vec<_> = QuasipotentialMethod::ALL
            .iter()
            .map(|&m| potential::quasipotential(&g, &f, m, &Default::default()).unwrap())
            .collect();
        for a in 0..3 {
            for b in a + 1..3 {
                let d = max_abs_diff(qs[a].values.values(), qs[b].values.values());
                c.check(d <= 1e-7 * fs, || {
                    format!("graph {i}: V {} vs {}: {d:e}", qs[a].method.name(), qs[b].method.name())
                });
            }
        }
        let taus: Vec<_> = MfptMethod::ALL
            .iter()
            .map(|&m| potential::mfpt_matrix(&g, m, &opts).unwrap())
            .collect();
        for a in 0..3 {
            for b in a + 1..3 {
                let d = taus[a].max_relative_difference(&taus[b]);
                c.check(d <= 1e-8, || format!("graph {i}: tau methods {a} vs {b}: {d:e}"));
            }
        }
        for fo in [ForestOptions::enumerate(), ForestOptions::algebraic()] {
            let kir = forest::forest_weights(&g, &fo).unwrap().kirchhoff();
            let d = kir.iter().zip(&rho).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
            c.check(d <= 1e-9, || format!("graph {i}: Kirchhoff {:?}: {d:e}", fo.mode));
        }
    }
    let elapsed = start.elapsed();
    c.check(elapsed < Duration::from_secs(30), || format!("runtime {elapsed:?}"));
    c.finish(&format!("50 graphs, runtime {elapsed:.2?}"));
}

#[test]
fn criterion_3_graphical_algebraic_identities() {
    let mut c = Criterion::new(3);
    for (i, (g, _)) in family(SEED, 50).into_iter().enumerate() {
        let l = g.generator();
        let t = forest::forest_tables(&g, 8).unwrap();
        for alpha in [0.1, 1.0, 10.0] {
            let d = max_rel_entrywise(&forest::resolvent_by_forests(&t, alpha), &spectral::resolvent(&l, alpha).unwrap());
            c.check(d <= 1e-9, || format!("graph {i}: resolvent alpha {alpha}: {d:e}"));
        }
        let gi = spectral::group_inverse(&l).unwrap();
        let gf = ForestWeights::from_tables(&t).group_inverse();
        let d = (&gf - gi.matrix()).amax() / gi.matrix().amax();
        c.check(d <= 1e-9, || format!("graph {i}: group inverse: {d:e}"));
        // axioms checked directly on both matrices
        let lm = l.matrix();
        for (name, x) in [("algebraic", gi.matrix().clone()), ("graphical", gf)] {
            let r1 = (lm * &x * lm - lm).amax();
            let r2 = (&x * lm * &x - &x).amax() / x.amax();
            let r3 = (lm * &x - &x * lm).amax();
            let worst = r1.max(r3) / l.norm();
            c.check(worst <= 1e-9 && r2 <= 1e-9, || {
                format!("graph {i}: {name} axioms {r1:e} {r2:e} {r3:e}")
            });
        }
    }
    c.finish("50 graphs, alpha in {0.1, 1, 10}");
}

#[test]
fn criterion_4_exact_identities() {
    let mut c = Criterion::new(4);
    let mut swaps = 0;
    for (i, (g, mut rng)) in family(SEED, 50).into_iter().enumerate() {
        let n = g.n();
        for size in [1, n.div_ceil(2), n - 1] {
            let h = random::random_subset(&mut rng, n, size);
            let r = potential::escape_sum_rule_residual(&g, &h).unwrap();
            c.check(r <= 1e-10, || format!("graph {i}: sum rule |H| = {size}: {r:e}"));
        }
        let k = potential::kemeny_functional(&g, &ForestOptions::default()).unwrap();
        c.check(k.max_spread <= 1e-9 * k.value, || format!("graph {i}: Kemeny spread {:e}", k.max_spread));
        let d = (k.value - k.forest_value).abs();
        c.check(d <= 1e-9 * k.value, || format!("graph {i}: Kemeny vs W2/W {d:e}"));
        let rho = rho_of(&g);
        let f = random::random_field(&mut rng, n).centered(&rho);
        let tau = potential::mfpt_matrix(&g, MfptMethod::Linear, &ForestOptions::default()).unwrap();
        let (anti, _) = bounds::passage_identity_residuals(&g, &f).unwrap();
        let scale = f.sup_norm() * tau.max();
        c.check(anti <= 1e-10 * scale, || format!("graph {i}: antisymmetry {anti:e}"));
        if n <= 5 {
            let rg = RationalGraph::from_rate_graph(&g);
            for x in 0..n {
                let r = forest::check_tree_swap(&rg, x);
                c.check(r.passed(), || format!("graph {i}: tree swap at {x}: {r:?}"));
            }
            swaps += 1;
        }
    }
    // small graphs drawn specifically for the exact tree swap
    for n in 3..=5 {
        for (i, (g, _)) in random::random_family(SEED + n as u64, 4, &RandomGraphConfig::with_states(n))
            .into_iter()
            .enumerate()
        {
            let rg = RationalGraph::from_rate_graph(&g);
            for x in 0..n {
                let r = forest::check_tree_swap(&rg, x);
                c.check(r.passed(), || format!("n = {n} graph {i}: tree swap at {x}: {r:?}"));
            }
            swaps += 1;
        }
    }
    c.finish(&format!("50 graphs, {swaps} exact tree-swap graphs"));
}

#[test]
fn criterion_5_bound_suites() {
    let mut c = Criterion::new(5);
    let graphs = family(SEED + 5, 200);
    let mut global_violations = Vec::new();
    let mut two_tree_ok = 0;
    for (i, (g, rng)) in graphs.iter().enumerate() {
        let mut rng = rng.clone();
        let n = g.n();
        let rho = rho_of(g);
        let f = random::random_field(&mut rng, n);

        let pair = bounds::all_pair_bounds(g, &f).unwrap();
        c.check(pair.passed, || format!("graph {i}: pair bound excess {:e}", pair.worst_excess()));

        let global = bounds::global_bound(g, &f).unwrap();
        if !global.passed {
            global_violations.push((i, global.worst_excess(), global.details["W2"], global.details["k_max"]));
        }
        two_tree_ok += bounds::two_tree_bound(g, &f).unwrap().passed as usize;

        if i < 100 {
            let (fd, e, d) = mjp_poisson::validate::random_decomposition(g, &rho, &mut rng);
            let dec = bounds::decomposed_bound(g, &fd, &e, &d).unwrap();
            c.check(dec.passed, || format!("graph {i}: decomposed excess {:e}", dec.worst_excess()));
            // f = LE: h = 0, equality for every pair
            let fe = ScalarField::new(g.generator().apply(e.values()));
            let tight = bounds::decomposed_bound(g, &fe, &e, &StateSet::from_indices(n, &[]).unwrap()).unwrap();
            let gap = tight.entries.iter().map(|en| (en.bound - en.attained).abs()).fold(0.0, f64::max);
            c.check(gap <= 1e-10, || format!("graph {i}: f = LE equality gap {gap:e}"));
        }
    }
    c.check(global_violations.is_empty(), || {
        format!(
            "global bound n‖k‖^(n-2)‖f‖/W violated on {} of 200 graphs, e.g. {:?}",
            global_violations.len(),
            &global_violations[..global_violations.len().min(3)]
        )
    });
    c.finish(&format!(
        "pair on 200, decomposed on 100, global on 200 ({} violations); two-tree bound held on {two_tree_ok} of 200",
        global_violations.len()
    ));
}

#[test]
fn criterion_5_global_bound_counterexample() {
    // complete graph on four states, unit rates: V = f/4 exceeds n‖k‖^(n-2)‖f‖/W = ‖f‖/16
    let arcs = (0..4).flat_map(|x| (0..4).filter(move |&y| y != x).map(move |y| (x, y, 1.0)));
    let g = RateGraph::with_numbered_states(4, arcs).unwrap();
    let f = ScalarField::new(vec![1.0, -1.0, 0.0, 0.0]);
    let v = potential::quasipotential(&g, &f, QuasipotentialMethod::Linear, &Default::default()).unwrap();
    assert!((v.values[0] - 0.25).abs() < 1e-12);
    let rep = bounds::global_bound(&g, &f).unwrap();
    assert!((rep.details["W"] - 64.0).abs() < 1e-9);
    assert!((rep.details["W2"] - 48.0).abs() < 1e-9);
    assert!(!rep.passed);
    assert!(bounds::two_tree_bound(&g, &f).unwrap().passed);
}

#[test]
fn criterion_6_monte_carlo_oracle() {
    let start = Instant::now();
    let mut c = Criterion::new(6);
    let n = 20_000;
    let k = 4.0;

    let run = || {
        let mut out = Vec::new();
        // two-state chain a→b 2, b→a 1: τ(a,b) = 1/2, τ(b,a) = 1,
        // V = (2/9, −1/9) for f = (2/3, −1/3)
        let g = two_state();
        let f = ScalarField::new(vec![2.0 / 3.0, -1.0 / 3.0]);
        out.push(("2-state tau(a,b)", trajectory::estimate_mfpt(&g, 0, 1, n, 601).unwrap(), 0.5, 0.0));
        out.push(("2-state tau(b,a)", trajectory::estimate_mfpt(&g, 1, 0, n, 602).unwrap(), 1.0, 0.0));
        let ha = StateSet::from_indices(2, &[0]).unwrap();
        let fa = ScalarField::new(vec![3.0, 0.0]);
        out.push((
            "2-state stopped accumulation",
            trajectory::estimate_stopped_accumulation(&g, 0, &ha, &fa, n, 603).unwrap(),
            1.5,
            0.0,
        ));
        out.push(("2-state pair (a,b)", trajectory::estimate_pair_accumulation(&g, 0, 1, &f, n, 604).unwrap(), 1.0 / 3.0, 0.0));
        out.push(("2-state pair (b,a)", trajectory::estimate_pair_accumulation(&g, 1, 0, &f, n, 605).unwrap(), -1.0 / 3.0, 0.0));
        let ex = trajectory::estimate_excess(&g, Start::State(0), &f, 10.0, n, 606).unwrap();
        out.push(("2-state excess from a", ex.estimate, 2.0 / 9.0, ex.truncation_allowance));

        // ring 1→2→3→1 unit rates: τ(1,2) = 1, τ(1,3) = 2, V = (2/3, −1/3, −1/3)
        let g = ring3();
        let f = ScalarField::new(vec![1.0, 0.0, -1.0]);
        out.push(("ring tau(1,2)", trajectory::estimate_mfpt(&g, 0, 1, n, 611).unwrap(), 1.0, 0.0));
        out.push(("ring tau(1,3)", trajectory::estimate_mfpt(&g, 0, 2, n, 612).unwrap(), 2.0, 0.0));
        // H = {1, 2} from 1: one unit of time in each before exit
        let h = StateSet::from_indices(3, &[0, 1]).unwrap();
        let fh = ScalarField::new(vec![1.0, 2.0, 0.0]);
        out.push((
            "ring stopped accumulation",
            trajectory::estimate_stopped_accumulation(&g, 0, &h, &fh, n, 613).unwrap(),
            3.0,
            0.0,
        ));
        out.push(("ring pair (1,3)", trajectory::estimate_pair_accumulation(&g, 0, 2, &f, n, 614).unwrap(), 1.0, 0.0));
        out.push(("ring pair (3,1)", trajectory::estimate_pair_accumulation(&g, 2, 0, &f, n, 615).unwrap(), -1.0, 0.0));
        let ex = trajectory::estimate_excess(&g, Start::State(0), &f, 15.0, n, 616).unwrap();
        out.push(("ring excess from 1", ex.estimate, 2.0 / 3.0, ex.truncation_allowance));
        out
    };
    let first = run();
    for (name, est, want, extra) in &first {
        c.check(est.within(*want, k, *extra), || {
            format!("{name}: {} ± {} vs {want} (z = {:.2})", est.mean, est.std_error, est.z_score(*want))
        });
    }
    // the closed forms above against the linear solves
    let g = two_state();
    let p = AbsorbingProblem::stopped(
        StateSet::from_indices(2, &[0]).unwrap(),
        ScalarField::new(vec![3.0, 0.0]),
    )
    .unwrap();
    c.close("2-state stopped solve", potential::stopped_accumulation(&g, &p).unwrap()[0], 1.5, 1e-12);
    let elapsed = start.elapsed();
    let second = run();
    let same = first.iter().zip(&second).all(|(a, b)| a.1 == b.1);
    c.check(same, || "estimates differ between identical seeded runs".into());
    c.check(elapsed < Duration::from_secs(60), || format!("runtime {elapsed:?}"));
    c.finish(&format!("{} estimates, N = {n}, runtime {elapsed:.2?}", first.len()));
}

#[test]
fn criterion_7_lambda_sweep() {
    let mut c = Criterion::new(7);
    // b→a and c→a have zero barrier: the only zero-barrier spanning tree,
    // with prefactor product 1
    let pg = ParamRateGraph::from_indexed(
        vec!["a".into(), "b".into(), "c".into()],
        [
            (0, 1, 1.0, 1.0),
            (1, 0, 1.0, 0.0),
            (0, 2, 1.0, 1.0),
            (2, 0, 1.0, 0.0),
            (1, 2, 1.0, 1.0),
            (2, 1, 1.0, 1.0),
        ],
    )
    .unwrap();
    let f = ScalarField::new(vec![1.0, 0.0, -1.0]);
    let grid: Vec<f64> = (0..=10).map(|i| 2.0 * i as f64).collect();
    let rep = bounds::uniform_bound_sweep(&pg, &SweepSource(f.clone()), &grid).unwrap();
    // n a_max^(n-2) osc(f) / B = 3 · 1 · 2 / 1
    let constant = 6.0;
    let analytic = bounds::analytic_sweep_constant(&pg, &f);
    c.check(analytic.is_some_and(|a| (a - constant).abs() < 1e-12), || format!("analytic constant {analytic:?}"));
    c.check(rep.rows.len() == grid.len(), || "missing rows".into());
    for r in &rep.rows {
        c.check(r.bound <= constant * (1.0 + 1e-12), || format!("lambda {}: bound {} > {constant}", r.lambda, r.bound));
        c.close(&format!("lambda {} best tree", r.lambda), r.best_tree_w, 1.0, 1e-12);
        c.check(r.w >= r.best_tree_w, || format!("lambda {}: W below best tree", r.lambda));
        c.check(r.attained <= r.bound * (1.0 + 1e-12), || format!("lambda {}: |V| {} above bound", r.lambda, r.attained));
    }
    let max_bound = rep.rows.iter().map(|r| r.bound).fold(0.0, f64::max);
    c.finish(&format!("lambda 0..20, max bound {max_bound:.6}, constant {constant}"));
}
