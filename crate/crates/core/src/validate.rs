//! Cross-validation suite: every identity the crate relies on, checked by
//! independent routes on given and random graphs, plus the Monte-Carlo
//! oracle on the two reference chains.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds;
use crate::error::Result;
use crate::forest::{self, ForestOptions, ForestWeights, RationalGraph};
use crate::graph::{RateGraph, ScalarField, StateSet};
use crate::potential::{self, MfptMethod, QuasipotentialMethod, QuasipotentialOptions};
use crate::random::{self, RandomGraphConfig};
use crate::report::ValidationReport;
use crate::spectral;
use crate::trajectory::{self, Start};

/// Check thresholds; relative ones are scaled as documented per field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Pairwise quasipotential agreement, times `‖f‖∞`.
    pub quasipotential: f64,
    /// Quasipotential residual `‖LV + f‖∞`, times `‖f‖∞`.
    pub poisson_residual: f64,
    /// Entrywise relative MFPT agreement.
    pub mfpt: f64,
    /// Relative agreement of Kirchhoff and null-space `ρ`.
    pub kirchhoff: f64,
    /// Entrywise relative agreement of graphical and inverted resolvents.
    pub resolvent: f64,
    /// Graphical vs. algebraic group inverse, relative to the largest entry.
    pub group_inverse: f64,
    /// Group-inverse axioms, times `‖L‖`.
    pub axioms: f64,
    /// Absolute sum-rule residual.
    pub sum_rule: f64,
    /// Kemeny spread and `W₂/W` match, relative to the value.
    pub kemeny: f64,
    /// `ṽ` antisymmetry, times `‖f‖·max τ`.
    pub antisymmetry: f64,
    /// Green reconstruction, times `‖f‖∞`.
    pub green: f64,
    /// Monte-Carlo acceptance band in standard errors.
    pub mc_sigma: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quasipotential: 1e-7,
            poisson_residual: 1e-9,
            mfpt: 1e-8,
            kirchhoff: 1e-9,
            resolvent: 1e-9,
            group_inverse: 1e-9,
            axioms: 1e-9,
            sum_rule: 1e-10,
            kemeny: 1e-9,
            antisymmetry: 1e-10,
            green: 1e-8,
            mc_sigma: 4.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationConfig {
    pub n_random: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub family: RandomGraphConfig,
    /// Samples per Monte-Carlo estimate; zero skips the oracle.
    pub mc_samples: usize,
    pub forest: ForestOptions,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            n_random: 50,
            seed: 0,
            tolerances: Tolerances::default(),
            family: RandomGraphConfig::default(),
            mc_samples: 10_000,
            forest: ForestOptions::default(),
        }
    }
}

fn max_rel_entrywise(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let s = x.abs().max(y.abs());
            if s == 0.0 { 0.0 } else { (x - y).abs() / s }
        })
        .fold(0.0, f64::max)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Every identity on one graph with source `f`; `rng` draws the subsets and
/// decompositions.
pub fn validate_graph(
    g: &RateGraph,
    f: &ScalarField,
    rng: &mut impl Rng,
    tol: &Tolerances,
    opts: &ForestOptions,
) -> Result<ValidationReport> {
    let n = g.n();
    let l = g.generator();
    let mut r = ValidationReport::new();

    // stationary distribution
    let rho = spectral::stationary_distribution(&l)?.into_values();
    let enumerate = opts.use_enumeration(n).unwrap_or(false);
    let fw = forest::forest_weights(g, opts)?;
    let kir = fw.kirchhoff();
    let rel = kir
        .iter()
        .zip(&rho)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    r.check_le("stationary/kirchhoff_vs_nullspace", rel, tol.kirchhoff);
    r.check_le(
        "stationary/residual",
        spectral::stationarity_residual(&l, &rho),
        1e-12 * l.norm(),
    );

    // quasipotential by three routes
    let f = f.centered(&rho);
    let fs = f.sup_norm().max(f64::MIN_POSITIVE);
    let qopts = QuasipotentialOptions {
        auto_center: false,
        forest: *opts,
    };
    let qs = QuasipotentialMethod::ALL
        .iter()
        .map(|&m| potential::quasipotential(g, &f, m, &qopts))
        .collect::<Result<Vec<_>>>()?;
    for q in &qs {
        r.check_le(
            format!("quasipotential/residual_{}", q.method.name()),
            q.residual,
            tol.poisson_residual * fs,
        );
        r.check_le(
            format!("quasipotential/centered_{}", q.method.name()),
            q.values.mean(&rho).abs(),
            1e-11 * fs.max(1.0),
        );
    }
    for i in 0..3 {
        for j in i + 1..3 {
            r.check_le(
                format!("quasipotential/{}_vs_{}", qs[i].method.name(), qs[j].method.name()),
                max_abs_diff(qs[i].values.values(), qs[j].values.values()),
                tol.quasipotential * fs,
            );
        }
    }
    let v = &qs[0].values;

    // first-passage times by three routes
    let taus = MfptMethod::ALL
        .iter()
        .map(|&m| potential::mfpt_matrix(g, m, opts))
        .collect::<Result<Vec<_>>>()?;
    let tau = &taus[0];
    let tmax = tau.max();
    for (m, t) in MfptMethod::ALL.iter().zip(&taus) {
        r.check_le(format!("mfpt/residual_{}", m.name()), t.residual(g), 1e-9 * tmax.max(1.0));
        let positive = (0..n).all(|x| (0..n).all(|z| x == z || t.get(x, z) > 0.0));
        r.check(format!("mfpt/positive_{}", m.name()), positive, "");
    }
    for i in 0..3 {
        for j in i + 1..3 {
            r.check_le(
                format!("mfpt/{}_vs_{}", MfptMethod::ALL[i].name(), MfptMethod::ALL[j].name()),
                taus[i].max_relative_difference(&taus[j]),
                tol.mfpt,
            );
        }
    }

    // Green functions
    let vg = potential::quasipotential_from_green(g, &f, tau)?;
    r.check_le("green/reconstruction", max_abs_diff(vg.values(), v.values()), tol.green * fs);
    r.check_le(
        "green/differences",
        potential::green_difference_residual(&rho, &f, v, tau),
        tol.green * fs,
    );
    let gf = (0..n)
        .map(|z| potential::green_function_residual(g, &rho, tau, z) * rho[z])
        .fold(0.0, f64::max);
    r.check_le("green/first_passage_columns", gf, 1e-9 * tmax.max(1.0));

    // graphical resolvent and group inverse against linear algebra
    let gi = spectral::group_inverse(&l)?;
    r.absorb(
        "group_inverse",
        spectral::verify_group_axioms_with(&l, gi.matrix(), tol.axioms)?,
    );
    if enumerate {
        let tables = forest::forest_tables(g, opts.cap)?;
        for alpha in [0.1, 1.0, 10.0] {
            let direct = spectral::resolvent(&l, alpha)?;
            let graphical = forest::resolvent_by_forests(&tables, alpha);
            r.check_le(
                format!("resolvent/alpha_{alpha}"),
                max_rel_entrywise(&graphical, &direct),
                tol.resolvent,
            );
        }
        let gf = ForestWeights::from_tables(&tables).group_inverse();
        let d = (&gf - gi.matrix()).amax() / gi.matrix().amax();
        r.check_le("group_inverse/forest_formula", d, tol.group_inverse);
        let alg = forest::forest_weights(g, &ForestOptions::algebraic())?;
        r.check_le(
            "forest/two_tree_algebraic",
            max_rel_entrywise(&alg.separated, &fw.separated),
            1e-8,
        );
    } else {
        r.warn(format!("n = {n} above the enumeration cap: graphical resolvent skipped"));
    }

    // exact identities
    let half = n.div_ceil(2);
    for size in [1, half, n - 1] {
        let h = random::random_subset(rng, n, size);
        r.check_le(
            format!("sum_rule/size_{size}"),
            potential::escape_sum_rule_residual(g, &h)?,
            tol.sum_rule,
        );
    }
    let k = potential::kemeny_functional(g, opts)?;
    r.check_le("kemeny/spread", k.max_spread, tol.kemeny * k.value);
    r.check_le("kemeny/two_tree_ratio", (k.value - k.forest_value).abs(), tol.kemeny * k.value);
    let (anti, diff) = bounds::passage_identity_residuals(g, &f)?;
    let scale = fs * tmax;
    r.check_le("passage/antisymmetry", anti, tol.antisymmetry * scale);
    r.check_le("passage/difference", diff, tol.antisymmetry * scale);
    let h = random::random_field(rng, n);
    for t in [0.1, 1.0, 10.0] {
        r.check_le(
            format!("semigroup/mean_t{t}"),
            potential::semigroup_mean_residual(g, h.values(), t)?,
            1e-10 * h.sup_norm().max(1.0),
        );
    }
    if n <= 5 {
        let rg = RationalGraph::from_rate_graph(g);
        let ok = (0..n).all(|x| forest::check_tree_swap(&rg, x).passed());
        r.check("tree_swap/rational", ok, "");
    }

    // bounds
    let pair = bounds::all_pair_bounds(g, &f)?;
    r.check_le("bounds/pair", pair.worst_excess(), pair.tolerance);
    r.absorb("bounds", bounds::path_chaining_check(g, &f)?);
    let (fd, e, d) = random_decomposition(g, &rho, rng);
    let dec = bounds::decomposed_bound(g, &fd, &e, &d)?;
    r.check_le("bounds/decomposed", dec.worst_excess(), dec.tolerance);
    r.check_le(
        "bounds/decomposed_reconstruction",
        dec.details["reconstruction_residual"],
        1e-9 * fd.sup_norm().max(1.0) * tmax.max(1.0),
    );
    let fe = ScalarField::new(l.apply(e.values()));
    let tight = bounds::decomposed_bound(g, &fe, &e, &StateSet::from_indices(n, &[])?)?;
    let gap = tight
        .entries
        .iter()
        .map(|en| (en.bound - en.attained).abs())
        .fold(0.0, f64::max);
    r.check_le("bounds/decomposed_gradient_equality", gap, 1e-10 * e.sup_norm().max(1.0));
    let two = bounds::two_tree_bound(g, &f)?;
    r.check_le("bounds/two_tree", two.worst_excess(), two.tolerance);
    let global = bounds::global_bound(g, &f)?;
    if !global.passed {
        r.warn(format!(
            "n‖k‖^(n-2)‖f‖/W exceeded by {:e} (W2 = {:e} vs n‖k‖^(n-2) = {:e}); advisory",
            global.worst_excess(),
            global.details["W2"],
            n as f64 * global.details["k_max"].powi(n as i32 - 2),
        ));
    }
    Ok(r)
}

/// Random `E`, random nonempty `D`, and `h` supported on `D` with
/// `⟨h⟩ = 0`; returns `(LE + h, E, D)`.
pub fn random_decomposition(
    g: &RateGraph,
    rho: &[f64],
    rng: &mut impl Rng,
) -> (ScalarField, ScalarField, StateSet) {
    let n = g.n();
    let e = random::random_field(rng, n);
    let size = rng.random_range(1..=n);
    let d = random::random_subset(rng, n, size);
    let mut h = vec![0.0; n];
    for z in d.members() {
        h[z] = rng.random_range(-1.0..=1.0);
    }
    let mass: f64 = d.members().iter().map(|&z| rho[z]).sum();
    let mean: f64 = h.iter().zip(rho).map(|(a, p)| a * p).sum();
    for z in d.members() {
        h[z] -= mean / mass;
    }
    let le = g.generator().apply(e.values());
    let f = ScalarField::new((0..n).map(|x| le[x] + h[x]).collect());
    (f, e, d)
}

/// The two reference chains: `a ⇄ b` with rates 2 and 1, and the
/// unit-rate three-cycle.
pub fn reference_graphs() -> [(RateGraph, ScalarField); 2] {
    let two = RateGraph::from_indexed(vec!["a".into(), "b".into()], [(0, 1, 2.0), (1, 0, 1.0)])
        .expect("valid");
    let ring = RateGraph::from_indexed(
        vec!["1".into(), "2".into(), "3".into()],
        [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
    )
    .expect("valid");
    [
        (two, ScalarField::new(vec![2.0 / 3.0, -1.0 / 3.0])),
        (ring, ScalarField::new(vec![1.0, 0.0, -1.0])),
    ]
}

/// Monte-Carlo estimates against exact values on one graph.
pub fn monte_carlo_checks(
    g: &RateGraph,
    f: &ScalarField,
    samples: usize,
    seed: u64,
    sigma: f64,
) -> Result<ValidationReport> {
    let n = g.n();
    let mut r = ValidationReport::new();
    let tau = potential::mfpt_matrix(g, MfptMethod::Linear, &ForestOptions::default())?;
    let v = potential::quasipotential(g, f, QuasipotentialMethod::Linear, &Default::default())?.values;
    let h = StateSet::from_indices(n, &[0])?;
    let vh = potential::stopped_accumulation(
        g,
        &potential::AbsorbingProblem::stopped(h.clone(), f.clone())?,
    )?;
    let gap = spectral::spectral_gap(&g.generator());
    let mut stream = seed;
    let mut next = || {
        stream = stream.wrapping_add(1);
        stream
    };
    for x in 0..n {
        for z in (0..n).filter(|&z| z != x) {
            let e = trajectory::estimate_mfpt(g, x, z, samples, next())?;
            r.check_le(format!("mfpt_{x}_{z}"), e.z_score(tau.get(x, z)), sigma);
            let p = trajectory::estimate_pair_accumulation(g, x, z, f, samples, next())?;
            r.check_le(format!("pair_{x}_{z}"), p.z_score(v[x] - v[z]), sigma);
        }
    }
    let s = trajectory::estimate_stopped_accumulation(g, 0, &h, f, samples, next())?;
    r.check_le("stopped_accumulation", s.z_score(vh[0]), sigma);
    let horizon = 10.0 / gap;
    for x in 0..n {
        let e = trajectory::estimate_excess(g, Start::State(x), f, horizon, samples, next())?;
        let d = (e.estimate.mean - v[x]).abs() - e.truncation_allowance;
        r.check_le(format!("excess_{x}"), d.max(0.0) / e.estimate.std_error, sigma);
    }
    Ok(r)
}

/// Runs the whole suite: reference chains, `n_random` random graphs with
/// random centered sources, and the Monte-Carlo oracle.
pub fn validate_suite(cfg: &ValidationConfig, extra: Option<&RateGraph>) -> Result<ValidationReport> {
    let mut report = ValidationReport::new();
    let tol = &cfg.tolerances;
    for (i, (g, f)) in reference_graphs().iter().enumerate() {
        let mut rng = random::instance_rng(cfg.seed, usize::MAX - i);
        report.absorb(&format!("reference[{i}]"), validate_graph(g, f, &mut rng, tol, &cfg.forest)?);
    }
    if let Some(g) = extra {
        let mut rng = random::instance_rng(cfg.seed, usize::MAX - 2);
        let f = random::random_field(&mut rng, g.n());
        report.absorb("input", validate_graph(g, &f, &mut rng, tol, &cfg.forest)?);
    }
    let family = random::random_family(cfg.seed, cfg.n_random, &cfg.family);
    let parts = family
        .into_par_iter()
        .map(|(g, mut rng)| {
            let f = random::random_field(&mut rng, g.n());
            validate_graph(&g, &f, &mut rng, tol, &cfg.forest)
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, p) in parts.into_iter().enumerate() {
        report.absorb(&format!("random[{i}]"), p);
    }
    if cfg.mc_samples > 0 {
        for (i, (g, f)) in reference_graphs().iter().enumerate() {
            let mc = monte_carlo_checks(g, f, cfg.mc_samples, cfg.seed.wrapping_add(1000 * i as u64), tol.mc_sigma)?;
            report.absorb(&format!("monte_carlo[{i}]"), mc);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_graphs_pass() {
        for (g, f) in reference_graphs() {
            let mut rng = random::instance_rng(1, 0);
            let r = validate_graph(&g, &f, &mut rng, &Tolerances::default(), &ForestOptions::default()).unwrap();
            assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn small_suite_passes() {
        let cfg = ValidationConfig {
            n_random: 5,
            seed: 7,
            mc_samples: 0,
            ..Default::default()
        };
        let r = validate_suite(&cfg, None).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }
}
