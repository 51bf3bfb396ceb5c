use mjp_poisson::bounds;
use mjp_poisson::forest::{self, ForestOptions, RationalGraph};
use mjp_poisson::graph::{build_rate_graph, RateGraph, ScalarField, StateSet};
use mjp_poisson::potential::{self, MfptMethod, QuasipotentialMethod};
use mjp_poisson::spectral;
use proptest::prelude::*;

/// Ring `0→1→…→0` plus a random subset of the remaining arcs.
fn graph_strategy(max_n: usize) -> impl Strategy<Value = RateGraph> {
    (3..=max_n).prop_flat_map(|n| {
        let pairs = n * n;
        (
            proptest::collection::vec(any::<bool>(), pairs),
            proptest::collection::vec(-2.3f64..2.3, pairs),
        )
            .prop_map(move |(mask, logs)| {
                let mut arcs = Vec::new();
                for x in 0..n {
                    for y in (0..n).filter(|&y| y != x) {
                        if y == (x + 1) % n || mask[x * n + y] {
                            arcs.push((x, y, logs[x * n + y].exp()));
                        }
                    }
                }
                RateGraph::with_numbered_states(n, arcs).unwrap()
            })
    })
}

fn graph_and_field(max_n: usize) -> impl Strategy<Value = (RateGraph, ScalarField)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), proptest::collection::vec(-1.0f64..1.0, n))
            .prop_map(|(g, f)| (g, ScalarField::new(f)))
    })
}

fn rho(g: &RateGraph) -> Vec<f64> {
    spectral::stationary_distribution(&g.generator()).unwrap().into_values()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kirchhoff_matches_nullspace(g in graph_strategy(7)) {
        let r = rho(&g);
        for opts in [ForestOptions::enumerate(), ForestOptions::algebraic()] {
            let k = forest::forest_weights(&g, &opts).unwrap().kirchhoff();
            for (a, b) in k.iter().zip(&r) {
                prop_assert!((a - b).abs() <= 1e-9 * b);
            }
        }
        prop_assert!(r.iter().all(|&p| p > 0.0));
        prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quasipotential_methods_agree((g, f) in graph_and_field(6)) {
        let r = rho(&g);
        let f = f.centered(&r);
        let scale = f.sup_norm().max(1e-300);
        let sols: Vec<_> = QuasipotentialMethod::ALL
            .iter()
            .map(|&m| potential::quasipotential(&g, &f, m, &Default::default()).unwrap())
            .collect();
        let vmax = sols[0].values.sup_norm().max(scale);
        for s in &sols {
            prop_assert!(max_diff(sols[0].values.values(), s.values.values()) <= 1e-7 * vmax);
            prop_assert!(s.values.mean(&r).abs() <= 1e-9 * vmax);
        }
        prop_assert!(sols[0].residual <= 1e-9 * scale.max(vmax * g.generator().norm()));
    }

    #[test]
    fn mfpt_methods_agree(g in graph_strategy(6)) {
        let opts = ForestOptions::default();
        let lin = potential::mfpt_matrix(&g, MfptMethod::Linear, &opts).unwrap();
        for m in [MfptMethod::Forest, MfptMethod::GroupInverse] {
            let t = potential::mfpt_matrix(&g, m, &opts).unwrap();
            prop_assert!(lin.max_relative_difference(&t) <= 1e-8);
        }
        prop_assert!(lin.residual(&g) <= 1e-9 * lin.max().max(1.0) * g.generator().norm());
        for x in 0..g.n() {
            prop_assert_eq!(lin.get(x, x), 0.0);
        }
    }

    #[test]
    fn escape_sum_rule(g in graph_strategy(6), pick in any::<u64>()) {
        let n = g.n();
        let size = 1 + (pick as usize % (n - 1));
        let members: Vec<usize> = (0..size).map(|i| (i + pick as usize) % n).collect();
        let h = StateSet::from_indices(n, &members).unwrap();
        let res = potential::escape_sum_rule_residual(&g, &h).unwrap();
        prop_assert!(res <= 1e-10, "residual {}", res);
    }

    #[test]
    fn kemeny_is_constant(g in graph_strategy(7)) {
        let k = potential::kemeny_functional(&g, &ForestOptions::default()).unwrap();
        prop_assert!(k.max_spread <= 1e-9 * k.value);
        prop_assert!((k.value - k.forest_value).abs() <= 1e-9 * k.value);
    }

    #[test]
    fn passage_accumulations_are_antisymmetric((g, f) in graph_and_field(6)) {
        let (anti, diff) = bounds::passage_identity_residuals(&g, &f).unwrap();
        prop_assert!(anti <= 1e-10 * f.sup_norm().max(1.0) * 10.0, "anti {}", anti);
        prop_assert!(diff <= 1e-8 * f.sup_norm().max(1.0) * 10.0, "diff {}", diff);
    }

    #[test]
    fn tree_swap_is_a_weight_preserving_bijection(g in graph_strategy(5), x in 0usize..5) {
        let rg = RationalGraph::from_rate_graph(&g);
        let r = forest::check_tree_swap(&rg, x % g.n());
        prop_assert!(r.passed(), "{:?}", r);
    }

    #[test]
    fn pair_and_two_tree_bounds_hold((g, f) in graph_and_field(6)) {
        let p = bounds::all_pair_bounds(&g, &f).unwrap();
        prop_assert!(p.passed, "pair excess {}", p.worst_excess());
        let t = bounds::two_tree_bound(&g, &f).unwrap();
        prop_assert!(t.passed, "two-tree excess {}", t.worst_excess());
        let chain = bounds::path_chaining_check(&g, &f).unwrap();
        prop_assert!(chain.passed());
    }

    #[test]
    fn decomposed_bound_holds(g in graph_strategy(6), e in proptest::collection::vec(-1.0f64..1.0, 6),
                              hv in proptest::collection::vec(-1.0f64..1.0, 6), dmask in 1u32..64) {
        let n = g.n();
        let r = rho(&g);
        let mut d: Vec<usize> = (0..n).filter(|z| dmask >> z & 1 == 1).collect();
        if d.is_empty() {
            d.push(0);
        }
        let e = ScalarField::new(e[..n].to_vec());
        // h supported on D and centered: subtract a multiple of ρ restricted to D
        let mut h: Vec<f64> = (0..n).map(|z| if d.contains(&z) { hv[z] } else { 0.0 }).collect();
        let mass: f64 = d.iter().map(|&z| r[z]).sum();
        let mean: f64 = h.iter().zip(&r).map(|(a, p)| a * p).sum();
        for &z in &d {
            h[z] -= mean / mass;
        }
        let le = g.generator().apply(e.values());
        let f = ScalarField::new((0..n).map(|z| le[z] + h[z]).collect());
        let ds = StateSet::from_indices(n, &d).unwrap();
        let rep = bounds::decomposed_bound(&g, &f, &e, &ds).unwrap();
        prop_assert!(rep.passed, "excess {}", rep.worst_excess());
        prop_assert!(rep.details["reconstruction_residual"] <= 1e-8 * (1.0 + e.sup_norm()));
    }

    #[test]
    fn pure_gradient_source_attains_decomposed_bound(g in graph_strategy(6),
                                                    e in proptest::collection::vec(-1.0f64..1.0, 6)) {
        let n = g.n();
        let e = ScalarField::new(e[..n].to_vec());
        let le = g.generator().apply(e.values());
        let f = ScalarField::new(le.iter().map(|v| -v).collect());
        let q = potential::quasipotential(&g, &f, QuasipotentialMethod::Linear, &Default::default())
            .unwrap();
        let r = rho(&g);
        let ec = e.centered(&r);
        prop_assert!(max_diff(q.values.values(), ec.values()) <= 1e-9 * (1.0 + ec.sup_norm()));
    }

    #[test]
    fn semigroup_preserves_stationary_mean((g, f) in graph_and_field(6), t in 0.0f64..5.0) {
        let res = potential::semigroup_mean_residual(&g, f.values(), t).unwrap();
        prop_assert!(res <= 1e-10);
    }

    #[test]
    fn resolvent_and_group_inverse_rows(g in graph_strategy(6), alpha in 0.01f64..20.0) {
        let l = g.generator();
        let n = g.n();
        let res = spectral::resolvent(&l, alpha).unwrap();
        let gi = spectral::group_inverse(&l).unwrap();
        for x in 0..n {
            prop_assert!((res.row(x).sum() - 1.0).abs() <= 1e-10);
            prop_assert!(res.row(x).iter().all(|&v| v > 0.0));
            prop_assert!(gi.matrix().row(x).sum().abs() <= 1e-10 * gi.matrix().amax().max(1.0));
        }
        let t = forest::forest_tables(&g, 8).unwrap();
        let gr = forest::resolvent_by_forests(&t, alpha);
        prop_assert!((gr - res).amax() <= 1e-9);
        let fw = forest::ForestWeights::from_tables(&t);
        prop_assert!((fw.group_inverse() - gi.matrix()).amax() <= 1e-9 * gi.matrix().amax());
    }

    #[test]
    fn graph_json_round_trip(g in graph_strategy(6)) {
        let arcs: Vec<String> = g
            .arcs()
            .iter()
            .map(|a| format!(
                r#"{{"from":"{}","to":"{}","rate":{:?}}}"#,
                g.state_name(a.from), g.state_name(a.to), a.rate))
            .collect();
        let states: Vec<String> = g.states().iter().map(|s| format!("\"{s}\"")).collect();
        let text = format!(r#"{{"states":[{}],"arcs":[{}]}}"#, states.join(","), arcs.join(","));
        let back = build_rate_graph(&text).unwrap();
        prop_assert_eq!(back.states(), g.states());
        prop_assert_eq!(back.arcs(), g.arcs());
    }
}

#[test]
fn complete_graph_forest_counts() {
    for n in 3..=6 {
        let arcs = (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y, 1.0)));
        let g = RateGraph::with_numbered_states(n, arcs).unwrap();
        let counts = forest::graded_forest_counts(&g);
        // rooted forests of K_n with k roots: C(n-1, k-1) n^{n-k}
        for (m, &c) in counts.iter().enumerate() {
            let k = n - m;
            let expect = binom(n - 1, k - 1) * (n as f64).powi((n - k) as i32);
            assert!((c - expect).abs() < 1e-6 * expect, "n={n} m={m}: {c} vs {expect}");
        }
        // unit rates: weights equal counts
        let w = forest::graded_forest_weights(&g);
        for (a, b) in w.iter().zip(&counts) {
            assert!((a - b).abs() < 1e-6 * b);
        }
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
