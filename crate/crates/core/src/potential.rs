//! Poisson equations for the generator and their graphical solutions.
//!
//! All solvers take a [`RateGraph`] and return functions on its states:
//! the centered quasipotential `V` with `LV + f = 0`, stopped accumulations
//! `V_H` that vanish off `H`, mean escape times and the matrix of mean
//! first-passage times.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forest::{self, ForestOptions};
use crate::graph::{GeneratorMatrix, RateGraph, ScalarField, StateSet};
use crate::spectral;

/// `LU + f = 0` on `interior`, `U = boundary` elsewhere.
#[derive(Debug, Clone)]
pub struct AbsorbingProblem {
    interior: StateSet,
    source: ScalarField,
    boundary: ScalarField,
}

impl AbsorbingProblem {
    /// `source` is read on `interior`, `boundary` off it; both have one
    /// entry per state.
    pub fn new(interior: StateSet, source: ScalarField, boundary: ScalarField) -> Result<Self> {
        let n = interior.universe();
        for len in [source.len(), boundary.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }
        Ok(Self {
            interior,
            source,
            boundary,
        })
    }

    /// Zero boundary data.
    pub fn stopped(interior: StateSet, source: ScalarField) -> Result<Self> {
        let n = interior.universe();
        Self::new(interior, source, ScalarField::zeros(n))
    }

    pub fn interior(&self) -> &StateSet {
        &self.interior
    }

    pub fn source(&self) -> &ScalarField {
        &self.source
    }

    pub fn boundary(&self) -> &ScalarField {
        &self.boundary
    }
}

/// Solves `LU(x) + f(x) = 0` for `x ∈ H`, `U = g` off `H`.
///
/// Only rows of `H` enter: this is the generator of the process stopped on
/// leaving `H`, with the boundary values moved to the right-hand side.
pub fn solve_general_poisson(g: &RateGraph, p: &AbsorbingProblem) -> Result<ScalarField> {
    let n = g.n();
    if p.interior.universe() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.interior.universe(),
        });
    }
    if p.interior.is_full() {
        return Err(Error::InvalidArgument(
            "H = K has no boundary; solve for the quasipotential instead".into(),
        ));
    }
    let l = g.generator();
    let inner = p.interior.members();
    let m = inner.len();
    let mut a = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for (i, &x) in inner.iter().enumerate() {
        let mut b = -p.source[x];
        for y in 0..n {
            if p.interior.contains(y) {
                continue;
            }
            b -= l[(x, y)] * p.boundary[y];
        }
        rhs[i] = b;
        for (j, &y) in inner.iter().enumerate() {
            a[(i, j)] = l[(x, y)];
        }
    }
    let sol = a.lu().solve(&rhs).ok_or(Error::SingularStoppedGenerator)?;
    let mut u: Vec<f64> = (0..n).map(|x| p.boundary[x]).collect();
    for (i, &x) in inner.iter().enumerate() {
        u[x] = sol[i];
    }
    Ok(ScalarField::new(u))
}

/// `max_{x∈H} |LU(x) + f(x)|`.
pub fn poisson_residual(g: &RateGraph, p: &AbsorbingProblem, u: &ScalarField) -> f64 {
    let lu = g.generator().apply(u.values());
    p.interior
        .members()
        .into_iter()
        .map(|x| (lu[x] + p.source[x]).abs())
        .fold(0.0, f64::max)
}

/// Expected accumulation of `f` until the walk leaves `H`; zero off `H`.
pub fn stopped_accumulation(g: &RateGraph, p: &AbsorbingProblem) -> Result<ScalarField> {
    let zero_boundary = AbsorbingProblem::stopped(p.interior.clone(), p.source.clone())?;
    solve_general_poisson(g, &zero_boundary)
}

/// Mean escape time from `H`.
pub fn mean_escape_time(g: &RateGraph, h: &StateSet) -> Result<ScalarField> {
    let p = AbsorbingProblem::stopped(h.clone(), ScalarField::constant(g.n(), 1.0))?;
    stopped_accumulation(g, &p)
}

/// `|Σ_{x∉H} Σ_{y∈H} ρ(x) k(x,y) 𝔖_H(y) − ρ(H)|`.
pub fn escape_sum_rule_residual(g: &RateGraph, h: &StateSet) -> Result<f64> {
    let rho = spectral::stationary_distribution(&g.generator())?;
    let s = mean_escape_time(g, h)?;
    let mut lhs = 0.0;
    for x in h.complement().members() {
        for &(y, k) in g.out_arcs(x) {
            if h.contains(y) {
                lhs += rho[x] * k * s[y];
            }
        }
    }
    let mass: f64 = h.members().iter().map(|&x| rho[x]).sum();
    Ok((lhs - mass).abs())
}

/// Largest real part among eigenvalues of `L` restricted to `H`; its
/// negative is the exponential decay rate of `P(T_H > t)`.
pub fn stopped_spectral_bound(g: &RateGraph, h: &StateSet) -> f64 {
    let l = g.generator();
    let idx = h.members();
    let m = idx.len();
    let sub = DMatrix::from_fn(m, m, |i, j| l[(idx[i], idx[j])]);
    sub.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuasipotentialMethod {
    /// Bordered solve of `LV = −f` with `⟨V⟩ = 0`.
    Linear,
    /// `V(x) = Σ_y w(x→y) f(y) / W`.
    Forest,
    /// `∫₀^∞ e^{tL} f dt`, truncated once `‖e^{tL}f‖∞ ≤ 1e-12‖f‖∞`.
    Integral,
}

impl QuasipotentialMethod {
    pub const ALL: [Self; 3] = [Self::Linear, Self::Forest, Self::Integral];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Forest => "forest",
            Self::Integral => "integral",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuasipotentialOptions {
    /// Subtract `⟨f⟩` instead of failing on uncentered input.
    pub auto_center: bool,
    pub forest: ForestOptions,
}

impl Default for QuasipotentialOptions {
    fn default() -> Self {
        Self {
            auto_center: true,
            forest: ForestOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Quasipotential {
    pub method: QuasipotentialMethod,
    pub values: ScalarField,
    /// `⟨f⟩` removed from the source before solving (zero when it was
    /// already centered).
    pub source_mean_removed: f64,
    /// `‖LV + f‖∞` for the centered source.
    pub residual: f64,
    /// Truncation horizon used by the integral method.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

/// Centers `f` against `rho` or rejects it.
pub(crate) fn center_source(f: &ScalarField, rho: &[f64], auto: bool) -> Result<(ScalarField, f64)> {
    let mean = f.mean(rho);
    if mean.abs() <= 1e-12 * f.sup_norm() {
        return Ok((f.clone().assert_centered(rho)?, 0.0));
    }
    if !auto {
        return Err(Error::NotCentered { mean });
    }
    Ok((f.centered(rho), mean))
}

/// Centered solution of `LV + f = 0`.
pub fn quasipotential(
    g: &RateGraph,
    f: &ScalarField,
    method: QuasipotentialMethod,
    opts: &QuasipotentialOptions,
) -> Result<Quasipotential> {
    let n = g.n();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let l = g.generator();
    let rho = spectral::stationary_distribution(&l)?.into_values();
    let (f, removed) = center_source(f, &rho, opts.auto_center)?;
    let mut horizon = None;
    let values = match method {
        QuasipotentialMethod::Linear => bordered_solve(&l, &rho, f.values())?,
        QuasipotentialMethod::Forest => {
            let fw = forest::forest_weights(g, &opts.forest)?;
            (0..n)
                .map(|x| (0..n).map(|y| fw.joined[(x, y)] * f[y]).sum::<f64>() / fw.total)
                .collect()
        }
        QuasipotentialMethod::Integral => {
            let (v, t) = integral_solution(&l, f.values());
            horizon = Some(t);
            v
        }
    };
    let lv = l.apply(&values);
    let residual = lv
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    Ok(Quasipotential {
        method,
        values: ScalarField::new(values).mark_centered(),
        source_mean_removed: removed,
        residual,
        horizon,
    })
}

/// Rows `0..n-1` of `L` plus the row `ρ`: nonsingular for irreducible `L`
/// because `ρ > 0` and `ρ·1 ≠ 0`.
fn bordered_solve(l: &GeneratorMatrix, rho: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let n = l.n();
    let mut a = l.matrix().clone();
    let mut b = DVector::from_iterator(n, f.iter().map(|v| -v));
    for j in 0..n {
        a[(n - 1, j)] = rho[j];
    }
    b[n - 1] = 0.0;
    let v = a
        .lu()
        .solve(&b)
        .ok_or(Error::SingularBeyondNullity { nullity: 2 })?;
    Ok(v.iter().copied().collect())
}

fn integral_solution(l: &GeneratorMatrix, f: &[f64]) -> (Vec<f64>, f64) {
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return (vec![0.0; f.len()], 0.0);
    }
    let gap = spectral::spectral_gap(l);
    let mut t = if gap.is_finite() && gap > 0.0 {
        1.2 * (1e12f64).ln() / gap
    } else {
        1.0
    };
    let mut last = spectral::propagate_and_integrate(l, f, t);
    for _ in 0..40 {
        let tail = last.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if tail <= 1e-12 * scale {
            break;
        }
        t *= 2.0;
        last = spectral::propagate_and_integrate(l, f, t);
    }
    (last.1, t)
}

/// Mean first-passage times `τ(x, z)` (row `x`, column `z`).
#[derive(Debug, Clone, PartialEq)]
pub struct MfptMatrix(DMatrix<f64>);

impl MfptMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.0[(x, z)]
    }

    /// `max_{z, x≠z} |Σ_y k(x,y)[τ(y,z) − τ(x,z)] + 1|` together with the
    /// largest `|τ(z,z)|`.
    pub fn residual(&self, g: &RateGraph) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for z in 0..n {
            worst = worst.max(self.0[(z, z)].abs());
            for x in (0..n).filter(|&x| x != z) {
                let s: f64 = g
                    .out_arcs(x)
                    .iter()
                    .map(|&(y, k)| k * (self.0[(y, z)] - self.0[(x, z)]))
                    .sum();
                worst = worst.max((s + 1.0).abs());
            }
        }
        worst
    }

    pub fn max(&self) -> f64 {
        self.0.max()
    }

    /// Largest entrywise relative difference `|a − b| / max(|a|, |b|)`.
    pub fn max_relative_difference(&self, other: &MfptMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| {
                let s = a.abs().max(b.abs());
                if s == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / s
                }
            })
            .fold(0.0, f64::max)
    }
}

impl Serialize for MfptMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        spectral::serialize_matrix(&self.0, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MfptMethod {
    /// One absorbing solve per target column.
    Linear,
    /// `τ(x,z) = w(x,z) / w(z)`.
    Forest,
    /// `τ = (L# − 𝟙 L#_dg) D`, `D = diag(1/ρ)`.
    GroupInverse,
}

impl MfptMethod {
    pub const ALL: [Self; 3] = [Self::Linear, Self::Forest, Self::GroupInverse];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Forest => "forest",
            Self::GroupInverse => "group_inverse",
        }
    }
}

pub fn mfpt_matrix(g: &RateGraph, method: MfptMethod, opts: &ForestOptions) -> Result<MfptMatrix> {
    let n = g.n();
    let m = match method {
        MfptMethod::Linear => {
            let cols = (0..n)
                .into_par_iter()
                .map(|z| mean_escape_time(g, &StateSet::all_but(n, z)))
                .collect::<Result<Vec<_>>>()?;
            DMatrix::from_fn(n, n, |x, z| cols[z][x])
        }
        MfptMethod::Forest => {
            let fw = forest::forest_weights(g, opts)?;
            DMatrix::from_fn(n, n, |x, z| {
                if x == z {
                    0.0
                } else {
                    fw.separated[(x, z)] / fw.tree[z]
                }
            })
        }
        MfptMethod::GroupInverse => {
            let gi = spectral::group_inverse(&g.generator())?;
            let (lg, rho) = (gi.matrix(), gi.stationary());
            DMatrix::from_fn(n, n, |x, z| {
                if x == z {
                    0.0
                } else {
                    (lg[(x, z)] - lg[(z, z)]) / rho[z]
                }
            })
        }
    };
    Ok(MfptMatrix(m))
}

/// `V(x) = −Σ_z ρ(z) f(z) τ(x,z) + c`, with `c` fixing `⟨V⟩ = 0`.
pub fn quasipotential_from_green(
    g: &RateGraph,
    f: &ScalarField,
    tau: &MfptMatrix,
) -> Result<ScalarField> {
    let n = g.n();
    let rho = spectral::stationary_distribution(&g.generator())?.into_values();
    let f = f.clone().assert_centered(&rho)?;
    let raw: Vec<f64> = (0..n)
        .map(|x| -(0..n).map(|z| rho[z] * f[z] * tau.get(x, z)).sum::<f64>())
        .collect();
    Ok(ScalarField::new(raw).centered(&rho))
}

/// `max_{x,y} |V(x) − V(y) − Σ_z ρ(z) f(z)(τ(y,z) − τ(x,z))|`.
pub fn green_difference_residual(
    rho: &[f64],
    f: &ScalarField,
    v: &ScalarField,
    tau: &MfptMatrix,
) -> f64 {
    let n = v.len();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let rhs: f64 = (0..n)
                .map(|z| rho[z] * f[z] * (tau.get(y, z) - tau.get(x, z)))
                .sum();
            worst = worst.max((v[x] - v[y] - rhs).abs());
        }
    }
    worst
}

/// `max_x |L τ(·,z)(x) − (δ_{xz}/ρ(z) − 1)|`: first-passage times as Green
/// functions.
pub fn green_function_residual(g: &RateGraph, rho: &[f64], tau: &MfptMatrix, z: usize) -> f64 {
    let n = g.n();
    let col: Vec<f64> = (0..n).map(|x| tau.get(x, z)).collect();
    let lcol = g.generator().apply(&col);
    (0..n)
        .map(|x| {
            let gz = if x == z { 1.0 / rho[z] } else { 0.0 };
            (lcol[x] - (gz - 1.0)).abs()
        })
        .fold(0.0, f64::max)
}

/// `ṽ(·, y)`: expected accumulation of `f − ⟨f⟩` until the first visit to
/// `y`, for every start state.
pub fn passage_accumulation(g: &RateGraph, f: &ScalarField, y: usize) -> Result<ScalarField> {
    let n = g.n();
    let rho = spectral::stationary_distribution(&g.generator())?.into_values();
    let centered = f.centered(&rho);
    let p = AbsorbingProblem::stopped(StateSet::all_but(n, y), centered)?;
    stopped_accumulation(g, &p)
}

#[derive(Debug, Clone, Serialize)]
pub struct Kemeny {
    /// `Σ_y ρ(y) τ(x₀, y)` at the first state.
    pub value: f64,
    /// `max_x |Σ_y ρ(y) τ(x, y) − value|`.
    pub max_spread: f64,
    /// `W₂ / W` from forest weights.
    pub forest_value: f64,
    pub per_state: Vec<f64>,
}

pub fn kemeny_functional(g: &RateGraph, opts: &ForestOptions) -> Result<Kemeny> {
    let n = g.n();
    let tau = mfpt_matrix(g, MfptMethod::Linear, opts)?;
    let rho = spectral::stationary_distribution(&g.generator())?.into_values();
    let per_state: Vec<f64> = (0..n)
        .map(|x| (0..n).map(|y| rho[y] * tau.get(x, y)).sum())
        .collect();
    let value = per_state[0];
    let max_spread = per_state
        .iter()
        .map(|v| (v - value).abs())
        .fold(0.0, f64::max);
    let fw = forest::forest_weights(g, opts)?;
    let w2 = forest::two_tree_total_from(&fw)?;
    Ok(Kemeny {
        value,
        max_spread,
        forest_value: w2 / fw.total,
        per_state,
    })
}

/// `|⟨e^{tL}h⟩ − ⟨h⟩|`.
pub fn semigroup_mean_residual(g: &RateGraph, h: &[f64], t: f64) -> Result<f64> {
    let l = g.generator();
    let rho = spectral::stationary_distribution(&l)?.into_values();
    let ph = spectral::propagate(&l, h, t);
    let a: f64 = ph.iter().zip(&rho).map(|(v, p)| v * p).sum();
    let b: f64 = h.iter().zip(&rho).map(|(v, p)| v * p).sum();
    Ok((a - b).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> RateGraph {
        RateGraph::from_indexed(vec!["a".into(), "b".into()], [(0, 1, 2.0), (1, 0, 1.0)]).unwrap()
    }

    fn ring3() -> RateGraph {
        RateGraph::with_numbered_states(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn general_poisson_examples() {
        let g = two_state();
        let p = AbsorbingProblem::stopped(
            StateSet::from_indices(2, &[0]).unwrap(),
            ScalarField::new(vec![1.0, 0.0]),
        )
        .unwrap();
        let u = solve_general_poisson(&g, &p).unwrap();
        assert!(close(u.values(), &[0.5, 0.0], 1e-15));

        let r = ring3();
        let h = StateSet::from_indices(3, &[0, 1]).unwrap();
        let c = AbsorbingProblem::new(h, ScalarField::zeros(3), ScalarField::constant(3, 4.5)).unwrap();
        let u = solve_general_poisson(&r, &c).unwrap();
        assert!(close(u.values(), &[4.5; 3], 1e-14));
        assert!(poisson_residual(&r, &c, &u) < 1e-14);
    }

    #[test]
    fn general_poisson_errors() {
        assert!(matches!(
            AbsorbingProblem::stopped(StateSet::from_indices(2, &[]).unwrap(), ScalarField::zeros(2)),
            Err(Error::EmptyInterior)
        ));
        let full = AbsorbingProblem::stopped(StateSet::all(2), ScalarField::zeros(2)).unwrap();
        assert!(solve_general_poisson(&two_state(), &full).is_err());
    }

    #[test]
    fn quasipotential_worked_examples() {
        let opts = QuasipotentialOptions::default();
        let f = ScalarField::new(vec![2.0 / 3.0, -1.0 / 3.0]);
        for m in QuasipotentialMethod::ALL {
            let q = quasipotential(&two_state(), &f, m, &opts).unwrap();
            assert!(close(q.values.values(), &[2.0 / 9.0, -1.0 / 9.0], 1e-10), "{m:?} {q:?}");
        }
        let f = ScalarField::new(vec![1.0, 0.0, -1.0]);
        for m in QuasipotentialMethod::ALL {
            let q = quasipotential(&ring3(), &f, m, &opts).unwrap();
            assert!(close(q.values.values(), &[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0], 1e-10), "{m:?}");
        }
    }

    #[test]
    fn gradient_source_recovers_potential() {
        let g = two_state();
        let e = [1.0, 0.0];
        let f = ScalarField::new(g.generator().apply(&e).iter().map(|v| -v).collect());
        let q = quasipotential(&g, &f, QuasipotentialMethod::Linear, &Default::default()).unwrap();
        // ⟨E⟩ = 1/3
        assert!(close(q.values.values(), &[2.0 / 3.0, -1.0 / 3.0], 1e-14));
    }

    #[test]
    fn uncentered_source() {
        let g = two_state();
        let f = ScalarField::new(vec![1.0, 1.0]);
        let strict = QuasipotentialOptions {
            auto_center: false,
            ..Default::default()
        };
        assert!(matches!(
            quasipotential(&g, &f, QuasipotentialMethod::Linear, &strict),
            Err(Error::NotCentered { .. })
        ));
        let q = quasipotential(&g, &f, QuasipotentialMethod::Linear, &Default::default()).unwrap();
        assert!((q.source_mean_removed - 1.0).abs() < 1e-15);
        assert!(q.values.sup_norm() < 1e-15);
    }

    #[test]
    fn escape_times() {
        let r = ring3();
        let s = mean_escape_time(&r, &StateSet::from_indices(3, &[0, 1]).unwrap()).unwrap();
        assert!(close(s.values(), &[2.0, 1.0, 0.0], 1e-14));
        let s = mean_escape_time(&two_state(), &StateSet::from_indices(2, &[0]).unwrap()).unwrap();
        assert!(close(s.values(), &[0.5, 0.0], 1e-15));
        let zero = AbsorbingProblem::stopped(StateSet::from_indices(3, &[1]).unwrap(), ScalarField::zeros(3)).unwrap();
        assert_eq!(stopped_accumulation(&r, &zero).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn sum_rule_examples() {
        let h = StateSet::from_indices(2, &[0]).unwrap();
        assert!(escape_sum_rule_residual(&two_state(), &h).unwrap() < 1e-10);
        let h = StateSet::from_indices(3, &[0, 1]).unwrap();
        assert!(escape_sum_rule_residual(&ring3(), &h).unwrap() < 1e-10);
    }

    #[test]
    fn mfpt_examples_all_methods() {
        let opts = ForestOptions::default();
        for m in MfptMethod::ALL {
            let t = mfpt_matrix(&ring3(), m, &opts).unwrap();
            assert!((t.get(0, 1) - 1.0).abs() < 1e-12 && (t.get(0, 2) - 2.0).abs() < 1e-12, "{m:?}");
            assert!(t.residual(&ring3()) < 1e-12);
            let t = mfpt_matrix(&two_state(), m, &opts).unwrap();
            assert!((t.get(0, 1) - 0.5).abs() < 1e-12 && (t.get(1, 0) - 1.0).abs() < 1e-12, "{m:?}");
            assert_eq!(t.get(0, 0), 0.0);
        }
    }

    #[test]
    fn green_reconstruction() {
        let g = two_state();
        let f = ScalarField::new(vec![2.0 / 3.0, -1.0 / 3.0]);
        let tau = mfpt_matrix(&g, MfptMethod::Linear, &Default::default()).unwrap();
        let v = quasipotential_from_green(&g, &f, &tau).unwrap();
        assert!(close(v.values(), &[2.0 / 9.0, -1.0 / 9.0], 1e-15));
        assert!(green_difference_residual(&[1.0 / 3.0, 2.0 / 3.0], &f, &v, &tau) < 1e-15);
        let zero = quasipotential_from_green(&g, &ScalarField::zeros(2), &tau).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        for z in 0..2 {
            assert!(green_function_residual(&g, &[1.0 / 3.0, 2.0 / 3.0], &tau, z) < 1e-14);
        }
    }

    #[test]
    fn kemeny_examples() {
        let k = kemeny_functional(&ring3(), &Default::default()).unwrap();
        assert!((k.value - 1.0).abs() < 1e-12 && k.max_spread < 1e-12);
        assert!((k.forest_value - 1.0).abs() < 1e-12);
        let k = kemeny_functional(&two_state(), &Default::default()).unwrap();
        assert!((k.value - 1.0 / 3.0).abs() < 1e-12);
        assert!((k.forest_value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn passage_accumulation_is_difference_of_quasipotential() {
        let g = two_state();
        let f = ScalarField::new(vec![2.0 / 3.0, -1.0 / 3.0]);
        let vt = passage_accumulation(&g, &f, 1).unwrap();
        assert!((vt[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stopped_bound_two_state() {
        let h = StateSet::from_indices(2, &[0]).unwrap();
        assert!((stopped_spectral_bound(&two_state(), &h) + 2.0).abs() < 1e-14);
    }
}
