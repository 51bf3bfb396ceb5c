//! Bounds on the quasipotential and their certification.
//!
//! Each bound is returned as a [`BoundReport`]: a list of (bound, attained)
//! entries, the tolerance used, and scalar details such as `W`.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forest::{self, ForestOptions};
use crate::graph::{ParamRateGraph, RateGraph, ScalarField, StateSet};
use crate::potential::{self, MfptMatrix, MfptMethod, QuasipotentialMethod};
use crate::report::ValidationReport;
use crate::spectral;

/// Relative slack allowed before a bound counts as violated.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Pair,
    Decomposed,
    Global,
    TwoTree,
    Sweep,
}

/// Which norm of `f` a bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceNorm {
    /// `max_z |f(z) − ⟨f⟩|`.
    CenteredSup,
    /// `max_z |f(z)|`.
    Sup,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEntry {
    pub label: String,
    pub bound: f64,
    pub attained: f64,
    pub slack: f64,
}

impl BoundEntry {
    pub fn new(label: impl Into<String>, bound: f64, attained: f64) -> Self {
        Self {
            label: label.into(),
            bound,
            attained,
            slack: bound - attained,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub best_tree_w: f64,
    pub bound: f64,
    pub attained: f64,
    pub slack: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub norm: SourceNorm,
    pub entries: Vec<BoundEntry>,
    /// Largest magnitude among bounds and attained values.
    pub scale: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub details: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<SweepRow>,
}

impl BoundReport {
    pub fn new(kind: BoundKind, norm: SourceNorm, entries: Vec<BoundEntry>) -> Self {
        let scale = entries
            .iter()
            .map(|e| e.bound.abs().max(e.attained.abs()))
            .fold(0.0, f64::max);
        let tolerance = BOUND_SLACK * scale;
        // NaN in either column fails
        let passed = entries.iter().all(|e| e.attained <= e.bound + tolerance);
        Self {
            kind,
            norm,
            entries,
            scale,
            tolerance,
            passed,
            details: BTreeMap::new(),
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn min_slack(&self) -> f64 {
        self.entries.iter().map(|e| e.slack).fold(f64::INFINITY, f64::min)
    }

    /// Largest `attained − bound`, i.e. the worst violation (negative when
    /// every entry holds strictly).
    pub fn worst_excess(&self) -> f64 {
        -self.min_slack()
    }

    /// Aligned text table of the entries followed by the details.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:?} bound ({:?} norm): {}\n",
            self.kind,
            self.norm,
            if self.passed { "pass" } else { "FAIL" }
        );
        if !self.rows.is_empty() {
            out += &format!(
                "{:>8} {:>14} {:>14} {:>14} {:>14} {:>14}\n",
                "lambda", "W", "best_tree_w", "bound", "attained", "slack"
            );
            for r in &self.rows {
                out += &format!(
                    "{:>8} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}\n",
                    r.lambda, r.w, r.best_tree_w, r.bound, r.attained, r.slack
                );
            }
        } else {
            let width = self.entries.iter().map(|e| e.label.len()).max().unwrap_or(5).max(5);
            out += &format!("{:<width$} {:>14} {:>14} {:>14}\n", "entry", "bound", "attained", "slack");
            for e in &self.entries {
                out += &format!(
                    "{:<width$} {:>14.6e} {:>14.6e} {:>14.6e}\n",
                    e.label, e.bound, e.attained, e.slack
                );
            }
        }
        for (k, v) in &self.details {
            out += &format!("{k} = {v}\n");
        }
        for n in &self.notes {
            out += &format!("note: {n}\n");
        }
        out
    }
}

/// Quantities shared by the bounds of one `(g, f)`.
struct Solved {
    rho: Vec<f64>,
    f: ScalarField,
    v: ScalarField,
    tau: MfptMatrix,
    removed: f64,
}

fn solve(g: &RateGraph, f: &ScalarField) -> Result<Solved> {
    let q = potential::quasipotential(g, f, QuasipotentialMethod::Linear, &Default::default())?;
    let rho = spectral::stationary_distribution(&g.generator())?.into_values();
    let tau = potential::mfpt_matrix(g, MfptMethod::Linear, &ForestOptions::default())?;
    Ok(Solved {
        f: f.centered(&rho),
        rho,
        v: q.values,
        tau,
        removed: q.source_mean_removed,
    })
}

fn pair_entry(g: &RateGraph, s: &Solved, x: usize, y: usize) -> BoundEntry {
    let norm = s.f.centered_sup_norm(&s.rho);
    let bound = norm * s.tau.get(x, y).min(s.tau.get(y, x));
    let label = format!("{}|{}", g.state_name(x), g.state_name(y));
    BoundEntry::new(label, bound, (s.v[x] - s.v[y]).abs())
}

/// `|V(x) − V(y)| ≤ ‖f‖ min{τ(x,y), τ(y,x)}` with the centered sup-norm.
///
/// Details hold `ṽ(x,y)` and `ṽ(y,x)` computed from the passage
/// accumulations, and their mismatch against `V(x) − V(y)`.
pub fn pair_bound(g: &RateGraph, f: &ScalarField, x: usize, y: usize) -> Result<BoundReport> {
    let s = solve(g, f)?;
    let entry = pair_entry(g, &s, x, y);
    let (vxy, vyx) = if x == y {
        (0.0, 0.0)
    } else {
        (
            potential::passage_accumulation(g, f, y)?[x],
            potential::passage_accumulation(g, f, x)?[y],
        )
    };
    let mut r = BoundReport::new(BoundKind::Pair, SourceNorm::CenteredSup, vec![entry])
        .detail("v_tilde_xy", vxy)
        .detail("v_tilde_yx", vyx)
        .detail("antisymmetry_residual", (vxy + vyx).abs())
        .detail("difference_residual", (s.v[x] - s.v[y] - vxy).abs())
        .detail("f_centered_sup", s.f.centered_sup_norm(&s.rho));
    if s.removed != 0.0 {
        r.notes.push(format!("source mean {} removed", s.removed));
    }
    Ok(r)
}

/// The pair bound for every unordered pair `x < y`.
pub fn all_pair_bounds(g: &RateGraph, f: &ScalarField) -> Result<BoundReport> {
    let s = solve(g, f)?;
    let n = g.n();
    let entries = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .map(|(x, y)| pair_entry(g, &s, x, y))
        .collect();
    let mut r = BoundReport::new(BoundKind::Pair, SourceNorm::CenteredSup, entries)
        .detail("f_centered_sup", s.f.centered_sup_norm(&s.rho));
    if s.removed != 0.0 {
        r.notes.push(format!("source mean {} removed", s.removed));
    }
    Ok(r)
}

/// Largest `|ṽ(x,y) + ṽ(y,x)|` and largest `|V(x) − V(y) − ṽ(x,y)|` over all
/// ordered pairs, each with `ṽ` from an independent absorbing solve.
pub fn passage_identity_residuals(g: &RateGraph, f: &ScalarField) -> Result<(f64, f64)> {
    let n = g.n();
    let s = solve(g, f)?;
    let cols = (0..n)
        .map(|y| potential::passage_accumulation(g, f, y))
        .collect::<Result<Vec<_>>>()?;
    let (mut anti, mut diff) = (0.0f64, 0.0f64);
    for x in 0..n {
        for y in 0..n {
            anti = anti.max((cols[y][x] + cols[x][y]).abs());
            diff = diff.max((s.v[x] - s.v[y] - cols[y][x]).abs());
        }
    }
    Ok((anti, diff))
}

/// Bound for a decomposition `f = LE + h` with `h = 0` off `D`:
/// `|V(x) − V(y)| ≤ |E(x) − E(y)| + ‖h‖ Σ_{z∈D} ρ(z)|τ(x,z) − τ(y,z)|`.
///
/// Details carry `‖h‖` and the residual of the reconstruction
/// `V + E = −Σ_{z∈D} ρ(z) h(z) τ(·,z) + c`.
pub fn decomposed_bound(
    g: &RateGraph,
    f: &ScalarField,
    e: &ScalarField,
    d: &StateSet,
) -> Result<BoundReport> {
    let n = g.n();
    for len in [e.len(), d.universe()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let rho = spectral::stationary_distribution(&g.generator())?.into_values();
    let f = f.clone().assert_centered(&rho)?;
    let le = g.generator().apply(e.values());
    let h: Vec<f64> = (0..n).map(|z| f[z] - le[z]).collect();
    let cutoff = 1e-12 * f.sup_norm();
    for z in 0..n {
        if !d.contains(z) && h[z].abs() > cutoff {
            return Err(Error::DecompositionInvalid {
                state: g.state_name(z).to_string(),
                value: h[z],
            });
        }
    }
    let h_norm = d.members().iter().map(|&z| h[z].abs()).fold(0.0, f64::max);
    let s = solve(g, &f)?;
    let dm = d.members();
    let mut entries = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            let reach: f64 = dm
                .iter()
                .map(|&z| s.rho[z] * (s.tau.get(x, z) - s.tau.get(y, z)).abs())
                .sum();
            let bound = (e[x] - e[y]).abs() + h_norm * reach;
            let label = format!("{}|{}", g.state_name(x), g.state_name(y));
            entries.push(BoundEntry::new(label, bound, (s.v[x] - s.v[y]).abs()));
        }
    }
    let recon: Vec<f64> = (0..n)
        .map(|x| -dm.iter().map(|&z| s.rho[z] * h[z] * s.tau.get(x, z)).sum::<f64>())
        .collect();
    let gap: Vec<f64> = (0..n).map(|x| s.v[x] + e[x] - recon[x]).collect();
    let c: f64 = gap.iter().zip(&rho).map(|(a, p)| a * p).sum();
    let gra = gap.iter().map(|a| (a - c).abs()).fold(0.0, f64::max);
    Ok(BoundReport::new(BoundKind::Decomposed, SourceNorm::Sup, entries)
        .detail("h_sup", h_norm)
        .detail("reconstruction_residual", gra))
}

/// `|V(x)| ≤ n ‖k‖^{n−2} ‖f‖ / W` with plain sup-norms.
///
/// This estimate treats the total two-tree weight as if it were at most
/// `n ‖k‖^{n−2}`; graphs with many two-tree forests violate it (the complete
/// graph on four states with unit rates is the smallest example). The
/// details record two valid alternatives: `two_tree_bound = W₂‖f‖/W` and
/// `forest_count_bound = N₂‖k‖^{n−2}‖f‖/W`, `N₂` the number of two-tree
/// forests. Details also hold `W` and the heaviest spanning tree, a lower
/// bound on `W`.
pub fn global_bound(g: &RateGraph, f: &ScalarField) -> Result<BoundReport> {
    let n = g.n();
    let rho = spectral::stationary_distribution(&g.generator())?.into_values();
    let (f, removed) = potential::center_source(f, &rho, true)?;
    let q = potential::quasipotential(g, &f, QuasipotentialMethod::Linear, &Default::default())?;
    let fw = forest::forest_weights(g, &ForestOptions::algebraic())?;
    let w2 = forest::two_tree_total_from(&fw)?;
    let counts = forest::graded_forest_counts(g);
    let n2 = counts[n - 2];
    let k = g.max_rate();
    let kp = k.powi(n as i32 - 2);
    let fs = f.sup_norm();
    let bound = n as f64 * kp * fs / fw.total;
    let entries = (0..n)
        .map(|x| BoundEntry::new(g.state_name(x), bound, q.values[x].abs()))
        .collect();
    let (root, best) = forest::best_tree_weight(g);
    let mut r = BoundReport::new(BoundKind::Global, SourceNorm::Sup, entries)
        .detail("n", n as f64)
        .detail("k_max", k)
        .detail("f_sup", fs)
        .detail("W", fw.total)
        .detail("W2", w2)
        .detail("two_tree_forests", n2)
        .detail("two_tree_bound", w2 * fs / fw.total)
        .detail("forest_count_bound", n2 * kp * fs / fw.total)
        .detail("best_tree_weight", best);
    r.notes.push(format!("heaviest spanning tree rooted at {}", g.state_name(root)));
    if removed != 0.0 {
        r.notes.push(format!("source mean {removed} removed"));
    }
    Ok(r)
}

/// `|V(x)| ≤ W₂ ‖f‖ / W`, from `Σ_y w(x→y) = W₂` for every `x`.
pub fn two_tree_bound(g: &RateGraph, f: &ScalarField) -> Result<BoundReport> {
    let rho = spectral::stationary_distribution(&g.generator())?.into_values();
    let (f, _) = potential::center_source(f, &rho, true)?;
    let q = potential::quasipotential(g, &f, QuasipotentialMethod::Linear, &Default::default())?;
    let fw = forest::forest_weights(g, &ForestOptions::algebraic())?;
    let w2 = forest::two_tree_total_from(&fw)?;
    let bound = w2 * f.sup_norm() / fw.total;
    let entries = (0..g.n())
        .map(|x| BoundEntry::new(g.state_name(x), bound, q.values[x].abs()))
        .collect();
    Ok(BoundReport::new(BoundKind::TwoTree, SourceNorm::Sup, entries)
        .detail("W", fw.total)
        .detail("W2", w2))
}

/// Chains pair bounds along shortest arc paths: for every `x`,
/// `V(x) ≤ Σ` of pair bounds on a path from a state with `V ≤ 0`, and
/// symmetrically from below.
pub fn path_chaining_check(g: &RateGraph, f: &ScalarField) -> Result<ValidationReport> {
    let s = solve(g, f)?;
    let n = g.n();
    let norm = s.f.centered_sup_norm(&s.rho);
    let pb = |a: usize, b: usize| norm * s.tau.get(a, b).min(s.tau.get(b, a));
    let argmin = (0..n).min_by(|&a, &b| s.v[a].total_cmp(&s.v[b])).unwrap();
    let argmax = (0..n).max_by(|&a, &b| s.v[a].total_cmp(&s.v[b])).unwrap();
    let mut r = ValidationReport::new();
    let tol = BOUND_SLACK * (norm * s.tau.max()).max(s.v.sup_norm()) * n as f64;
    let up = path_sums(g, argmin, &pb);
    let down = path_sums(g, argmax, &pb);
    let mut worst_up = f64::NEG_INFINITY;
    let mut worst_down = f64::NEG_INFINITY;
    for x in 0..n {
        worst_up = worst_up.max(s.v[x] - up[x]);
        worst_down = worst_down.max(-s.v[x] - down[x]);
    }
    r.check_le("chain_upper", worst_up, tol);
    r.check_le("chain_lower", worst_down, tol);
    Ok(r)
}

/// Sum of `cost` along BFS (fewest-arc) paths from `start`.
fn path_sums(g: &RateGraph, start: usize, cost: &impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let n = g.n();
    let mut acc = vec![f64::NAN; n];
    acc[start] = 0.0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.out_arcs(u) {
            if acc[v].is_nan() {
                acc[v] = acc[u] + cost(u, v);
                queue.push_back(v);
            }
        }
    }
    acc
}

/// Source for a sweep: fixed values, recentred at each `λ`.
#[derive(Debug, Clone)]
pub struct SweepSource(pub ScalarField);

/// Per-`λ` global bound on an Arrhenius family.
///
/// Rows come back ordered by `λ`. Details hold `min_best_tree_w` and
/// `max_bound` over the grid, and `analytic_constant` when it exists: with
/// all barriers nonnegative, `‖k_λ‖ ≤ a_max`, `W_λ ≥ B` (the largest
/// prefactor product over spanning trees made of zero-barrier arcs) and
/// `‖f − ⟨f⟩_λ‖ ≤ osc f`, so every row satisfies
/// `bound ≤ n a_max^{n−2} osc(f) / B`. Uniformity in `λ` is reported only.
pub fn uniform_bound_sweep(
    pg: &ParamRateGraph,
    f: &SweepSource,
    grid: &[f64],
) -> Result<BoundReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty λ grid".into()));
    }
    let n = pg.n();
    if f.0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.0.len() });
    }
    let results = grid
        .par_iter()
        .map(|&lambda| {
            let ev = pg.evaluate_at(lambda)?;
            let r = global_bound(&ev.graph, &f.0)?;
            let attained = r.entries.iter().map(|e| e.attained).fold(0.0, f64::max);
            let bound = r.entries[0].bound;
            let row = SweepRow {
                lambda,
                w: r.details["W"],
                best_tree_w: r.details["best_tree_weight"],
                bound,
                attained,
                slack: bound - attained,
                clamped: !ev.clamped.is_empty(),
            };
            Ok((row, r.entries))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(results.len());
    let mut entries = Vec::new();
    for (row, es) in results {
        for e in es {
            entries.push(BoundEntry::new(format!("{}@{}", e.label, row.lambda), e.bound, e.attained));
        }
        rows.push(row);
    }
    let mut r = BoundReport::new(BoundKind::Sweep, SourceNorm::Sup, entries);
    let min_best = rows.iter().map(|r| r.best_tree_w).fold(f64::INFINITY, f64::min);
    let max_bound = rows.iter().map(|r| r.bound).fold(0.0, f64::max);
    r.details.insert("min_best_tree_w".into(), min_best);
    r.details.insert("max_bound".into(), max_bound);
    match analytic_sweep_constant(pg, &f.0) {
        Some(c) => {
            r.details.insert("analytic_constant".into(), c);
        }
        None => r
            .notes
            .push("no zero-barrier spanning tree or a negative barrier: no λ-independent constant".into()),
    }
    if rows.iter().any(|r| r.clamped) {
        r.notes.push("some rates were clamped to the f64 range".into());
    }
    r.rows = rows;
    Ok(r)
}

/// `n a_max^{n−2} (max f − min f) / B`, or `None` when a barrier is negative
/// or the zero-barrier arcs contain no spanning in-tree.
pub fn analytic_sweep_constant(pg: &ParamRateGraph, f: &ScalarField) -> Option<f64> {
    let arcs = pg.arcs();
    if arcs.iter().any(|a| a.barrier < 0.0) {
        return None;
    }
    let n = pg.n();
    let a_max = arcs.iter().map(|a| a.prefactor).fold(0.0, f64::max);
    let zero: Vec<(usize, usize, f64)> = arcs
        .iter()
        .filter(|a| a.barrier == 0.0)
        .map(|a| (a.from, a.to, a.prefactor))
        .collect();
    let (_, b) = forest::best_tree_weight_of(n, &zero)?;
    if !(b > 0.0) {
        return None;
    }
    let osc = f.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - f.values().iter().copied().fold(f64::INFINITY, f64::min);
    Some(n as f64 * a_max.powi(n as i32 - 2) * osc / b)
}

impl BoundReport {
    /// Sweep rows as CSV with columns `λ, W, best_tree_w, bound, attained,
    /// slack`.
    pub fn write_sweep_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "W", "best_tree_w", "bound", "attained", "slack"])?;
        for r in &self.rows {
            w.write_record(
                [r.lambda, r.w, r.best_tree_w, r.bound, r.attained, r.slack].map(crate::report::format_number),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}
