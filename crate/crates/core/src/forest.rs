//! Rooted spanning forests: enumeration and determinant-based weights.
//!
//! A forest is stored as a parent map: every non-root vertex `v` carries
//! exactly one outgoing arc `(v, parent[v])` and following parents from any
//! vertex ends at the root of its tree. Trees are therefore in-trees, with
//! arcs oriented toward the root.
//!
//! Weights of forest families:
//!
//! * `w(x)`: in-trees rooted at `x`; `W = Σ_x w(x)`.
//! * `w(x→y)`: two-tree forests with `x` in the tree rooted at `y`.
//! * `w(x,y)`: two-tree forests with `y` a root and `x` in the other tree.
//! * `w(𝓕_m)`: all rooted forests with `m` arcs.
//!
//! Below the enumeration cap every family is summed explicitly. Above it,
//! tree weights come from principal minors of the Laplacian, graded weights
//! from its characteristic polynomial and two-tree weights from the group
//! inverse of the generator.

use std::collections::HashSet;
use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::charpoly::principal_minor_sums;
use crate::error::{Error, Result};
use crate::graph::RateGraph;
use crate::spectral;

pub const DEFAULT_ENUMERATION_CAP: usize = 10;

/// How forest weights are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestMode {
    /// Enumerate up to the cap, algebraic above it.
    Auto,
    /// Always enumerate; fails with `CapExceeded` above the cap.
    Enumerate,
    /// Always use determinants and the group inverse.
    Algebraic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestOptions {
    pub cap: usize,
    pub mode: ForestMode,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
            mode: ForestMode::Auto,
        }
    }
}

impl ForestOptions {
    pub fn enumerate() -> Self {
        Self {
            mode: ForestMode::Enumerate,
            ..Self::default()
        }
    }

    pub fn algebraic() -> Self {
        Self {
            mode: ForestMode::Algebraic,
            ..Self::default()
        }
    }

    /// Whether graphs with `n` states take the enumeration route.
    pub fn use_enumeration(&self, n: usize) -> Result<bool> {
        match self.mode {
            ForestMode::Algebraic => Ok(false),
            ForestMode::Auto => Ok(n <= self.cap),
            ForestMode::Enumerate if n <= self.cap => Ok(true),
            ForestMode::Enumerate => Err(Error::CapExceeded { n, cap: self.cap }),
        }
    }
}

/// A rooted spanning forest given by its parent map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RootedForest {
    parent: Vec<Option<usize>>,
}

impl RootedForest {
    pub fn from_parents(parent: Vec<Option<usize>>) -> Self {
        Self { parent }
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    /// Arcs `(v, parent[v])`, sorted by tail.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (v, p)))
            .collect()
    }

    pub fn arc_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.parent[v].is_none()).collect()
    }

    /// Root of the tree containing `v`.
    pub fn root_of(&self, v: usize) -> usize {
        let mut u = v;
        let mut steps = 0;
        while let Some(p) = self.parent[u] {
            u = p;
            steps += 1;
            assert!(steps <= self.n(), "parent map contains a cycle");
        }
        u
    }

    /// Partition of states into trees, listed by root.
    pub fn components(&self) -> Vec<(usize, Vec<usize>)> {
        let roots = self.roots();
        roots
            .iter()
            .map(|&r| (r, (0..self.n()).filter(|&v| self.root_of(v) == r).collect()))
            .collect()
    }

    /// Checks the in-forest invariants against `g`: arcs exist, no cycles,
    /// every vertex reaches a root.
    pub fn validate(&self, g: &RateGraph) -> std::result::Result<(), String> {
        if self.n() != g.n() {
            return Err(format!("forest spans {} states, graph has {}", self.n(), g.n()));
        }
        for (v, p) in self.arcs() {
            if v == p {
                return Err(format!("self-loop at {v}"));
            }
            if g.rate(v, p) <= 0.0 {
                return Err(format!("arc ({v},{p}) not in graph"));
            }
        }
        for v in 0..self.n() {
            let mut u = v;
            for _ in 0..=self.n() {
                match self.parent[u] {
                    Some(p) => u = p,
                    None => break,
                }
            }
            if self.parent[u].is_some() {
                return Err(format!("cycle reachable from {v}"));
            }
        }
        Ok(())
    }

    pub fn weight(&self, g: &RateGraph) -> f64 {
        self.arcs().iter().map(|&(u, v)| g.rate(u, v)).product()
    }
}

/// Which family of forests an ensemble describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyDescriptor {
    /// `𝓣_x`: spanning in-trees rooted at `root`.
    InTrees { root: usize },
    /// `𝓕^{x→y}`: two trees, `x` in the tree rooted at `y`.
    TwoTreeJoined { x: usize, y: usize },
    /// `𝓕^{x,y}`: two trees, `y` a root, `x` in the other tree.
    TwoTreeSeparated { x: usize, y: usize },
    /// `𝓕_m`: all rooted forests with `m` arcs.
    Graded { m: usize },
    /// `𝓕^{x→y}_m`: forests with `m` arcs, `x` in the tree rooted at `y`.
    GradedJoined { m: usize, x: usize, y: usize },
}

impl FamilyDescriptor {
    fn contains(&self, f: &RootedForest) -> bool {
        let n = f.n();
        let arcs = f.arc_count();
        match *self {
            FamilyDescriptor::InTrees { root } => arcs + 1 == n && f.parent[root].is_none(),
            FamilyDescriptor::TwoTreeJoined { x, y } => {
                arcs + 2 == n && f.parent[y].is_none() && f.root_of(x) == y
            }
            FamilyDescriptor::TwoTreeSeparated { x, y } => {
                arcs + 2 == n && f.parent[y].is_none() && f.root_of(x) != y
            }
            FamilyDescriptor::Graded { m } => arcs == m,
            FamilyDescriptor::GradedJoined { m, x, y } => {
                arcs == m && f.parent[y].is_none() && f.root_of(x) == y
            }
        }
    }

    fn max_roots(&self, n: usize) -> usize {
        match *self {
            FamilyDescriptor::InTrees { .. } => 1,
            FamilyDescriptor::TwoTreeJoined { .. } | FamilyDescriptor::TwoTreeSeparated { .. } => 2,
            FamilyDescriptor::Graded { m } | FamilyDescriptor::GradedJoined { m, .. } => n - m.min(n),
        }
    }
}

/// An explicitly enumerated family of forests.
#[derive(Debug, Clone, Serialize)]
pub struct ForestEnsemble {
    pub descriptor: FamilyDescriptor,
    pub total_weight: f64,
    pub members: Vec<RootedForest>,
}

impl ForestEnsemble {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    /// Writes one JSON object per member:
    /// `{"descriptor": …, "arcs": [[u, v], …], "roots": […], "weight": w}`.
    pub fn write_jsonl<W: std::io::Write>(&self, g: &RateGraph, mut out: W) -> Result<()> {
        for f in &self.members {
            let line = serde_json::json!({
                "descriptor": self.descriptor,
                "arcs": f.arcs(),
                "roots": f.roots(),
                "weight": f.weight(g),
            });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Weight type usable by the enumerator: `f64` or exact rationals.
pub trait ForestWeight: Clone + Zero + One + Add<Output = Self> + Mul<Output = Self> {}
impl<T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>> ForestWeight for T {}

/// Depth-first enumeration of all in-forests whose root count is at most
/// `max_roots`. Vertices are assigned in index order, each either as a root
/// or with one outgoing arc that does not close a cycle.
fn visit_forests<W, F>(out: &[Vec<(usize, W)>], max_roots: usize, visit: &mut F)
where
    W: ForestWeight,
    F: FnMut(&[Option<usize>], &W),
{
    fn closes_cycle(parent: &[Option<usize>], v: usize, p: usize) -> bool {
        let mut u = p;
        loop {
            if u == v {
                return true;
            }
            match parent[u] {
                Some(q) => u = q,
                None => return false,
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec<W: ForestWeight, F: FnMut(&[Option<usize>], &W)>(
        v: usize,
        out: &[Vec<(usize, W)>],
        parent: &mut Vec<Option<usize>>,
        roots: usize,
        max_roots: usize,
        weight: W,
        visit: &mut F,
    ) {
        let n = out.len();
        if v == n {
            if roots > 0 {
                visit(parent, &weight);
            }
            return;
        }
        if roots < max_roots {
            rec(v + 1, out, parent, roots + 1, max_roots, weight.clone(), visit);
        }
        for (p, k) in &out[v] {
            if closes_cycle(parent, v, *p) {
                continue;
            }
            parent[v] = Some(*p);
            rec(v + 1, out, parent, roots, max_roots, weight.clone() * k.clone(), visit);
            parent[v] = None;
        }
    }

    let mut parent = vec![None; out.len()];
    rec(0, out, &mut parent, 0, max_roots, W::one(), visit);
}

fn root_of(parent: &[Option<usize>], v: usize) -> usize {
    let mut u = v;
    while let Some(p) = parent[u] {
        u = p;
    }
    u
}

/// Totals over every rooted spanning forest, grouped by arc count and by
/// where each state's tree is rooted.
#[derive(Debug, Clone)]
pub struct ForestTables<W> {
    n: usize,
    graded: Vec<W>,
    counts: Vec<u64>,
    /// `[m][x][y]`: forests with `m` arcs, `x` in the tree rooted at `y`.
    joined: Vec<W>,
    /// `[x][y]`: two-tree forests, `y` a root, `x` not in `y`'s tree.
    separated: Vec<W>,
}

impl<W: ForestWeight> ForestTables<W> {
    pub fn compute(out: &[Vec<(usize, W)>]) -> Self {
        let n = out.len();
        let mut t = Self {
            n,
            graded: vec![W::zero(); n],
            counts: vec![0; n],
            joined: vec![W::zero(); n * n * n],
            separated: vec![W::zero(); n * n],
        };
        let mut roots_of = vec![0usize; n];
        visit_forests(out, n, &mut |parent, w| {
            let m = parent.iter().filter(|p| p.is_some()).count();
            t.graded[m] = t.graded[m].clone() + w.clone();
            t.counts[m] += 1;
            for x in 0..n {
                roots_of[x] = root_of(parent, x);
                let idx = (m * n + x) * n + roots_of[x];
                t.joined[idx] = t.joined[idx].clone() + w.clone();
            }
            if n >= 2 && m == n - 2 {
                for r in (0..n).filter(|&r| parent[r].is_none()) {
                    for x in (0..n).filter(|&x| roots_of[x] != r) {
                        let idx = x * n + r;
                        t.separated[idx] = t.separated[idx].clone() + w.clone();
                    }
                }
            }
        });
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `w(𝓕_m)`.
    pub fn graded(&self, m: usize) -> &W {
        &self.graded[m]
    }

    /// Number of forests with `m` arcs.
    pub fn count(&self, m: usize) -> u64 {
        self.counts[m]
    }

    /// `w(𝓕^{x→y}_m)`.
    pub fn graded_joined(&self, m: usize, x: usize, y: usize) -> &W {
        &self.joined[(m * self.n + x) * self.n + y]
    }

    /// `w(y)`: in-trees rooted at `y`.
    pub fn tree(&self, y: usize) -> &W {
        self.graded_joined(self.n - 1, y, y)
    }

    /// `w(x→y)`.
    pub fn joined(&self, x: usize, y: usize) -> &W {
        self.graded_joined(self.n - 2, x, y)
    }

    /// `w(x,y)`.
    pub fn separated(&self, x: usize, y: usize) -> &W {
        &self.separated[x * self.n + y]
    }
}

fn out_lists(g: &RateGraph) -> Vec<Vec<(usize, f64)>> {
    (0..g.n()).map(|x| g.out_arcs(x).to_vec()).collect()
}

/// Where a set of forest weights came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRoute {
    Enumeration,
    Algebraic,
}

/// Forest weights needed by the graphical formulas.
#[derive(Debug, Clone)]
pub struct ForestWeights {
    pub route: WeightRoute,
    /// `w(x)`.
    pub tree: Vec<f64>,
    /// `W`.
    pub total: f64,
    /// `w(x→y)`.
    pub joined: DMatrix<f64>,
    /// `w(x,y)`.
    pub separated: DMatrix<f64>,
    /// `w(𝓕_m)` for `m = 0..n-1`.
    pub graded: Vec<f64>,
}

impl ForestWeights {
    pub fn n(&self) -> usize {
        self.tree.len()
    }

    /// `w(𝓕)`: total two-tree weight.
    pub fn two_tree_total(&self) -> f64 {
        self.graded[self.n() - 2]
    }

    /// Kirchhoff's stationary distribution `w(x)/W`.
    pub fn kirchhoff(&self) -> Vec<f64> {
        self.tree.iter().map(|w| w / self.total).collect()
    }
}

/// Computes all forest weights by the route selected in `opts`.
pub fn forest_weights(g: &RateGraph, opts: &ForestOptions) -> Result<ForestWeights> {
    if opts.use_enumeration(g.n())? {
        Ok(enumerated_weights(g))
    } else {
        algebraic_weights(g)
    }
}

fn enumerated_weights(g: &RateGraph) -> ForestWeights {
    ForestWeights::from_tables(&ForestTables::compute(&out_lists(g)))
}

impl ForestWeights {
    pub fn from_tables(t: &ForestTables<f64>) -> Self {
        let n = t.n();
        let tree: Vec<f64> = (0..n).map(|y| *t.tree(y)).collect();
        let total = tree.iter().sum();
        ForestWeights {
            route: WeightRoute::Enumeration,
            tree,
            total,
            joined: DMatrix::from_fn(n, n, |x, y| *t.joined(x, y)),
            separated: DMatrix::from_fn(n, n, |x, y| *t.separated(x, y)),
            graded: (0..n).map(|m| *t.graded(m)).collect(),
        }
    }

    /// `L#_xy = −w(x→y)/W + ρ(y) w(𝓕)/W` with Kirchhoff's `ρ`.
    pub fn group_inverse(&self) -> DMatrix<f64> {
        let n = self.n();
        let rho = self.kirchhoff();
        let two = self.two_tree_total();
        DMatrix::from_fn(n, n, |x, y| (rho[y] * two - self.joined[(x, y)]) / self.total)
    }
}

/// Enumerated forest tables, refusing `n` above `cap`.
pub fn forest_tables(g: &RateGraph, cap: usize) -> Result<ForestTables<f64>> {
    if g.n() > cap {
        return Err(Error::CapExceeded { n: g.n(), cap });
    }
    Ok(ForestTables::compute(&out_lists(g)))
}

/// `(I + α𝓛)⁻¹_xy = Σ_m α^m w(𝓕^{x→y}_m) / Σ_m α^m w(𝓕_m)`.
pub fn resolvent_by_forests(t: &ForestTables<f64>, alpha: f64) -> DMatrix<f64> {
    let n = t.n();
    let poly = |coef: &dyn Fn(usize) -> f64| {
        let mut acc = 0.0;
        for m in (0..n).rev() {
            acc = acc * alpha + coef(m);
        }
        acc
    };
    let den = poly(&|m| *t.graded(m));
    DMatrix::from_fn(n, n, |x, y| poly(&|m| *t.graded_joined(m, x, y)) / den)
}

fn algebraic_weights(g: &RateGraph) -> Result<ForestWeights> {
    let n = g.n();
    let l = g.generator();
    let tree = tree_weights_by_minors(&l.laplacian());
    let total: f64 = tree.iter().sum();
    let graded = graded_weights_by_charpoly(&l.laplacian());
    let two_total = graded[n - 2];
    let gi = spectral::group_inverse(&l)?;
    let x = gi.matrix();
    let rho: Vec<f64> = tree.iter().map(|w| w / total).collect();
    // w(x→y) = ρ(y)·w(𝓕) − W·L#[x][y]
    let joined = DMatrix::from_fn(n, n, |a, b| rho[b] * two_total - total * x[(a, b)]);
    let separated = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            0.0
        } else {
            total * (x[(a, b)] - x[(b, b)])
        }
    });
    Ok(ForestWeights {
        route: WeightRoute::Algebraic,
        tree,
        total,
        joined,
        separated,
        graded,
    })
}

/// `w(x) = det 𝓛` with row and column `x` removed.
pub fn tree_weights_by_minors(laplacian: &DMatrix<f64>) -> Vec<f64> {
    let n = laplacian.nrows();
    (0..n)
        .map(|x| {
            laplacian
                .clone()
                .remove_row(x)
                .remove_column(x)
                .determinant()
        })
        .collect()
}

/// `w(𝓕_m)`, `m = 0..n-1`, as coefficients of `det(I + α𝓛)`.
pub fn graded_weights_by_charpoly(laplacian: &DMatrix<f64>) -> Vec<f64> {
    let mut e = principal_minor_sums(laplacian);
    e.truncate(laplacian.nrows());
    e
}

/// Explicit list of the in-trees rooted at `root`.
pub fn enumerate_in_trees(g: &RateGraph, root: usize, cap: usize) -> Result<ForestEnsemble> {
    enumerate_family(g, FamilyDescriptor::InTrees { root }, cap)
}

/// Explicit list of the members of any forest family.
pub fn enumerate_family(
    g: &RateGraph,
    descriptor: FamilyDescriptor,
    cap: usize,
) -> Result<ForestEnsemble> {
    let n = g.n();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let mut members = Vec::new();
    let mut total = 0.0;
    visit_forests(&out_lists(g), descriptor.max_roots(n), &mut |parent, w| {
        let f = RootedForest::from_parents(parent.to_vec());
        if descriptor.contains(&f) {
            total += *w;
            members.push(f);
        }
    });
    Ok(ForestEnsemble {
        descriptor,
        total_weight: total,
        members,
    })
}

/// `(w, W)`: in-tree weight per root and its total.
pub fn tree_weight_vector(g: &RateGraph, opts: &ForestOptions) -> Result<(Vec<f64>, f64)> {
    let tree = if opts.use_enumeration(g.n())? {
        let mut w = vec![0.0; g.n()];
        visit_forests(&out_lists(g), 1, &mut |parent, wt| {
            let r = parent.iter().position(|p| p.is_none()).unwrap();
            w[r] += *wt;
        });
        w
    } else {
        tree_weights_by_minors(&g.generator().laplacian())
    };
    let total = tree.iter().sum();
    Ok((tree, total))
}

/// `(w(x→y), w(x,y))`. For `x = y` the first entry is `w(𝓕^y)` and the
/// second is zero.
pub fn two_tree_weights(
    g: &RateGraph,
    x: usize,
    y: usize,
    opts: &ForestOptions,
) -> Result<(f64, f64)> {
    if opts.use_enumeration(g.n())? {
        let mut same = 0.0;
        let mut split = 0.0;
        let n = g.n();
        visit_forests(&out_lists(g), 2, &mut |parent, w| {
            if parent.iter().filter(|p| p.is_none()).count() != 2 || parent[y].is_some() {
                return;
            }
            if root_of(parent, x) == y {
                same += *w;
            } else {
                split += *w;
            }
        });
        debug_assert!(n >= 2);
        Ok((same, split))
    } else {
        let fw = algebraic_weights(g)?;
        Ok((fw.joined[(x, y)], fw.separated[(x, y)]))
    }
}

/// `w(𝓕_m)` for `m = 0..n-1` from the characteristic polynomial.
pub fn graded_forest_weights(g: &RateGraph) -> Vec<f64> {
    graded_weights_by_charpoly(&g.generator().laplacian())
}

/// Number of rooted forests with `m` arcs, `m = 0..n-1` (graded weights at
/// unit rates).
pub fn graded_forest_counts(g: &RateGraph) -> Vec<f64> {
    let n = g.n();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for a in g.arcs() {
        lap[(a.from, a.from)] += 1.0;
        lap[(a.from, a.to)] -= 1.0;
    }
    graded_weights_by_charpoly(&lap)
}

/// `W₂ = Σ_{y≠x} w(x,y)`, checked to be independent of `x` to 1e-10
/// relative.
pub fn total_two_tree_weight(g: &RateGraph, opts: &ForestOptions) -> Result<f64> {
    let fw = forest_weights(g, opts)?;
    two_tree_total_from(&fw)
}

pub(crate) fn two_tree_total_from(fw: &ForestWeights) -> Result<f64> {
    let n = fw.n();
    let per_base: Vec<f64> = (0..n)
        .map(|x| (0..n).filter(|&y| y != x).map(|y| fw.separated[(x, y)]).sum())
        .collect();
    let value = per_base[0];
    let spread = per_base
        .iter()
        .map(|v| (v - value).abs())
        .fold(0.0, f64::max);
    let residual = spread / value.abs().max(f64::MIN_POSITIVE);
    if residual > 1e-10 {
        return Err(Error::XDependenceDetected { residual });
    }
    Ok(value)
}

/// Heaviest spanning in-tree over all roots: `max_{T,x} w(T_x)`, returned as
/// `(root, weight)`. Uses the Chu–Liu/Edmonds arborescence algorithm on
/// `-ln k`.
pub fn best_tree_weight(g: &RateGraph) -> (usize, f64) {
    let arcs: Vec<_> = g.arcs().iter().map(|a| (a.from, a.to, a.rate)).collect();
    best_tree_weight_of(g.n(), &arcs).expect("irreducible graphs have spanning trees")
}

/// [`best_tree_weight`] on an arbitrary arc list; `None` when no spanning
/// in-tree exists.
pub(crate) fn best_tree_weight_of(n: usize, arcs: &[(usize, usize, f64)]) -> Option<(usize, f64)> {
    // In-tree toward r in G is an out-arborescence from r in the reversed graph.
    let edges: Vec<(usize, usize, f64)> = arcs.iter().map(|&(x, y, k)| (y, x, -k.ln())).collect();
    let mut best: Option<(usize, f64)> = None;
    for r in 0..n {
        if let Some(cost) = min_arborescence(n, r, &edges) {
            let w = (-cost).exp();
            if best.is_none_or(|(_, b)| w > b) {
                best = Some((r, w));
            }
        }
    }
    best
}

/// Minimum-cost out-arborescence rooted at `root`; `None` if none exists.
fn min_arborescence(n: usize, root: usize, edges: &[(usize, usize, f64)]) -> Option<f64> {
    let mut edges = edges.to_vec();
    let mut n = n;
    let mut root = root;
    let mut total = 0.0;
    loop {
        let mut in_cost = vec![f64::INFINITY; n];
        let mut pre = vec![usize::MAX; n];
        for &(u, v, c) in &edges {
            if u != v && c < in_cost[v] {
                in_cost[v] = c;
                pre[v] = u;
            }
        }
        if (0..n).any(|v| v != root && in_cost[v].is_infinite()) {
            return None;
        }
        in_cost[root] = 0.0;
        let mut id = vec![usize::MAX; n];
        let mut mark = vec![usize::MAX; n];
        let mut cycles = 0;
        for v in 0..n {
            total += in_cost[v];
            let mut u = v;
            while mark[u] != v && id[u] == usize::MAX && u != root {
                mark[u] = v;
                u = pre[u];
            }
            if u != root && id[u] == usize::MAX {
                let mut w = pre[u];
                while w != u {
                    id[w] = cycles;
                    w = pre[w];
                }
                id[u] = cycles;
                cycles += 1;
            }
        }
        if cycles == 0 {
            return Some(total);
        }
        for slot in id.iter_mut() {
            if *slot == usize::MAX {
                *slot = cycles;
                cycles += 1;
            }
        }
        edges = edges
            .iter()
            .filter(|&&(u, v, _)| id[u] != id[v])
            .map(|&(u, v, c)| (id[u], id[v], c - in_cost[v]))
            .collect();
        n = cycles;
        root = id[root];
    }
}

/// Rate graph with exact rational rates, for zero-tolerance identity checks.
#[derive(Debug, Clone)]
pub struct RationalGraph {
    out: Vec<Vec<(usize, BigRational)>>,
}

impl RationalGraph {
    /// Exact binary value of every floating-point rate.
    pub fn from_rate_graph(g: &RateGraph) -> Self {
        let out = (0..g.n())
            .map(|x| {
                g.out_arcs(x)
                    .iter()
                    .map(|&(y, r)| (y, BigRational::from_float(r).expect("finite rate")))
                    .collect()
            })
            .collect();
        Self { out }
    }

    /// Rates given as integer ratios `(from, to, numerator, denominator)`.
    pub fn from_ratios(n: usize, arcs: &[(usize, usize, i64, i64)]) -> Result<Self> {
        let mut out: Vec<Vec<(usize, BigRational)>> = vec![Vec::new(); n];
        for &(u, v, p, q) in arcs {
            if u >= n || v >= n || u == v || p <= 0 || q <= 0 {
                return Err(Error::InvalidArgument(format!("bad rational arc ({u},{v},{p}/{q})")));
            }
            if out[u].iter().any(|(t, _)| *t == v) {
                return Err(Error::DuplicateArc {
                    from: u.to_string(),
                    to: v.to_string(),
                });
            }
            out[u].push((v, BigRational::new(BigInt::from(p), BigInt::from(q))));
        }
        for o in &mut out {
            o.sort_by_key(|(t, _)| *t);
        }
        Ok(Self { out })
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    pub fn rate(&self, x: usize, y: usize) -> Option<&BigRational> {
        self.out[x].iter().find(|(t, _)| *t == y).map(|(_, r)| r)
    }

    pub fn tables(&self) -> ForestTables<BigRational> {
        ForestTables::compute(&self.out)
    }

    /// All in-trees rooted at `root`, with exact weights.
    pub fn in_trees(&self, root: usize) -> Vec<(RootedForest, BigRational)> {
        let mut trees = Vec::new();
        visit_forests(&self.out, 1, &mut |parent, w| {
            if parent[root].is_none() {
                trees.push((RootedForest::from_parents(parent.to_vec()), w.clone()));
            }
        });
        trees
    }

    fn forest_weight(&self, f: &RootedForest) -> BigRational {
        f.arcs()
            .iter()
            .map(|&(u, v)| self.rate(u, v).cloned().unwrap_or_else(BigRational::zero))
            .fold(BigRational::one(), |a, b| a * b)
    }
}

/// Replaces the out-arc `(x, y')` of `x` in a tree rooted at `y` by the arc
/// `(y, x)`. The result is an in-tree rooted at `x`. Returns the new tree and
/// the removed target `y'`, or `None` when `x` is the root.
pub fn tree_swap(tree: &RootedForest, x: usize) -> Option<(RootedForest, usize)> {
    let y = tree.root_of(x);
    let removed = tree.parent[x]?;
    let mut parent = tree.parent.clone();
    parent[x] = None;
    parent[y] = Some(x);
    Some((RootedForest::from_parents(parent), removed))
}

/// Outcome of the exact tree-swap check at one target state.
#[derive(Debug, Clone, Serialize)]
pub struct TreeSwapReport {
    pub target: usize,
    /// Number of `(y, T_y)` pairs with an arc `(y, x)`.
    pub pairs: usize,
    /// Every image is a valid in-tree rooted at the target.
    pub images_valid: bool,
    /// `w(T_y)·k(y,x) = w(T'_x)·k(x,y')` exactly for every pair.
    pub weights_match: bool,
    /// Distinct pairs map to distinct `(T'_x, y')`.
    pub injective: bool,
    /// Image set equals `𝓣_x × {out-arcs of x}`.
    pub surjective: bool,
    /// `Σ_y w(y)k(y,x) = w(x)Σ_{y'} k(x,y')` exactly.
    pub balance_holds: bool,
}

impl TreeSwapReport {
    pub fn passed(&self) -> bool {
        self.images_valid && self.weights_match && self.injective && self.surjective && self.balance_holds
    }
}

/// Exercises the tree-swap map onto in-trees rooted at `x` in exact
/// arithmetic.
pub fn check_tree_swap(rg: &RationalGraph, x: usize) -> TreeSwapReport {
    let n = rg.n();
    let targets: HashSet<RootedForest> = rg.in_trees(x).into_iter().map(|(t, _)| t).collect();
    let mut images = HashSet::new();
    let mut pairs = 0;
    let mut images_valid = true;
    let mut weights_match = true;
    let mut inflow = BigRational::zero();
    for y in (0..n).filter(|&y| y != x) {
        let Some(k_yx) = rg.rate(y, x).cloned() else {
            continue;
        };
        for (t_y, w_y) in rg.in_trees(y) {
            pairs += 1;
            inflow += w_y.clone() * k_yx.clone();
            let Some((t_x, removed)) = tree_swap(&t_y, x) else {
                images_valid = false;
                continue;
            };
            let valid = t_x.parent[x].is_none()
                && t_x.arc_count() + 1 == n
                && t_x.arcs().iter().all(|&(u, v)| rg.rate(u, v).is_some())
                && (0..n).all(|v| t_x.root_of(v) == x);
            images_valid &= valid && targets.contains(&t_x);
            let k_removed = rg.rate(x, removed).cloned().unwrap_or_else(BigRational::zero);
            weights_match &= w_y * k_yx.clone() == rg.forest_weight(&t_x) * k_removed;
            images.insert((t_x, removed));
        }
    }
    let out_degree = rg.out[x].len();
    let w_x = targets
        .iter()
        .map(|t| rg.forest_weight(t))
        .fold(BigRational::zero(), |a, b| a + b);
    let exit = rg.out[x]
        .iter()
        .map(|(_, r)| r.clone())
        .fold(BigRational::zero(), |a, b| a + b);
    TreeSwapReport {
        target: x,
        pairs,
        images_valid,
        weights_match,
        injective: images.len() == pairs,
        surjective: images.len() == targets.len() * out_degree,
        balance_holds: inflow == w_x * exit,
    }
}
