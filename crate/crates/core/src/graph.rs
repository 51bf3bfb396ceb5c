//! State space, rate data and the backward generator.
//!
//! A [`RateGraph`] is a finite state set with positive jump rates `k(x, y)`
//! on ordered pairs. States are indexed by their position in the input
//! order and every matrix or vector in the crate uses that indexing.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::ops::Index;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A directed arc with a positive rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

/// Finite, strongly connected digraph with positive rates.
#[derive(Debug, Clone)]
pub struct RateGraph {
    states: Vec<String>,
    index: HashMap<String, usize>,
    arcs: Vec<Arc>,
    out: Vec<Vec<(usize, f64)>>,
    notes: Vec<String>,
}

fn index_states(states: &[String]) -> Result<HashMap<String, usize>> {
    if states.len() < 2 {
        return Err(Error::TooFewStates(states.len()));
    }
    let mut index = HashMap::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        if index.insert(s.clone(), i).is_some() {
            return Err(Error::DuplicateState(s.clone()));
        }
    }
    Ok(index)
}

impl RateGraph {
    /// Builds a graph from index triples `(from, to, rate)`.
    ///
    /// Parallel arcs are rejected here; [`parse_graph_document`] merges them
    /// instead.
    pub fn from_indexed<I>(states: Vec<String>, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let index = index_states(&states)?;
        let n = states.len();
        let mut table: Vec<Option<f64>> = vec![None; n * n];
        for (from, to, rate) in arcs {
            for s in [from, to] {
                if s >= n {
                    return Err(Error::UnknownState(format!("#{s}")));
                }
            }
            if from == to {
                return Err(Error::SelfLoop(states[from].clone()));
            }
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::NonpositiveRate {
                    from: states[from].clone(),
                    to: states[to].clone(),
                    rate,
                });
            }
            let slot = &mut table[from * n + to];
            if slot.is_some() {
                return Err(Error::DuplicateArc {
                    from: states[from].clone(),
                    to: states[to].clone(),
                });
            }
            *slot = Some(rate);
        }
        Self::from_table(states, index, &table, Vec::new())
    }

    /// Convenience constructor with states named `0..n`.
    pub fn with_numbered_states<I>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::from_indexed((0..n).map(|i| i.to_string()).collect(), arcs)
    }

    fn from_table(
        states: Vec<String>,
        index: HashMap<String, usize>,
        table: &[Option<f64>],
        notes: Vec<String>,
    ) -> Result<Self> {
        let n = states.len();
        // row-major arc order
        let mut arcs = Vec::new();
        let mut out = vec![Vec::new(); n];
        for from in 0..n {
            for to in 0..n {
                if let Some(rate) = table[from * n + to] {
                    arcs.push(Arc { from, to, rate });
                    out[from].push((to, rate));
                }
            }
        }
        if let Irreducibility::Reducible { from, to } =
            check_irreducible(n, arcs.iter().map(|a| (a.from, a.to)))
        {
            return Err(Error::NotStronglyConnected {
                from: states[from].clone(),
                to: states[to].clone(),
            });
        }
        Ok(Self {
            states,
            index,
            arcs,
            out,
            notes,
        })
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, i: usize) -> &str {
        &self.states[i]
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    /// Arcs in row-major order of `(from, to)`.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Outgoing `(target, rate)` pairs of state `x`, sorted by target.
    pub fn out_arcs(&self, x: usize) -> &[(usize, f64)] {
        &self.out[x]
    }

    /// Rate `k(x, y)`, zero when the arc is absent.
    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.out[x]
            .binary_search_by_key(&y, |&(t, _)| t)
            .map(|i| self.out[x][i].1)
            .unwrap_or(0.0)
    }

    pub fn exit_rate(&self, x: usize) -> f64 {
        self.out[x].iter().map(|&(_, r)| r).sum()
    }

    /// Largest arc rate.
    pub fn max_rate(&self) -> f64 {
        self.arcs.iter().map(|a| a.rate).fold(0.0, f64::max)
    }

    /// Notes produced while building the graph (merged arcs, clamped rates).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Same structure with every rate replaced by `rate_of(arc)`.
    pub fn map_rates(&self, mut rate_of: impl FnMut(&Arc) -> f64) -> Result<Self> {
        let arcs: Vec<_> = self
            .arcs
            .iter()
            .map(|a| (a.from, a.to, rate_of(a)))
            .collect();
        Self::from_indexed(self.states.clone(), arcs)
    }

    pub fn check_irreducible(&self) -> Irreducibility {
        check_irreducible(self.n(), self.arcs.iter().map(|a| (a.from, a.to)))
    }

    pub fn generator(&self) -> GeneratorMatrix {
        generator(self)
    }
}

/// Result of a strong-connectivity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Irreducibility {
    Irreducible,
    /// No directed path leads from `from` to `to`.
    Reducible { from: usize, to: usize },
}

impl Irreducibility {
    pub fn is_irreducible(&self) -> bool {
        matches!(self, Irreducibility::Irreducible)
    }
}

/// Strong connectivity of the digraph on `0..n` with the given arcs.
///
/// Searches forward and backward from state 0; a failure yields a witness
/// pair with no directed path between them.
pub fn check_irreducible<I>(n: usize, arcs: I) -> Irreducibility
where
    I: IntoIterator<Item = (usize, usize)>,
{
    if n == 0 {
        return Irreducibility::Irreducible;
    }
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for (a, b) in arcs {
        fwd[a].push(b);
        bwd[b].push(a);
    }
    let reach = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    if let Some(y) = reach(&fwd).iter().position(|&s| !s) {
        return Irreducibility::Reducible { from: 0, to: y };
    }
    if let Some(x) = reach(&bwd).iter().position(|&s| !s) {
        return Irreducibility::Reducible { from: x, to: 0 };
    }
    Irreducibility::Irreducible
}

/// Dense backward generator `L`: `L[x][y] = k(x, y)` off the diagonal and
/// `L[x][x] = -Σ_y k(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix(DMatrix<f64>);

pub fn generator(g: &RateGraph) -> GeneratorMatrix {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut total = 0.0;
        for &(y, r) in g.out_arcs(x) {
            m[(x, y)] = r;
            total += r;
        }
        m[(x, x)] = -total;
    }
    GeneratorMatrix(m)
}

impl GeneratorMatrix {
    /// Wraps a matrix after checking the generator sign pattern and row sums.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for x in 0..m.nrows() {
            let mut sum = 0.0;
            for y in 0..m.ncols() {
                let v = m[(x, y)];
                if (x != y && v < 0.0) || (x == y && v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({x},{y}) = {v} violates the generator sign pattern"
                    )));
                }
                sum += v;
            }
            if sum.abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "row {x} sums to {sum:e}"
                )));
            }
        }
        Ok(Self(m))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Graph Laplacian `𝓛 = -L`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        -&self.0
    }

    /// Max-norm `max |L[x][y]|`.
    pub fn norm(&self) -> f64 {
        self.0.amax()
    }

    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|x| (0..n).map(|y| self.0[(x, y)] * h[y]).sum())
            .collect()
    }

    pub fn max_row_sum(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| r.sum().abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for GeneratorMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// A real function on the states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarField {
    values: Vec<f64>,
    centered: bool,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            centered: false,
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(vec![c; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// `Σ_x ρ(x) f(x)`.
    pub fn mean(&self, rho: &[f64]) -> f64 {
        self.values.iter().zip(rho).map(|(f, p)| f * p).sum()
    }

    /// `f - ⟨f⟩_ρ`, flagged as centered.
    pub fn centered(&self, rho: &[f64]) -> Self {
        let m = self.mean(rho);
        Self {
            values: self.values.iter().map(|v| v - m).collect(),
            centered: true,
        }
    }

    /// Flags the field as centered after checking `|⟨f⟩_ρ| ≤ 1e-12·‖f‖∞`.
    pub fn assert_centered(mut self, rho: &[f64]) -> Result<Self> {
        let m = self.mean(rho);
        if m.abs() > 1e-12 * self.sup_norm() {
            return Err(Error::NotCentered { mean: m });
        }
        self.centered = true;
        Ok(self)
    }

    pub(crate) fn mark_centered(mut self) -> Self {
        self.centered = true;
        self
    }

    /// `max_x |f(x)|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_x |f(x) - ⟨f⟩_ρ|`.
    pub fn centered_sup_norm(&self, rho: &[f64]) -> f64 {
        let m = self.mean(rho);
        self.values.iter().fold(0.0, |a, v| a.max((v - m).abs()))
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        Self::new(v)
    }
}

/// A subset of states, stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    mask: Vec<bool>,
}

impl StateSet {
    pub fn from_indices(n: usize, members: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &m in members {
            if m >= n {
                return Err(Error::UnknownState(format!("#{m}")));
            }
            mask[m] = true;
        }
        Ok(Self { mask })
    }

    pub fn from_names<S: AsRef<str>>(g: &RateGraph, names: &[S]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|s| g.state_index(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(g.n(), &idx)
    }

    pub fn all(n: usize) -> Self {
        Self {
            mask: vec![true; n],
        }
    }

    /// Every state except `z`.
    pub fn all_but(n: usize, z: usize) -> Self {
        let mut s = Self::all(n);
        s.mask[z] = false;
        s
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask.get(x).copied().unwrap_or(false)
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }
}

/// Arc of a parameterized graph: `k_λ = prefactor · exp(-λ · barrier)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamArc {
    pub from: usize,
    pub to: usize,
    pub prefactor: f64,
    pub barrier: f64,
}

impl ParamArc {
    pub fn rate_at(&self, lambda: f64) -> f64 {
        self.prefactor * (-lambda * self.barrier).exp()
    }
}

/// Arrhenius-type family of rate graphs indexed by a real parameter λ.
#[derive(Debug, Clone)]
pub struct ParamRateGraph {
    states: Vec<String>,
    index: HashMap<String, usize>,
    arcs: Vec<ParamArc>,
    notes: Vec<String>,
}

/// A rate graph evaluated at one λ, with the arcs whose rate was clamped.
#[derive(Debug, Clone)]
pub struct EvaluatedGraph {
    pub lambda: f64,
    pub graph: RateGraph,
    pub clamped: Vec<(usize, usize)>,
}

impl ParamRateGraph {
    pub fn from_indexed<I>(states: Vec<String>, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64, f64)>,
    {
        let index = index_states(&states)?;
        let n = states.len();
        let mut table: Vec<Option<(f64, f64)>> = vec![None; n * n];
        for (from, to, a, b) in arcs {
            for s in [from, to] {
                if s >= n {
                    return Err(Error::UnknownState(format!("#{s}")));
                }
            }
            if from == to {
                return Err(Error::SelfLoop(states[from].clone()));
            }
            if !(a > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidArcParameters {
                    from: states[from].clone(),
                    to: states[to].clone(),
                    prefactor: a,
                    barrier: b,
                });
            }
            let slot = &mut table[from * n + to];
            if slot.is_some() {
                return Err(Error::DuplicateArc {
                    from: states[from].clone(),
                    to: states[to].clone(),
                });
            }
            *slot = Some((a, b));
        }
        Self::from_table(states, index, &table, Vec::new())
    }

    fn from_table(
        states: Vec<String>,
        index: HashMap<String, usize>,
        table: &[Option<(f64, f64)>],
        notes: Vec<String>,
    ) -> Result<Self> {
        let n = states.len();
        let mut arcs = Vec::new();
        for from in 0..n {
            for to in 0..n {
                if let Some((prefactor, barrier)) = table[from * n + to] {
                    arcs.push(ParamArc {
                        from,
                        to,
                        prefactor,
                        barrier,
                    });
                }
            }
        }
        if let Irreducibility::Reducible { from, to } =
            check_irreducible(n, arcs.iter().map(|a| (a.from, a.to)))
        {
            return Err(Error::NotStronglyConnected {
                from: states[from].clone(),
                to: states[to].clone(),
            });
        }
        Ok(Self {
            states,
            index,
            arcs,
            notes,
        })
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn arcs(&self) -> &[ParamArc] {
        &self.arcs
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Evaluates all rates at `λ`.
    ///
    /// Rates that underflow below the smallest normal float are clamped up
    /// to it (and overflow clamps down to `f64::MAX`); clamped arcs are
    /// listed in the result and in the graph notes.
    pub fn evaluate_at(&self, lambda: f64) -> Result<EvaluatedGraph> {
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("λ = {lambda} is not finite")));
        }
        let mut clamped = Vec::new();
        let mut notes = Vec::new();
        let n = self.n();
        let mut table = vec![None; n * n];
        for arc in &self.arcs {
            let mut rate = arc.rate_at(lambda);
            if rate < f64::MIN_POSITIVE {
                rate = f64::MIN_POSITIVE;
            } else if rate > f64::MAX {
                rate = f64::MAX;
            } else {
                table[arc.from * n + arc.to] = Some(rate);
                continue;
            }
            clamped.push((arc.from, arc.to));
            notes.push(format!(
                "rate {} -> {} clamped to {rate:e} at λ = {lambda}",
                self.states[arc.from], self.states[arc.to]
            ));
            table[arc.from * n + arc.to] = Some(rate);
        }
        let graph = RateGraph::from_table(self.states.clone(), self.index.clone(), &table, notes)?;
        Ok(EvaluatedGraph {
            lambda,
            graph,
            clamped,
        })
    }
}

pub fn evaluate_at(pg: &ParamRateGraph, lambda: f64) -> Result<EvaluatedGraph> {
    pg.evaluate_at(lambda)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    states: Vec<String>,
    arcs: Vec<ArcRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcRecord {
    from: String,
    to: String,
    rate: Option<f64>,
    prefactor: Option<f64>,
    barrier: Option<f64>,
}

/// Contents of a graph file: either plain rates or a parameterized family.
#[derive(Debug, Clone)]
pub enum GraphDocument {
    Rates(RateGraph),
    Parameterized(ParamRateGraph),
}

/// Parses a graph file.
///
/// ```json
/// {"states": ["a", "b"], "arcs": [{"from": "a", "to": "b", "rate": 2.0}, ...]}
/// ```
///
/// Arcs carry either `rate` or both `prefactor` and `barrier`; mixing the two
/// forms is an error. Parallel arcs are merged by summing their rates (for
/// parameterized arcs, only identical barriers can be merged) and a note is
/// attached to the graph.
pub fn parse_graph_document(text: &str) -> Result<GraphDocument> {
    let file: GraphFile = serde_json::from_str(text)?;
    let index = index_states(&file.states)?;
    let n = file.states.len();
    let lookup = |s: &str| {
        index
            .get(s)
            .copied()
            .ok_or_else(|| Error::UnknownState(s.to_string()))
    };

    let mut plain = 0usize;
    let mut param = 0usize;
    for a in &file.arcs {
        match (a.rate, a.prefactor, a.barrier) {
            (Some(_), None, None) => plain += 1,
            (None, Some(_), Some(_)) => param += 1,
            (Some(_), _, _) => return Err(Error::MixedArcForms),
            _ => {
                return Err(Error::MalformedArc {
                    from: a.from.clone(),
                    to: a.to.clone(),
                })
            }
        }
    }
    if plain > 0 && param > 0 {
        return Err(Error::MixedArcForms);
    }

    let mut notes = Vec::new();
    if param > 0 {
        let mut table: Vec<Option<(f64, f64)>> = vec![None; n * n];
        for a in &file.arcs {
            let (from, to) = (lookup(&a.from)?, lookup(&a.to)?);
            if from == to {
                return Err(Error::SelfLoop(a.from.clone()));
            }
            let (pf, b) = (a.prefactor.unwrap(), a.barrier.unwrap());
            if !(pf > 0.0 && pf.is_finite() && b.is_finite()) {
                return Err(Error::InvalidArcParameters {
                    from: a.from.clone(),
                    to: a.to.clone(),
                    prefactor: pf,
                    barrier: b,
                });
            }
            let slot = &mut table[from * n + to];
            *slot = match *slot {
                None => Some((pf, b)),
                Some((pf0, b0)) if b0 == b => {
                    notes.push(format!("merged parallel arcs {} -> {}", a.from, a.to));
                    Some((pf0 + pf, b))
                }
                Some(_) => {
                    return Err(Error::DuplicateArc {
                        from: a.from.clone(),
                        to: a.to.clone(),
                    })
                }
            };
        }
        return Ok(GraphDocument::Parameterized(ParamRateGraph::from_table(
            file.states,
            index,
            &table,
            notes,
        )?));
    }

    let mut table: Vec<Option<f64>> = vec![None; n * n];
    for a in &file.arcs {
        let (from, to) = (lookup(&a.from)?, lookup(&a.to)?);
        if from == to {
            return Err(Error::SelfLoop(a.from.clone()));
        }
        let rate = a.rate.unwrap();
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::NonpositiveRate {
                from: a.from.clone(),
                to: a.to.clone(),
                rate,
            });
        }
        let slot = &mut table[from * n + to];
        *slot = match *slot {
            None => Some(rate),
            Some(r0) => {
                notes.push(format!("merged parallel arcs {} -> {}", a.from, a.to));
                Some(r0 + rate)
            }
        };
    }
    Ok(GraphDocument::Rates(RateGraph::from_table(
        file.states,
        index,
        &table,
        notes,
    )?))
}

/// Parses a graph file that must contain plain rates.
pub fn build_rate_graph(text: &str) -> Result<RateGraph> {
    match parse_graph_document(text)? {
        GraphDocument::Rates(g) => Ok(g),
        GraphDocument::Parameterized(_) => Err(Error::InvalidArgument(
            "expected `rate` arcs, found `prefactor`/`barrier` arcs".into(),
        )),
    }
}

impl fmt::Display for RateGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RateGraph(n={}, arcs=[", self.n())?;
        for (i, a) in self.arcs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}->{}:{}", self.states[a.from], self.states[a.to], a.rate)?;
        }
        write!(f, "])")
    }
}
