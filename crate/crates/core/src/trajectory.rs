//! Exact-jump simulation of the process and Monte-Carlo estimators.
//!
//! Every sample `i` of an estimate draws from its own ChaCha8 stream:
//! `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(i)`. Samples run in
//! parallel and are reduced in index order, so an estimate depends only on
//! `(graph, arguments, seed)`.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{RateGraph, ScalarField, StateSet};
use crate::potential::{self, QuasipotentialMethod};
use crate::spectral;

/// Smallest sample count the estimators accept.
pub const MIN_SAMPLES: usize = 100;

/// When a path stops.
#[derive(Debug, Clone, PartialEq)]
pub enum StopRule {
    /// At time `T`.
    Horizon(f64),
    /// On the first visit to the target.
    HitTarget(usize),
    /// On the first exit from the set.
    EscapeSet(StateSet),
}

impl StopRule {
    fn stops_at(&self, x: usize) -> bool {
        match self {
            Self::Horizon(_) => false,
            Self::HitTarget(z) => x == *z,
            Self::EscapeSet(h) => !h.contains(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Horizon,
    Target,
    Escape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    /// Time spent in the state before this jump.
    pub holding: f64,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial: usize,
    pub jumps: Vec<Jump>,
    pub terminal: usize,
    /// Time spent in `terminal` before a horizon stop; zero otherwise.
    pub final_holding: f64,
    pub termination: Termination,
}

impl Trajectory {
    /// States visited, in order, starting with `initial`.
    pub fn states(&self) -> Vec<usize> {
        std::iter::once(self.initial)
            .chain(self.jumps.iter().map(|j| j.next))
            .collect()
    }

    pub fn duration(&self) -> f64 {
        self.jumps.iter().map(|j| j.holding).sum::<f64>() + self.final_holding
    }

    /// `∫ f(X_t) dt` over the path.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let states = self.states();
        let mut acc = 0.0;
        for (j, &x) in self.jumps.iter().zip(&states) {
            acc += j.holding * f[x];
        }
        acc + self.final_holding * f[self.terminal]
    }

    /// Checks that every jump follows an arc and every holding time is
    /// positive.
    pub fn validate(&self, g: &RateGraph) -> std::result::Result<(), String> {
        let mut x = self.initial;
        for j in &self.jumps {
            if !(j.holding > 0.0) {
                return Err(format!("nonpositive holding time {} at {}", j.holding, g.state_name(x)));
            }
            if g.rate(x, j.next) <= 0.0 {
                return Err(format!("no arc {} -> {}", g.state_name(x), g.state_name(j.next)));
            }
            x = j.next;
        }
        if x != self.terminal {
            return Err("terminal state does not match the last jump".into());
        }
        Ok(())
    }
}

/// Per-sample random stream.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform in the open interval `(0, 1)`.
fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Cumulative out-rates, for drawing jumps.
struct Sampler {
    out: Vec<Vec<(usize, f64)>>,
    exit: Vec<f64>,
}

impl Sampler {
    fn new(g: &RateGraph) -> Self {
        let out = (0..g.n())
            .map(|x| {
                let mut c = 0.0;
                g.out_arcs(x)
                    .iter()
                    .map(|&(y, k)| {
                        c += k;
                        (y, c)
                    })
                    .collect()
            })
            .collect();
        let exit = (0..g.n()).map(|x| g.exit_rate(x)).collect();
        Self { out, exit }
    }

    fn step(&self, x: usize, rng: &mut impl RngCore) -> (f64, usize) {
        let hold = -open_unit(rng).ln() / self.exit[x];
        let u = open_unit(rng) * self.exit[x];
        let arcs = &self.out[x];
        let next = arcs.iter().find(|&&(_, c)| u < c).unwrap_or(&arcs[arcs.len() - 1]).0;
        (hold, next)
    }

    /// Runs one path; returns `(terminal, duration, ∫f, termination)` and
    /// optionally records the jumps.
    fn walk(
        &self,
        x0: usize,
        stop: &StopRule,
        f: Option<&[f64]>,
        rng: &mut impl RngCore,
        mut record: Option<&mut Vec<Jump>>,
    ) -> (usize, f64, f64, Termination, f64) {
        let mut x = x0;
        let mut t = 0.0;
        let mut acc = 0.0;
        let horizon = match stop {
            StopRule::Horizon(h) => *h,
            _ => f64::INFINITY,
        };
        loop {
            if stop.stops_at(x) {
                let term = match stop {
                    StopRule::HitTarget(_) => Termination::Target,
                    _ => Termination::Escape,
                };
                return (x, t, acc, term, 0.0);
            }
            let (hold, next) = self.step(x, rng);
            if t + hold >= horizon {
                let rest = horizon - t;
                if let Some(f) = f {
                    acc += rest * f[x];
                }
                return (x, horizon, acc, Termination::Horizon, rest);
            }
            if let Some(f) = f {
                acc += hold * f[x];
            }
            if let Some(r) = record.as_deref_mut() {
                r.push(Jump { holding: hold, next });
            }
            t += hold;
            x = next;
        }
    }
}

/// One path from `x0` under `stop`, drawn from stream 0 of `seed`.
pub fn sample_path(g: &RateGraph, x0: usize, stop: &StopRule, seed: u64) -> Trajectory {
    sample_path_indexed(g, x0, stop, seed, 0)
}

/// One path drawn from stream `index` of `seed`.
pub fn sample_path_indexed(g: &RateGraph, x0: usize, stop: &StopRule, seed: u64, index: u64) -> Trajectory {
    let s = Sampler::new(g);
    let mut rng = sample_rng(seed, index);
    let mut jumps = Vec::new();
    let (terminal, _, _, termination, final_holding) = s.walk(x0, stop, None, &mut rng, Some(&mut jumps));
    Trajectory {
        initial: x0,
        jumps,
        terminal,
        final_holding,
        termination,
    }
}

/// Writes up to `cap` trajectories as JSON lines with state names.
pub fn write_trajectories_jsonl<W: Write>(
    g: &RateGraph,
    trajectories: &[Trajectory],
    cap: usize,
    mut out: W,
) -> Result<usize> {
    let mut written = 0;
    for t in trajectories.iter().take(cap) {
        let line = serde_json::json!({
            "initial": g.state_name(t.initial),
            "jumps": t.jumps.iter().map(|j| serde_json::json!({
                "holding": j.holding,
                "next": g.state_name(j.next),
            })).collect::<Vec<_>>(),
            "terminal": g.state_name(t.terminal),
            "final_holding": t.final_holding,
            "termination": t.termination,
        });
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
        written += 1;
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`.
    pub std_error: f64,
    pub count: usize,
    pub seed: u64,
}

impl McEstimate {
    fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            count: n,
            seed,
        }
    }

    /// `|mean − value| / SE`; zero when both the error and the SE vanish.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.mean - value).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    /// `|mean − value| ≤ k·SE + extra`.
    pub fn within(&self, value: f64, k: f64, extra: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + extra
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// Draws `n` samples in parallel and reduces them in index order.
fn run<F>(n: usize, seed: u64, sample: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample(&mut sample_rng(seed, i)))
        .collect()
}

/// Mean first-passage time from `x` to `z`.
pub fn estimate_mfpt(g: &RateGraph, x: usize, z: usize, n: usize, seed: u64) -> Result<McEstimate> {
    if x == z {
        return Err(Error::InvalidArgument("first passage needs x ≠ z".into()));
    }
    check_samples(n)?;
    let s = Sampler::new(g);
    let stop = StopRule::HitTarget(z);
    let samples = run(n, seed, |rng| s.walk(x, &stop, None, rng, None).1);
    Ok(McEstimate::from_samples(&samples, seed))
}

/// `∫₀^{T_H} f(X_t) dt` from `x ∈ H`.
pub fn estimate_stopped_accumulation(
    g: &RateGraph,
    x: usize,
    h: &StateSet,
    f: &ScalarField,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !h.contains(x) {
        return Err(Error::InvalidArgument(format!("start {} is outside H", g.state_name(x))));
    }
    check_samples(n)?;
    let s = Sampler::new(g);
    let stop = StopRule::EscapeSet(h.clone());
    let samples = run(n, seed, |rng| s.walk(x, &stop, Some(f.values()), rng, None).2);
    Ok(McEstimate::from_samples(&samples, seed))
}

/// `∫₀^{T_y} (f − ⟨f⟩)(X_t) dt` from `x`; estimates `V(x) − V(y)`.
pub fn estimate_pair_accumulation(
    g: &RateGraph,
    x: usize,
    y: usize,
    f: &ScalarField,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if x == y {
        return Err(Error::InvalidArgument("pair accumulation needs x ≠ y".into()));
    }
    check_samples(n)?;
    let rho = spectral::stationary_distribution(&g.generator())?.into_values();
    let fc = f.clone().assert_centered(&rho)?.centered(&rho);
    let s = Sampler::new(g);
    let stop = StopRule::HitTarget(y);
    let samples = run(n, seed, |rng| s.walk(x, &stop, Some(fc.values()), rng, None).2);
    Ok(McEstimate::from_samples(&samples, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcessEstimate {
    pub estimate: McEstimate,
    pub horizon: f64,
    /// `|(e^{TL}V)(x)|`: the exact gap between `E∫₀^T f` and `V(x)`.
    pub truncation_allowance: f64,
}

impl ExcessEstimate {
    /// Within `k·SE` of `value`, with the truncation allowance added.
    pub fn within(&self, value: f64, k: f64) -> bool {
        self.estimate.within(value, k, self.truncation_allowance)
    }
}

/// Where excess paths start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    State(usize),
    /// Drawn from `ρ` independently for each sample.
    Stationary,
}

/// `∫₀^T f(X_t) dt` for centered `f`; refuses `T < 5/gap`.
pub fn estimate_excess(
    g: &RateGraph,
    start: Start,
    f: &ScalarField,
    horizon: f64,
    n: usize,
    seed: u64,
) -> Result<ExcessEstimate> {
    check_samples(n)?;
    let l = g.generator();
    let required = 5.0 / spectral::spectral_gap(&l);
    if !(horizon >= required) {
        return Err(Error::HorizonTooShort { horizon, required });
    }
    let rho = spectral::stationary_distribution(&l)?.into_values();
    let f = f.clone().assert_centered(&rho)?;
    let v = potential::quasipotential(g, &f, QuasipotentialMethod::Linear, &Default::default())?.values;
    let tail = spectral::propagate(&l, v.values(), horizon);
    let allowance = match start {
        Start::State(x) => tail[x].abs(),
        Start::Stationary => tail.iter().zip(&rho).map(|(t, p)| p * t).sum::<f64>().abs(),
    };
    let s = Sampler::new(g);
    let stop = StopRule::Horizon(horizon);
    let cum: Vec<f64> = rho
        .iter()
        .scan(0.0, |c, p| {
            *c += p;
            Some(*c)
        })
        .collect();
    let samples = run(n, seed, |rng| {
        let x = match start {
            Start::State(x) => x,
            Start::Stationary => {
                let u = open_unit(rng);
                cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
            }
        };
        s.walk(x, &stop, Some(f.values()), rng, None).2
    });
    Ok(ExcessEstimate {
        estimate: McEstimate::from_samples(&samples, seed),
        horizon,
        truncation_allowance: allowance,
    })
}

/// Fraction of `[0, T]` spent in each state, averaged over `n` paths from
/// `x0`.
pub fn occupation_fractions(
    g: &RateGraph,
    x0: usize,
    horizon: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_samples(n)?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let s = Sampler::new(g);
    let states = g.n();
    let per_sample: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let mut occ = vec![0.0; states];
            let mut x = x0;
            let mut t = 0.0;
            loop {
                let (hold, next) = s.step(x, &mut rng);
                if t + hold >= horizon {
                    occ[x] += horizon - t;
                    break;
                }
                occ[x] += hold;
                t += hold;
                x = next;
            }
            occ.iter().map(|o| o / horizon).collect()
        })
        .collect();
    Ok((0..states)
        .map(|y| {
            let col: Vec<f64> = per_sample.iter().map(|o| o[y]).collect();
            McEstimate::from_samples(&col, seed)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Least-squares slope of `−ln P(T_H > t)` over the fitted window.
    pub fitted_rate: f64,
    /// `−max Re` of the eigenvalues of `L` restricted to `H`.
    pub spectral_rate: f64,
    pub relative_error: f64,
    pub samples: usize,
}

/// Fits the exponential tail of the escape time from `H` started at `x0`.
///
/// The empirical survival function is evaluated at 20 evenly spaced times
/// between its median and its 99th percentile.
pub fn survival_decay_fit(
    g: &RateGraph,
    x0: usize,
    h: &StateSet,
    n: usize,
    seed: u64,
) -> Result<DecayFit> {
    check_samples(n)?;
    if !h.contains(x0) || h.is_full() {
        return Err(Error::InvalidArgument("need x0 ∈ H and H ≠ K".into()));
    }
    let s = Sampler::new(g);
    let stop = StopRule::EscapeSet(h.clone());
    let mut times = run(n, seed, |rng| s.walk(x0, &stop, None, rng, None).1);
    times.sort_by(f64::total_cmp);
    let lo = times[n / 2];
    let hi = times[(n * 99) / 100];
    let pts: Vec<(f64, f64)> = (0..20)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / 19.0;
            let above = n - times.partition_point(|&s| s <= t);
            (t, (above as f64 / n as f64).ln())
        })
        .filter(|(_, l)| l.is_finite())
        .collect();
    let m = pts.len() as f64;
    let (mt, ml) = (
        pts.iter().map(|p| p.0).sum::<f64>() / m,
        pts.iter().map(|p| p.1).sum::<f64>() / m,
    );
    let cov: f64 = pts.iter().map(|(t, l)| (t - mt) * (l - ml)).sum();
    let var: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    let fitted_rate = -cov / var;
    let spectral_rate = -potential::stopped_spectral_bound(g, h);
    Ok(DecayFit {
        fitted_rate,
        spectral_rate,
        relative_error: (fitted_rate - spectral_rate).abs() / spectral_rate,
        samples: n,
    })
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

    #[test]
    fn paths_are_valid_and_deterministic() {
        let g = two_state();
        let t = sample_path(&g, 0, &StopRule::HitTarget(1), 3);
        assert_eq!(t.jumps.len(), 1);
        assert_eq!(t.terminal, 1);
        assert_eq!(t.termination, Termination::Target);
        assert_eq!(t, sample_path(&g, 0, &StopRule::HitTarget(1), 3));
        let r = ring3();
        let long = sample_path(&r, 0, &StopRule::Horizon(50.0), 11);
        long.validate(&r).unwrap();
        assert!((long.duration() - 50.0).abs() < 1e-9);
        let empty = sample_path(&r, 0, &StopRule::Horizon(0.0), 1);
        assert!(empty.jumps.is_empty() && empty.duration() == 0.0);
    }

    #[test]
    fn preconditions() {
        let g = two_state();
        assert!(estimate_mfpt(&g, 0, 0, 1000, 1).is_err());
        assert!(estimate_mfpt(&g, 0, 1, 10, 1).is_err());
        let f = ScalarField::new(vec![2.0 / 3.0, -1.0 / 3.0]);
        assert!(matches!(
            estimate_excess(&g, Start::State(0), &f, 1.0, 1000, 1),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn zero_source_is_exact() {
        let g = two_state();
        let h = StateSet::from_indices(2, &[0]).unwrap();
        let e = estimate_stopped_accumulation(&g, 0, &h, &ScalarField::zeros(2), 200, 5).unwrap();
        assert_eq!((e.mean, e.std_error), (0.0, 0.0));
        assert!(e.within(0.0, 4.0, 0.0));
    }

    #[test]
    fn mfpt_two_state() {
        let e = estimate_mfpt(&two_state(), 0, 1, 10_000, 42).unwrap();
        assert!(e.within(0.5, 4.0, 0.0), "{e:?}");
        assert_eq!(e, estimate_mfpt(&two_state(), 0, 1, 10_000, 42).unwrap());
    }

    #[test]
    fn jsonl_dump_respects_cap() {
        let g = two_state();
        let ts: Vec<_> = (0..5)
            .map(|i| sample_path_indexed(&g, 0, &StopRule::Horizon(2.0), 9, i))
            .collect();
        let mut buf = Vec::new();
        assert_eq!(write_trajectories_jsonl(&g, &ts, 3, &mut buf).unwrap(), 3);
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
