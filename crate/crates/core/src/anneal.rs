//! Synchronous parallel simulated annealing over a box.
//!
//! At each temperature every logical chain runs a Metropolis walk of fixed
//! length from the shared incumbent. The chains' end points are reduced to
//! a minimum within each group, the group minima (and the previous
//! incumbent) are reduced again, and the winner seeds the next level.
//! Chains draw from substreams keyed by (seed, level, chain), so the result
//! does not depend on how chains are spread over threads.

use std::fmt;
use std::sync::Arc;

use rand_core::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SabrError};
use crate::mc::{open_uniform, substream};
use crate::workers::map_indexed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealingSchedule {
    pub t0: f64,
    /// Geometric cooling ratio in (0, 1).
    pub cooling: f64,
    /// Metropolis steps per chain and level.
    pub chain_length: usize,
    /// Logical chains per group.
    pub workers: usize,
    pub groups: usize,
    pub t_min: f64,
    pub max_evals: usize,
    pub seed: u64,
    /// Step radius at `t0` as a fraction of each box side.
    pub step_scale: f64,
    /// OS threads used to run chains; does not affect results.
    pub threads: usize,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            t0: 10.0,
            cooling: 0.95,
            chain_length: 1000,
            workers: 8,
            groups: 1,
            t_min: 1e-5,
            max_evals: 5_000_000,
            seed: 1,
            step_scale: 1.0,
            threads: 1,
        }
    }
}

impl AnnealingSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SabrError::Config(format!("annealing schedule: {m}")));
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("t0 must be positive");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling must lie in (0, 1)");
        }
        if !(self.t_min > 0.0 && self.t_min < self.t0) {
            return bad("t_min must lie in (0, t0)");
        }
        if self.chain_length == 0 || self.workers == 0 || self.groups == 0 || self.max_evals == 0 {
            return bad("chain_length, workers, groups and max_evals must be positive");
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return bad("step_scale must be positive");
        }
        Ok(())
    }

    pub fn chains(&self) -> usize {
        self.workers * self.groups
    }

    /// Number of temperature levels before `t_min` is reached.
    pub fn levels(&self) -> usize {
        ((self.t_min / self.t0).ln() / self.cooling.ln()).floor() as usize + 1
    }
}

pub type Feasibility = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Box bounds with an optional extra feasibility predicate.
#[derive(Clone)]
pub struct SearchSpace {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub feasible: Option<Feasibility>,
}

impl fmt::Debug for SearchSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SearchSpace")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("feasible", &self.feasible.as_ref().map(|_| "<predicate>"))
            .finish()
    }
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(SabrError::Domain("bounds must be non-empty and of equal length".into()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(SabrError::Domain(format!("bound {i}: need lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(Self {
            lower,
            upper,
            feasible: None,
        })
    }

    pub fn with_feasibility(mut self, predicate: Feasibility) -> Self {
        self.feasible = Some(predicate);
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn in_bounds(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }

    pub fn admits(&self, x: &[f64]) -> bool {
        self.in_bounds(x) && self.feasible.as_ref().is_none_or(|f| f(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evals: usize,
    /// Objective calls that returned NaN.
    pub nan_evals: usize,
    /// (temperature, incumbent value) after each level.
    pub temperature_trace: Vec<(f64, f64)>,
}

/// Reflects `x` into `[lo, hi]`.
fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if x < lo || x > hi {
        let period = 2.0 * width;
        let mut r = (x - lo).rem_euclid(period);
        if r > width {
            r = period - r;
        }
        x = lo + r;
    }
    x.clamp(lo, hi)
}

/// A uniform box step whose radius shrinks linearly with temperature below
/// `t0`, reflected back into the bounds.
pub fn propose<R: Rng>(
    current: &[f64],
    temperature: f64,
    space: &SearchSpace,
    schedule: &AnnealingSchedule,
    rng: &mut R,
) -> Vec<f64> {
    let shrink = (temperature / schedule.t0).min(1.0);
    current
        .iter()
        .zip(space.lower.iter().zip(&space.upper))
        .map(|(&x, (&lo, &hi))| {
            let s = schedule.step_scale * (hi - lo) * shrink;
            let u = open_uniform(rng);
            reflect(x + (2.0 * u - 1.0) * s, lo, hi)
        })
        .collect()
}

struct ChainOutcome {
    end: Vec<f64>,
    end_value: f64,
    best: Vec<f64>,
    best_value: f64,
    evals: usize,
    nans: usize,
}

fn eval<F: Fn(&[f64]) -> f64>(objective: &F, x: &[f64], nans: &mut usize) -> f64 {
    let v = objective(x);
    if v.is_nan() {
        *nans += 1;
        f64::INFINITY
    } else {
        v
    }
}

#[allow(clippy::too_many_arguments)]
fn run_chain<F: Fn(&[f64]) -> f64>(
    objective: &F,
    space: &SearchSpace,
    schedule: &AnnealingSchedule,
    level: usize,
    chain: usize,
    start: &[f64],
    start_value: f64,
    temperature: f64,
    quota: usize,
) -> ChainOutcome {
    let key = ((level as u64) << 32) | chain as u64;
    let mut rng = substream(schedule.seed, key);
    let mut cur = start.to_vec();
    let mut cur_v = start_value;
    let mut best = cur.clone();
    let mut best_v = cur_v;
    let mut evals = 0;
    let mut nans = 0;
    for _ in 0..schedule.chain_length {
        if evals >= quota {
            break;
        }
        let cand = propose(&cur, temperature, space, schedule, &mut rng);
        let u = open_uniform(&mut rng);
        if !space.admits(&cand) {
            continue;
        }
        let v = eval(objective, &cand, &mut nans);
        evals += 1;
        if v <= cur_v || u < (-(v - cur_v) / temperature).exp() {
            cur = cand;
            cur_v = v;
            if cur_v < best_v {
                best = cur.clone();
                best_v = cur_v;
            }
        }
    }
    ChainOutcome {
        end: cur,
        end_value: cur_v,
        best,
        best_value: best_v,
        evals,
        nans,
    }
}

/// Minimises `objective` over `space` starting from `start`.
pub fn minimize<F>(objective: F, space: &SearchSpace, schedule: &AnnealingSchedule, start: &[f64]) -> Result<AnnealResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    schedule.validate()?;
    if !space.in_bounds(start) {
        return Err(SabrError::Domain(format!("start point {start:?} is outside the bounds")));
    }
    if !space.admits(start) {
        return Err(SabrError::Domain(format!("start point {start:?} is infeasible")));
    }
    let mut nan_evals = 0;
    let mut incumbent = start.to_vec();
    let mut incumbent_v = eval(&objective, start, &mut nan_evals);
    let mut evals = 1;
    let mut best = incumbent.clone();
    let mut best_v = incumbent_v;
    let mut trace = Vec::new();

    let chains = schedule.chains();
    let mut temperature = schedule.t0;
    let mut level = 0;
    while temperature >= schedule.t_min && evals < schedule.max_evals {
        let quota = (schedule.max_evals - evals).div_ceil(chains);
        let inc = &incumbent;
        let outcomes = map_indexed(chains, schedule.threads, |j| {
            run_chain(&objective, space, schedule, level, j, inc, incumbent_v, temperature, quota)
        });

        let mut next: Option<(usize, f64)> = None;
        for g in 0..schedule.groups {
            let group = &outcomes[g * schedule.workers..(g + 1) * schedule.workers];
            let (c, o) = group
                .iter()
                .enumerate()
                .fold((0, &group[0]), |acc, (c, o)| if o.end_value < acc.1.end_value { (c, o) } else { acc });
            let j = g * schedule.workers + c;
            if next.is_none_or(|(_, v)| o.end_value < v) {
                next = Some((j, o.end_value));
            }
        }
        for o in &outcomes {
            evals += o.evals;
            nan_evals += o.nans;
            if o.best_value < best_v {
                best_v = o.best_value;
                best = o.best.clone();
            }
        }
        if let Some((j, v)) = next {
            if v < incumbent_v {
                incumbent = outcomes[j].end.clone();
                incumbent_v = v;
            }
        }
        trace.push((temperature, incumbent_v));
        temperature *= schedule.cooling;
        level += 1;
    }

    Ok(AnnealResult {
        best_point: best,
        best_value: best_v,
        evals,
        nan_evals,
        temperature_trace: trace,
    })
}
