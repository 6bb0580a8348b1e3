//! Log-Euler Monte Carlo for static and dynamic SABR.
//!
//! Paths are simulated in `(ln F, ln α)`:
//!
//! ```text
//! ν̂  = α_i F_i^{β−1}
//! ln F_{i+1} = ln F_i + ν̂(ρ Z¹ + √(1−ρ²) Z²)√h − ν̂²h/2
//! ln α_{i+1} = ln α_i + ν Z¹√h − ν²h/2
//! ```
//!
//! which keeps both states positive. Paths are grouped into fixed-size
//! blocks, each with its own generator, and block results are combined in
//! block order, so estimates do not depend on the number of workers.

mod cliquet;
mod rng;
mod stats;

pub use cliquet::{price_cliquet, CliquetSpec};
pub use rng::{box_muller, open_uniform, substream, substream_seed};
pub use stats::{PriceEstimate, RunningStats};

use serde::{Deserialize, Serialize};

use crate::analytics::forward_price;
use crate::calibrate::VolSurface;
use crate::error::{ensure_positive, Result, SabrError};
use crate::params::SabrModel;
use crate::workers::map_indexed;

/// How the time grid meets the maturity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridConvention {
    /// `M = ⌊T/Δt⌋` full steps; the terminal state sits at `MΔt ≤ T`.
    #[default]
    Truncate,
    /// `⌊T/Δt⌋` full steps plus one short step ending exactly at `T`.
    ExactMaturity,
}

/// Where in each step the time-dependent ν(t), ρ(t) are evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSampling {
    #[default]
    StepEnd,
    StepStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationPlan {
    pub num_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub workers: usize,
    /// Paths per random substream.
    pub block_size: usize,
    pub grid: GridConvention,
    pub sampling: CoefficientSampling,
}

impl Default for SimulationPlan {
    fn default() -> Self {
        Self {
            num_paths: 1 << 20,
            dt: 1.0 / 250.0,
            seed: 20111230,
            workers: 1,
            block_size: 4096,
            grid: GridConvention::default(),
            sampling: CoefficientSampling::default(),
        }
    }
}

impl SimulationPlan {
    pub fn new(num_paths: usize, dt: f64, seed: u64) -> Self {
        Self {
            num_paths,
            dt,
            seed,
            ..Self::default()
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_paths == 0 {
            return Err(SabrError::Domain("num_paths must be at least 1".into()));
        }
        ensure_positive(self.dt, "dt")?;
        if self.block_size == 0 {
            return Err(SabrError::Domain("block_size must be at least 1".into()));
        }
        Ok(())
    }

    fn num_blocks(&self) -> usize {
        self.num_paths.div_ceil(self.block_size)
    }

    fn block_len(&self, block: usize) -> usize {
        self.block_size.min(self.num_paths - block * self.block_size)
    }
}

/// Uniform time grid for one maturity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub maturity: f64,
    pub dt: f64,
    pub full_steps: usize,
    /// Length of the final short step, zero if there is none.
    pub short_step: f64,
}

impl TimeGrid {
    pub fn new(maturity: f64, dt: f64, convention: GridConvention) -> Result<Self> {
        ensure_positive(maturity, "maturity")?;
        ensure_positive(dt, "dt")?;
        // Tolerate representation error in products like 2.0 / (1/250).
        let ratio = maturity / dt;
        let full_steps = (ratio + 1e-9 * ratio.max(1.0)).floor() as usize;
        if full_steps == 0 {
            return Err(SabrError::Domain(format!(
                "maturity {maturity} is shorter than one time step {dt}"
            )));
        }
        let remainder = maturity - full_steps as f64 * dt;
        let short_step = match convention {
            GridConvention::ExactMaturity if remainder > 1e-9 * dt => remainder,
            _ => 0.0,
        };
        Ok(Self {
            maturity,
            dt,
            full_steps,
            short_step,
        })
    }

    pub fn num_steps(&self) -> usize {
        self.full_steps + usize::from(self.short_step > 0.0)
    }

    /// Time of the terminal state.
    pub fn end_time(&self) -> f64 {
        self.full_steps as f64 * self.dt + self.short_step
    }

    /// Time of node `k` (after `k` steps).
    pub fn node_time(&self, k: usize) -> f64 {
        if k <= self.full_steps {
            k as f64 * self.dt
        } else {
            self.end_time()
        }
    }
}

/// Per-step coefficients of the α and F updates.
#[derive(Debug, Clone, Copy)]
struct StepCoeffs {
    h: f64,
    nu_sd: f64,
    half_nu2_h: f64,
    rho_sd: f64,
    rhoc_sd: f64,
}

impl StepCoeffs {
    fn new(h: f64, nu: f64, rho: f64) -> Self {
        let sd = h.sqrt();
        Self {
            h,
            nu_sd: nu * sd,
            half_nu2_h: 0.5 * nu * nu * h,
            rho_sd: rho * sd,
            rhoc_sd: (1.0 - rho * rho).max(0.0).sqrt() * sd,
        }
    }
}

/// A model with ν(t), ρ(t) tabulated on the simulation grid.
#[derive(Debug, Clone)]
pub struct ModelDynamics {
    pub model: SabrModel,
    pub grid: TimeGrid,
    pub sampling: CoefficientSampling,
    /// ν and ρ used in each full step.
    pub nu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl ModelDynamics {
    pub fn new(model: &SabrModel, maturity: f64, plan: &SimulationPlan) -> Result<Self> {
        plan.validate()?;
        let grid = TimeGrid::new(maturity, plan.dt, plan.grid)?;
        let sample_time = |i: usize| match plan.sampling {
            CoefficientSampling::StepEnd => (i + 1) as f64 * plan.dt,
            CoefficientSampling::StepStart => i as f64 * plan.dt,
        };
        let mut nu = Vec::with_capacity(grid.full_steps);
        let mut rho = Vec::with_capacity(grid.full_steps);
        let mut bad_nu = Vec::new();
        let mut bad_rho = Vec::new();
        for i in 0..grid.full_steps {
            let t = sample_time(i);
            let (n, r) = (model.nu_at(t), model.rho_at(t));
            if !(n >= 0.0) || !n.is_finite() {
                bad_nu.push(t);
            }
            if !(-1.0..=1.0).contains(&r) {
                bad_rho.push(t);
            }
            nu.push(n);
            rho.push(r);
        }
        if !bad_rho.is_empty() {
            return Err(SabrError::Constraint {
                what: "rho(t) outside [-1, 1] on the simulation grid".into(),
                times: bad_rho,
            });
        }
        if !bad_nu.is_empty() {
            return Err(SabrError::Constraint {
                what: "nu(t) negative on the simulation grid".into(),
                times: bad_nu,
            });
        }
        Ok(Self {
            model: *model,
            grid,
            sampling: plan.sampling,
            nu,
            rho,
        })
    }

    fn step_table(&self) -> Vec<StepCoeffs> {
        self.nu
            .iter()
            .zip(&self.rho)
            .map(|(&n, &r)| StepCoeffs::new(self.grid.dt, n, r))
            .collect()
    }

    /// Coefficients of the short step that ends a leg with the given grid.
    fn short_step(&self, leg: &TimeGrid) -> Option<StepCoeffs> {
        if leg.short_step <= 0.0 {
            return None;
        }
        let t = match self.sampling {
            CoefficientSampling::StepEnd => leg.end_time(),
            CoefficientSampling::StepStart => leg.full_steps as f64 * leg.dt,
        };
        let r = self.model.rho_at(t).clamp(-1.0, 1.0);
        Some(StepCoeffs::new(leg.short_step, 0.0, r))
    }
}

/// One forward simulated alongside a shared volatility path.
#[derive(Debug, Clone)]
struct Leg {
    ln_f0: f64,
    full_steps: usize,
    short: Option<StepCoeffs>,
}

/// Everything the path kernel needs.
struct Bundle {
    ln_alpha0: f64,
    beta_m1: f64,
    table: Vec<StepCoeffs>,
    legs: Vec<Leg>,
    total_steps: usize,
    /// Step counts after which the first leg's forward is recorded.
    observe: Vec<usize>,
}

impl Bundle {
    /// `legs` holds (forward0, maturity); the dynamics must cover the
    /// longest maturity.
    fn new(dynamics: &ModelDynamics, alpha0: f64, legs: &[(f64, f64)], plan: &SimulationPlan) -> Result<Self> {
        ensure_positive(alpha0, "alpha0")?;
        let mut out = Vec::with_capacity(legs.len());
        let mut total_steps = 0;
        for &(f0, maturity) in legs {
            ensure_positive(f0, "forward0")?;
            let grid = TimeGrid::new(maturity, plan.dt, plan.grid)?;
            if grid.full_steps > dynamics.grid.full_steps {
                return Err(SabrError::Domain(format!(
                    "maturity {maturity} beyond the tabulated horizon {}",
                    dynamics.grid.maturity
                )));
            }
            total_steps = total_steps.max(grid.num_steps());
            out.push(Leg {
                ln_f0: f0.ln(),
                full_steps: grid.full_steps,
                short: dynamics.short_step(&grid),
            });
        }
        Ok(Self {
            ln_alpha0: alpha0.ln(),
            beta_m1: dynamics.model.beta() - 1.0,
            table: dynamics.step_table(),
            legs: out,
            total_steps,
            observe: Vec::new(),
        })
    }
}

/// Receives each simulated path.
trait PathSink: Send {
    fn record(&mut self, terminals: &[f64], observed: &[f64]);
}

/// Simulates all blocks and returns one sink per block, in block order.
fn run_bundle<S, M>(bundle: &Bundle, plan: &SimulationPlan, make: M) -> Result<Vec<S>>
where
    S: PathSink,
    M: Fn() -> S + Sync,
{
    plan.validate()?;
    let blocks = map_indexed(plan.num_blocks(), plan.workers, |b| {
        simulate_block(bundle, plan, b, make())
    });
    blocks.into_iter().collect()
}

fn simulate_block<S: PathSink>(bundle: &Bundle, plan: &SimulationPlan, block: usize, mut sink: S) -> Result<S> {
    let mut rng = substream(plan.seed, block as u64);
    let nlegs = bundle.legs.len();
    let mut x = vec![0.0; nlegs];
    let mut terminals = vec![0.0; nlegs];
    let mut observed = vec![0.0; bundle.observe.len()];
    let table = &bundle.table;
    let bm1 = bundle.beta_m1;

    for p in 0..plan.block_len(block) {
        for (xj, leg) in x.iter_mut().zip(&bundle.legs) {
            *xj = leg.ln_f0;
        }
        let mut a = bundle.ln_alpha0;
        let mut next_obs = 0;
        while next_obs < observed.len() && bundle.observe[next_obs] == 0 {
            observed[next_obs] = x[0];
            next_obs += 1;
        }
        for i in 0..bundle.total_steps {
            let (z1, z2) = box_muller(&mut rng);
            let full = table.get(i);
            for (xj, leg) in x.iter_mut().zip(&bundle.legs) {
                let c = if i < leg.full_steps {
                    full
                } else if i == leg.full_steps {
                    leg.short.as_ref()
                } else {
                    None
                };
                if let Some(c) = c {
                    let v = (a + bm1 * *xj).exp();
                    *xj += v * (c.rho_sd * z1 + c.rhoc_sd * z2) - 0.5 * v * v * c.h;
                }
            }
            if let Some(c) = full {
                a += c.nu_sd * z1 - c.half_nu2_h;
            }
            while next_obs < observed.len() && bundle.observe[next_obs] == i + 1 {
                observed[next_obs] = x[0];
                next_obs += 1;
            }
        }
        for (t, &xj) in terminals.iter_mut().zip(&x) {
            *t = xj.exp();
        }
        if !a.is_finite() || terminals.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
            return Err(SabrError::Instability(format!(
                "path {} of block {block} left the positive finite range (ln alpha = {a}, F = {terminals:?})",
                p
            )));
        }
        for o in observed.iter_mut() {
            *o = o.exp();
        }
        sink.record(&terminals, &observed);
    }
    Ok(sink)
}

struct TerminalSink(Vec<f64>);

impl PathSink for TerminalSink {
    fn record(&mut self, terminals: &[f64], _: &[f64]) {
        self.0.push(terminals[0]);
    }
}

/// Terminal forwards of every path, in path order.
pub fn simulate_terminals(
    model: &SabrModel,
    forward0: f64,
    alpha0: f64,
    maturity: f64,
    plan: &SimulationPlan,
) -> Result<Vec<f64>> {
    let dynamics = ModelDynamics::new(model, maturity, plan)?;
    let bundle = Bundle::new(&dynamics, alpha0, &[(forward0, maturity)], plan)?;
    let blocks = run_bundle(&bundle, plan, || TerminalSink(Vec::with_capacity(plan.block_size)))?;
    Ok(blocks.into_iter().flat_map(|b| b.0).collect())
}

struct PayoffSink<F> {
    payoff: F,
    out: Vec<f64>,
    stats: Vec<RunningStats>,
}

impl<F> PathSink for PayoffSink<F>
where
    F: Fn(&[f64], &[f64], &mut [f64]) + Send,
{
    fn record(&mut self, terminals: &[f64], observed: &[f64]) {
        (self.payoff)(terminals, observed, &mut self.out);
        for (s, &v) in self.stats.iter_mut().zip(&self.out) {
            s.push(v);
        }
    }
}

/// Runs the bundle and reduces `outputs` payoff streams per path.
fn run_payoffs<F>(bundle: &Bundle, plan: &SimulationPlan, outputs: usize, payoff: F) -> Result<Vec<RunningStats>>
where
    F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + Clone,
{
    let blocks = run_bundle(bundle, plan, || PayoffSink {
        payoff: payoff.clone(),
        out: vec![0.0; outputs],
        stats: vec![RunningStats::default(); outputs],
    })?;
    let mut total = vec![RunningStats::default(); outputs];
    for b in &blocks {
        for (t, s) in total.iter_mut().zip(&b.stats) {
            t.merge(s);
        }
    }
    Ok(total)
}

/// Discounted expectation of `payoff(F_T)` under the model.
#[allow(clippy::too_many_arguments)]
pub fn price_terminal_payoff<P>(
    model: &SabrModel,
    spot: f64,
    rate: f64,
    dividend: f64,
    maturity: f64,
    plan: &SimulationPlan,
    payoff: P,
) -> Result<PriceEstimate>
where
    P: Fn(f64) -> f64 + Send + Sync + Clone,
{
    let f0 = forward_price(spot, rate, dividend, maturity)?;
    let dynamics = ModelDynamics::new(model, maturity, plan)?;
    let bundle = Bundle::new(&dynamics, model.alpha(), &[(f0, maturity)], plan)?;
    let stats = run_payoffs(&bundle, plan, 1, move |t: &[f64], _: &[f64], out: &mut [f64]| {
        out[0] = payoff(t[0]);
    })?;
    Ok(stats[0].discounted((-rate * maturity).exp()))
}

/// European calls at several strikes priced from one path set.
pub fn price_european_batch(
    model: &SabrModel,
    spot: f64,
    strikes: &[f64],
    rate: f64,
    dividend: f64,
    maturity: f64,
    plan: &SimulationPlan,
) -> Result<Vec<PriceEstimate>> {
    for &k in strikes {
        ensure_positive(k, "strike")?;
    }
    let f0 = forward_price(spot, rate, dividend, maturity)?;
    let dynamics = ModelDynamics::new(model, maturity, plan)?;
    let bundle = Bundle::new(&dynamics, model.alpha(), &[(f0, maturity)], plan)?;
    let ks = strikes.to_vec();
    let stats = run_payoffs(&bundle, plan, ks.len(), move |t: &[f64], _: &[f64], out: &mut [f64]| {
        for (o, &k) in out.iter_mut().zip(&ks) {
            *o = (t[0] - k).max(0.0);
        }
    })?;
    let df = (-rate * maturity).exp();
    Ok(stats.iter().map(|s| s.discounted(df)).collect())
}

pub fn price_european_call(
    model: &SabrModel,
    spot: f64,
    strike: f64,
    rate: f64,
    dividend: f64,
    maturity: f64,
    plan: &SimulationPlan,
) -> Result<PriceEstimate> {
    Ok(price_european_batch(model, spot, &[strike], rate, dividend, maturity, plan)?[0])
}

/// Calls on every quote of a surface. All maturities share one volatility
/// path per sample; each maturity has its own forward leg started from its
/// own carry-adjusted forward.
pub fn price_surface(model: &SabrModel, surface: &VolSurface, plan: &SimulationPlan) -> Result<Vec<Vec<PriceEstimate>>> {
    let legs: Vec<(f64, f64)> = (0..surface.slices.len())
        .map(|i| (surface.forward(i), surface.slices[i].maturity))
        .collect();
    let dynamics = ModelDynamics::new(model, surface.max_maturity(), plan)?;
    let bundle = Bundle::new(&dynamics, model.alpha(), &legs, plan)?;
    let strikes: Vec<(usize, f64)> = surface
        .slices
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.quotes.iter().map(move |q| (i, q.strike)))
        .collect();
    let n = strikes.len();
    let stats = run_payoffs(&bundle, plan, n, move |t: &[f64], _: &[f64], out: &mut [f64]| {
        for (o, &(leg, k)) in out.iter_mut().zip(&strikes) {
            *o = (t[leg] - k).max(0.0);
        }
    })?;
    let mut it = stats.into_iter();
    Ok(surface
        .slices
        .iter()
        .map(|s| {
            let df = (-s.rate * s.maturity).exp();
            (&mut it).take(s.quotes.len()).map(|st| st.discounted(df)).collect()
        })
        .collect())
}
