use serde::{Deserialize, Serialize};

use super::{run_payoffs, Bundle, ModelDynamics, PriceEstimate, SimulationPlan};
use crate::analytics::forward_price;
use crate::error::{ensure_finite, Result, SabrError};
use crate::params::SabrModel;

/// A strip of forward-starting returns with local and global limits.
///
/// Pays `clamp(Σᵢ clamp(Rᵢ, F_l, C_l), F_g, C_g)` at the last reset date,
/// where `Rᵢ = S(dᵢ)/S(dᵢ₋₁) − 1` for consecutive reset dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliquetSpec {
    pub local_floor: f64,
    pub local_cap: f64,
    pub global_floor: f64,
    pub global_cap: f64,
    /// Strictly increasing; the last one is the maturity.
    pub reset_dates: Vec<f64>,
}

impl CliquetSpec {
    /// `count` equally spaced reset dates ending at `maturity`.
    pub fn equally_spaced(maturity: f64, count: usize, local: (f64, f64), global: (f64, f64)) -> Self {
        Self {
            local_floor: local.0,
            local_cap: local.1,
            global_floor: global.0,
            global_cap: global.1,
            reset_dates: (1..=count).map(|i| maturity * i as f64 / count as f64).collect(),
        }
    }

    pub fn maturity(&self) -> f64 {
        self.reset_dates.last().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.local_floor, "local_floor"),
            (self.local_cap, "local_cap"),
            (self.global_floor, "global_floor"),
            (self.global_cap, "global_cap"),
        ] {
            ensure_finite(v, name)?;
        }
        if self.local_floor > self.local_cap {
            return Err(SabrError::Domain("local floor above local cap".into()));
        }
        if self.global_floor > self.global_cap {
            return Err(SabrError::Domain("global floor above global cap".into()));
        }
        if self.reset_dates.len() < 2 {
            return Err(SabrError::Domain("a cliquet needs at least two reset dates".into()));
        }
        if !(self.reset_dates[0] > 0.0) {
            return Err(SabrError::Domain("reset dates must be positive".into()));
        }
        for w in self.reset_dates.windows(2) {
            if !(w[1] > w[0]) {
                return Err(SabrError::Domain("reset dates must increase strictly".into()));
            }
        }
        Ok(())
    }

    /// Payoff for spot levels observed at the reset dates.
    pub fn payoff(&self, spots: &[f64]) -> f64 {
        let mut sum = 0.0;
        for w in spots.windows(2) {
            let r = (w[1] - w[0]) / w[0];
            sum += r.clamp(self.local_floor, self.local_cap);
        }
        sum.min(self.global_cap).max(self.global_floor)
    }
}

/// Grid step indices of all but the last reset date.
fn snap_resets(spec: &CliquetSpec, dt: f64, full_steps: usize) -> Result<Vec<usize>> {
    let mut nodes = Vec::with_capacity(spec.reset_dates.len() - 1);
    for &d in &spec.reset_dates[..spec.reset_dates.len() - 1] {
        let k = (d / dt).round();
        if (d - k * dt).abs() > 0.5 * dt * (1.0 + 1e-9) || k < 1.0 || k as usize > full_steps {
            return Err(SabrError::Domain(format!(
                "reset date {d} does not align with the time grid (dt = {dt})"
            )));
        }
        let k = k as usize;
        if nodes.last().is_some_and(|&prev| prev >= k) {
            return Err(SabrError::Domain(format!(
                "reset date {d} falls on the same grid node as its predecessor"
            )));
        }
        nodes.push(k);
    }
    Ok(nodes)
}

/// Monte Carlo price of a cliquet on the spot.
///
/// Reset dates are snapped to the nearest grid node; the last one is the
/// terminal state. Spot levels are recovered from the simulated forward to
/// maturity as `S(t) = F(t)e^{−(r−y)(T−t)}`.
pub fn price_cliquet(
    model: &SabrModel,
    spot: f64,
    rate: f64,
    dividend: f64,
    spec: &CliquetSpec,
    plan: &SimulationPlan,
) -> Result<PriceEstimate> {
    spec.validate()?;
    let maturity = spec.maturity();
    let f0 = forward_price(spot, rate, dividend, maturity)?;
    let dynamics = ModelDynamics::new(model, maturity, plan)?;
    let mut bundle = Bundle::new(&dynamics, model.alpha(), &[(f0, maturity)], plan)?;
    let nodes = snap_resets(spec, plan.dt, dynamics.grid.full_steps)?;
    // Forward-to-spot factors at each observation, terminal last.
    let carry = rate - dividend;
    let mut factors: Vec<f64> = nodes
        .iter()
        .map(|&k| (-carry * (maturity - dynamics.grid.node_time(k))).exp())
        .collect();
    factors.push(1.0);
    bundle.observe = nodes;

    let spec = spec.clone();
    let stats = run_payoffs(&bundle, plan, 1, move |t: &[f64], obs: &[f64], out: &mut [f64]| {
        let mut spots = [0.0; 64];
        let n = obs.len() + 1;
        if n <= spots.len() {
            for (s, (&f, &c)) in spots.iter_mut().zip(obs.iter().chain(std::iter::once(&t[0])).zip(&factors)) {
                *s = f * c;
            }
            out[0] = spec.payoff(&spots[..n]);
        } else {
            let spots: Vec<f64> = obs
                .iter()
                .chain(std::iter::once(&t[0]))
                .zip(&factors)
                .map(|(&f, &c)| f * c)
                .collect();
            out[0] = spec.payoff(&spots);
        }
    })?;
    Ok(stats[0].discounted((-rate * maturity).exp()))
}
