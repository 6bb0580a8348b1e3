//! Implied-volatility asymptotics for static and dynamic SABR, and
//! Black-Scholes conversions between prices and vols.

mod black_scholes;
mod coefficients;

pub use black_scholes::{black_scholes_call, implied_vol_from_price, norm_cdf};
pub use coefficients::{
    dyn_coeffs_case1, dyn_coeffs_case2, dyn_coeffs_case2_unchecked, dyn_coeffs_case2_with,
    dyn_coeffs_model, DynCoefficients, DEFAULT_GL_NODES, SERIES_SWITCH,
};

use crate::error::{ensure_finite, ensure_positive, Result, SabrError};
use crate::params::StaticSabrParams;

/// Below this |1 − β| the Obłój z uses its β → 1 limit.
pub const BETA_ONE_TOL: f64 = 1e-6;
/// Below this |z| the ratio z/x(z) uses its Taylor expansion.
pub const SMALL_Z: f64 = 1e-6;

/// `spot · exp((rate − dividend) · maturity)`.
pub fn forward_price(spot: f64, rate: f64, dividend: f64, maturity: f64) -> Result<f64> {
    ensure_positive(spot, "spot")?;
    ensure_positive(maturity, "maturity")?;
    ensure_finite(rate, "rate")?;
    ensure_finite(dividend, "dividend")?;
    Ok(spot * ((rate - dividend) * maturity).exp())
}

/// The quadratic-in-log-moneyness smile `(1/ω)(1 + A₁L + A₂L² + B·T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmileCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub omega: f64,
}

impl SmileCoefficients {
    pub fn for_static(p: &StaticSabrParams, forward: f64) -> Self {
        let omega = forward.powf(1.0 - p.beta) / p.alpha;
        let (beta, nu, rho) = (p.beta, p.nu, p.rho);
        let one_m_beta = 1.0 - beta;
        let rno = rho * nu * omega;
        Self {
            a1: -0.5 * (one_m_beta - rno),
            a2: (one_m_beta * one_m_beta
                + 3.0 * (one_m_beta - rno)
                + (2.0 - 3.0 * rho * rho) * nu * nu * omega * omega)
                / 12.0,
            b: one_m_beta * one_m_beta / (24.0 * omega * omega)
                + beta * rho * nu / (4.0 * omega)
                + (2.0 - 3.0 * rho * rho) * nu * nu / 24.0,
            omega,
        }
    }

    pub fn for_dynamic(c: &DynCoefficients, alpha: f64, beta: f64, forward: f64) -> Self {
        let omega = forward.powf(1.0 - beta) / alpha;
        let one_m_beta = 1.0 - beta;
        let w2 = omega * omega;
        Self {
            a1: (beta - 1.0) / 2.0 + c.eta1 * omega / 2.0,
            a2: one_m_beta * one_m_beta / 12.0
                + (one_m_beta - c.eta1 * omega) / 4.0
                + (4.0 * c.nu1_sq + 3.0 * (c.eta2_sq - 3.0 * c.eta1 * c.eta1)) * w2 / 24.0,
            b: (one_m_beta * one_m_beta / 24.0
                + omega * beta * c.eta1 / 4.0
                + (2.0 * c.nu2_sq - 3.0 * c.eta2_sq) * w2 / 24.0)
                / w2,
            omega,
        }
    }

    /// Vol at log-moneyness `ln(K/f̂)` and maturity `T`.
    #[inline]
    pub fn vol(&self, log_moneyness: f64, maturity: f64) -> f64 {
        let l = log_moneyness;
        (1.0 + self.a1 * l + self.a2 * l * l + self.b * maturity) / self.omega
    }
}

/// Obłój's z, with the analytic limit at β = 1.
pub fn obloj_z(p: &StaticSabrParams, strike: f64, forward: f64) -> f64 {
    let one_m_beta = 1.0 - p.beta;
    if one_m_beta.abs() < BETA_ONE_TOL {
        p.nu * (forward / strike).ln() / p.alpha
    } else {
        p.nu * (forward.powf(one_m_beta) - strike.powf(one_m_beta)) / (p.alpha * one_m_beta)
    }
}

/// `x(z) = ln((√(1 − 2ρz + z²) + z − ρ)/(1 − ρ))`, with the ρ = ±1 limits.
///
/// At ρ = 1 the expression tends to `−ln(1 − z)` and is defined for z < 1;
/// at ρ = −1 it is `ln(1 + z)`, defined for z > −1.
pub fn x_of_z(z: f64, rho: f64) -> Result<f64> {
    let out_of_domain = |arg: f64| {
        SabrError::NumericDomain(format!(
            "x(z) needs a positive log argument: z = {z}, rho = {rho}, argument = {arg}"
        ))
    };
    if rho >= 1.0 {
        let arg = 1.0 - z;
        return if arg > 0.0 {
            Ok(-arg.ln())
        } else {
            Err(out_of_domain(arg))
        };
    }
    if rho <= -1.0 {
        let arg = 1.0 + z;
        return if arg > 0.0 {
            Ok(arg.ln())
        } else {
            Err(out_of_domain(arg))
        };
    }
    // arg − 1 written without cancellation: √(1+w) − 1 = w/(√(1+w) + 1)
    let w = z * z - 2.0 * rho * z;
    let arg_m1 = (w / ((1.0 + w).sqrt() + 1.0) + z) / (1.0 - rho);
    if arg_m1 > -1.0 && arg_m1.is_finite() {
        Ok(arg_m1.ln_1p())
    } else {
        Err(out_of_domain(1.0 + arg_m1))
    }
}

/// `z / x(z)`, using `1 − ρz/2 + (2 − 3ρ²)z²/12` near z = 0.
pub fn z_over_x(z: f64, rho: f64) -> Result<f64> {
    if z.abs() < SMALL_Z {
        return Ok(1.0 - rho * z / 2.0 + (2.0 - 3.0 * rho * rho) * z * z / 12.0);
    }
    Ok(z / x_of_z(z, rho)?)
}

fn check_smile_inputs(strike: f64, forward: f64, maturity: f64) -> Result<()> {
    ensure_positive(strike, "strike")?;
    ensure_positive(forward, "forward")?;
    ensure_positive(maturity, "maturity")
}

/// Static SABR implied volatility (Obłój-corrected Hagan expansion,
/// truncated to second order in log-moneyness).
///
/// The z/x(z) factor is folded into A₁, A₂ and B, so x(z) only enters as a
/// domain check: a fully correlated model with z beyond the pole of x(z)
/// is rejected rather than silently priced.
pub fn static_implied_vol(
    params: &StaticSabrParams,
    strike: f64,
    forward: f64,
    maturity: f64,
) -> Result<f64> {
    check_smile_inputs(strike, forward, maturity)?;
    params.validate()?;
    if params.rho.abs() >= 1.0 {
        x_of_z(obloj_z(params, strike, forward), params.rho)?;
    }
    let c = SmileCoefficients::for_static(params, forward);
    Ok(c.vol((strike / forward).ln(), maturity))
}

/// Dynamic SABR implied volatility from precomputed coefficient functionals.
pub fn dynamic_implied_vol(
    coeffs: &DynCoefficients,
    alpha: f64,
    beta: f64,
    strike: f64,
    forward: f64,
    maturity: f64,
) -> Result<f64> {
    check_smile_inputs(strike, forward, maturity)?;
    ensure_positive(alpha, "alpha")?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(SabrError::Domain(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    let c = SmileCoefficients::for_dynamic(coeffs, alpha, beta, forward);
    Ok(c.vol((strike / forward).ln(), maturity))
}
