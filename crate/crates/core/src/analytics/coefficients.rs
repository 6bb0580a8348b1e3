//! The maturity-dependent functionals ν₁², ν₂², η₁, η₂² of dynamic SABR:
//!
//! ```text
//! ν₁²(T) = 3/T³ ∫₀ᵀ (T−t)² ν²(t) dt        ν₂²(T) = 6/T³ ∫₀ᵀ (T−t) t ν²(t) dt
//! η₁(T)  = 2/T² ∫₀ᵀ (T−t) ν(t)ρ(t) dt
//! η₂²(T) = 12/T⁴ ∫₀ᵀ ∫₀ᵗ (∫₀ˢ ν(u)ρ(u) du)² ds dt
//! ```

use crate::error::{ensure_positive, Result, SabrError};
use crate::params::{CaseIIParams, CaseIParams, SabrModel};
use crate::quadrature::GaussLegendre;

/// Decay-rate-times-maturity below which the Case I closed forms are
/// replaced by their Taylor series.
pub const SERIES_SWITCH: f64 = 0.1;
/// Gauss-Legendre nodes per panel for η₂² in Case II.
pub const DEFAULT_GL_NODES: usize = 64;

const SERIES_TERMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynCoefficients {
    pub nu1_sq: f64,
    pub nu2_sq: f64,
    pub eta1: f64,
    pub eta2_sq: f64,
}

impl DynCoefficients {
    /// Constant ν and ρ.
    pub fn constant(nu: f64, rho: f64) -> Self {
        Self {
            nu1_sq: nu * nu,
            nu2_sq: nu * nu,
            eta1: nu * rho,
            eta2_sq: nu * nu * rho * rho,
        }
    }
}

// Each helper is normalised to 1 at the origin; the series branch sums the
// Taylor expansion of the bracketed closed form divided by its leading power.

fn nu1_factor(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        // 6 Σ_{n≥3} (−x)^{n−3} / n!
        let mut sum = 0.0;
        let mut xp = 1.0;
        let mut fact = 6.0;
        for n in 3..3 + SERIES_TERMS {
            if n > 3 {
                xp *= -x;
                fact *= n as f64;
            }
            sum += xp / fact;
        }
        6.0 * sum
    } else {
        6.0 * ((x * x / 2.0 - x + 1.0) - (-x).exp()) / (x * x * x)
    }
}

fn nu2_factor(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        // 6 Σ_{m≥3} (−1)^m (2 − m) x^{m−3} / m!
        let mut sum = 0.0;
        let mut xp = 1.0;
        let mut fact = 6.0;
        for m in 3..3 + SERIES_TERMS {
            if m > 3 {
                xp *= -x;
                fact *= m as f64;
            }
            sum += -xp * (2.0 - m as f64) / fact;
        }
        6.0 * sum
    } else {
        let e = (-x).exp();
        6.0 * (2.0 * (e - 1.0) + x * (e + 1.0)) / (x * x * x)
    }
}

fn eta1_factor(y: f64) -> f64 {
    if y < SERIES_SWITCH {
        // 2 Σ_{n≥2} (−y)^{n−2} / n!
        let mut sum = 0.0;
        let mut yp = 1.0;
        let mut fact = 2.0;
        for n in 2..2 + SERIES_TERMS {
            if n > 2 {
                yp *= -y;
                fact *= n as f64;
            }
            sum += yp / fact;
        }
        2.0 * sum
    } else {
        2.0 * ((-y).exp() - 1.0 + y) / (y * y)
    }
}

fn eta2_factor(y: f64) -> f64 {
    if y < SERIES_SWITCH {
        // 3 Σ_{n≥4} ((−2)^n − 8(−1)^n) y^{n−4} / n!
        let mut sum = 0.0;
        let mut yp = 1.0;
        let mut two_n = 16.0;
        let mut sign = 1.0;
        let mut fact = 24.0;
        for n in 4..4 + SERIES_TERMS {
            if n > 4 {
                yp *= y;
                two_n *= -2.0;
                sign = -sign;
                fact *= n as f64;
            }
            sum += (two_n - 8.0 * sign) * yp / fact;
        }
        3.0 * sum
    } else {
        let e = (-y).exp();
        3.0 * (e * e - 8.0 * e + 7.0 + 2.0 * y * (y - 3.0)) / (y * y * y * y)
    }
}

/// Closed-form coefficients for `ρ(t) = ρ₀e^{−at}`, `ν(t) = ν₀e^{−bt}`.
pub fn dyn_coeffs_case1(p: &CaseIParams, maturity: f64) -> Result<DynCoefficients> {
    ensure_positive(maturity, "maturity")?;
    let x = 2.0 * p.b * maturity;
    let y = (p.a + p.b) * maturity;
    let nu0_sq = p.nu0 * p.nu0;
    let nr = p.nu0 * p.rho0;
    Ok(DynCoefficients {
        nu1_sq: nu0_sq * nu1_factor(x),
        nu2_sq: nu0_sq * nu2_factor(x),
        eta1: nr * eta1_factor(y),
        eta2_sq: nr * nr * eta2_factor(y),
    })
}

/// `∫₀¹ uᵐ e^{−xu} du` for x ≥ 0.
fn unit_moment(m: u32, x: f64) -> f64 {
    if x.abs() < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for n in 0..40u32 {
            if n > 0 {
                term *= -x / n as f64;
            }
            let add = term / (m + n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let e = (-x).exp();
        let mut j = -(-x).exp_m1() / x;
        for k in 1..=m {
            j = (k as f64 * j - e) / x;
        }
        j
    }
}

/// One term `c · uᵖ · e^{−λu}` of an exponential polynomial.
#[derive(Debug, Clone, Copy)]
struct Term {
    coef: f64,
    power: u32,
    rate: f64,
}

fn product(a: &[Term], b: &[Term]) -> Vec<Term> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(Term {
                coef: x.coef * y.coef,
                power: x.power + y.power,
                rate: x.rate + y.rate,
            });
        }
    }
    out
}

/// `∫₀ᵛ f(u) du`.
fn integrate_to(f: &[Term], v: f64) -> f64 {
    f.iter()
        .map(|t| t.coef * v.powi(t.power as i32 + 1) * unit_moment(t.power, t.rate * v))
        .sum()
}

/// `(level + slope·u)e^{−rate·u} + shift` in normalised time u = t/T.
fn linear_exp(level: f64, slope: f64, rate: f64, shift: f64, maturity: f64) -> Vec<Term> {
    let r = rate * maturity;
    let mut terms = vec![Term {
        coef: level,
        power: 0,
        rate: r,
    }];
    if slope != 0.0 {
        terms.push(Term {
            coef: slope * maturity,
            power: 1,
            rate: r,
        });
    }
    if shift != 0.0 {
        terms.push(Term {
            coef: shift,
            power: 0,
            rate: 0.0,
        });
    }
    terms
}

fn poly(coefs: &[f64]) -> Vec<Term> {
    coefs
        .iter()
        .enumerate()
        .map(|(p, &c)| Term {
            coef: c,
            power: p as u32,
            rate: 0.0,
        })
        .collect()
}

/// Case II coefficients with the default quadrature.
pub fn dyn_coeffs_case2(p: &CaseIIParams, maturity: f64) -> Result<DynCoefficients> {
    dyn_coeffs_case2_with(p, maturity, DEFAULT_GL_NODES)
}

/// Case II coefficients.
///
/// ν₁², ν₂² and η₁ are exact: after substituting u = t/T every integrand is
/// a sum of `uᵐe^{−cu}` terms whose integrals are evaluated stably. For η₂²
/// the outer double integral is collapsed to `12∫₀¹(1−v)g(v)²dv` with
/// `g(v) = ∫₀ᵛ ν(Tw)ρ(Tw)dw` exact, and that last integral is done by
/// Gauss-Legendre with `nodes` points per panel. Panels are graded towards
/// the origin when the decay rates make g change on a short time scale.
pub fn dyn_coeffs_case2_with(
    p: &CaseIIParams,
    maturity: f64,
    nodes: usize,
) -> Result<DynCoefficients> {
    ensure_positive(maturity, "maturity")?;
    if nodes == 0 {
        return Err(SabrError::Domain(
            "quadrature needs at least one node".into(),
        ));
    }
    p.validate()?;
    p.check_feasible(maturity)?;
    Ok(dyn_coeffs_case2_unchecked(p, maturity, nodes))
}

/// [`dyn_coeffs_case2_with`] without the feasibility check on ρ(t), ν(t).
///
/// The integrals are well defined for any finite parameters; callers that
/// need the values for a set that strays out of range (for example to
/// compare against quadrature) use this entry point.
pub fn dyn_coeffs_case2_unchecked(
    p: &CaseIIParams,
    maturity: f64,
    nodes: usize,
) -> DynCoefficients {
    let nodes = nodes.max(1);
    let nu = linear_exp(p.nu0, p.q_nu, p.b, p.d_nu, maturity);
    let rho = linear_exp(p.rho0, p.q_rho, p.a, p.d_rho, maturity);
    let nu_sq = product(&nu, &nu);
    let nu_rho = product(&nu, &rho);

    let nu1_sq = 3.0 * integrate_to(&product(&poly(&[1.0, -2.0, 1.0]), &nu_sq), 1.0);
    let nu2_sq = 6.0 * integrate_to(&product(&poly(&[0.0, 1.0, -1.0]), &nu_sq), 1.0);
    let eta1 = 2.0 * integrate_to(&product(&poly(&[1.0, -1.0]), &nu_rho), 1.0);

    let rule = GaussLegendre::cached(nodes);
    let fastest = (p.a.max(p.b) * maturity).max(0.0);
    let mut edges = vec![0.0];
    if fastest > 2.0 {
        let mut e = 1.0 / fastest;
        while e < 0.5 {
            edges.push(e);
            e *= 2.0;
        }
    }
    edges.push(1.0);
    let mut eta2_sq = 0.0;
    for w in edges.windows(2) {
        eta2_sq += rule.integrate(w[0], w[1], |v| {
            let g = integrate_to(&nu_rho, v);
            (1.0 - v) * g * g
        });
    }
    eta2_sq *= 12.0;

    DynCoefficients {
        nu1_sq: nu1_sq.max(0.0),
        nu2_sq: nu2_sq.max(0.0),
        eta1,
        eta2_sq: eta2_sq.max(0.0),
    }
}

/// Coefficients for any model variant; static models give constants.
pub fn dyn_coeffs_model(model: &SabrModel, maturity: f64) -> Result<DynCoefficients> {
    match model {
        SabrModel::Static(p) => {
            ensure_positive(maturity, "maturity")?;
            Ok(DynCoefficients::constant(p.nu, p.rho))
        }
        SabrModel::Case1(p) => dyn_coeffs_case1(p, maturity),
        SabrModel::Case2(p) => dyn_coeffs_case2(p, maturity),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn factors_are_one_at_origin() {
        assert_eq!(nu1_factor(0.0), 1.0);
        assert_eq!(nu2_factor(0.0), 1.0);
        assert_eq!(eta1_factor(0.0), 1.0);
        assert_eq!(eta2_factor(0.0), 1.0);
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let x = SERIES_SWITCH;
        let lo = x * (1.0 - 1e-12);
        for f in [nu1_factor, nu2_factor, eta1_factor, eta2_factor] {
            assert!(rel(f(lo), f(x)) < 1e-9, "{} vs {}", f(lo), f(x));
        }
    }

    #[test]
    fn zero_decay_reduces_to_constants() {
        let p = CaseIParams::new(0.3, 1.0, -0.4, 0.6, 0.0, 0.0).unwrap();
        let c = dyn_coeffs_case1(&p, 1.7).unwrap();
        let k = DynCoefficients::constant(0.6, -0.4);
        assert!(rel(c.nu1_sq, k.nu1_sq) < 1e-15);
        assert!(rel(c.nu2_sq, k.nu2_sq) < 1e-15);
        assert!(rel(c.eta1, k.eta1) < 1e-15);
        assert!(rel(c.eta2_sq, k.eta2_sq) < 1e-15);
    }

    #[test]
    fn unit_moment_branches_meet() {
        for m in 0..5 {
            let below = unit_moment(m, 1.0 - 1e-12);
            let above = unit_moment(m, 1.0);
            assert!(rel(below, above) < 1e-11, "m = {m}");
        }
        assert!(rel(unit_moment(2, 0.0), 1.0 / 3.0) < 1e-15);
        // ∫₀¹ u e^{−5u} du = (1 − 6e^{−5})/25
        assert!(rel(unit_moment(1, 5.0), (1.0 - 6.0 * (-5.0f64).exp()) / 25.0) < 1e-14);
    }

    #[test]
    fn case2_constant_functions() {
        let p = CaseIIParams {
            alpha: 0.2,
            beta: 1.0,
            rho0: -0.3,
            q_rho: 0.0,
            d_rho: 0.1,
            nu0: 0.5,
            q_nu: 0.0,
            d_nu: 0.2,
            a: 0.0,
            b: 0.0,
        };
        let c = dyn_coeffs_case2(&p, 1.3).unwrap();
        let k = DynCoefficients::constant(0.7, -0.2);
        assert!(rel(c.eta1, k.eta1) < 1e-14);
        assert!(rel(c.nu1_sq, k.nu1_sq) < 1e-14);
        assert!(rel(c.nu2_sq, k.nu2_sq) < 1e-14);
        assert!(rel(c.eta2_sq, k.eta2_sq) < 1e-13);
    }

    #[test]
    fn case2_rejects_infeasible() {
        let p = CaseIIParams {
            alpha: 0.2,
            beta: 1.0,
            rho0: -0.9,
            q_rho: 0.0,
            d_rho: -0.5,
            nu0: 0.5,
            q_nu: 0.0,
            d_nu: 0.0,
            a: 1.0,
            b: 1.0,
        };
        assert!(matches!(
            dyn_coeffs_case2(&p, 1.0),
            Err(SabrError::Constraint { .. })
        ));
    }
}
