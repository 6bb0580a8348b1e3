//! Model parameterizations.
//!
//! Three flavours share the forward/volatility dynamics
//!
//! ```text
//! dF = α_t F^β dW¹,   dα = ν(t) α_t dW²,   dW¹·dW² = ρ(t) dt
//! ```
//!
//! and differ only in how ν and ρ depend on time: constant ([`StaticSabrParams`]),
//! exponentially decaying ([`CaseIParams`]) or linear-times-exponential plus an
//! asymptote ([`CaseIIParams`]).

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Result, SabrError};

/// Number of uniform points used when checking Case II feasibility.
pub const FEASIBILITY_GRID_POINTS: usize = 256;

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(SabrError::Domain(format!(
            "beta must lie in [0, 1], got {beta}"
        )))
    }
}

fn check_correlation(rho: f64, name: &str) -> Result<()> {
    if (-1.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(SabrError::Domain(format!(
            "{name} must lie in [-1, 1], got {rho}"
        )))
    }
}

fn check_non_negative(value: f64, name: &str) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SabrError::Domain(format!(
            "{name} must be non-negative, got {value}"
        )))
    }
}

/// Constant-parameter SABR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticSabrParams {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub rho: f64,
}

impl StaticSabrParams {
    pub fn new(alpha: f64, beta: f64, nu: f64, rho: f64) -> Result<Self> {
        let params = Self {
            alpha,
            beta,
            nu,
            rho,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.alpha, "alpha")?;
        check_beta(self.beta)?;
        check_non_negative(self.nu, "nu")?;
        check_correlation(self.rho, "rho")
    }
}

/// Dynamic SABR with `ρ(t) = ρ₀e^{-at}` and `ν(t) = ν₀e^{-bt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseIParams {
    pub alpha: f64,
    pub beta: f64,
    pub rho0: f64,
    pub nu0: f64,
    /// Correlation decay rate (1/year).
    pub a: f64,
    /// Vol-of-vol decay rate (1/year).
    pub b: f64,
}

impl CaseIParams {
    pub fn new(alpha: f64, beta: f64, rho0: f64, nu0: f64, a: f64, b: f64) -> Result<Self> {
        let params = Self {
            alpha,
            beta,
            rho0,
            nu0,
            a,
            b,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.alpha, "alpha")?;
        check_beta(self.beta)?;
        check_correlation(self.rho0, "rho0")?;
        ensure_positive(self.nu0, "nu0")?;
        check_non_negative(self.a, "a")?;
        check_non_negative(self.b, "b")
    }

    #[inline]
    pub fn rho_at(&self, t: f64) -> f64 {
        self.rho0 * (-self.a * t).exp()
    }

    #[inline]
    pub fn nu_at(&self, t: f64) -> f64 {
        self.nu0 * (-self.b * t).exp()
    }
}

/// Dynamic SABR with `ρ(t) = (ρ₀ + q_ρ t)e^{-at} + d_ρ` and
/// `ν(t) = (ν₀ + q_ν t)e^{-bt} + d_ν`.
///
/// Only the box constraints on `alpha`, `beta`, `a` and `b` are checked by
/// [`validate`](Self::validate); whether ρ(t) and ν(t) stay admissible depends
/// on the horizon and is checked by [`check_feasible`](Self::check_feasible).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseIIParams {
    pub alpha: f64,
    pub beta: f64,
    pub rho0: f64,
    pub q_rho: f64,
    pub d_rho: f64,
    pub nu0: f64,
    pub q_nu: f64,
    pub d_nu: f64,
    pub a: f64,
    pub b: f64,
}

impl CaseIIParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.alpha, "alpha")?;
        check_beta(self.beta)?;
        for (v, name) in [
            (self.rho0, "rho0"),
            (self.q_rho, "q_rho"),
            (self.d_rho, "d_rho"),
            (self.nu0, "nu0"),
            (self.q_nu, "q_nu"),
            (self.d_nu, "d_nu"),
        ] {
            ensure_finite(v, name)?;
        }
        check_non_negative(self.a, "a")?;
        check_non_negative(self.b, "b")
    }

    /// Case I embedded in Case II (no slopes, no asymptotes).
    pub fn from_case1(p: &CaseIParams) -> Self {
        Self {
            alpha: p.alpha,
            beta: p.beta,
            rho0: p.rho0,
            q_rho: 0.0,
            d_rho: 0.0,
            nu0: p.nu0,
            q_nu: 0.0,
            d_nu: 0.0,
            a: p.a,
            b: p.b,
        }
    }

    #[inline]
    pub fn rho_at(&self, t: f64) -> f64 {
        (self.rho0 + self.q_rho * t) * (-self.a * t).exp() + self.d_rho
    }

    #[inline]
    pub fn nu_at(&self, t: f64) -> f64 {
        (self.nu0 + self.q_nu * t) * (-self.b * t).exp() + self.d_nu
    }

    /// Points where ρ(t) ∉ [-1, 1] or ν(t) ≤ 0 on `(0, horizon]`.
    ///
    /// The probe set is a uniform grid plus the interior stationary points
    /// `t* = 1/a - ρ₀/q_ρ` and `t* = 1/b - ν₀/q_ν`, and the right limit at
    /// zero. Each function has at most one stationary point, so together with
    /// the end points this locates the true extrema.
    pub fn feasibility_violations(&self, horizon: f64) -> (Vec<f64>, Vec<f64>) {
        let mut probes: Vec<f64> = (1..=FEASIBILITY_GRID_POINTS)
            .map(|k| horizon * k as f64 / FEASIBILITY_GRID_POINTS as f64)
            .collect();
        for (rate, level, slope) in [
            (self.a, self.rho0, self.q_rho),
            (self.b, self.nu0, self.q_nu),
        ] {
            if rate > 0.0 && slope != 0.0 {
                let t_star = 1.0 / rate - level / slope;
                if t_star > 0.0 && t_star < horizon {
                    probes.push(t_star);
                }
            }
        }

        let mut rho_bad = Vec::new();
        let mut nu_bad = Vec::new();
        for &t in &probes {
            let rho = self.rho_at(t);
            if !(-1.0..=1.0).contains(&rho) {
                rho_bad.push(t);
            }
            let nu = self.nu_at(t);
            if nu.is_nan() || nu <= 0.0 {
                nu_bad.push(t);
            }
        }
        // Limit at t -> 0+: a strict violation there persists on a neighbourhood.
        let rho0 = self.rho0 + self.d_rho;
        if rho0.abs() > 1.0 {
            rho_bad.insert(0, 0.0);
        }
        if self.nu0 + self.d_nu < 0.0 {
            nu_bad.insert(0, 0.0);
        }
        (rho_bad, nu_bad)
    }

    pub fn is_feasible(&self, horizon: f64) -> bool {
        let (rho_bad, nu_bad) = self.feasibility_violations(horizon);
        rho_bad.is_empty() && nu_bad.is_empty()
    }

    pub fn check_feasible(&self, horizon: f64) -> Result<()> {
        let (rho_bad, nu_bad) = self.feasibility_violations(horizon);
        if !rho_bad.is_empty() {
            return Err(SabrError::Constraint {
                what: "rho(t) outside [-1, 1]".into(),
                times: rho_bad,
            });
        }
        if !nu_bad.is_empty() {
            return Err(SabrError::Constraint {
                what: "nu(t) not positive".into(),
                times: nu_bad,
            });
        }
        Ok(())
    }
}

/// Which of the three parameterizations a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Static,
    Case1,
    Case2,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Static => "SSabr",
            ModelKind::Case1 => "DSabr_I",
            ModelKind::Case2 => "DSabr_II",
        }
    }

    /// Parameter names in the canonical vector order used by the calibrator.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Static => &["alpha", "beta", "nu", "rho"],
            ModelKind::Case1 => &["alpha", "beta", "rho0", "nu0", "a", "b"],
            ModelKind::Case2 => &[
                "alpha", "beta", "rho0", "nu0", "a", "b", "q_rho", "q_nu", "d_rho", "d_nu",
            ],
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = SabrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "static" | "ssabr" => Ok(ModelKind::Static),
            "case1" | "dsabr_i" | "case_i" => Ok(ModelKind::Case1),
            "case2" | "dsabr_ii" | "case_ii" => Ok(ModelKind::Case2),
            other => Err(SabrError::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Any of the three parameterizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SabrModel {
    Static(StaticSabrParams),
    Case1(CaseIParams),
    Case2(CaseIIParams),
}

impl SabrModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            SabrModel::Static(_) => ModelKind::Static,
            SabrModel::Case1(_) => ModelKind::Case1,
            SabrModel::Case2(_) => ModelKind::Case2,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            SabrModel::Static(p) => p.alpha,
            SabrModel::Case1(p) => p.alpha,
            SabrModel::Case2(p) => p.alpha,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            SabrModel::Static(p) => p.beta,
            SabrModel::Case1(p) => p.beta,
            SabrModel::Case2(p) => p.beta,
        }
    }

    #[inline]
    pub fn nu_at(&self, t: f64) -> f64 {
        match self {
            SabrModel::Static(p) => p.nu,
            SabrModel::Case1(p) => p.nu_at(t),
            SabrModel::Case2(p) => p.nu_at(t),
        }
    }

    #[inline]
    pub fn rho_at(&self, t: f64) -> f64 {
        match self {
            SabrModel::Static(p) => p.rho,
            SabrModel::Case1(p) => p.rho_at(t),
            SabrModel::Case2(p) => p.rho_at(t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SabrModel::Static(p) => p.validate(),
            SabrModel::Case1(p) => p.validate(),
            SabrModel::Case2(p) => p.validate(),
        }
    }

    /// Canonical parameter vector, ordered as [`ModelKind::parameter_names`].
    pub fn to_vector(&self) -> Vec<f64> {
        match *self {
            SabrModel::Static(p) => vec![p.alpha, p.beta, p.nu, p.rho],
            SabrModel::Case1(p) => vec![p.alpha, p.beta, p.rho0, p.nu0, p.a, p.b],
            SabrModel::Case2(p) => vec![
                p.alpha, p.beta, p.rho0, p.nu0, p.a, p.b, p.q_rho, p.q_nu, p.d_rho, p.d_nu,
            ],
        }
    }

    /// Inverse of [`to_vector`](Self::to_vector). Does not validate.
    pub fn from_vector(kind: ModelKind, v: &[f64]) -> Result<Self> {
        let expected = kind.parameter_names().len();
        if v.len() != expected {
            return Err(SabrError::Domain(format!(
                "{} expects {expected} parameters, got {}",
                kind.label(),
                v.len()
            )));
        }
        Ok(match kind {
            ModelKind::Static => SabrModel::Static(StaticSabrParams {
                alpha: v[0],
                beta: v[1],
                nu: v[2],
                rho: v[3],
            }),
            ModelKind::Case1 => SabrModel::Case1(CaseIParams {
                alpha: v[0],
                beta: v[1],
                rho0: v[2],
                nu0: v[3],
                a: v[4],
                b: v[5],
            }),
            ModelKind::Case2 => SabrModel::Case2(CaseIIParams {
                alpha: v[0],
                beta: v[1],
                rho0: v[2],
                nu0: v[3],
                a: v[4],
                b: v[5],
                q_rho: v[6],
                q_nu: v[7],
                d_rho: v[8],
                d_nu: v[9],
            }),
        })
    }
}
