//! Bundled December 2011 market data and published reference parameter sets.

use crate::calibrate::VolSurface;
use crate::params::{CaseIIParams, CaseIParams, SabrModel, StaticSabrParams};

use super::surface_file::parse_surface_str;

pub const EUROSTOXX_CSV: &str = include_str!("../../data/eurostoxx50.csv");
pub const EURUSD_CSV: &str = include_str!("../../data/eurusd.csv");

pub fn eurostoxx_surface() -> VolSurface {
    parse_surface_str(EUROSTOXX_CSV).expect("bundled EURO STOXX 50 file is valid")
}

pub fn eurusd_surface() -> VolSurface {
    parse_surface_str(EURUSD_CSV).expect("bundled EUR/USD file is valid")
}

/// Per-maturity static fits to the EURO STOXX 50 smiles (3, 6, 12, 24 months).
pub fn eurostoxx_static() -> [StaticSabrParams; 4] {
    let p = |alpha, nu, rho| StaticSabrParams {
        alpha,
        beta: 1.0,
        nu,
        rho,
    };
    [
        p(0.298999, 0.382558, -1.0),
        p(0.302060, 0.381724, -1.0),
        p(0.289271, 0.308560, -0.999729),
        p(0.277844, 0.264178, -1.0),
    ]
}

pub fn eurostoxx_case1() -> CaseIParams {
    CaseIParams {
        alpha: 0.294722,
        beta: 1.0,
        rho0: -1.0,
        nu0: 0.388539,
        a: 0.001,
        b: 0.131466,
    }
}

/// Note: ρ(t) dips below −1 for t < ~0.004, so this set fails the
/// feasibility check on short horizons.
pub fn eurostoxx_case2() -> CaseIIParams {
    CaseIIParams {
        alpha: 0.296790,
        beta: 1.0,
        rho0: -0.360610,
        q_rho: 15.0,
        d_rho: -0.715716,
        nu0: 0.000100,
        q_nu: -8.969205,
        d_nu: 0.847244,
        a: 15.0,
        b: 15.0,
    }
}

/// Per-maturity static fits to the EUR/USD smiles.
pub fn eurusd_static() -> [StaticSabrParams; 4] {
    let p = |alpha, beta, nu, rho| StaticSabrParams { alpha, beta, nu, rho };
    [
        p(0.146859, 1.0, 0.911966, -0.447718),
        p(0.152825, 0.990518, 0.675457, -0.490521),
        p(0.158210, 0.945088, 0.491647, -0.511180),
        p(0.154572, 0.999993, 0.328907, -0.560022),
    ]
}

pub fn eurusd_case1() -> CaseIParams {
    CaseIParams {
        alpha: 0.155464,
        beta: 0.971908,
        rho0: -0.642617,
        nu0: 0.800275,
        a: 0.001,
        b: 2.6093,
    }
}

pub fn eurusd_case2() -> CaseIIParams {
    CaseIIParams {
        alpha: 0.154037,
        beta: 1.0,
        rho0: -0.693682,
        q_rho: 0.345973,
        d_rho: -0.200342,
        nu0: 7.541424,
        q_nu: -0.992551,
        d_nu: 0.339807,
        a: 0.0,
        b: 150.0,
    }
}

/// The at-the-money European benchmark: spot = strike, rate, yield, maturity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuropeanBenchmark {
    pub spot: f64,
    pub strike: f64,
    pub rate: f64,
    pub dividend: f64,
    pub maturity: f64,
}

pub const EUROPEAN_BENCHMARK: EuropeanBenchmark = EuropeanBenchmark {
    spot: 2257.37,
    strike: 2257.37,
    rate: 0.018196,
    dividend: 0.034516,
    maturity: 0.495890,
};

/// Models fitted for the European benchmark, in static, Case I, Case II order.
pub fn european_benchmark_models() -> [SabrModel; 3] {
    [
        SabrModel::Static(StaticSabrParams {
            alpha: 0.375162,
            beta: 0.999999,
            nu: 0.331441,
            rho: -0.999999,
        }),
        SabrModel::Case1(CaseIParams {
            alpha: 0.393329,
            beta: 1.0,
            rho0: -1.0,
            nu0: 0.941565,
            a: 0.001,
            b: 1.246906,
        }),
        SabrModel::Case2(CaseIIParams {
            alpha: 0.398436,
            beta: 0.999579,
            rho0: -0.964678,
            q_rho: 0.0,
            d_rho: 0.101632,
            nu0: 1.285129,
            q_nu: 1.302296,
            d_nu: -0.086294,
            a: 0.0,
            b: 2.059560,
        }),
    ]
}
