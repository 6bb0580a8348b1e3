//! Static and dynamic SABR: implied-volatility asymptotics, Monte Carlo
//! pricing, simulated-annealing calibration and market-data I/O.

pub mod analytics;
pub mod anneal;
pub mod calibrate;
pub mod error;
pub mod io;
pub mod mc;
pub mod params;
pub mod quadrature;
pub mod workers;

pub use error::{Result, SabrError};
pub use params::{CaseIIParams, CaseIParams, ModelKind, SabrModel, StaticSabrParams};
