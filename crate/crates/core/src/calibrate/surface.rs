use serde::{Deserialize, Serialize};

use crate::analytics::{black_scholes_call, forward_price};
use crate::error::{ensure_positive, Result, SabrError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub strike: f64,
    /// Decimal implied vol (0.2 for 20%).
    pub vol: f64,
}

/// Quotes for one maturity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub maturity: f64,
    /// Continuously compounded rate, decimal.
    pub rate: f64,
    /// Continuous dividend (or foreign) yield, decimal.
    pub dividend: f64,
    pub quotes: Vec<Quote>,
}

impl Slice {
    pub fn strikes(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.strike).collect()
    }
}

/// A market smile per maturity, the calibration target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSurface {
    pub spot: f64,
    pub slices: Vec<Slice>,
}

impl VolSurface {
    pub fn new(spot: f64, slices: Vec<Slice>) -> Result<Self> {
        let surface = Self { spot, slices };
        surface.validate()?;
        Ok(surface)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.spot, "spot")?;
        if self.slices.is_empty() {
            return Err(SabrError::Validation("surface has no maturities".into()));
        }
        for (i, s) in self.slices.iter().enumerate() {
            ensure_positive(s.maturity, "maturity")?;
            if !s.rate.is_finite() || !s.dividend.is_finite() {
                return Err(SabrError::Validation(format!("slice {i}: non-finite rate or yield")));
            }
            if i > 0 && s.maturity <= self.slices[i - 1].maturity {
                return Err(SabrError::Validation(format!(
                    "maturities must increase: slice {i} has T = {} after T = {}",
                    s.maturity,
                    self.slices[i - 1].maturity
                )));
            }
            if s.quotes.is_empty() {
                return Err(SabrError::Validation(format!(
                    "slice {i} (T = {}) has no quotes",
                    s.maturity
                )));
            }
            for (j, q) in s.quotes.iter().enumerate() {
                if !(q.strike > 0.0 && q.strike.is_finite()) {
                    return Err(SabrError::Validation(format!(
                        "slice {i} (T = {}): strike {} is not positive",
                        s.maturity, q.strike
                    )));
                }
                if !(q.vol > 0.0 && q.vol.is_finite()) {
                    return Err(SabrError::Validation(format!(
                        "slice {i} (T = {}): vol {} at K = {} is not positive",
                        s.maturity, q.vol, q.strike
                    )));
                }
                if j > 0 && q.strike <= s.quotes[j - 1].strike {
                    return Err(SabrError::Validation(format!(
                        "slice {i} (T = {}): strikes must increase, {} follows {}",
                        s.maturity,
                        q.strike,
                        s.quotes[j - 1].strike
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn forward(&self, slice: usize) -> f64 {
        let s = &self.slices[slice];
        forward_price(self.spot, s.rate, s.dividend, s.maturity).unwrap_or(f64::NAN)
    }

    pub fn num_quotes(&self) -> usize {
        self.slices.iter().map(|s| s.quotes.len()).sum()
    }

    pub fn max_maturity(&self) -> f64 {
        self.slices.last().map_or(0.0, |s| s.maturity)
    }

    /// Black-Scholes prices of the quoted vols, one vector per slice.
    pub fn market_prices(&self) -> Result<Vec<Vec<f64>>> {
        self.slices
            .iter()
            .map(|s| {
                s.quotes
                    .iter()
                    .map(|q| black_scholes_call(self.spot, q.strike, s.rate, s.dividend, s.maturity, q.vol))
                    .collect()
            })
            .collect()
    }

    /// Copy keeping only the listed slices.
    pub fn select(&self, slices: &[usize]) -> Result<Self> {
        let mut picked = Vec::with_capacity(slices.len());
        for &i in slices {
            let s = self
                .slices
                .get(i)
                .ok_or_else(|| SabrError::Validation(format!("no slice {i}")))?;
            picked.push(s.clone());
        }
        VolSurface::new(self.spot, picked)
    }
}
