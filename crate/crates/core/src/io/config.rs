//! TOML run configuration.
//!
//! Every table rejects unknown keys. Omitted keys take the defaults below;
//! `version` must match [`CONFIG_VERSION`].
//!
//! ```toml
//! version = 1
//! model = "case1"            # static | case1 | case2
//! technique = "T_I"          # T_I (formula, vols) | T_II (Monte Carlo, prices)
//! surface = "builtin:eurostoxx50"
//! slice = 0                  # static calibrations fit one maturity
//! params = "params.json"     # parameter file for price / smile / eval
//! seed = 7                   # overrides anneal.seed and simulation.seed
//! workers = 8
//! output_dir = "out"
//!
//! [fixed]
//! beta = 1.0
//!
//! [bounds]
//! b = [0.0, 50.0]
//!
//! [anneal]                   # any AnnealingSchedule field
//! chain_length = 300
//!
//! [simulation]               # any SimulationPlan field
//! num_paths = 65536
//!
//! [contract]
//! type = "european"
//! strike = 2257.37
//! maturity = 0.49589
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fixtures;
use super::surface_file::parse_surface;
use crate::anneal::AnnealingSchedule;
use crate::calibrate::{CalibrationOptions, ParameterBounds, Technique, VolSurface};
use crate::error::{Result, SabrError};
use crate::mc::{CliquetSpec, SimulationPlan};
use crate::params::{ModelKind, SabrModel};

pub const CONFIG_VERSION: u32 = 1;

/// Prefix naming a bundled surface instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";

/// A contract for the `price` command. Spot, rate and yield default to the
/// surface slice nearest in maturity when a surface is configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Contract {
    European {
        strike: f64,
        maturity: f64,
        spot: Option<f64>,
        rate: Option<f64>,
        dividend: Option<f64>,
    },
    Cliquet {
        maturity: f64,
        resets: usize,
        local_floor: f64,
        local_cap: f64,
        global_floor: f64,
        global_cap: f64,
        spot: Option<f64>,
        rate: Option<f64>,
        dividend: Option<f64>,
    },
}

impl Contract {
    pub fn maturity(&self) -> f64 {
        match self {
            Contract::European { maturity, .. } | Contract::Cliquet { maturity, .. } => *maturity,
        }
    }

    pub fn market_overrides(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        match self {
            Contract::European { spot, rate, dividend, .. } | Contract::Cliquet { spot, rate, dividend, .. } => {
                (*spot, *rate, *dividend)
            }
        }
    }

    pub fn cliquet_spec(&self) -> Option<CliquetSpec> {
        match *self {
            Contract::Cliquet {
                maturity,
                resets,
                local_floor,
                local_cap,
                global_floor,
                global_cap,
                ..
            } => Some(CliquetSpec::equally_spaced(
                maturity,
                resets,
                (local_floor, local_cap),
                (global_floor, global_cap),
            )),
            Contract::European { .. } => None,
        }
    }
}

/// Strike grid for the `smile` command, as fractions of each forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmileGrid {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
    /// Also emit Black-Scholes prices of the model vols.
    pub prices: bool,
    /// Use the surface's quoted strikes instead of the moneyness grid.
    pub quotes: bool,
}

impl Default for SmileGrid {
    fn default() -> Self {
        Self {
            points: 41,
            lower: 0.8,
            upper: 1.2,
            prices: false,
            quotes: false,
        }
    }
}

impl SmileGrid {
    pub fn moneyness(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![0.5 * (self.lower + self.upper)];
        }
        let step = (self.upper - self.lower) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lower + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub model: ModelKind,
    pub technique: Technique,
    pub surface: Option<String>,
    pub slice: Option<usize>,
    pub params: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: String,
    pub fixed: BTreeMap<String, f64>,
    pub bounds: BTreeMap<String, [f64; 2]>,
    pub anneal: AnnealingSchedule,
    pub simulation: SimulationPlan,
    pub contract: Option<Contract>,
    pub smile: SmileGrid,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            model: ModelKind::Case1,
            technique: Technique::Formula,
            surface: None,
            slice: None,
            params: None,
            seed: None,
            workers: None,
            output_dir: "out".into(),
            fixed: BTreeMap::new(),
            bounds: BTreeMap::new(),
            anneal: AnnealingSchedule::default(),
            simulation: SimulationPlan::default(),
            contract: None,
            smile: SmileGrid::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| SabrError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SabrError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(SabrError::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.parameter_bounds()?;
        self.anneal.validate()?;
        self.simulation.validate().map_err(|e| SabrError::Config(e.to_string()))?;
        if self.smile.points == 0 || !(self.smile.lower > 0.0 && self.smile.lower <= self.smile.upper) {
            return Err(SabrError::Config("smile grid needs points ≥ 1 and 0 < lower ≤ upper".into()));
        }
        if self.workers == Some(0) {
            return Err(SabrError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Default bounds for the configured model with overrides applied.
    pub fn parameter_bounds(&self) -> Result<ParameterBounds> {
        let mut b = ParameterBounds::default_for(self.model);
        for (name, [lo, hi]) in &self.bounds {
            b.set(name, *lo, *hi)?;
        }
        for name in self.fixed.keys() {
            b.index_of(name)?;
        }
        b.validate()?;
        Ok(b)
    }

    /// Applies `name=value` overrides of fixed parameters.
    pub fn apply_fixed(&mut self, pairs: &[String]) -> Result<()> {
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| SabrError::Config(format!("expected name=value, got `{pair}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| SabrError::Config(format!("`{v}` is not a number in `{pair}`")))?;
            self.fixed.insert(k.trim().to_string(), v);
        }
        self.parameter_bounds()?;
        Ok(())
    }

    pub fn schedule(&self) -> AnnealingSchedule {
        let mut s = self.anneal;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s
    }

    pub fn plan(&self, workers: usize) -> SimulationPlan {
        let mut p = self.simulation;
        if let Some(seed) = self.seed {
            p.seed = seed;
        }
        p.workers = workers;
        p
    }

    pub fn calibration_options(&self, workers: usize) -> Result<CalibrationOptions> {
        Ok(CalibrationOptions {
            bounds: self.parameter_bounds()?,
            schedule: self.schedule(),
            fixed: self.fixed.clone(),
            start: None,
            workers,
        })
    }

    /// Loads the configured surface, resolving relative paths against `base`.
    pub fn load_surface(&self, base: &Path) -> Result<VolSurface> {
        let name = self
            .surface
            .as_deref()
            .ok_or_else(|| SabrError::Config("no surface configured".into()))?;
        load_surface_ref(name, base)
    }
}

/// A surface file path or a `builtin:` name.
pub fn load_surface_ref(name: &str, base: &Path) -> Result<VolSurface> {
    match name.strip_prefix(BUILTIN_PREFIX) {
        Some("eurostoxx50") => Ok(fixtures::eurostoxx_surface()),
        Some("eurusd") => Ok(fixtures::eurusd_surface()),
        Some(other) => Err(SabrError::Config(format!(
            "unknown built-in surface `{other}` (expected eurostoxx50 or eurusd)"
        ))),
        None => parse_surface(base.join(name)),
    }
}

/// Reads a parameter JSON file.
pub fn load_params(path: impl AsRef<Path>) -> Result<SabrModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let model: SabrModel = serde_json::from_str(&text).map_err(|e| SabrError::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })?;
    model.validate()?;
    Ok(model)
}

pub fn params_to_json(model: &SabrModel) -> String {
    serde_json::to_string_pretty(model).expect("parameters serialize")
}
