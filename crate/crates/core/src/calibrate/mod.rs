//! Calibration of SABR parameter sets to implied-volatility surfaces.
//!
//! Technique I fits quoted vols with the asymptotic formulas; Technique II
//! fits Black-Scholes prices of the quotes with Monte Carlo model prices
//! computed on one fixed random stream.

mod cost;
mod estimate;
mod report;
mod surface;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use cost::{cost_individual, cost_joint, joint_from_values, squared_relative_error};
pub use estimate::{atm_vol, estimate_alpha_atm, estimate_beta_loglog};
pub use report::{aggregate, build_rows, CalibrationReport, ReportRow, Technique, REPORT_SCHEMA_VERSION};
pub use surface::{Quote, Slice, VolSurface};

use crate::analytics::{dyn_coeffs_model, dynamic_implied_vol, static_implied_vol};
use crate::anneal::{minimize, AnnealingSchedule, SearchSpace};
use crate::error::{Result, SabrError};
use crate::mc::{price_surface, SimulationPlan};
use crate::params::{ModelKind, SabrModel};

/// Smallest admissible α and ν during a search.
pub const POSITIVE_FLOOR: f64 = 1e-4;

/// Box bounds for every parameter of one model kind, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBounds {
    pub kind: ModelKind,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn default_range(name: &str) -> (f64, f64) {
    match name {
        "alpha" => (POSITIVE_FLOOR, 2.0),
        "beta" => (0.0, 1.0),
        "nu" | "nu0" => (POSITIVE_FLOOR, 10.0),
        "rho" | "rho0" | "d_rho" | "d_nu" => (-1.0, 1.0),
        "a" | "b" => (0.0, 150.0),
        "q_rho" | "q_nu" => (-15.0, 15.0),
        _ => unreachable!("unknown parameter {name}"),
    }
}

impl ParameterBounds {
    pub fn default_for(kind: ModelKind) -> Self {
        let (lower, upper) = kind.parameter_names().iter().map(|n| default_range(n)).unzip();
        Self { kind, lower, upper }
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.kind
            .parameter_names()
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| SabrError::Config(format!("{} has no parameter `{name}`", self.kind.label())))
    }

    pub fn set(&mut self, name: &str, lower: f64, upper: f64) -> Result<()> {
        let i = self.index_of(name)?;
        self.lower[i] = lower;
        self.upper[i] = upper;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, name) in self.kind.parameter_names().iter().enumerate() {
            let (l, u) = (self.lower[i], self.upper[i]);
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(SabrError::Config(format!("bounds for {name}: need lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    pub bounds: ParameterBounds,
    pub schedule: AnnealingSchedule,
    /// Parameters held at the given value.
    pub fixed: BTreeMap<String, f64>,
    /// Starting parameters; the box midpoint when absent.
    pub start: Option<SabrModel>,
    /// Worker budget shared by the annealer and the Monte Carlo engine.
    pub workers: usize,
}

impl CalibrationOptions {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            bounds: ParameterBounds::default_for(kind),
            schedule: AnnealingSchedule::default(),
            fixed: BTreeMap::new(),
            start: None,
            workers: 1,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.bounds.kind
    }
}

/// Model values (vols or prices) for every quote of a surface.
pub trait ModelEvaluator: Sync {
    fn technique(&self) -> Technique;

    fn evaluate(&self, model: &SabrModel, surface: &VolSurface) -> Result<Vec<Vec<f64>>>;

    /// Market values in the same units as [`evaluate`](Self::evaluate).
    fn market(&self, surface: &VolSurface) -> Result<Vec<Vec<f64>>> {
        match self.technique() {
            Technique::Formula => Ok(surface
                .slices
                .iter()
                .map(|s| s.quotes.iter().map(|q| q.vol).collect())
                .collect()),
            Technique::MonteCarlo => surface.market_prices(),
        }
    }
}

/// Implied vols from the asymptotic formulas.
#[derive(Debug, Clone, Copy, Default)]
pub struct FormulaEvaluator;

impl ModelEvaluator for FormulaEvaluator {
    fn technique(&self) -> Technique {
        Technique::Formula
    }

    fn evaluate(&self, model: &SabrModel, surface: &VolSurface) -> Result<Vec<Vec<f64>>> {
        model_vols(model, surface)
    }
}

/// Call prices from the Monte Carlo engine under a fixed plan.
#[derive(Debug, Clone, Copy)]
pub struct MonteCarloEvaluator {
    pub plan: SimulationPlan,
}

impl ModelEvaluator for MonteCarloEvaluator {
    fn technique(&self) -> Technique {
        Technique::MonteCarlo
    }

    fn evaluate(&self, model: &SabrModel, surface: &VolSurface) -> Result<Vec<Vec<f64>>> {
        let est = price_surface(model, surface, &self.plan)?;
        Ok(est.into_iter().map(|s| s.into_iter().map(|e| e.value).collect()).collect())
    }
}

/// Formula implied vols at every quote of `surface`.
pub fn model_vols(model: &SabrModel, surface: &VolSurface) -> Result<Vec<Vec<f64>>> {
    surface
        .slices
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let f = surface.forward(i);
            match model {
                SabrModel::Static(p) => s
                    .quotes
                    .iter()
                    .map(|q| static_implied_vol(p, q.strike, f, s.maturity))
                    .collect(),
                _ => {
                    let c = dyn_coeffs_model(model, s.maturity)?;
                    s.quotes
                        .iter()
                        .map(|q| dynamic_implied_vol(&c, model.alpha(), model.beta(), q.strike, f, s.maturity))
                        .collect()
                }
            }
        })
        .collect()
}

/// Whether a parameter set is admissible for a surface whose last
/// maturity is `horizon`.
pub fn admissible(model: &SabrModel, horizon: f64) -> bool {
    model.validate().is_ok()
        && match model {
            SabrModel::Case2(p) => p.is_feasible(horizon),
            _ => true,
        }
}

/// Tabulates a fixed parameter set against the market without searching.
pub fn evaluate_model<E: ModelEvaluator>(surface: &VolSurface, model: &SabrModel, evaluator: &E) -> Result<CalibrationReport> {
    let started = Instant::now();
    model.validate()?;
    let market = evaluator.market(surface)?;
    let values = evaluator.evaluate(model, surface)?;
    let cost = joint_from_values(&market, &values)?;
    let rows = build_rows(surface, &market, &values);
    let fixed = model.kind().parameter_names().iter().map(|s| s.to_string()).collect();
    Ok(CalibrationReport::new(
        evaluator.technique(),
        *model,
        fixed,
        0,
        1,
        0,
        cost,
        rows,
        started.elapsed().as_secs_f64(),
    ))
}

/// Runs the annealer over the free parameters of `options.kind()`.
pub fn calibrate<E: ModelEvaluator>(surface: &VolSurface, evaluator: &E, options: &CalibrationOptions) -> Result<CalibrationReport> {
    let started = Instant::now();
    surface.validate()?;
    options.bounds.validate()?;
    let kind = options.kind();
    let names = kind.parameter_names();
    for name in options.fixed.keys() {
        options.bounds.index_of(name)?;
    }
    let free: Vec<usize> = (0..names.len()).filter(|&i| !options.fixed.contains_key(names[i])).collect();

    let mut template: Vec<f64> = match &options.start {
        Some(m) if m.kind() == kind => m.to_vector(),
        Some(m) => {
            return Err(SabrError::Config(format!(
                "start parameters are {} but the calibration is {}",
                m.kind().label(),
                kind.label()
            )))
        }
        None => options
            .bounds
            .lower
            .iter()
            .zip(&options.bounds.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect(),
    };
    for (name, &v) in &options.fixed {
        template[options.bounds.index_of(name)?] = v;
    }

    if free.is_empty() {
        let model = SabrModel::from_vector(kind, &template)?;
        return evaluate_model(surface, &model, evaluator);
    }
    if free.len() > surface.num_quotes() {
        return Err(SabrError::Validation(format!(
            "{} free parameters but only {} quotes",
            free.len(),
            surface.num_quotes()
        )));
    }

    let horizon = surface.max_maturity();
    let market = evaluator.market(surface)?;
    let coords = Coordinates::new(kind, template, free, surface.forward(0));
    let (lower, upper) = coords.search_box(&options.bounds);
    let alpha_range = (options.bounds.lower[0], options.bounds.upper[0]);
    let feasible = {
        let coords = coords.clone();
        Arc::new(move |x: &[f64]| {
            coords.model(x).is_ok_and(|m| {
                let a = m.alpha();
                a >= alpha_range.0 && a <= alpha_range.1 && admissible(&m, horizon)
            })
        })
    };
    let space = SearchSpace::new(lower, upper)?.with_feasibility(feasible);
    let start = coords.start();
    if !space.in_bounds(&start) {
        return Err(SabrError::Config(format!("start point {start:?} lies outside the bounds")));
    }
    if !space.admits(&start) {
        return Err(SabrError::Constraint {
            what: format!("start point {start:?} violates the model constraints"),
            times: Vec::new(),
        });
    }
    let assemble = |x: &[f64]| coords.model(x);

    // Annealed on ln(cost): same minimiser, but the temperature then
    // measures relative improvement whatever the scale of the quotes.
    let objective = |x: &[f64]| -> f64 {
        assemble(x)
            .and_then(|m| evaluator.evaluate(&m, surface))
            .and_then(|v| joint_from_values(&market, &v))
            .map(|c| c.max(f64::MIN_POSITIVE).ln())
            .unwrap_or(f64::NAN)
    };

    let mut schedule = options.schedule;
    schedule.threads = options.workers.max(1).min(schedule.chains());
    let result = minimize(objective, &space, &schedule, &start)?;

    let best = assemble(&result.best_point)?;
    let values = evaluator.evaluate(&best, surface)?;
    let final_cost = joint_from_values(&market, &values)?;
    let rows = build_rows(surface, &market, &values);
    let fixed = options.fixed.keys().cloned().collect();
    Ok(CalibrationReport::new(
        evaluator.technique(),
        best,
        fixed,
        schedule.seed,
        result.evals,
        result.nan_evals,
        final_cost,
        rows,
        started.elapsed().as_secs_f64(),
    ))
}

/// Search coordinates over the free parameters.
///
/// When α is free it is replaced by the level `σ₀ = α f^{β−1}`, which is
/// close to the ATM vol. The α-β trade-off then no longer forms a curved
/// valley for forwards far from 1; bounds on α itself are enforced through
/// the feasibility predicate.
#[derive(Debug, Clone)]
struct Coordinates {
    kind: ModelKind,
    template: Vec<f64>,
    free: Vec<usize>,
    log_forward: f64,
    level: bool,
}

impl Coordinates {
    fn new(kind: ModelKind, template: Vec<f64>, free: Vec<usize>, forward: f64) -> Self {
        let level = free.first() == Some(&0);
        Self {
            kind,
            template,
            free,
            log_forward: forward.ln(),
            level,
        }
    }

    fn scale(&self, beta: f64) -> f64 {
        ((1.0 - beta) * self.log_forward).exp()
    }

    fn search_box(&self, bounds: &ParameterBounds) -> (Vec<f64>, Vec<f64>) {
        let mut lower: Vec<f64> = self.free.iter().map(|&i| bounds.lower[i]).collect();
        let mut upper: Vec<f64> = self.free.iter().map(|&i| bounds.upper[i]).collect();
        if self.level {
            let (b_lo, b_hi) = if self.free.contains(&1) {
                (bounds.lower[1], bounds.upper[1])
            } else {
                (self.template[1], self.template[1])
            };
            let (g1, g2) = (1.0 / self.scale(b_lo), 1.0 / self.scale(b_hi));
            lower[0] = bounds.lower[0] * g1.min(g2);
            upper[0] = bounds.upper[0] * g1.max(g2);
        }
        (lower, upper)
    }

    fn start(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self.free.iter().map(|&i| self.template[i]).collect();
        if self.level {
            x[0] /= self.scale(self.template[1]);
        }
        x
    }

    fn model(&self, x: &[f64]) -> Result<SabrModel> {
        let mut v = self.template.clone();
        for (&i, &xi) in self.free.iter().zip(x) {
            v[i] = xi;
        }
        if self.level {
            v[0] *= self.scale(v[1]);
        }
        SabrModel::from_vector(self.kind, &v)
    }
}

/// Static model fitted to one maturity with the implied-vol formula.
pub fn calibrate_static_t1(surface: &VolSurface, slice: usize, options: &CalibrationOptions) -> Result<CalibrationReport> {
    if options.kind() != ModelKind::Static {
        return Err(SabrError::Config("static calibration needs static bounds".into()));
    }
    let one = surface.select(&[slice])?;
    calibrate(&one, &FormulaEvaluator, options)
}

/// Case I model fitted jointly to all maturities with the implied-vol formula.
pub fn calibrate_dynamic_case1_t1(surface: &VolSurface, options: &CalibrationOptions) -> Result<CalibrationReport> {
    if options.kind() != ModelKind::Case1 {
        return Err(SabrError::Config("Case I calibration needs Case I bounds".into()));
    }
    if surface.slices.len() < 2 {
        return Err(SabrError::Validation("a joint calibration needs at least two maturities".into()));
    }
    calibrate(surface, &FormulaEvaluator, options)
}

/// Case II model fitted jointly in prices with Monte Carlo under `plan`.
///
/// The worker budget is split between concurrent chains and the Monte Carlo
/// engine; results do not depend on the split.
pub fn calibrate_case2_t2(
    surface: &VolSurface,
    plan: &SimulationPlan,
    options: &CalibrationOptions,
) -> Result<CalibrationReport> {
    if options.kind() != ModelKind::Case2 {
        return Err(SabrError::Config("Case II calibration needs Case II bounds".into()));
    }
    if surface.slices.len() < 2 {
        return Err(SabrError::Validation("a joint calibration needs at least two maturities".into()));
    }
    plan.validate()?;
    let budget = options.workers.max(1);
    let chains = options.schedule.chains();
    let outer = budget.min(chains);
    let mut plan = *plan;
    plan.workers = (budget / outer).max(1);
    let mut opts = options.clone();
    opts.workers = outer;
    calibrate(surface, &MonteCarloEvaluator { plan }, &opts)
}
