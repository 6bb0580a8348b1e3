use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sabr_core::analytics::{black_scholes_call, dyn_coeffs_model, dynamic_implied_vol, static_implied_vol};
use sabr_core::calibrate::{
    calibrate, calibrate_case2_t2, calibrate_dynamic_case1_t1, calibrate_static_t1, evaluate_model,
    CalibrationReport, FormulaEvaluator, MonteCarloEvaluator, Technique, VolSurface,
};
use sabr_core::io::config::{load_params, params_to_json, Contract, RunConfig};
use sabr_core::io::report::{smile_to_csv, write_report, PriceReport, SmilePoint};
use sabr_core::mc::{price_cliquet, price_european_call};
use sabr_core::{workers, ModelKind, Result, SabrError, SabrModel};

#[derive(Parser)]
#[command(name = "sabr", version, about = "Static and dynamic SABR calibration and pricing")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the annealer and the Monte Carlo engine.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (overrides SABR_WORKERS and the config).
    #[arg(short, long, global = true)]
    workers: Option<usize>,
    #[arg(short, long, global = true)]
    output_dir: Option<PathBuf>,
    /// Hold a parameter fixed, e.g. `--fixed beta=1`. Repeatable.
    #[arg(long = "fixed", value_name = "NAME=VALUE", global = true)]
    fixed: Vec<String>,
    /// Surface file or `builtin:eurostoxx50` / `builtin:eurusd`.
    #[arg(long, global = true)]
    surface: Option<String>,
    /// Parameter JSON file.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit model parameters to a surface.
    Calibrate,
    /// Monte Carlo price of the configured contract.
    Price,
    /// Model implied vols on a strike grid per maturity.
    Smile,
    /// Tabulate a fixed parameter set against a surface.
    Eval,
}

const EXIT_CONFIG: u8 = 3;
const EXIT_PARSE: u8 = 4;
const EXIT_NUMERICAL: u8 = 5;

fn exit_code(err: &SabrError) -> u8 {
    match err {
        SabrError::Config(_) => EXIT_CONFIG,
        SabrError::Parse { .. } | SabrError::Validation(_) | SabrError::Io(_) => EXIT_PARSE,
        SabrError::Domain(_)
        | SabrError::NumericDomain(_)
        | SabrError::Constraint { .. }
        | SabrError::Instability(_)
        | SabrError::DegenerateRegression(_) => EXIT_NUMERICAL,
    }
}

struct Context {
    config: RunConfig,
    /// Directory that relative paths in the config are resolved against.
    base: PathBuf,
    workers: usize,
    output_dir: PathBuf,
    surface_override: Option<String>,
    params_override: Option<PathBuf>,
}

impl Context {
    fn new(common: Common) -> Result<Self> {
        let (mut config, base) = match &common.config {
            Some(path) => {
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (RunConfig::load(path)?, base)
            }
            None => (RunConfig::default(), PathBuf::new()),
        };
        config.apply_fixed(&common.fixed)?;
        if common.seed.is_some() {
            config.seed = common.seed;
        }
        if common.workers == Some(0) {
            return Err(SabrError::Config("workers must be at least 1".into()));
        }
        let workers = workers::resolve(common.workers, config.workers);
        let output_dir = common.output_dir.unwrap_or_else(|| base.join(&config.output_dir));
        Ok(Self {
            config,
            base,
            workers,
            output_dir,
            surface_override: common.surface,
            params_override: common.params,
        })
    }

    fn surface(&self) -> Result<VolSurface> {
        match &self.surface_override {
            Some(name) => sabr_core::io::config::load_surface_ref(name, Path::new("")),
            None => self.config.load_surface(&self.base),
        }
    }

    fn params(&self) -> Result<SabrModel> {
        match (&self.params_override, &self.config.params) {
            (Some(p), _) => load_params(p),
            (None, Some(p)) => load_params(self.base.join(p)),
            (None, None) => Err(SabrError::Config("no parameter file given (--params or `params`)".into())),
        }
    }

    fn seed(&self) -> u64 {
        self.config.schedule().seed
    }
}

fn summarize(report: &CalibrationReport, label: &str) {
    println!(
        "{label}: {} {} mean rel error {:.6e}, max {:.6e}, cost {:.6e}, {} evals ({} NaN), {:.2} s",
        report.model.label(),
        report.technique.label(),
        report.mean_rel_error,
        report.max_rel_error,
        report.final_cost,
        report.evals,
        report.nan_evals,
        report.wall_time_s
    );
}

fn save(ctx: &Context, stem: &str, report: &CalibrationReport) -> Result<()> {
    let (csv, json) = write_report(&ctx.output_dir, stem, report)?;
    std::fs::write(ctx.output_dir.join(format!("{stem}_params.json")), params_to_json(&report.params) + "\n")?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn cmd_calibrate(ctx: &Context) -> Result<()> {
    let surface = ctx.surface()?;
    let cfg = &ctx.config;
    let options = cfg.calibration_options(ctx.workers)?;
    let plan = cfg.plan(ctx.workers);
    match (cfg.technique, cfg.model) {
        (Technique::Formula, ModelKind::Static) => {
            let slices: Vec<usize> = match cfg.slice {
                Some(i) => vec![i],
                None => (0..surface.slices.len()).collect(),
            };
            for i in slices {
                if i >= surface.slices.len() {
                    return Err(SabrError::Config(format!("slice {i} is out of range")));
                }
                let report = calibrate_static_t1(&surface, i, &options)?;
                summarize(&report, &format!("slice {i} (T = {})", surface.slices[i].maturity));
                save(ctx, &format!("calibration_slice{i}"), &report)?;
            }
            Ok(())
        }
        (Technique::Formula, ModelKind::Case1) => {
            let report = calibrate_dynamic_case1_t1(&surface, &options)?;
            summarize(&report, "calibration");
            save(ctx, "calibration", &report)
        }
        (Technique::Formula, ModelKind::Case2) => {
            let report = calibrate(&surface, &FormulaEvaluator, &options)?;
            summarize(&report, "calibration");
            save(ctx, "calibration", &report)
        }
        (Technique::MonteCarlo, ModelKind::Case2) => {
            let report = calibrate_case2_t2(&surface, &plan, &options)?;
            summarize(&report, "calibration");
            save(ctx, "calibration", &report)
        }
        (Technique::MonteCarlo, _) => {
            let mut plan = plan;
            plan.workers = 1;
            let report = calibrate(&surface, &MonteCarloEvaluator { plan }, &options)?;
            summarize(&report, "calibration");
            save(ctx, "calibration", &report)
        }
    }
}

fn cmd_eval(ctx: &Context) -> Result<()> {
    let surface = ctx.surface()?;
    let model = ctx.params()?;
    let report = match ctx.config.technique {
        Technique::Formula => evaluate_model(&surface, &model, &FormulaEvaluator)?,
        Technique::MonteCarlo => {
            let plan = ctx.config.plan(ctx.workers);
            evaluate_model(&surface, &model, &MonteCarloEvaluator { plan })?
        }
    };
    let report = CalibrationReport { seed: ctx.seed(), ..report };
    summarize(&report, "evaluation");
    save(ctx, "evaluation", &report)
}

fn model_vol(model: &SabrModel, strike: f64, forward: f64, maturity: f64) -> Result<f64> {
    match model {
        SabrModel::Static(p) => static_implied_vol(p, strike, forward, maturity),
        _ => {
            let c = dyn_coeffs_model(model, maturity)?;
            dynamic_implied_vol(&c, model.alpha(), model.beta(), strike, forward, maturity)
        }
    }
}

fn cmd_smile(ctx: &Context) -> Result<()> {
    let surface = ctx.surface()?;
    let model = ctx.params()?;
    let grid = ctx.config.smile;
    let mut points = Vec::new();
    for (i, slice) in surface.slices.iter().enumerate() {
        let forward = surface.forward(i);
        let strikes: Vec<f64> = if grid.quotes {
            slice.strikes()
        } else {
            grid.moneyness().iter().map(|m| m * forward).collect()
        };
        for strike in strikes {
            let vol = model_vol(&model, strike, forward, slice.maturity)?;
            let price = if grid.prices {
                Some(black_scholes_call(surface.spot, strike, slice.rate, slice.dividend, slice.maturity, vol)?)
            } else {
                None
            };
            points.push(SmilePoint { maturity: slice.maturity, strike, forward, vol, price });
        }
    }
    std::fs::create_dir_all(&ctx.output_dir)?;
    let path = ctx.output_dir.join("smile.csv");
    std::fs::write(&path, smile_to_csv(&points))?;
    println!("wrote {} ({} rows)", path.display(), points.len());
    Ok(())
}

/// Spot, rate and yield for a contract: explicit values first, then the
/// surface slice closest in maturity.
fn market_for(ctx: &Context, contract: &Contract) -> Result<(f64, f64, f64)> {
    let (spot, rate, dividend) = contract.market_overrides();
    if let (Some(s), Some(r), Some(y)) = (spot, rate, dividend) {
        return Ok((s, r, y));
    }
    let surface = ctx.surface().map_err(|e| match e {
        SabrError::Config(_) => SabrError::Config(
            "the contract needs spot, rate and dividend or a configured surface".into(),
        ),
        other => other,
    })?;
    let t = contract.maturity();
    let nearest = surface
        .slices
        .iter()
        .min_by(|a, b| (a.maturity - t).abs().total_cmp(&(b.maturity - t).abs()))
        .expect("surfaces have at least one slice");
    Ok((
        spot.unwrap_or(surface.spot),
        rate.unwrap_or(nearest.rate),
        dividend.unwrap_or(nearest.dividend),
    ))
}

fn cmd_price(ctx: &Context) -> Result<()> {
    let model = ctx.params()?;
    let contract = ctx
        .config
        .contract
        .clone()
        .ok_or_else(|| SabrError::Config("no [contract] configured".into()))?;
    let (spot, rate, dividend) = market_for(ctx, &contract)?;
    let plan = ctx.config.plan(ctx.workers);
    let started = Instant::now();
    let (estimate, label) = match &contract {
        Contract::European { strike, maturity, .. } => (
            price_european_call(&model, spot, *strike, rate, dividend, *maturity, &plan)?,
            format!("european call K={strike} T={maturity}"),
        ),
        Contract::Cliquet { maturity, resets, .. } => {
            let spec = contract.cliquet_spec().expect("cliquet contract");
            (
                price_cliquet(&model, spot, rate, dividend, &spec, &plan)?,
                format!("cliquet T={maturity} resets={resets}"),
            )
        }
    };
    let wall = started.elapsed().as_secs_f64();
    let report = PriceReport::new(model, label, &estimate, plan.dt, plan.seed);
    println!(
        "{{\"value\": {}, \"std_error\": {}, \"num_paths\": {}, \"dt\": {}, \"seed\": {}, \"wall_time_s\": {wall:.3}}}",
        report.value, report.std_error, report.num_paths, report.dt, report.seed
    );
    std::fs::create_dir_all(&ctx.output_dir)?;
    std::fs::write(ctx.output_dir.join("price.json"), report.to_json())?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(cli.common)?;
    match cli.command {
        Command::Calibrate => cmd_calibrate(&ctx),
        Command::Price => cmd_price(&ctx),
        Command::Smile => cmd_smile(&ctx),
        Command::Eval => cmd_eval(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
