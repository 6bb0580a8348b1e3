//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every entry point takes and returns JSON strings so the page stays free
//! of generated type glue beyond plain strings and numbers.

use sabr_core::analytics::{dyn_coeffs_model, dynamic_implied_vol, static_implied_vol};
use sabr_core::calibrate::{model_vols, VolSurface};
use sabr_core::io::fixtures;
use sabr_core::mc::{price_european_call, SimulationPlan};
use sabr_core::{Result, SabrModel};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn builtin(name: &str) -> Option<VolSurface> {
    match name {
        "eurostoxx50" => Some(fixtures::eurostoxx_surface()),
        "eurusd" => Some(fixtures::eurusd_surface()),
        _ => None,
    }
}

fn parse_model(json: &str) -> std::result::Result<SabrModel, JsValue> {
    let m: SabrModel = serde_json::from_str(json).map_err(js_err)?;
    m.validate().map_err(js_err)?;
    Ok(m)
}

/// Published parameter sets for a built-in surface, keyed by model kind.
#[wasm_bindgen]
pub fn presets(surface: &str) -> std::result::Result<String, JsValue> {
    let sets = match surface {
        "eurostoxx50" => vec![
            SabrModel::Case1(fixtures::eurostoxx_case1()),
            SabrModel::Static(fixtures::eurostoxx_static()[3]),
        ],
        "eurusd" => vec![
            SabrModel::Case1(fixtures::eurusd_case1()),
            SabrModel::Case2(fixtures::eurusd_case2()),
            SabrModel::Static(fixtures::eurusd_static()[3]),
        ],
        other => return Err(js_err(format!("unknown surface `{other}`"))),
    };
    serde_json::to_string(&sets).map_err(js_err)
}

#[derive(Serialize)]
struct Slice {
    maturity: f64,
    forward: f64,
    strikes: Vec<f64>,
    market: Vec<f64>,
    model: Vec<f64>,
    /// Dense model curve between the first and last quoted strike.
    curve: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct Comparison {
    spot: f64,
    mean_rel_error: f64,
    max_rel_error: f64,
    slices: Vec<Slice>,
}

fn vol_at(model: &SabrModel, strike: f64, forward: f64, maturity: f64) -> Result<f64> {
    match model {
        SabrModel::Static(p) => static_implied_vol(p, strike, forward, maturity),
        _ => {
            let c = dyn_coeffs_model(model, maturity)?;
            dynamic_implied_vol(&c, model.alpha(), model.beta(), strike, forward, maturity)
        }
    }
}

/// Model implied vols against the quotes of a built-in surface.
#[wasm_bindgen]
pub fn compare_smile(params_json: &str, surface: &str, points: usize) -> std::result::Result<String, JsValue> {
    let model = parse_model(params_json)?;
    let s = builtin(surface).ok_or_else(|| js_err(format!("unknown surface `{surface}`")))?;
    let vols = model_vols(&model, &s).map_err(js_err)?;
    let points = points.clamp(2, 400);
    let mut slices = Vec::new();
    let mut errors = Vec::new();
    for (i, (sl, v)) in s.slices.iter().zip(vols).enumerate() {
        let forward = s.forward(i);
        let strikes = sl.strikes();
        let market: Vec<f64> = sl.quotes.iter().map(|q| q.vol).collect();
        errors.extend(market.iter().zip(&v).map(|(m, x)| ((m - x) / m).abs()));
        let (lo, hi) = (strikes[0], strikes[strikes.len() - 1]);
        let curve = (0..points)
            .map(|j| {
                let k = lo + (hi - lo) * j as f64 / (points - 1) as f64;
                vol_at(&model, k, forward, sl.maturity).map(|v| (k, v))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(js_err)?;
        slices.push(Slice { maturity: sl.maturity, forward, strikes, market, model: v, curve });
    }
    let out = Comparison {
        spot: s.spot,
        mean_rel_error: errors.iter().sum::<f64>() / errors.len() as f64,
        max_rel_error: errors.iter().copied().fold(0.0, f64::max),
        slices,
    };
    serde_json::to_string(&out).map_err(js_err)
}

/// Monte Carlo European call with its standard error, single-threaded.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn price_call(
    params_json: &str,
    spot: f64,
    strike: f64,
    rate: f64,
    dividend: f64,
    maturity: f64,
    paths: usize,
    seed: u64,
) -> std::result::Result<String, JsValue> {
    let model = parse_model(params_json)?;
    let plan = SimulationPlan::new(paths.clamp(1, 1 << 20), 1.0 / 250.0, seed);
    let e = price_european_call(&model, spot, strike, rate, dividend, maturity, &plan).map_err(js_err)?;
    let black = vol_at(&model, strike, spot * ((rate - dividend) * maturity).exp(), maturity).ok();
    let formula = match black {
        Some(v) => sabr_core::analytics::black_scholes_call(spot, strike, rate, dividend, maturity, v).ok(),
        None => None,
    };
    serde_json::to_string(&serde_json::json!({
        "value": e.value,
        "std_error": e.std_error,
        "num_paths": e.num_paths,
        "formula": formula,
    }))
    .map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_reports_all_quotes() {
        let p = serde_json::to_string(&SabrModel::Case1(fixtures::eurusd_case1())).unwrap();
        let out: serde_json::Value = serde_json::from_str(&compare_smile(&p, "eurusd", 50).unwrap()).unwrap();
        assert!((out["mean_rel_error"].as_f64().unwrap() - 2.441722e-2).abs() < 5e-8);
        assert_eq!(out["slices"].as_array().unwrap().len(), 4);
        assert_eq!(out["slices"][0]["curve"].as_array().unwrap().len(), 50);
    }

    #[test]
    fn presets_parse_back() {
        for s in ["eurostoxx50", "eurusd"] {
            let sets: Vec<SabrModel> = serde_json::from_str(&presets(s).unwrap()).unwrap();
            assert!(!sets.is_empty());
        }
    }

    #[test]
    fn call_price_is_close_to_formula() {
        let p = serde_json::to_string(&SabrModel::Case1(fixtures::eurusd_case1())).unwrap();
        let out: serde_json::Value =
            serde_json::from_str(&price_call(&p, 1.2939, 1.3, 0.01, 0.005, 1.0, 1 << 14, 3).unwrap()).unwrap();
        let v = out["value"].as_f64().unwrap();
        let f = out["formula"].as_f64().unwrap();
        assert!((v - f).abs() / f < 0.05, "{v} vs {f}");
    }
}
