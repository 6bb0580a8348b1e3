use proptest::prelude::*;
use sabr_core::analytics::{
    black_scholes_call, dyn_coeffs_case1, dyn_coeffs_case2, dyn_coeffs_case2_unchecked, dynamic_implied_vol,
    implied_vol_from_price, static_implied_vol,
};
use sabr_core::calibrate::{
    calibrate, evaluate_model, model_vols, CalibrationOptions, FormulaEvaluator, ModelEvaluator, MonteCarloEvaluator,
    Quote, Slice, VolSurface,
};
use sabr_core::io::fixtures::*;
use sabr_core::io::{parse_surface_str, serialize_surface};
use sabr_core::mc::{price_european_call, simulate_terminals, SimulationPlan};
use sabr_core::{CaseIIParams, CaseIParams, ModelKind, SabrError, SabrModel, StaticSabrParams};

fn static_params() -> impl Strategy<Value = StaticSabrParams> {
    (0.0..=1.0f64, 0.05..1.5f64, -0.99..0.99f64, 0.1..0.5f64).prop_map(|(beta, nu, rho, atm)| StaticSabrParams {
        // α expressed through the ATM vol at a forward of 100.
        alpha: atm * 100f64.powf(1.0 - beta),
        beta,
        nu,
        rho,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_case2_reduces_to_static(p in static_params(), t in 0.05..3.0f64, m in 0.6..1.6f64) {
        let c2 = CaseIIParams {
            alpha: p.alpha, beta: p.beta, rho0: p.rho, q_rho: 0.0, d_rho: 0.0,
            nu0: p.nu, q_nu: 0.0, d_nu: 0.0, a: 0.0, b: 0.0,
        };
        let c = dyn_coeffs_case2(&c2, t).unwrap();
        let s = static_implied_vol(&p, 100.0 * m, 100.0, t).unwrap();
        let d = dynamic_implied_vol(&c, p.alpha, p.beta, 100.0 * m, 100.0, t).unwrap();
        prop_assert!(((d - s) / s).abs() < 1e-12);
    }

    #[test]
    fn atm_vol_collapses(p in static_params(), f in 0.5..5000.0f64, t in 0.01..5.0f64) {
        let omega = f.powf(1.0 - p.beta) / p.alpha;
        let (nu, rho, beta) = (p.nu, p.rho, p.beta);
        let b = ((1.0 - beta).powi(2) / 24.0
            + omega * beta * nu * rho / 4.0
            + (2.0 * nu * nu - 3.0 * nu * nu * rho * rho) / 24.0 * omega * omega)
            / (omega * omega);
        let want = (1.0 + b * t) / omega;
        let got = static_implied_vol(&p, f, f, t).unwrap();
        prop_assert!(((got - want) / want).abs() < 1e-14, "{got} vs {want}");
    }

    #[test]
    fn case1_coefficients_non_negative(
        rho0 in -1.0..=1.0f64, nu0 in 1e-4..10.0f64, a in 0.0..150.0f64, b in 0.0..150.0f64, t in 0.01..5.0f64,
    ) {
        let c = dyn_coeffs_case1(&CaseIParams { alpha: 0.2, beta: 1.0, rho0, nu0, a, b }, t).unwrap();
        prop_assert!(c.nu1_sq >= 0.0 && c.nu2_sq >= 0.0 && c.eta2_sq >= 0.0);
        prop_assert!(c.eta1.abs() <= nu0 * (1.0 + 1e-12));
    }

    #[test]
    fn feasible_case2_coefficients_non_negative(
        rho0 in -0.5..0.5f64, q_rho in -2.0..2.0f64, d_rho in -0.4..0.4f64,
        nu0 in 0.0..3.0f64, q_nu in -3.0..3.0f64, d_nu in 0.01..1.0f64,
        a in 0.0..20.0f64, b in 0.0..20.0f64, t in 0.05..2.0f64,
    ) {
        let p = CaseIIParams { alpha: 0.2, beta: 1.0, rho0, q_rho, d_rho, nu0, q_nu, d_nu, a, b };
        prop_assume!(p.is_feasible(t));
        let c = dyn_coeffs_case2(&p, t).unwrap();
        prop_assert!(c.nu1_sq >= 0.0 && c.nu2_sq >= 0.0 && c.eta2_sq >= 0.0);
    }

    #[test]
    fn vol_inversion_round_trips(
        s in 50.0..200.0f64, m in 0.7..1.4f64, r in -0.01..0.05f64, y in 0.0..0.04f64,
        t in 0.1..3.0f64, vol in 0.05..0.8f64,
    ) {
        let k = s * m;
        let price = black_scholes_call(s, k, r, y, t, vol).unwrap();
        // Without time value there is no volatility to recover.
        let intrinsic = (s * (-y * t).exp() - k * (-r * t).exp()).max(0.0);
        prop_assume!(price - intrinsic > 1e-9 * s);
        let back = implied_vol_from_price(price, s, k, r, y, t).unwrap();
        let again = black_scholes_call(s, k, r, y, t, back).unwrap();
        prop_assert!((again - price).abs() <= 1e-10, "{again} vs {price}");
        // σ is only pinned down where the price moves with it.
        let f = s * ((r - y) * t).exp();
        let d1 = ((f / k).ln() + 0.5 * vol * vol * t) / (vol * t.sqrt());
        let vega = s * (-y * t).exp() * t.sqrt() * (-0.5 * d1 * d1).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if vega > 1e-2 {
            prop_assert!((back - vol).abs() < 1e-8, "{back} vs {vol}");
        }
    }
}

#[test]
fn doubling_quadrature_nodes_is_stable() {
    for (p, surface) in [(eurostoxx_case2(), eurostoxx_surface()), (eurusd_case2(), eurusd_surface())] {
        for s in &surface.slices {
            let a = dyn_coeffs_case2_unchecked(&p, s.maturity, 64).eta2_sq;
            let b = dyn_coeffs_case2_unchecked(&p, s.maturity, 128).eta2_sq;
            assert!(((a - b) / b).abs() < 1e-8, "T = {}: {a} vs {b}", s.maturity);
        }
    }
}

// ------------------------------------------------------------ Monte Carlo

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimates_do_not_depend_on_workers(seed in any::<u64>(), n in 1usize..3000, block in 1usize..700, w in 2usize..9) {
        let model = SabrModel::Case2(eurusd_case2());
        let mut plan = SimulationPlan::new(n, 1.0 / 50.0, seed);
        plan.block_size = block;
        let a = price_european_call(&model, 1.3, 1.35, 0.01, 0.005, 1.0, &plan).unwrap();
        let b = price_european_call(&model, 1.3, 1.35, 0.01, 0.005, 1.0, &plan.with_workers(w)).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    // Below beta = 1 the CEV forward can reach zero; keep to a region where that is negligible.
    #[test]
    fn simulated_forwards_stay_positive(seed in any::<u64>(), nu0 in 0.1..0.6f64, rho0 in -1.0..=1.0f64, beta in 0.9..=1.0f64) {
        let model = SabrModel::Case1(CaseIParams { alpha: 0.3 * 100f64.powf(1.0 - beta), beta, rho0, nu0, a: 0.5, b: 0.5 });
        let plan = SimulationPlan::new(2000, 1.0 / 100.0, seed);
        let f = simulate_terminals(&model, 100.0, model.alpha(), 2.0, &plan).unwrap();
        prop_assert_eq!(f.len(), 2000);
        prop_assert!(f.iter().all(|x| x.is_finite() && *x > 0.0));
    }

    // With beta < 1 and a large vol-of-vol a path can underflow to zero in floating point.
    // That has to surface as an error, never as a silent non-positive forward.
    #[test]
    fn extreme_paths_are_positive_or_rejected(seed in any::<u64>(), nu0 in 0.1..3.0f64, rho0 in -1.0..=1.0f64, beta in 0.0..=1.0f64) {
        let model = SabrModel::Case1(CaseIParams { alpha: 0.3 * 100f64.powf(1.0 - beta), beta, rho0, nu0, a: 0.5, b: 0.5 });
        let plan = SimulationPlan::new(2000, 1.0 / 100.0, seed);
        match simulate_terminals(&model, 100.0, model.alpha(), 2.0, &plan) {
            Ok(f) => prop_assert!(f.iter().all(|x| x.is_finite() && *x > 0.0)),
            Err(e) => prop_assert!(matches!(e, SabrError::Instability(_)), "{e:?}"),
        }
    }

    #[test]
    fn case2_without_extras_matches_case1_paths(seed in any::<u64>(), rho0 in -0.9..0.9f64, nu0 in 0.1..2.0f64, a in 0.0..5.0f64, b in 0.0..5.0f64) {
        let c1 = CaseIParams { alpha: 0.2, beta: 0.8, rho0, nu0, a, b };
        let plan = SimulationPlan::new(500, 1.0 / 50.0, seed);
        let x = simulate_terminals(&SabrModel::Case1(c1), 50.0, 0.2, 1.0, &plan);
        let y = simulate_terminals(&SabrModel::Case2(CaseIIParams::from_case1(&c1)), 50.0, 0.2, 1.0, &plan);
        match (x, y) {
            (Ok(x), Ok(y)) => prop_assert!(x.iter().zip(&y).all(|(a, b)| a.to_bits() == b.to_bits())),
            (Err(x), Err(y)) => prop_assert_eq!(x.to_string(), y.to_string()),
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x.is_ok(), y.is_ok()),
        }
    }
}

fn lognormal_error_slope(seeds: u64) -> f64 {
    // Maturity on the step grid, so the only error left is sampling noise.
    let (s, k, r, y, t, vol) = (100.0, 100.0, 0.03, 0.01, 0.5, 0.2);
    let model = SabrModel::Static(StaticSabrParams { alpha: vol, beta: 1.0, nu: 0.0, rho: 0.0 });
    let exact = black_scholes_call(s, k, r, y, t, vol).unwrap();
    let pts: Vec<(f64, f64)> = [1usize << 14, 1 << 16, 1 << 18]
        .iter()
        .map(|&n| {
            let mean_abs = (0..seeds)
                .map(|seed| {
                    let plan = SimulationPlan::new(n, 1.0 / 50.0, 500 + seed);
                    (price_european_call(&model, s, k, r, y, t, &plan).unwrap().value - exact).abs()
                })
                .sum::<f64>()
                / seeds as f64;
            ((n as f64).ln(), mean_abs.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

#[test]
#[ignore = "with 20 seeds the fitted slope has a standard deviation near 0.09, so a 0.1 band fails often"]
fn lognormal_error_slope_twenty_seeds() {
    let slope = lognormal_error_slope(20);
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

#[test]
fn lognormal_error_shrinks_like_inverse_root_n() {
    let slope = lognormal_error_slope(128);
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

// ------------------------------------------------------------ calibration

fn small_surface() -> VolSurface {
    let slices = [0.5, 1.0]
        .iter()
        .map(|&t| Slice {
            maturity: t,
            rate: 0.01,
            dividend: 0.0,
            quotes: (0..7).map(|j| Quote { strike: 85.0 + 5.0 * j as f64, vol: 0.22 - 0.01 * j as f64 }).collect(),
        })
        .collect();
    VolSurface::new(100.0, slices).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn fixed_parameters_are_honoured(seed in any::<u64>(), mask in 1u8..31, beta in 0.3..1.0f64, nu0 in 0.2..2.0f64) {
        let surface = small_surface();
        let mut o = CalibrationOptions::new(ModelKind::Case1);
        o.schedule.seed = seed;
        o.schedule.max_evals = 3000;
        o.schedule.chain_length = 50;
        let candidates = [("beta", beta), ("nu0", nu0), ("rho0", -0.3), ("a", 0.5), ("b", 1.5)];
        for (i, (name, v)) in candidates.iter().enumerate() {
            if mask & (1 << i) != 0 {
                o.fixed.insert(name.to_string(), *v);
            }
        }
        let report = calibrate(&surface, &FormulaEvaluator, &o).unwrap();
        prop_assert!(report.is_consistent());
        prop_assert!(report.evals <= 3000 + o.schedule.chains());
        let names = ModelKind::Case1.parameter_names();
        let v = report.params.to_vector();
        for (name, want) in &o.fixed {
            let i = names.iter().position(|n| n == name).unwrap();
            prop_assert_eq!(v[i], *want);
        }
        prop_assert!(report.final_cost >= 0.0);
    }

    #[test]
    fn surface_files_round_trip_exactly(
        spot in 0.5..5000.0f64,
        blocks in prop::collection::vec((1u32..3000, -200i32..800, 0i32..600, prop::collection::vec(500u32..9000, 1..8)), 1..5),
    ) {
        // Vols and rates are two-decimal percentages, as quoted.
        let mut t = 0.0;
        let slices: Vec<Slice> = blocks.iter().map(|(dt, r, y, vols)| {
            t += *dt as f64 / 1000.0;
            Slice {
                maturity: t,
                rate: *r as f64 / 100.0 / 100.0,
                dividend: *y as f64 / 100.0 / 100.0,
                quotes: vols.iter().enumerate().map(|(j, v)| Quote {
                    strike: spot * (0.8 + 0.05 * j as f64),
                    vol: *v as f64 / 100.0 / 100.0,
                }).collect(),
            }
        }).collect();
        let surface = VolSurface::new(spot, slices).unwrap();
        let back = parse_surface_str(&serialize_surface(&surface)).unwrap();
        prop_assert_eq!(back, surface);
    }
}

#[test]
fn monte_carlo_objective_is_deterministic() {
    let surface = eurusd_surface();
    let model = SabrModel::Case2(eurusd_case2());
    let e = MonteCarloEvaluator { plan: SimulationPlan::new(2048, 1.0 / 250.0, 9) };
    assert_eq!(e.evaluate(&model, &surface).unwrap(), e.evaluate(&model, &surface).unwrap());
    let a = evaluate_model(&surface, &model, &e).unwrap();
    let b = evaluate_model(&surface, &model, &e).unwrap();
    assert_eq!(a.final_cost.to_bits(), b.final_cost.to_bits());
}

#[test]
fn formula_cost_is_zero_at_exact_fit() {
    let mut surface = small_surface();
    let model = SabrModel::Case1(CaseIParams { alpha: 0.2, beta: 0.9, rho0: -0.4, nu0: 0.8, a: 0.3, b: 0.7 });
    let vols = model_vols(&model, &surface).unwrap();
    for (s, v) in surface.slices.iter_mut().zip(vols) {
        for (q, x) in s.quotes.iter_mut().zip(v) {
            q.vol = x;
        }
    }
    let r = evaluate_model(&surface, &model, &FormulaEvaluator).unwrap();
    assert_eq!(r.final_cost, 0.0);
    assert_eq!(r.max_rel_error, 0.0);
}
