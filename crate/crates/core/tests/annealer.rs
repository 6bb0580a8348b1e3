use std::sync::{Arc, Mutex};

use proptest::prelude::*;
use rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use sabr_core::anneal::{minimize, propose, AnnealingSchedule, SearchSpace};

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

#[test]
fn rosenbrock_4d_default_schedule() {
    let space = SearchSpace::new(vec![-5.0; 4], vec![5.0; 4]).unwrap();
    let mut hits = 0;
    for seed in 0..10 {
        let schedule = AnnealingSchedule {
            seed,
            ..Default::default()
        };
        let r = minimize(rosenbrock, &space, &schedule, &[-3.0, 4.0, -2.0, 0.5]).unwrap();
        if r.best_value < 1e-2 {
            hits += 1;
        }
    }
    assert!(hits >= 8, "only {hits}/10 runs reached 1e-2");
}

#[test]
fn rejected_region_is_never_evaluated() {
    let space = SearchSpace::new(vec![-1.0, -1.0], vec![1.0, 1.0])
        .unwrap()
        .with_feasibility(Arc::new(|x: &[f64]| x[0] + x[1] <= 0.0));
    let seen = Mutex::new(Vec::new());
    let schedule = AnnealingSchedule {
        max_evals: 20_000,
        workers: 4,
        threads: 2,
        ..Default::default()
    };
    let r = minimize(
        |x: &[f64]| {
            seen.lock().unwrap().push([x[0], x[1]]);
            (x[0] - 0.8).powi(2) + (x[1] - 0.8).powi(2)
        },
        &space,
        &schedule,
        &[-0.5, -0.5],
    )
    .unwrap();
    let seen = seen.into_inner().unwrap();
    assert_eq!(seen.len(), r.evals);
    assert!(seen.iter().all(|p| p[0] + p[1] <= 0.0));
}

#[test]
fn results_do_not_depend_on_threads() {
    let space = SearchSpace::new(vec![-5.0; 3], vec![5.0; 3]).unwrap();
    let base = AnnealingSchedule {
        max_evals: 50_000,
        workers: 6,
        groups: 2,
        seed: 99,
        ..Default::default()
    };
    let runs: Vec<_> = [1, 3, 8]
        .iter()
        .map(|&threads| minimize(rosenbrock, &space, &AnnealingSchedule { threads, ..base }, &[0.0; 3]).unwrap())
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn groups_split_the_same_chain_set() {
    let space = SearchSpace::new(vec![-5.0; 3], vec![5.0; 3]).unwrap();
    let two = AnnealingSchedule {
        max_evals: 40_000,
        workers: 4,
        groups: 2,
        seed: 5,
        ..Default::default()
    };
    let one = AnnealingSchedule {
        workers: 8,
        groups: 1,
        ..two
    };
    let a = minimize(rosenbrock, &space, &two, &[1.0, -1.0, 2.0]).unwrap();
    let b = minimize(rosenbrock, &space, &one, &[1.0, -1.0, 2.0]).unwrap();
    assert_eq!(a.temperature_trace, b.temperature_trace);
    assert_eq!(a.best_value, b.best_value);
}

#[test]
fn step_is_uniform_at_initial_temperature() {
    // Kolmogorov-Smirnov against U(−s, s); the box is wide enough that no
    // proposal is reflected.
    let space = SearchSpace::new(vec![-100.0], vec![100.0]).unwrap();
    let schedule = AnnealingSchedule {
        step_scale: 0.1,
        ..Default::default()
    };
    let s = 0.1 * 200.0;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    let n = 20_000;
    let mut steps: Vec<f64> = (0..n).map(|_| propose(&[0.0], schedule.t0, &space, &schedule, &mut rng)[0]).collect();
    steps.sort_by(f64::total_cmp);
    let d = steps
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = (x + s) / (2.0 * s);
            (cdf - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - cdf).abs())
        })
        .fold(0.0, f64::max);
    // Critical value for p = 0.01.
    assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn step_radius_vanishes_with_temperature() {
    let space = SearchSpace::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let schedule = AnnealingSchedule::default();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    for _ in 0..1000 {
        let p = propose(&[0.3, 0.7], 1e-9, &space, &schedule, &mut rng);
        assert!((p[0] - 0.3).abs() < 1e-9 && (p[1] - 0.7).abs() < 1e-9);
    }
}

#[test]
fn proposals_stay_in_box() {
    let space = SearchSpace::new(vec![-1.0, 0.0, 10.0], vec![1.0, 1e-3, 20.0]).unwrap();
    let schedule = AnnealingSchedule {
        step_scale: 3.0,
        ..Default::default()
    };
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
    let mut x = vec![0.0, 5e-4, 15.0];
    for _ in 0..1_000_000 {
        x = propose(&x, schedule.t0, &space, &schedule, &mut rng);
        assert!(space.in_bounds(&x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn incumbent_never_worsens_and_budget_holds(
        seed in any::<u64>(),
        workers in 1usize..6,
        groups in 1usize..3,
        max_evals in 100usize..5000,
        c0 in -4.0f64..4.0,
        c1 in -4.0f64..4.0,
    ) {
        let space = SearchSpace::new(vec![-5.0; 2], vec![5.0; 2]).unwrap();
        let schedule = AnnealingSchedule { seed, workers, groups, max_evals, chain_length: 50, ..Default::default() };
        let f = |x: &[f64]| (x[0] - c0).powi(2) + (x[1] - c1).abs();
        let r = minimize(f, &space, &schedule, &[0.0, 0.0]).unwrap();
        prop_assert!(r.evals <= max_evals + workers * groups);
        for w in r.temperature_trace.windows(2) {
            prop_assert!(w[1].1 <= w[0].1);
        }
        prop_assert_eq!(r.best_value, f(&r.best_point));
        prop_assert!(r.best_value <= r.temperature_trace.last().map_or(f64::INFINITY, |t| t.1));
    }
}
