mod common;

use common::{mc_instance, walk1d, walk2d};
use greenldp::green::TargetSet;
use greenldp::montecarlo::{mc_green, mc_hitting, quasipotential_tilt, McEstimate, SamplerConfig};

#[test]
fn tilted_estimator_is_unbiased() {
    let mut within = 0;
    for seed in 0..30 {
        let (m, target, horizon, tilt, exact) = mc_instance(seed);
        let d = m.dim();
        let est = mc_green(
            &m,
            &vec![0; d],
            &target,
            &SamplerConfig { seed, paths: 20_000, horizon, tilt },
        )
        .unwrap();
        if (est.mean - exact).abs() <= 4.0 * est.std_error.max(1e-12 * exact) {
            within += 1;
        }
    }
    assert!(within >= 28, "{within}/30 within 4 standard errors");
}

fn run_in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let m = walk2d();
    let target = TargetSet::new(vec![-3.0, 1.0], 1.5, 1).unwrap();
    let cfg = SamplerConfig {
        seed: 99,
        paths: 30_000,
        horizon: 150,
        tilt: quasipotential_tilt(&m, &[-3.0, 1.0]).unwrap(),
    };
    let run = || -> McEstimate { mc_green(&m, &[0, 0], &target, &cfg).unwrap() };
    let one = run_in_pool(1, run);
    let four = run_in_pool(4, run);
    assert_eq!(one, four);
    assert_eq!(one.mean.to_bits(), four.mean.to_bits());
    let again = run_in_pool(3, run);
    assert_eq!(one, again);
}

#[test]
fn different_seeds_give_different_estimates() {
    let m = walk2d();
    let target = TargetSet::point(&[-2, 0]);
    let cfg = |seed| SamplerConfig { seed, paths: 5_000, horizon: 100, tilt: vec![0.0, 0.0] };
    let a = mc_green(&m, &[0, 0], &target, &cfg(1)).unwrap();
    let b = mc_green(&m, &[0, 0], &target, &cfg(2)).unwrap();
    assert_ne!(a.mean, b.mean);
}

#[test]
fn hitting_probability_of_gamblers_ruin() {
    let m = walk1d();
    let tilt = quasipotential_tilt(&m, &[-1.0]).unwrap();
    let rep = mc_hitting(&m, &[0], &[-10], &SamplerConfig { seed: 5, paths: 10_000, horizon: 500, tilt }).unwrap();
    let exact = (3.0f64 / 7.0).powi(10);
    assert!((rep.estimate.mean - exact).abs() <= 3.0 * rep.estimate.std_error + 1e-12 * exact);
    assert!(rep.bound_holds(3.0));
    assert!((rep.theta - (1.0f64 / 0.3).ln()).abs() < 1e-12);
}

#[test]
fn low_effective_sample_size_is_flagged() {
    // a tilt pointing away from the target wastes almost every path
    let m = walk1d();
    let est = mc_green(
        &m,
        &[0],
        &TargetSet::point(&[-6]),
        &SamplerConfig { seed: 3, paths: 4_000, horizon: 200, tilt: vec![1.5] },
    )
    .unwrap();
    assert!(est.low_ess, "ess {}", est.ess);
}
