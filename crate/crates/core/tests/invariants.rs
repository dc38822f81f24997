//! Stochastic invariants checked with modest replication counts.

use tempered_coint::process::{scale_dn, simulate_model, simulate_model_fn};
use tempered_coint::regression::nw_fit;
use tempered_coint::rng::derive_seed;
use tempered_coint::spec_test::full_sample_statistic;
use tempered_coint::whittle::{fit_arfima00, fit_artfima00, simulate_artfima};
use tempered_coint::{
    BlockRule, Kernel, MemoryKind, MemoryNormalization, NoiseConfig, ParametricFamily, RegressionFunction,
    ScheduleRule, SpecTestConfig, TemperedProcessSpec,
};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn noise(seed: u64) -> NoiseConfig {
    NoiseConfig::new(0.5, 0.25, 0.2, seed).unwrap()
}

#[test]
fn simulation_is_repeatable() {
    let spec = TemperedProcessSpec::semi_long_memory(500, 0.4, 0.2).unwrap();
    let a = simulate_model_fn(&spec, &noise(5), &RegressionFunction::sine()).unwrap();
    let b = simulate_model_fn(&spec, &noise(5), &RegressionFunction::sine()).unwrap();
    assert_eq!(a, b);
    let c = simulate_model_fn(&spec, &noise(6), &RegressionFunction::sine()).unwrap();
    assert_ne!(a.x, c.x);
}

#[test]
fn partial_sums_have_stable_scale() {
    let d = 0.3;
    let sds: Vec<f64> = [500usize, 1000, 2000]
        .iter()
        .map(|&n| {
            let lambda = (n as f64).powf(-0.2);
            let spec = TemperedProcessSpec::semi_long_memory(n, d, lambda).unwrap().with_burn_in(200);
            let scale = scale_dn(n, lambda, d, MemoryKind::SemiLongMemory).unwrap();
            let ends: Vec<f64> = (0..500)
                .map(|r| {
                    let p = simulate_model(&spec, &noise(derive_seed(31, r)), |_| 0.0).unwrap();
                    p.x[n - 1] / scale
                })
                .collect();
            let mean = ends.iter().sum::<f64>() / ends.len() as f64;
            (ends.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ends.len() - 1) as f64).sqrt()
        })
        .collect();
    let max = sds.iter().cloned().fold(f64::MIN, f64::max);
    let min = sds.iter().cloned().fold(f64::MAX, f64::min);
    assert!(min > 0.2 && max < 5.0, "{sds:?}");
    assert!(max / min < 1.25, "{sds:?}");
}

#[test]
fn nw_error_shrinks_with_sample_size() {
    let grid: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
    let f = RegressionFunction::sine();
    let truth: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect();
    let medians: Vec<f64> = [250usize, 1000, 4000]
        .iter()
        .map(|&n| {
            let spec = TemperedProcessSpec::semi_long_memory(n, 0.2, (n as f64).powf(-0.2)).unwrap().with_burn_in(200);
            let h = (n as f64).powf(-1.0 / 3.0);
            let errs: Vec<f64> = (0..500)
                .filter_map(|r| {
                    let p = simulate_model_fn(&spec, &noise(derive_seed(41, r)), &f).unwrap();
                    let (fhat, _) = nw_fit(&p.x, &p.y, &grid, h, Kernel::Epanechnikov).unwrap();
                    let e: Vec<f64> = fhat.iter().zip(&truth).filter_map(|(a, t)| a.map(|a| (a - t).abs())).collect();
                    (!e.is_empty()).then(|| e.iter().sum::<f64>() / e.len() as f64)
                })
                .collect();
            median(errs)
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn statistic_diverges_under_fixed_alternative() {
    let memory = MemoryNormalization::SemiLong { d: 0.3, lambda: ScheduleRule::inverse_root(5) };
    let cfg = SpecTestConfig::new(
        ParametricFamily::Linear,
        ScheduleRule::inverse_root(3),
        BlockRule::SqrtMultiple(1.0),
        memory,
    );
    let medians: Vec<f64> = [250usize, 500, 1000]
        .iter()
        .map(|&n| {
            let spec = TemperedProcessSpec::semi_long_memory(n, 0.3, (n as f64).powf(-0.2)).unwrap().with_burn_in(200);
            let stats: Vec<f64> = (0..200)
                .map(|r| {
                    let p = simulate_model(&spec, &noise(derive_seed(51, r)), |x| {
                        0.5 + 0.2 * x + (std::f64::consts::PI * x).sin()
                    })
                    .unwrap();
                    full_sample_statistic(&p.x, &p.y, &cfg).unwrap().t_normalized
                })
                .collect();
            median(stats)
        })
        .collect();
    assert!(medians[0] < medians[1] && medians[1] < medians[2], "{medians:?}");
}

#[test]
fn tempered_model_predicts_better_than_untempered() {
    for (d, lambda) in [(0.8, 0.05), (1.0, 0.2)] {
        let diffs: Vec<f64> = (0..100)
            .map(|r| {
                let z = simulate_artfima(2000, d, lambda, derive_seed(61, r)).unwrap();
                fit_artfima00(&z).unwrap().mse - fit_arfima00(&z).unwrap().mse
            })
            .collect();
        assert!(median(diffs) <= 0.0, "d={d} lambda={lambda}");
    }
}
