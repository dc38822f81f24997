//! Independent reference implementations checked against the library.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use tempered_coint::process::{
    convolve_valid, frac_coeffs, simulate_innovations, simulate_model_fn, tempered_coeffs, ConvolutionMethod,
    TEMPERED_LAG_FLOOR, TEMPERED_TAIL_TOL,
};
use tempered_coint::regression::nw_estimate;
use tempered_coint::spec_test::{run_spec_test, t_statistic_from_residuals, WeightFunction};
use tempered_coint::{
    BlockRule, Kernel, MemoryNormalization, NoiseConfig, ParametricFamily, RegressionFunction, ScheduleRule,
    SpecTestConfig, TemperedProcessSpec,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_walk(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            acc += r.sample::<f64, _>(StandardNormal);
            acc
        })
        .collect()
}

fn naive_nw(x: &[f64], y: &[f64], p: f64, h: f64, k: Kernel) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        let w = k.eval((x[i] - p) / h) / h;
        num += w * y[i];
        den += w;
    }
    (den > 0.0).then(|| num / den)
}

fn naive_sigma2(x: &[f64], y: &[f64], p: f64, h: f64, k: Kernel) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        let w = k.eval((x[i] - p) / h) / h;
        if w > 0.0 {
            let r = y[i] - naive_nw(x, y, x[i], h, k).unwrap();
            num += w * r * r;
            den += w;
        }
    }
    (den > 0.0).then(|| num / den)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn nw_and_variance_match_double_loops() {
    let mut r = rng(11);
    for case in 0..40 {
        let n = r.random_range(5..=100);
        let x = random_walk(&mut r, n);
        let y: Vec<f64> = x.iter().map(|v| v.sin() + 0.3 * r.sample::<f64, _>(StandardNormal)).collect();
        let h = r.random_range(0.2..2.0);
        let kernel = if case % 2 == 0 { Kernel::Epanechnikov } else { Kernel::Gaussian };
        let grid: Vec<f64> = (0..25).map(|i| -8.0 + i as f64 * 0.65).collect();
        let est = nw_estimate(&x, &y, &grid, h, kernel).unwrap();
        for (i, &p) in grid.iter().enumerate() {
            match (est.fhat[i], naive_nw(&x, &y, p, h, kernel)) {
                (Some(a), Some(b)) => assert!(close(a, b, 1e-12), "fhat {a} vs {b}"),
                (None, None) => {}
                other => panic!("definedness differs at {p}: {other:?}"),
            }
            match (est.sigma2hat[i], naive_sigma2(&x, &y, p, h, kernel)) {
                (Some(a), Some(b)) => assert!(close(a, b, 1e-12), "sigma2 {a} vs {b}"),
                (None, None) => {}
                other => panic!("variance definedness differs at {p}: {other:?}"),
            }
        }
    }
}

fn riemann_t(x: &[f64], res: &[f64], h: f64, k: Kernel, lo: f64, hi: f64, cells: usize) -> f64 {
    let step = (hi - lo) / cells as f64;
    let mut total = 0.0;
    for m in 0..cells {
        let z = lo + (m as f64 + 0.5) * step;
        let s: f64 = x.iter().zip(res).map(|(&xk, &rk)| k.eval((xk - z) / h) * rk).sum();
        total += s * s;
    }
    total * step
}

#[test]
fn statistic_matches_fine_riemann_sum() {
    let mut r = rng(12);
    let w = WeightFunction::wide();
    let (lo, hi) = w.support();
    for _ in 0..50 {
        let n = r.random_range(5..=50);
        let x = random_walk(&mut r, n);
        let res: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let h = r.random_range(0.1..1.0);
        let fast = t_statistic_from_residuals(&x, &res, h, Kernel::Gaussian, &w, 2048).unwrap();
        let slow = riemann_t(&x, &res, h, Kernel::Gaussian, lo, hi, 10 * 2048);
        assert!((fast - slow).abs() <= 1e-6 * slow, "{fast} vs {slow}");
    }
}

#[test]
fn frac_coeffs_match_log_gamma() {
    for d in [0.1, 0.3, 0.45, 1.0] {
        let b = frac_coeffs(d, 10_000).unwrap();
        for (j, &v) in b.iter().enumerate() {
            let jf = j as f64;
            let expect = (ln_gamma(jf + d) - ln_gamma(d) - ln_gamma(jf + 1.0)).exp();
            assert!((v - expect).abs() <= 1e-10 * expect, "d={d} j={j}: {v} vs {expect}");
        }
    }
}

#[test]
fn frac_coeffs_tail_asymptotics() {
    let j = 100_000usize;
    for d in [0.1, 0.3] {
        let b = frac_coeffs(d, j).unwrap();
        let ratio = b[j] * ln_gamma(d).exp() / (j as f64).powf(d - 1.0);
        assert!((ratio - 1.0).abs() < 0.01, "d={d}: {ratio}");
    }
}

#[test]
fn tempered_sum_scaling_is_stable() {
    for d in [0.3, 1.0] {
        let scaled: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&lambda: &f64| {
                let lags = (-TEMPERED_TAIL_TOL.ln() / lambda).ceil() as usize + TEMPERED_LAG_FLOOR;
                let a: f64 = tempered_coeffs(d, lambda, lags).unwrap().iter().sum();
                a * lambda.powf(d)
            })
            .collect();
        let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
        let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 1.2, "d={d}: {scaled:?}");
    }
}

#[test]
fn epanechnikov_moments_by_quadrature() {
    let k = Kernel::Epanechnikov;
    let cells = 200_000;
    let step = 2.0 / cells as f64;
    let (mut m0, mut m2) = (0.0, 0.0);
    for i in 0..cells {
        let u = -1.0 + (i as f64 + 0.5) * step;
        let v = k.eval(u);
        m0 += v * step;
        m2 += v * v * step;
    }
    let (d1, k2) = k.moments();
    assert!((m0 - 1.0).abs() < 1e-8 && (d1 - 1.0).abs() < 1e-12);
    assert!((m2 - 0.6).abs() < 1e-8 && (k2 - 0.6).abs() < 1e-12);
}

#[test]
fn convolution_matches_double_loop() {
    let mut r = rng(13);
    for _ in 0..20 {
        let n = r.random_range(1..=100);
        let lags = r.random_range(0..=500);
        let coeffs = tempered_coeffs(r.random_range(0.05..1.2), r.random_range(0.0..0.3), lags).unwrap();
        let signal: Vec<f64> = (0..n + lags).map(|_| r.sample(StandardNormal)).collect();
        let naive: Vec<f64> = (0..n)
            .map(|s| (0..=lags).map(|j| coeffs[j] * signal[s + lags - j]).sum())
            .collect();
        for method in [ConvolutionMethod::Direct, ConvolutionMethod::Fft, ConvolutionMethod::Auto] {
            let out = convolve_valid(&coeffs, &signal, method);
            assert_eq!(out.len(), n);
            for (a, b) in out.iter().zip(&naive) {
                assert!((a - b).abs() <= 1e-10, "{method:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn innovations_have_requested_correlation() {
    let noise = NoiseConfig::new(0.5, 0.25, 0.2, 99).unwrap();
    let (xi, eps) = simulate_innovations(200_000, &noise).unwrap();
    let n = xi.len() as f64;
    let cov: f64 = xi.iter().zip(&eps).map(|(a, b)| a * b).sum::<f64>() / n;
    let vx: f64 = xi.iter().map(|a| a * a).sum::<f64>() / n;
    let ve: f64 = eps.iter().map(|a| a * a).sum::<f64>() / n;
    assert!((vx - 1.0).abs() < 0.02 && (ve - 1.0).abs() < 0.02);
    assert!((cov - 0.5).abs() < 0.02, "{cov}");
}

fn ols_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[test]
fn block_statistics_match_direct_recomputation() {
    let n = 120;
    let b = 22;
    let spec = TemperedProcessSpec::semi_long_memory(n, 0.3, (n as f64).powf(-0.2)).unwrap().with_burn_in(100);
    let noise = NoiseConfig::new(0.5, 0.25, 0.2, 2024).unwrap();
    let path = simulate_model_fn(&spec, &noise, &RegressionFunction::Linear { intercept: 0.5, slope: -0.2 }).unwrap();
    let memory = MemoryNormalization::SemiLong { d: 0.3, lambda: ScheduleRule::inverse_root(5) };
    let cfg = SpecTestConfig::new(ParametricFamily::Linear, ScheduleRule::inverse_root(3), BlockRule::Fixed(b), memory);
    let res = run_spec_test(&path.x, &path.y, &cfg).unwrap();
    assert_eq!(res.block_size, b);
    assert_eq!(res.by_block.len(), n - b + 1);
    assert_eq!(res.skipped_blocks, 0);

    let (lo, hi) = WeightFunction::wide().support();
    let hb = (b as f64).powf(-1.0 / 3.0);
    let norm_b = (b as f64).sqrt() * (b as f64).powf(-0.2 * 0.3) * hb;
    for (i, got) in res.by_block.iter().enumerate() {
        let x = &path.x[i..i + b];
        let y = &path.y[i..i + b];
        let (a, s) = ols_line(x, y);
        let resid: Vec<f64> = x.iter().zip(y).map(|(&xk, &yk)| yk - a - s * xk).collect();
        let t = riemann_t(x, &resid, hb, Kernel::Gaussian, lo, hi, 10 * 2048) / norm_b;
        let got = got.expect("block skipped");
        assert!((got - t).abs() <= 1e-6 * t.max(1e-12), "block {i}: {got} vs {t}");
    }

    let hn = (n as f64).powf(-1.0 / 3.0);
    let (a, s) = ols_line(&path.x, &path.y);
    let resid: Vec<f64> = path.x.iter().zip(&path.y).map(|(&xk, &yk)| yk - a - s * xk).collect();
    let norm_n = (n as f64).sqrt() * (n as f64).powf(-0.2 * 0.3) * hn;
    let t = riemann_t(&path.x, &resid, hn, Kernel::Gaussian, lo, hi, 10 * 2048) / norm_n;
    assert!((res.t_normalized - t).abs() <= 1e-6 * t);
    let above = res.subsample_values.iter().filter(|&&v| v >= t).count();
    let p = (1 + above) as f64 / (1 + res.subsample_values.len()) as f64;
    assert!((res.p_value - p).abs() < 1e-12);
}
