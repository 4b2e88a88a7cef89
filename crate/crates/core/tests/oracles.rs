//! Oracle-backed checks: statistics with independently computable targets
//! (closed-form laws, exact couplings, brute-force references).

use sdelab_core::avikainen::{discrete_local_time, skorokhod_inverse, time_avg_cdf};
use sdelab_core::ecdf::{Cdf, EmpiricalCDF};
use sdelab_core::ensemble::PathEnsemble;
use sdelab_core::fbm::{fbm_em_path, FbmConfig, FbmSampler};
use sdelab_core::harness::{fit_rate, max_error_shape, mlmc_estimate, strong_error, weak_error, ErrorMode, RateModel, WeakOracle};
use sdelab_core::parallel::{mean_and_se, par_map_indexed, variance_and_se};
use sdelab_core::schemes::{
    aggregate_increments, coupled_system_em, discrete_max, em_cell_max, em_path, EmConfig,
    PairCoefficients, ScaleTransform,
};
use sdelab_core::stable::{empirical_cf, sample_stable_increment};
use sdelab_core::{Coefficient1D, RngStream, TimeGrid};

fn bm_cfg(n: usize) -> EmConfig {
    EmConfig::new(
        Coefficient1D::zero(),
        Coefficient1D::constant(1.0),
        0.0,
        TimeGrid::new(1.0, n).unwrap(),
    )
}

#[test]
fn skorokhod_inverse_reproduces_the_sample_law() {
    // push 1e4 uniforms through the quantile of a 2000-sample ECDF: the
    // image law must match the sample law in Kolmogorov distance
    let mut rng = RngStream::new(51, 0);
    let samples: Vec<f64> = (0..2000).map(|_| rng.normal()).collect();
    let f = EmpiricalCDF::new(samples).unwrap();
    let m = 10_000;
    let mapped: Vec<f64> = (0..m).map(|_| skorokhod_inverse(&f, rng.unit()).unwrap()).collect();
    let g = EmpiricalCDF::new(mapped).unwrap();
    let ks = f.ks_distance_two_sample(&g);
    assert!(ks <= 2.0 / (g.len() as f64).sqrt(), "ks = {ks}");
}

#[test]
fn time_avg_cdf_examples() {
    // constant paths: a point mass
    let grid = TimeGrid::new(1.0, 8).unwrap();
    let rows = vec![vec![3.0; 9]; 4];
    let e = PathEnsemble::from_rows(grid, (0..=8).collect(), rows);
    let cdf = time_avg_cdf(&e).unwrap();
    assert_eq!(cdf.eval(2.999), 0.0);
    assert_eq!(cdf.eval(3.0), 1.0);
    // deterministic ramp: occupation measure is uniform on [0, 1]
    let n = 2048;
    let grid = TimeGrid::new(1.0, n).unwrap();
    let ramp: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let e = PathEnsemble::from_rows(grid, (0..=n).collect(), vec![ramp]);
    let cdf = time_avg_cdf(&e).unwrap();
    for x in [0.1, 0.5, 0.9] {
        assert!((cdf.eval(x) - x).abs() < 2e-3, "x={x}: {}", cdf.eval(x));
    }
}

#[test]
fn local_time_band_estimator_respects_the_moment_bound() {
    // driftless unit-vol paths: E[L^2] at any level is at most 6 sigma^2 T
    let n = 512;
    let t_hor = 1.0;
    let grid = TimeGrid::new(t_hor, n).unwrap();
    let m = 4000;
    let qv = vec![grid.dt(); n];
    let sq: Vec<f64> = par_map_indexed(m, |i| {
        let mut rng = RngStream::new(52, i as u64);
        let inc = rng.brownian_increments(t_hor, n);
        let path = em_path(&bm_cfg(n), &inc).unwrap();
        let lt = discrete_local_time(&path, 0.0, 0.05, &qv).unwrap();
        lt * lt
    });
    let (mean, se) = mean_and_se(&sq);
    let bound = 12.0 * 0.0 + 6.0 * 1.0 * t_hor;
    assert!(mean <= bound + 5.0 * se, "E[L^2] = {mean} vs bound {bound}");
    // and it is a genuine occupation estimate, not identically zero
    assert!(mean > 0.1);
}

#[test]
fn running_max_mean_matches_reflection_law() {
    // E max_{[0,1]} B = sqrt(2/pi); the grid max is biased low by
    // O(sqrt(log n / n))
    let n = 1024;
    let m = 40_000;
    let maxes: Vec<f64> = par_map_indexed(m, |i| {
        let mut rng = RngStream::new(53, i as u64);
        let inc = rng.brownian_increments(1.0, n);
        let path = em_path(&bm_cfg(n), &inc).unwrap();
        discrete_max(&path).unwrap()
    });
    let (mean, se) = mean_and_se(&maxes);
    let exact = (2.0 / std::f64::consts::PI).sqrt();
    let bias_allowance = ((n as f64).ln() / n as f64).sqrt();
    assert!(
        (mean - exact).abs() <= 3.0 * se + bias_allowance,
        "mean {mean} vs {exact} (se {se})"
    );
    // the discrete max must sit below the exact continuous max in mean
    assert!(mean < exact);
}

#[test]
fn bridged_cell_max_removes_the_discretization_bias() {
    // sampling the in-cell maxima exactly recovers the continuous-time mean
    let n = 64;
    let m = 40_000;
    let cfg = bm_cfg(n);
    let maxes: Vec<f64> = par_map_indexed(m, |i| {
        let mut rng = RngStream::new(54, i as u64);
        let inc = rng.brownian_increments(1.0, n);
        let path = em_path(&cfg, &inc).unwrap();
        let mut aux = rng.split(1);
        (0..n).fold(f64::NEG_INFINITY, |acc, k| acc.max(em_cell_max(&cfg, &path, k, &mut aux)))
    });
    let (mean, se) = mean_and_se(&maxes);
    let exact = (2.0 / std::f64::consts::PI).sqrt();
    assert!((mean - exact).abs() <= 4.0 * se, "mean {mean} vs {exact} (se {se})");
}

#[test]
fn integrated_brownian_pair_variance() {
    // Y = int_0^T B ds via the pair scheme: Var Y(T) = T^3/3 up to O(1/n)
    let n = 256;
    let m = 20_000;
    let cfg = bm_cfg(n);
    let pair = PairCoefficients::new(|_, x, _| x, |_, _, _| 0.0, |_, _, _| 0.0);
    let ys: Vec<f64> = par_map_indexed(m, |i| {
        let mut rng = RngStream::new(55, i as u64);
        let inc_b = rng.brownian_increments(1.0, n);
        let (_, y) = coupled_system_em(&cfg, &pair, 0.0, &inc_b, &vec![0.0; n]).unwrap();
        y[n]
    });
    let (var, se) = variance_and_se(&ys);
    assert!(
        (var - 1.0 / 3.0).abs() <= 3.0 * se + 1.0 / n as f64,
        "Var = {var} vs 1/3 (se {se})"
    );
}

#[test]
fn stable_scheme_scaling_through_constant_coefficient() {
    // constant sigma = c rescales the driver: cf of X(T) - x0 at xi is
    // exp(-T |c xi|^alpha)
    let alpha = 1.5;
    let c = 0.7;
    let n = 64;
    let m = 100_000;
    let vals: Vec<f64> = par_map_indexed(m, |i| {
        let mut rng = RngStream::new(56, i as u64);
        let dt = 1.0 / n as f64;
        let mut x = 0.0;
        for _ in 0..n {
            x += c * sample_stable_increment(alpha, dt, &mut rng).unwrap();
        }
        x
    });
    let xi = 1.0;
    let (cf, se) = empirical_cf(&vals, xi);
    let want = (-(c * xi).powf(alpha)).exp();
    assert!((cf - want).abs() <= 4.0 * se, "cf {cf} vs {want}");
}

#[test]
fn fbm_step_drift_self_convergence() {
    // decreasing step drift with a rough driver: coupled self-convergence
    // error decreasing in n, slope at least 0.8 H at desk scale
    let h = 0.3;
    let n_ref = 1024;
    let sampler = FbmSampler::cholesky(h, TimeGrid::new(1.0, n_ref).unwrap()).unwrap();
    let step_drift = || {
        Coefficient1D::new("step", |_, x| if x <= 0.0 { 0.5 } else { -0.5 }).with_sup_bound(0.5)
    };
    let cfg_at = move |n: usize| {
        FbmConfig::new(h, step_drift(), 0.1, TimeGrid::new(1.0, n).unwrap()).unwrap()
    };
    let n_list = [16usize, 32, 64, 128, 256];
    let curve = strong_error(
        &n_list,
        n_ref,
        3000,
        1.0,
        ErrorMode::Sup,
        57,
        "fbm-step",
        |rng, _| sampler.sample_increments(rng),
        move |n, inc| fbm_em_path(&cfg_at(n), inc),
        move |fine, _| fbm_em_path(&cfg_at(n_ref), fine),
    )
    .unwrap();
    assert!(curve.is_monotone_within(2.0), "{:?}", curve.errors());
    let fit = fit_rate(&curve.ns(), &curve.errors(), RateModel::Power).unwrap();
    assert!(fit.rate() >= 0.8 * h, "slope {} below 0.8 H", fit.rate());
}

#[test]
fn binary_payoff_weak_error_decays() {
    // indicator payoff under an elliptic diffusion, coupled fine sampler
    let cfg = |n: usize| {
        EmConfig::new(
            Coefficient1D::new("-x", |_, x| -x),
            Coefficient1D::constant(1.0),
            1.0,
            TimeGrid::new(1.0, n).unwrap(),
        )
    };
    let n_list = [8usize, 32, 128];
    let n_ref = 512;
    let payoff = |x: f64| if x > 1.0 { 1.0 } else { 0.0 };
    let curve = weak_error(
        &n_list,
        n_ref,
        300_000,
        58,
        "binary-weak",
        payoff,
        |rng, nf| rng.brownian_increments(1.0, nf),
        move |n, inc| em_path(&cfg(n), inc),
        WeakOracle::Sampler(move |fine: &[f64], _: &mut RngStream| em_path(&cfg(n_ref), fine).map(|p| payoff(p[n_ref]))),
    )
    .unwrap();
    let errs = curve.errors();
    assert!(errs[2] < errs[0], "no decay: {errs:?}");
    let fit = fit_rate(&curve.ns(), &errs, RateModel::Power).unwrap();
    assert!(fit.rate() >= 0.3, "weak decay rate {} below 0.3", fit.rate());
}

#[test]
fn mlmc_binary_variance_slope_in_band() {
    // per-level variance decay for a binary payoff under genuinely
    // multiplicative elliptic noise (strong order 1/2, so flip rates halve
    // like the square root of the step)
    let sde = |n: usize| {
        EmConfig::new(
            Coefficient1D::new("-x", |_, x| -x),
            Coefficient1D::new("smooth-elliptic", |_, x: f64| 1.0 + 0.6 * x.tanh())
                .with_sup_bound(1.6)
                .with_ellipticity_floor(0.16),
            1.0,
            TimeGrid::new(1.0, n).unwrap(),
        )
    };
    let rep = mlmc_estimate(
        1.0,
        16,
        6,
        &[40_000; 6],
        59,
        |rng, t, n| rng.brownian_increments(t, n),
        |n, inc| em_path(&sde(n), inc),
        |p| if *p.last().unwrap() > 1.0 { 1.0 } else { 0.0 },
    )
    .unwrap();
    let ys: Vec<f64> = rep.levels[1..].iter().map(|l| l.variance.log2()).collect();
    let xs: Vec<f64> = (1..rep.levels.len()).map(|l| l as f64).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = -num / den;
    assert!(
        (0.3..=0.6).contains(&slope),
        "binary-payoff variance slope {slope} outside [0.3, 0.6]: {:?}",
        rep.levels.iter().map(|l| l.variance).collect::<Vec<_>>()
    );
}

#[test]
fn max_functional_bound_shape_has_the_right_exponent() {
    let shape16 = max_error_shape(16, 2.0, 0.9);
    let shape256 = max_error_shape(256, 2.0, 0.9);
    let expo = 2.0 * 0.9 / (2.0 * (2.0 + 0.9));
    let want = ((16.0f64.ln() / 16.0) / (256.0f64.ln() / 256.0)).powf(expo);
    assert!((shape16 / shape256 - want).abs() < 1e-12);
}

#[test]
fn scale_transform_strictly_increasing_on_grids() {
    let t = ScaleTransform::new(
        Coefficient1D::new("sin", |_, x| 0.4 * (3.0 * x).sin()),
        Coefficient1D::constant(1.0).with_ellipticity_floor(1.0),
        1e-11,
    )
    .unwrap();
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=60 {
        let x = -3.0 + 6.0 * i as f64 / 60.0;
        let v = t.value(x).unwrap();
        assert!(v > prev);
        prev = v;
    }
}

#[test]
fn coupled_coarse_path_nodes_live_on_the_fine_path() {
    // exact BM: the coarse scheme restricted to shared nodes equals the fine
    // scheme there, because increments aggregate exactly
    let mut rng = RngStream::new(60, 0);
    let fine = rng.brownian_increments(1.0, 256);
    let fine_path = em_path(&bm_cfg(256), &fine).unwrap();
    let coarse = aggregate_increments(&fine, 8);
    let coarse_path = em_path(&bm_cfg(32), &coarse).unwrap();
    for k in 0..=32 {
        assert!((coarse_path[k] - fine_path[k * 8]).abs() < 1e-12);
    }
}
