//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured quantity (visible with --nocapture).
//!
//! Criteria 1-3 reproduce three Monte Carlo cells of the size/power
//! study, criterion 4 reproduces the spectra analysis table, criteria
//! 5-6 check the estimators against closed-form oracles, and criterion 7
//! is the invariant suite.

use std::path::PathBuf;

use fqreg::{
    chi2_upper_tail, compute_fpca, compute_scores, derive_stream, fit_quadratic, inner_product,
    load_spectra_csv, natural_cubic_spline, run_power_study, run_tecator_analysis, run_test,
    simulate_brownian, simulate_chebyshev_t5, u_statistic, Curve, Design, FunctionalDataset,
    Grid, PSelection, SimScenario,
};
use rayon::prelude::*;

fn gaussian_scenario(n: usize, c: f64, iterations: usize, seed: u64) -> SimScenario {
    SimScenario {
        n_curves: n,
        grid_size: 101,
        c,
        p: 1,
        alpha: 0.05,
        iterations,
        design: Design::Gaussian,
        seed,
    }
}

#[test]
fn criterion_1_empirical_size_gaussian() {
    let row = run_power_study(&gaussian_scenario(500, 0.0, 2000, 0x51Ee)).unwrap();
    let rate = row.rejection_rate;
    assert!(
        (0.041..=0.071).contains(&rate),
        "criterion 1 (empirical size, gaussian): FAIL rate={rate:.4} outside [0.041, 0.071]"
    );
    println!("criterion 1 (empirical size, gaussian): PASS rate={rate:.4} in [0.041, 0.071]");
}

#[test]
fn criterion_2_power_gaussian() {
    let row = run_power_study(&gaussian_scenario(200, 0.4, 1000, 0x9e2)).unwrap();
    let rate = row.rejection_rate;
    assert!(
        (0.67..=0.77).contains(&rate),
        "criterion 2 (power, gaussian c=0.4): FAIL rate={rate:.4} outside [0.67, 0.77]"
    );
    println!("criterion 2 (power, gaussian c=0.4): PASS rate={rate:.4} in [0.67, 0.77]");
}

#[test]
fn criterion_3_power_chebyshev() {
    let scenario = SimScenario {
        n_curves: 500,
        grid_size: 101,
        c: 0.2,
        p: 1,
        alpha: 0.05,
        iterations: 1000,
        design: Design::ChebyshevT5,
        seed: 0xC4eb,
    };
    let rate = run_power_study(&scenario).unwrap().rejection_rate;
    assert!(
        rate >= 0.955,
        "criterion 3 (power, chebyshev c=0.2): FAIL rate={rate:.4} below 0.955"
    );
    println!("criterion 3 (power, chebyshev c=0.2): PASS rate={rate:.4} >= 0.955");
}

fn tecator_csv_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("FQREG_TECATOR_CSV") {
        let p = PathBuf::from(p);
        if p.exists() {
            return Some(p);
        }
    }
    let repo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/tecator.csv");
    repo.exists().then_some(repo)
}

#[test]
fn criterion_4_tecator_table() {
    let Some(path) = tecator_csv_path() else {
        panic!(
            "criterion 4 (tecator table): FAIL, canonical spectra file not found. \
             Place the converted CSV at data/tecator.csv (or set FQREG_TECATOR_CSV); \
             the README documents the one-page conversion recipe. The criterion \
             cannot run without the measured dataset."
        );
    };
    let table = load_spectra_csv(&path).unwrap();
    assert_eq!(table.len(), 240, "canonical file must hold 240 samples");
    assert_eq!(table.channels(), 100);

    // resampling sanity: the first resampled curve peaks where the raw row does
    let data = fqreg::to_functional_dataset(&table, 101).unwrap();
    let raw_max = table.absorbance[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let curve_max = data.curves()[0].values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(
        (curve_max - raw_max).abs() <= 0.10 * raw_max,
        "criterion 4: resampled curve max {curve_max} far from raw max {raw_max}"
    );

    let results = run_tecator_analysis(&table, &[1, 2, 3], 101).unwrap();
    let pv: Vec<f64> = results.iter().map(|r| r.p_value * 100.0).collect();

    // first component carries at least 85% of the variance
    assert!(results[0].basis.variance_explained() >= 0.85);

    assert!(
        (0.5..=2.5).contains(&pv[0]),
        "criterion 4: FAIL p=1 p-value {:.2}% outside [0.5%, 2.5%]",
        pv[0]
    );
    assert!(
        (9.0..=18.0).contains(&pv[1]),
        "criterion 4: FAIL p=2 p-value {:.2}% outside [9%, 18%]",
        pv[1]
    );
    assert!(
        pv[2] < 0.5,
        "criterion 4: FAIL p=3 p-value {:.2}% not below 0.5%",
        pv[2]
    );
    // significance ordering must match: p=1 and p=3 reject at 5%, p=2 does not
    assert!(pv[0] < 5.0 && pv[2] < 5.0 && pv[1] >= 5.0);
    println!(
        "criterion 4 (tecator table): PASS p-values {:.2}% / {:.2}% / {:.2}%",
        pv[0], pv[1], pv[2]
    );
}

/// Residual-variance target for one kept component under the null with
/// unit noise: `1 + sum_{i >= 2} 2 / ((i - 1/2)^4 pi^4)`, summed to
/// convergence.
fn analytic_tau2_p1() -> f64 {
    let mut sum = 1.0;
    let mut i = 2.0f64;
    loop {
        let term = 2.0 / ((i - 0.5) * std::f64::consts::PI).powi(4);
        sum += term;
        if term < 1e-16 {
            return sum;
        }
        i += 1.0;
    }
}

#[test]
fn criterion_5_tau2_oracle() {
    let grid = Grid::uniform(101).unwrap();
    let mut stream = derive_stream(0x7A2, 0);
    let curves: Vec<Curve> = (0..2000).map(|_| simulate_brownian(&grid, &mut stream)).collect();
    let ys = fqreg::generate_response(&curves, 0.0, Design::Gaussian, &mut stream);
    let data = FunctionalDataset::new(curves, ys).unwrap();
    let basis = compute_fpca(&data, 1).unwrap();
    let fit = fit_quadratic(&data, &basis).unwrap();

    let analytic = analytic_tau2_p1();
    let rel = (fit.tau2_hat - analytic).abs() / analytic;
    assert!(
        rel <= 0.05,
        "criterion 5 (tau2 oracle): FAIL tau2={} vs analytic {analytic} (rel err {rel:.4})",
        fit.tau2_hat
    );
    println!(
        "criterion 5 (tau2 oracle): PASS tau2={:.5} vs analytic {analytic:.5} (rel err {rel:.4})",
        fit.tau2_hat
    );
}

#[test]
fn criterion_6_fpca_oracle() {
    let grid = Grid::uniform(101).unwrap();
    let mut stream = derive_stream(0xF9CA, 0);
    let curves: Vec<Curve> = (0..2000).map(|_| simulate_brownian(&grid, &mut stream)).collect();
    let data = FunctionalDataset::new(curves, vec![0.0; 2000]).unwrap();
    let basis = compute_fpca(&data, 3).unwrap();

    for (j, lam) in basis.eigenvalues.iter().enumerate() {
        let want = 1.0 / ((j as f64 + 0.5) * std::f64::consts::PI).powi(2);
        let rel = (lam - want).abs() / want;
        assert!(
            rel <= 0.10,
            "criterion 6 (fpca oracle): FAIL lambda_{} = {lam} vs {want} (rel {rel:.4})",
            j + 1
        );
    }
    let mut corrs = Vec::new();
    for (j, v) in basis.eigenfunctions.iter().enumerate() {
        let kl = Curve::from_fn(data.grid().clone(), |t| {
            (2.0f64).sqrt() * ((j as f64 + 0.5) * std::f64::consts::PI * t).sin()
        })
        .unwrap();
        let corr = inner_product(v, &kl).unwrap().abs();
        assert!(
            corr >= 0.95,
            "criterion 6 (fpca oracle): FAIL |<v{}, kl{}>| = {corr:.4} below 0.95",
            j + 1,
            j + 1
        );
        corrs.push(corr);
    }
    println!(
        "criterion 6 (fpca oracle): PASS eigenvalues {:?} correlations {:?}",
        basis.eigenvalues, corrs
    );
}

#[test]
fn criterion_7a_sign_flip_invariance() {
    let grid = Grid::uniform(41).unwrap();
    let mut stream = derive_stream(0x7A_1, 0);
    let curves: Vec<Curve> = (0..150).map(|_| simulate_brownian(&grid, &mut stream)).collect();
    let ys = fqreg::generate_response(&curves, 0.4, Design::Gaussian, &mut stream);
    let data = FunctionalDataset::new(curves, ys).unwrap();
    let basis = compute_fpca(&data, 3).unwrap();
    let u0 = u_statistic(&fit_quadratic(&data, &basis).unwrap(), data.len()).unwrap();
    for flip in 0..3 {
        let mut flipped = basis.clone();
        let vals: Vec<f64> = flipped.eigenfunctions[flip].values().iter().map(|v| -v).collect();
        flipped.eigenfunctions[flip] = Curve::new(data.grid().clone(), vals).unwrap();
        let u1 = u_statistic(&fit_quadratic(&data, &flipped).unwrap(), data.len()).unwrap();
        assert!(
            (u0 - u1).abs() <= 1e-8 * u0.max(1.0),
            "criterion 7a (sign-flip invariance): FAIL flip {flip}: {u0} vs {u1}"
        );
    }
    println!("criterion 7a (sign-flip invariance): PASS U={u0:.6}");
}

#[test]
fn criterion_7b_statistic_nonnegative_on_random_data() {
    for seed in 0..100u64 {
        let n = 20 + (seed as usize * 7) % 60;
        let m = 11 + (seed as usize * 5) % 30;
        let p = 1 + (seed as usize) % 2;
        let grid = Grid::uniform(m).unwrap();
        let mut stream = derive_stream(0xAB5E, seed);
        let design = if seed % 3 == 0 { Design::ChebyshevT5 } else { Design::Gaussian };
        let curves: Vec<Curve> = (0..n)
            .map(|_| match design {
                Design::Gaussian => simulate_brownian(&grid, &mut stream),
                Design::ChebyshevT5 => simulate_chebyshev_t5(&grid, &mut stream),
            })
            .collect();
        let c = stream.next_f64();
        let ys = fqreg::generate_response(&curves, c, design, &mut stream);
        let data = FunctionalDataset::new(curves, ys).unwrap();
        let res = run_test(&data, PSelection::Fixed(p)).unwrap();
        assert!(
            res.u_stat >= 0.0,
            "criterion 7b (nonnegative statistic): FAIL U={} on seed {seed}",
            res.u_stat
        );
    }
    println!("criterion 7b (nonnegative statistic): PASS on 100 random datasets");
}

#[test]
fn criterion_7c_exact_quadratic_recovery() {
    let grid = Grid::uniform(31).unwrap();
    let mut stream = derive_stream(0xE4AC, 0);
    let curves: Vec<Curve> = (0..80).map(|_| simulate_brownian(&grid, &mut stream)).collect();
    let pre = FunctionalDataset::new(curves, vec![0.0; 80]).unwrap();
    let basis = compute_fpca(&pre, 2).unwrap();
    let scores = compute_scores(&pre, &basis).unwrap();
    let truth = [(0usize, 0usize, 0.9), (1, 0, -0.35), (1, 1, 0.6)];
    let ys: Vec<f64> = (0..pre.len())
        .map(|r| {
            let s = [scores.get(r, 0), scores.get(r, 1)];
            let quad: f64 = truth
                .iter()
                .map(|&(i, j, a)| if i == j { a * s[i] * s[j] } else { 2.0 * a * s[i] * s[j] })
                .sum();
            0.4 - 1.2 * s[0] + 0.7 * s[1] + quad
        })
        .collect();
    let data = FunctionalDataset::new(pre.curves().to_vec(), ys).unwrap();
    let fit = fit_quadratic(&data, &basis).unwrap();
    let want_raw = [0.9, -0.7, 0.6];
    let mut worst = 0.0f64;
    for (got, want) in fit.a_hat.iter().zip(&want_raw) {
        worst = worst.max((got - want).abs());
    }
    // fitted values reproduce the noiseless responses
    for (e, y) in fit.residuals.iter().zip(data.responses()) {
        assert!(
            e.abs() <= 1e-8 * y.abs().max(1.0),
            "criterion 7c: FAIL residual {e} on response {y}"
        );
    }
    assert!(
        worst <= 1e-8,
        "criterion 7c (exact quadratic recovery): FAIL max coefficient error {worst}"
    );
    println!("criterion 7c (exact quadratic recovery): PASS max coefficient error {worst:.2e}");
}

#[test]
fn criterion_7d_chi2_two_dof_closed_form() {
    let mut worst = 0.0f64;
    for i in 0..400 {
        let x = 0.1 * i as f64;
        let q = chi2_upper_tail(x, 2).unwrap();
        worst = worst.max((q - (-x / 2.0).exp()).abs());
    }
    assert!(
        worst <= 1e-10,
        "criterion 7d (chi2 r=2 closed form): FAIL max abs error {worst}"
    );
    println!("criterion 7d (chi2 r=2 closed form): PASS max abs error {worst:.2e}");
}

#[test]
fn criterion_7e_trapezoid_exact_on_linear_integrands() {
    let grid = Grid::uniform(101).unwrap();
    let mut worst = 0.0f64;
    for &(a, b, c) in &[(1.0, 0.0, 1.0), (0.0, 1.0, 1.0), (2.5, -3.0, 0.7), (-0.4, 0.9, -2.0)] {
        let f = Curve::from_fn(grid.clone(), |t| a + b * t).unwrap();
        let g = Curve::constant(grid.clone(), c).unwrap();
        let got = inner_product(&f, &g).unwrap();
        let want = c * (a + b / 2.0);
        worst = worst.max((got - want).abs() / want.abs().max(1e-12));
    }
    assert!(
        worst <= 1e-14,
        "criterion 7e (trapezoid exactness): FAIL max rel error {worst}"
    );
    println!("criterion 7e (trapezoid exactness): PASS max rel error {worst:.2e}");
}

#[test]
fn criterion_7f_spline_interpolates_nodes() {
    let mut stream = derive_stream(0x59D, 0);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let n = 4 + (stream.next_u64() % 9) as usize;
        let mut x = vec![0.0];
        for _ in 1..n {
            x.push(x.last().unwrap() + 0.05 + stream.next_f64());
        }
        let y: Vec<f64> = (0..n).map(|_| 4.0 * stream.next_f64() - 2.0).collect();
        let target = Grid::new(x.clone()).unwrap();
        let c = natural_cubic_spline(&x, &y, &target).unwrap();
        for (v, e) in c.values().iter().zip(&y) {
            worst = worst.max((v - e).abs() / e.abs().max(1.0));
        }
    }
    assert!(
        worst <= 1e-12,
        "criterion 7f (spline node interpolation): FAIL max rel error {worst}"
    );
    println!("criterion 7f (spline node interpolation): PASS max rel error {worst:.2e}");
}

#[test]
fn criterion_7g_bit_reproducibility_across_thread_counts() {
    let scenario = SimScenario {
        n_curves: 100,
        grid_size: 41,
        c: 0.2,
        p: 1,
        alpha: 0.05,
        iterations: 60,
        design: Design::Gaussian,
        seed: 0xB17,
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_power_study(&scenario)).unwrap();
    let b = four.install(|| run_power_study(&scenario)).unwrap();
    assert_eq!(a.rejections, b.rejections, "criterion 7g: FAIL rejection counts differ");
    assert_eq!(
        a.rejection_rate.to_bits(),
        b.rejection_rate.to_bits(),
        "criterion 7g: FAIL rates differ bitwise"
    );
    println!(
        "criterion 7g (bit-reproducibility 1 vs 4 threads): PASS rate={:.4}",
        a.rejection_rate
    );
}

#[test]
fn criterion_7h_consistency_trend_in_sample_size() {
    // Fixed alternative c = 0.4: the statistic should drift upward with
    // the sample size; medians over 200 seeded replications each.
    let median_u = |n: usize| -> f64 {
        let mut us: Vec<f64> = (0..200u64)
            .into_par_iter()
            .map(|rep| {
                let grid = Grid::uniform(101).unwrap();
                let mut stream = derive_stream(0x7E_0D + n as u64, rep);
                let curves: Vec<Curve> =
                    (0..n).map(|_| simulate_brownian(&grid, &mut stream)).collect();
                let ys = fqreg::generate_response(&curves, 0.4, Design::Gaussian, &mut stream);
                let data = FunctionalDataset::new(curves, ys).unwrap();
                run_test(&data, PSelection::Fixed(1)).unwrap().u_stat
            })
            .collect();
        us.sort_by(|a, b| a.partial_cmp(b).unwrap());
        0.5 * (us[99] + us[100])
    };
    let m200 = median_u(200);
    let m500 = median_u(500);
    assert!(
        m500 > m200,
        "criterion 7h (consistency trend): FAIL median U at N=500 ({m500:.3}) \
         not above N=200 ({m200:.3})"
    );
    println!(
        "criterion 7h (consistency trend): PASS median U {m200:.3} (N=200) -> {m500:.3} (N=500)"
    );
}
