//! Ensemble-level oracles: closed-form moments, duality identities and
//! grid refinement.

use sv_malliavin::battery::{reference_cir, reference_contract, reference_ou};
use sv_malliavin::ensemble::{run_ensemble, EnsembleConfig, EnsembleResult, ModelSpec};
use sv_malliavin::grid::TimeGrid;
use sv_malliavin::malliavin_cir::cir_weight;
use sv_malliavin::malliavin_ou::ou_weight;
use sv_malliavin::model::{reference_vol_family, validate_ou, OuParams};
use sv_malliavin::oracle::norm_cdf_series;
use sv_malliavin::path::{coarsen_increments, ito_prefix_sums, simulate_cir_from_increments, simulate_ou_from_increments};
use sv_malliavin::pricing::{bs_conditional_with, price_mixing, price_plain_mc};
use sv_malliavin::rng::{NoiseStream, Purpose};
use sv_malliavin::stats::{sorted_copy, summarize, variance_with_se};

fn weighted(model: &ModelSpec, n_paths: usize, n_steps: usize, seed: u64) -> EnsembleResult {
    let cfg = EnsembleConfig { sample_asset: false, ..EnsembleConfig::new(n_paths, n_steps, seed) };
    run_ensemble(model, &cfg, None).unwrap()
}

#[test]
fn ito_isometry_for_exponential_integrand() {
    let (n, paths) = (256, 100_000);
    let grid = TimeGrid::new(1.0, n).unwrap();
    let f: Vec<f64> = grid.times()[..n].iter().map(|t| t.exp()).collect();
    let sqdt = grid.dt().sqrt();
    let finals: Vec<f64> = (0..paths as u64)
        .map(|i| {
            let dw: Vec<f64> = NoiseStream::new(21, i, Purpose::VolatilityDriver).normals(n).iter().map(|z| z * sqdt).collect();
            *ito_prefix_sums(&dw, &f).unwrap().last().unwrap()
        })
        .collect();
    let s = summarize(&finals).unwrap();
    assert!(s.mean.abs() < 3.0 * s.se(), "mean {} se {}", s.mean, s.se());
    let (v, se) = variance_with_se(&finals).unwrap();
    let exact = (std::f64::consts::E.powi(2) - 1.0) / 2.0;
    assert!((v - exact).abs() < 3.0 * se, "var {v} vs {exact} (se {se})");
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted_copy(a), sorted_copy(b));
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn ou_terminal_law_does_not_depend_on_the_grid() {
    let m = reference_ou();
    let run = |steps, seed| {
        let cfg = EnsembleConfig { compute_weights: false, sample_asset: false, ..EnsembleConfig::new(20_000, steps, seed) };
        run_ensemble(&m, &cfg, None).unwrap().terminal_states()
    };
    let d = ks(&run(16, 1), &run(512, 2));
    // 0.1% critical value for two samples of 20000
    let crit = 1.95 * (2.0 / 20_000.0_f64).sqrt();
    assert!(d < crit, "KS {d} >= {crit}");
}

#[test]
fn cir_denominator_positive_on_every_path() {
    let e = weighted(&reference_cir(), 10_000, 128, 5);
    assert!(e.failures.is_empty(), "{:?}", e.failures.first());
    assert!(e.records.iter().all(|r| r.denominator > 0.0));
    assert!(e.records.iter().all(|r| r.terminal_state > 0.0));
}

#[test]
fn cir_second_moment_duality_against_analytic_mean() {
    let e = weighted(&reference_cir(), 50_000, 256, 8);
    // (1/T)∫(z0 e^{-t} + b(1 - e^{-t}))dt with z0 = b = 1
    let mean_f = 1.0;
    let terms: Vec<f64> = e.records.iter().map(|r| r.avg_variance.powi(2) * r.weight).collect();
    let s = summarize(&terms).unwrap();
    assert!((s.mean - 2.0 * mean_f).abs() < 3.0 * s.se(), "{} vs {} (se {})", s.mean, 2.0 * mean_f, s.se());
}

#[test]
fn duality_with_a_bounded_test_function() {
    for (model, scale) in [(reference_ou(), 100.0), (reference_cir(), 10.0)] {
        let e = weighted(&model, 50_000, 256, 13);
        // E[sin(aF) δ] = a E[cos(aF)]
        let lhs: Vec<f64> = e.records.iter().map(|r| (scale * r.avg_variance).sin() * r.weight).collect();
        let rhs: Vec<f64> = e.records.iter().map(|r| scale * (scale * r.avg_variance).cos()).collect();
        let (l, r) = (summarize(&lhs).unwrap(), summarize(&rhs).unwrap());
        let se = (l.se().powi(2) + r.se().powi(2)).sqrt();
        assert!((l.mean - r.mean).abs() < 3.0 * se, "{:?}: {} vs {} (se {se})", e.tag, l.mean, r.mean);
    }
}

#[test]
fn weights_converge_under_refinement() {
    let (ModelSpec::Ou(ou), ModelSpec::Cir(cir)) = (reference_ou(), reference_cir()) else { unreachable!() };
    let fine = TimeGrid::new(1.0, 2048).unwrap();
    let grids = [(TimeGrid::new(1.0, 128).unwrap(), 16), (TimeGrid::new(1.0, 512).unwrap(), 4), (fine.clone(), 1)];
    let mut sq = [[0.0; 3]; 2];
    let mut norm = [0.0; 2];
    for i in 0..50u64 {
        let dw: Vec<f64> =
            NoiseStream::new(3, i, Purpose::VolatilityDriver).normals(2048).iter().map(|z| z * fine.dt().sqrt()).collect();
        let w: Vec<(f64, f64)> = grids
            .iter()
            .map(|(g, f)| {
                let d = coarsen_increments(&dw, *f);
                let a = ou_weight(&simulate_ou_from_increments(&ou, g, d.clone()).unwrap(), &ou).unwrap().delta_bar;
                let b = cir_weight(&simulate_cir_from_increments(&cir, g, d).unwrap(), &cir).unwrap().delta_tilde;
                (a, b)
            })
            .collect();
        for k in 0..3 {
            sq[0][k] += (w[k].0 - w[2].0).powi(2);
            sq[1][k] += (w[k].1 - w[2].1).powi(2);
        }
        norm[0] += w[2].0.powi(2);
        norm[1] += w[2].1.powi(2);
    }
    for m in 0..2 {
        let coarse = (sq[m][0] / norm[m]).sqrt();
        let mid = (sq[m][1] / norm[m]).sqrt();
        assert!(mid < 0.01, "model {m}: rms rel diff 512 vs 2048 = {mid}");
        assert!(mid < coarse, "model {m}: no improvement ({coarse} -> {mid})");
    }
}

#[test]
fn deterministic_vol_matches_quadrature_oracle() {
    let params = OuParams { alpha: 1.0, k: 0.0, y0: 0.5, s0: 100.0, r: 0.05, mu: 0.05, maturity: 1.0 };
    let vol = reference_vol_family(0.1, 0.1).unwrap();
    let model = ModelSpec::Ou(validate_ou(params, vol.clone(), false).unwrap());
    // σ̄² = ∫σ²(y0 e^{-t})dt by composite Simpson on 20000 panels
    let m = 20_000;
    let h = 1.0 / m as f64;
    let simpson: f64 = (0..=m)
        .map(|i| {
            let c = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            c * vol.sigma(0.5 * (-(i as f64) * h).exp()).powi(2)
        })
        .sum::<f64>()
        * h
        / 3.0;
    let contract = reference_contract();
    let mkt = model.market();
    let oracle = bs_conditional_with(norm_cdf_series, simpson.sqrt(), &contract, &mkt).discounted;

    let cfg = EnsembleConfig { compute_weights: false, ..EnsembleConfig::new(40_000, 256, 17) };
    let e = run_ensemble(&model, &cfg, None).unwrap();
    let mix = price_mixing(&e.avg_variances(), &contract, &mkt).unwrap();
    let plain = price_plain_mc(&e.terminal_assets(), &contract, &mkt).unwrap();
    // trapezoid in time on 256 steps: O(dt²) from the quadrature value
    assert!((mix.value - oracle).abs() < 1e-4, "mixing {} vs {oracle}", mix.value);
    assert_eq!(mix.std_error, 0.0);
    assert!((plain.value - oracle).abs() < 3.0 * plain.std_error, "plain {} ± {} vs {oracle}", plain.value, plain.std_error);
}
