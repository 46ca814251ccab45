use sgcv_core::experiments::{
    bias_variance_trace_with, run_bias_variance_trace, run_detection_vs_n, run_detection_vs_variance,
    run_kinematic_demo, run_robustness_sweep, DemoConfig, ExperimentConfig, SweepAxis,
};
use sgcv_core::select::{bic_n, bic_snr};
use sgcv_core::signals::{centered_grid, NoiseStream};
use sgcv_core::{
    build_nested_basis, conventional_cv, draw_noise, sample_cubic, score_bic, select_order_cv, DesignSpec, NoiseModel,
    SelectorRegistry,
};

fn sample_variance(w: &[f64]) -> f64 {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn gaussian_noise_has_requested_variance() {
    let w = draw_noise(&NoiseModel::gaussian(1.0), 1_000_000, 5).unwrap();
    assert!((sample_variance(&w) - 1.0).abs() < 0.01);
}

#[test]
fn mixture_noise_variance_follows_mixing_weights() {
    let model = NoiseModel::mixture(1.0, 10.0, 0.1);
    assert!((model.variance() - 1.9).abs() < 1e-12);
    let w = draw_noise(&model, 1_000_000, 5).unwrap();
    assert!((sample_variance(&w) - 1.9).abs() < 0.02 * 1.9);
}

#[test]
fn noiseless_cubic_selects_order_three() {
    let x = sample_cubic(8);
    let spec = DesignSpec::with_nodes(centered_grid(8), 6).unwrap();
    let basis = build_nested_basis(&spec);
    let res = select_order_cv(&x, &basis).unwrap();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    for t in &res.tpe_by_order[3..] {
        assert!(*t < 1e-24 * energy);
    }
    assert_eq!(res.best_order, 3);
}

#[test]
fn bic_formulas_on_reference_values() {
    for p in 0..4 {
        assert!((bic_n(p, 7, 7.0) - ((p + 1) * (p + 1)) as f64 * 7f64.ln()).abs() < 1e-12);
        assert_eq!(bic_snr(p, 7, 7.0), 0.0);
    }
    let e2 = std::f64::consts::E.powi(2);
    assert!((bic_n(1, 5, 5.0 * e2) - (4.0 * 5f64.ln() + 10.0)).abs() < 1e-12);
    assert!((bic_n(1, 5, 5.0 * e2) - 16.437_751_649_736_4).abs() < 1e-9);
    // Zero residual is floored rather than producing -inf.
    assert!(bic_n(2, 5, 0.0).is_finite());
}

#[test]
fn bic_on_noiseless_cubic_is_minimized_at_order_three() {
    let x = sample_cubic(8);
    let spec = DesignSpec::with_nodes(centered_grid(8), 6).unwrap();
    let scores = score_bic(&x, &build_nested_basis(&spec)).unwrap();
    let s = &scores.bic_snr_by_order;
    // Exact least-squares residuals of the cubic at orders 0..2 on -4..3.
    let exact = [0.5172, 0.0972, 0.0594];
    for (p, r) in exact.iter().enumerate() {
        assert!((s[p] - bic_snr(p, 8, *r)).abs() < 1e-9, "{s:?}");
    }
    // The penalty outweighs the small order-2 gain, so the scores are not monotone below 3.
    assert!(s[0] > s[1] && s[2] > s[1], "{s:?}");
    assert!(s.iter().enumerate().all(|(p, v)| p == 3 || *v > s[3] + 50.0), "{s:?}");
    assert_eq!(scores.best_order_bic_snr, 3);
    assert_eq!(scores.best_order_bic_n, 3);
}

/// Probability that leave-one-out selection on pure noise, restricted to
/// orders `3..=N-2`, picks order 3. In the vanishing-noise limit the cubic
/// rules out lower orders and the remaining competition is exactly this one.
fn pure_noise_order_three_rate(n: usize, trials: usize, seed: u64) -> f64 {
    let spec = DesignSpec::with_nodes(centered_grid(n), n - 2).unwrap();
    let unit = NoiseModel::gaussian(1.0);
    let hits = (0..trials)
        .filter(|&trial| {
            let w = NoiseStream::new(seed, trial as u64).draw(&unit, n);
            let tpe = conventional_cv(&w, &spec).unwrap().tpe_by_order;
            let best = (3..tpe.len()).min_by(|&a, &b| tpe[a].total_cmp(&tpe[b])).unwrap();
            best == 3
        })
        .count();
    hits as f64 / trials as f64
}

#[test]
fn vanishing_noise_limit_matches_pure_noise_competition() {
    let trials = 2000;
    let registry = SelectorRegistry::with_builtins();
    let mut config = ExperimentConfig::detection_vs_n();
    config.axis = SweepAxis::WindowLens(vec![8]);
    config.noise = NoiseModel::gaussian(1e-12);
    config.trials = trials;
    config.base_seed = 4;
    let report = run_detection_vs_n(&config, &registry).unwrap();
    let cv = report.points[0].outcome("cv").unwrap().probability;
    let oracle = pure_noise_order_three_rate(8, trials, 4);
    assert!((cv - oracle).abs() <= 2.0 / trials as f64, "cv {cv} oracle {oracle}");

    config.noise = NoiseModel::gaussian(0.0);
    let exact = run_detection_vs_n(&config, &registry).unwrap();
    assert_eq!(exact.points[0].outcome("cv").unwrap().probability, 1.0);
}

#[test]
fn low_variance_plateau_is_scale_free() {
    let registry = SelectorRegistry::with_builtins();
    let mut config = ExperimentConfig::detection_vs_variance();
    config.axis = SweepAxis::NoiseVariances(vec![1e-7, 1e-8, 1e-9, 1e-10]);
    config.trials = 1000;
    let report = run_detection_vs_variance(&config, &registry).unwrap();
    let cv: Vec<f64> = report
        .points
        .iter()
        .map(|p| p.outcome("cv").unwrap().probability)
        .collect();
    assert!(cv.windows(2).all(|w| w[0] == w[1]), "{cv:?}");
    let oracle = pure_noise_order_three_rate(6, 1000, 0);
    assert!((cv[0] - oracle).abs() <= 2.0 / 1000.0, "cv {} oracle {oracle}", cv[0]);
    let snr = report.points[3].outcome("bic-snr").unwrap().probability;
    assert_eq!(snr, 1.0);
}

#[test]
fn bias_variance_trace_is_monotone_for_many_seeds() {
    for seed in 0..50 {
        let rows = run_bias_variance_trace(16, seed).unwrap();
        assert_eq!(rows.len(), 15);
        for w in rows.windows(2) {
            assert!(w[1].residual_norm <= w[0].residual_norm);
            assert!(w[1].mean_gamma > w[0].mean_gamma);
        }
    }
}

#[test]
fn noiseless_trace_reaches_zero_residual_at_order_three() {
    let rows = bias_variance_trace_with(16, &NoiseModel::gaussian(0.0), 0).unwrap();
    let energy: f64 = sample_cubic(16).iter().map(|v| v * v).sum();
    assert!(rows[2].residual_norm > 1e-6);
    for r in &rows[3..] {
        assert!(
            r.residual_norm < 1e-26 * energy,
            "order {}: {}",
            r.order,
            r.residual_norm
        );
    }
}

#[test]
fn demo_without_noise_tracks_piecewise_segments() {
    let registry = SelectorRegistry::with_builtins();
    let config = DemoConfig {
        noise_variance: 0.0,
        ..DemoConfig::default()
    };
    let samples = run_kinematic_demo(&config, &registry).unwrap();
    assert_eq!(samples.len(), 41);
    let half = config.window_len / 2;
    let span = half as f64 * config.sample_period;
    assert!(samples[..half].iter().all(|s| s.order.is_none()));
    for s in &samples {
        let (Some(order), Some(value)) = (s.order, s.smoothed) else {
            continue;
        };
        if s.t - span >= 0.0 && s.t + span <= 6.0 {
            assert!(order <= 1, "t={} order {order}", s.t);
            assert!((value - s.x_true).abs() < 1e-9);
        }
        if s.t - span >= 6.0 && s.t + span <= 14.0 {
            assert!(order <= 2, "t={} order {order}", s.t);
            assert!((value - s.x_true).abs() < 1e-9);
        }
    }
}

#[test]
fn impulse_free_mixture_reproduces_gaussian_sweep() {
    let registry = SelectorRegistry::with_builtins();
    let mut gaussian = ExperimentConfig::detection_vs_n();
    gaussian.axis = SweepAxis::WindowLens(vec![8, 16]);
    gaussian.trials = 400;
    gaussian.base_seed = 9;
    let mut mixture = gaussian.clone();
    mixture.noise = NoiseModel::mixture(1.0, 10.0, 0.0);
    let a = run_detection_vs_n(&gaussian, &registry).unwrap();
    let b = run_robustness_sweep(&mixture, &registry).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn frequent_impulses_skew_bic_snr_towards_high_orders() {
    let registry = SelectorRegistry::with_builtins();
    let mut config = ExperimentConfig::robustness();
    config.axis = SweepAxis::MixturePairs(vec![(10.0, 0.1), (100.0, 0.1)]);
    config.trials = 1000;
    let report = run_robustness_sweep(&config, &registry).unwrap();
    for p in &report.points {
        let o = p.outcome("bic-snr").unwrap();
        assert_eq!(o.histogram.iter().sum::<u64>(), 1000);
        let (above, below) = o.mass_above_below(3);
        assert!(above > below, "{}: above {above} below {below}", p.axis_value);
    }
}

#[test]
fn sweeps_are_reproducible_across_thread_counts() {
    let registry = SelectorRegistry::with_builtins();
    let mut config = ExperimentConfig::detection_vs_n();
    config.axis = SweepAxis::WindowLens(vec![6, 12]);
    config.trials = 300;
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_detection_vs_n(&config, &registry).unwrap().to_csv())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(1));
}

#[test]
fn invalid_sweeps_are_rejected() {
    let registry = SelectorRegistry::with_builtins();
    let mut config = ExperimentConfig::detection_vs_n();
    config.axis = SweepAxis::WindowLens(vec![4]);
    assert!(run_detection_vs_n(&config, &registry).is_err());
    let gaussian_robustness = ExperimentConfig {
        noise: NoiseModel::gaussian(1.0),
        ..ExperimentConfig::robustness()
    };
    assert!(run_robustness_sweep(&gaussian_robustness, &registry).is_err());
    let mut unknown = ExperimentConfig::detection_vs_n();
    unknown.methods = vec!["aic".into()];
    assert!(run_detection_vs_n(&unknown, &registry).is_err());
}
