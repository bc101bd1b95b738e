use norm_descent::experiments::{gaussian_draws, run_config, run_grid, GridConfig, RunConfig};

#[test]
fn identical_configs_give_identical_traces() {
    let text = r#"{"problem":{"quadratic":{"d":5,"lambda_max":30,"theta":0.4,"seed":2,"sigma":0.2}},
                   "optimizer":{"method":"adam_averaged","step":0.02,"blocks":[[0,1],[2,3,4]]},
                   "T":150,"x0_seed":3,"seed":8}"#;
    let cfg = RunConfig::from_json(text).unwrap();
    let a = run_config(&cfg).unwrap();
    let b = run_config(&cfg).unwrap();
    assert_eq!(a, b);
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn x0_seed_draws_are_standard_normal_prefix() {
    let many = gaussian_draws(4, 10, 11);
    let one = gaussian_draws(4, 1, 11);
    assert_eq!(many[0], one[0]);
    let text = r#"{"problem":{"quadratic":{"d":4,"lambda_max":3,"theta":0.1}},
                   "optimizer":{"method":"gd"},"T":0,"x0_seed":11}"#;
    let tr = run_config(&RunConfig::from_json(text).unwrap()).unwrap();
    assert_eq!(tr.x_final, one[0]);
}

#[test]
fn grid_pairs_draws_and_orders_cells() {
    let cfg = GridConfig::from_json(
        r#"{"d":5,"lambda_max_values":[10,2],"theta_values":[1,0],"repeats":6,"skew_seed":1,"x0_seed":2}"#,
    )
    .unwrap();
    let out = run_grid(&cfg, true, |_, _| {}).unwrap();
    let order: Vec<(f64, f64)> = out.cells.iter().map(|c| (c.lambda_max, c.theta)).collect();
    assert_eq!(
        order,
        vec![(10.0, 1.0), (10.0, 0.0), (2.0, 1.0), (2.0, 0.0)]
    );
    let expected = gaussian_draws(5, 6, 2);
    for draws in out.draws.unwrap() {
        assert_eq!(draws.gd, expected);
        assert_eq!(draws.signgd, expected);
    }
    for c in &out.cells {
        assert!(c.mean_dist_gd >= 0.0 && c.mean_dist_signgd >= 0.0);
        assert!(c.log10_perf_ratio.is_finite());
        assert!((c.ratio_smoothness - c.linf / (5.0 * c.l2)).abs() < 1e-15);
    }
}

#[test]
fn grid_is_independent_of_thread_count() {
    let cfg = GridConfig::from_json(r#"{"d":4,"lambda_max_values":[1,5,20],"repeats":8}"#).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = single.install(|| run_grid(&cfg, false, |_, _| {}).unwrap());
    let b = many.install(|| run_grid(&cfg, false, |_, _| {}).unwrap());
    assert_eq!(a, b);
}
