use pamm::solver::objective;
use pamm::*;
use proptest::prelude::*;

fn matte(values: Vec<f64>, w: usize) -> AlphaMatte<f64> {
    AlphaMatte::new(values.len() / w, w, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_symmetric_and_bounded(pairs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..60)) {
        let n = pairs.len();
        let a = matte(pairs.iter().map(|p| p.0).collect(), n);
        let b = matte(pairs.iter().map(|p| p.1).collect(), n);
        let (m, s) = (mse(&a, &b).unwrap(), sad(&a, &b).unwrap());
        prop_assert_eq!(m, mse(&b, &a).unwrap());
        prop_assert_eq!(s, sad(&b, &a).unwrap());
        prop_assert!(m >= 0.0 && s >= 0.0);
        // sad ≤ HW·√mse
        prop_assert!(s <= n as f64 * m.sqrt() * (1.0 + 1e-12) + 1e-15);
        prop_assert_eq!(m == 0.0, pairs.iter().all(|p| p.0 == p.1));
    }

    #[test]
    fn config_round_trips(
        method in 0usize..5, k in 2usize..8, window in prop::sample::select(vec![3usize, 5]),
        stride in 1usize..4, lambda in 1e-3f64..1e3, iters in 1usize..1000,
        tol in 1e-12f64..1e-3, monotone: bool, half: bool, resize: Option<(usize, usize)>, workers in 1usize..9,
    ) {
        let mut cfg = RunConfiguration::for_method(Method::ALL[method]);
        cfg.modeler.k = k.min(window * window - 2);
        cfg.window = window;
        cfg.stride = stride;
        cfg.lambda = lambda;
        cfg.solver.max_iters = iters;
        cfg.solver.tol = tol;
        cfg.solver.monotone = monotone;
        cfg.solver.init = if half { InitMode::Half } else { InitMode::TrimapFill };
        cfg.resize = resize.map(|(h, w)| (h % 500 + 1, w % 500 + 1));
        cfg.workers = workers;
        prop_assume!(cfg.validate().is_ok());
        let back = RunConfiguration::parse(&cfg.serialize()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn symmetrized_matches_dense(entries in prop::collection::vec((0usize..6, 0usize..6, -5.0f64..5.0), 0..40)) {
        let mut acc = SparseAccumulator::new(6);
        let mut dense = [[0.0f64; 6]; 6];
        for &(r, c, v) in &entries {
            acc.add(r, c, v).unwrap();
            dense[r][c] += v;
        }
        let m = acc.finalize();
        let s = m.symmetrized();
        prop_assert!(s.is_symmetric());
        for r in 0..6 {
            for c in 0..6 {
                prop_assert!((m.get(r, c) - dense[r][c]).abs() < 1e-12);
                prop_assert!((s.get(r, c) - (dense[r][c] + dense[c][r]) / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solver_stays_in_box_and_descends(seed in 0u64..1000, n in 1usize..15) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dense[i * n + j] = (0..n).map(|t| b[i * n + t] * b[j * n + t]).sum();
            }
        }
        let lin: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let problem = QuadraticProblem::from_parts(CsrMatrix::from_dense(n, &dense), lin).unwrap();
        let (a, trace) = nesterov_solve(&problem, &SolverConfig::default()).unwrap();
        prop_assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(trace.is_non_increasing());
        prop_assert!(objective(&problem, &a) <= trace.objective[0]);
    }

    #[test]
    fn alpha_png_round_trip_within_half_level(values in prop::collection::vec(0.0f64..=1.0, 12)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let m = matte(values, 4);
        save_alpha(&m, &path).unwrap();
        let back = load_alpha::<f64>(&path).unwrap();
        for (x, y) in m.values().iter().zip(back.values()) {
            prop_assert!((x - y).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
}

#[test]
fn f32_pipeline_runs() {
    let case = make_synthetic_case::<f32>(3, 24, 24).unwrap();
    let mut cfg = RunConfiguration::for_method(Method::CasIso);
    cfg.resize = None;
    let out = run_matting(&case.image, &case.trimap, &cfg).unwrap();
    let err = mse(&out.alpha, &case.alpha).unwrap();
    assert!(err < 0.01, "{err}");
}
