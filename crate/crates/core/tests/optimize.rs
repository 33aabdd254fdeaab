use nalgebra::Vector3;
use proptest::prelude::*;
use rtdcm::optimize::{golden_section, rmse_shape, GoldenSearchSpec, IndexRange, RHO};

fn points() -> impl Strategy<Value = Vec<Vector3<f64>>> {
    prop::collection::vec(prop::array::uniform3(-300.0..300.0_f64), 10).prop_map(|v| v.into_iter().map(Vector3::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_shrinks_by_rho(lo in -50.0..50.0_f64, w in 0.5..200.0_f64, c in 0.0..1.0_f64) {
        let target = lo + c * w;
        let t = golden_section(|x| Ok((x - target).powi(2)), GoldenSearchSpec::new(lo, lo + w, 1e-3)).unwrap();
        for pair in t.brackets.windows(2) {
            let (a0, b0) = pair[0];
            let (a1, b1) = pair[1];
            prop_assert!(a1 >= a0 && b1 <= b0);
            prop_assert!(((b1 - a1) - RHO * (b0 - a0)).abs() <= 1e-9 * w);
        }
    }

    #[test]
    fn unimodal_matches_brute_force(c in -20.0..120.0_f64, p in 0.5..3.0_f64, tilt in -0.05..0.05_f64) {
        let f = move |x: f64| (x - c).abs().powf(p) + tilt * x;
        let t = golden_section(|x| Ok(f(x)), GoldenSearchSpec::new(0.0, 100.0, 1e-4).with_max_evals(400)).unwrap();
        let brute = (0..=100_000).map(|i| i as f64 * 1e-3).min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
        prop_assert!(t.converged);
        prop_assert!((t.best_x - brute).abs() <= 1e-4 + 1e-3, "golden {} vs brute {}", t.best_x, brute);
    }

    #[test]
    fn quantized_matches_grid_brute_force(c in -30.0..120.0_f64, p in 0.5..3.0_f64, entry in 0.0..90.0_f64) {
        let f = move |x: f64| (x - c).abs().powf(p);
        let spec = GoldenSearchSpec::new(0.0, 90.0, 1.0).quantized(1.0).with_entry(entry.round());
        let t = golden_section(|x| Ok(f(x)), spec).unwrap();
        let best = (0..=90).map(|i| f(i as f64)).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(t.best_f, best);
        prop_assert_eq!(t.evals[0].x, entry.round());
    }

    #[test]
    fn shape_rmse_is_a_metric(a in points(), b in points(), c in points(), lo in 0usize..5, span in 0usize..5) {
        let r = IndexRange::new(lo, lo + span);
        let ab = rmse_shape(&a, &b, r).unwrap();
        prop_assert_eq!(rmse_shape(&a, &a, r).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - rmse_shape(&b, &a, r).unwrap()).abs() <= 1e-12);
        prop_assert!(ab <= rmse_shape(&a, &c, r).unwrap() + rmse_shape(&c, &b, r).unwrap() + 1e-9);
    }

    #[test]
    fn shape_rmse_ignores_common_translation(a in points(), shift in prop::array::uniform3(-100.0..100.0_f64)) {
        let s = Vector3::from(shift);
        let b: Vec<Vector3<f64>> = a.iter().map(|p| p + s).collect();
        let r = rmse_shape(&a, &b, IndexRange::new(0, 9)).unwrap();
        prop_assert!((r - s.norm() / 10.0).abs() <= 1e-9);
    }
}
