use nalgebra::Vector3;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rtdcm::measurement::{
    centers_to_curve, dbscan, synthetic_measurements, RawPointSet, SyntheticSpec, DEFAULT_EPS_MM, DEFAULT_MIN_PTS,
};
use rtdcm::Error;

fn backbone(bend: f64) -> Vec<Vector3<f64>> {
    (0..9)
        .map(|k| {
            let t = k as f64 * 70.0;
            Vector3::new(bend * t * t / 560.0, 0.0, -t)
        })
        .collect()
}

fn sorted_centroids(c: &[Vector3<f64>]) -> Vec<[f64; 3]> {
    let mut v: Vec<[f64; 3]> = c.iter().map(|p| [p.x, p.y, p.z]).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn synthetic_labels_match_recovered_clusters() {
    let spec = SyntheticSpec::new(backbone(0.5));
    let set = synthetic_measurements(&spec, 42).unwrap();
    let truth = set.labels().unwrap();
    let r = dbscan(&set, DEFAULT_EPS_MM, DEFAULT_MIN_PTS).unwrap();
    assert_eq!(r.clusters.len(), 9);
    for members in &r.clusters {
        let first = truth[members[0]];
        assert!(first > 0);
        assert!(members.iter().all(|&i| truth[i] == first));
    }
}

#[test]
fn ordered_centers_run_from_base_to_tip() {
    let centers = backbone(0.8);
    let set = synthetic_measurements(&SyntheticSpec::new(centers.clone()), 3).unwrap();
    let r = dbscan(&set, DEFAULT_EPS_MM, DEFAULT_MIN_PTS).unwrap();
    let curve = centers_to_curve(&r, 9, Vector3::zeros()).unwrap();
    for (p, q) in curve.points().iter().zip(&centers) {
        assert!((p - q).norm() < 1.5, "{p} vs {q}");
    }
    assert!(matches!(
        centers_to_curve(&r, 10, Vector3::zeros()),
        Err(Error::ClusterCountMismatch { expected: 10, found: 9 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn permutation_invariance(seed in 0u64..10_000, bend in 0.0..1.5_f64) {
        let set = synthetic_measurements(&SyntheticSpec::new(backbone(bend)), seed).unwrap();
        let mut pts = set.points().to_vec();
        pts.shuffle(&mut StdRng::seed_from_u64(seed ^ 0x5eed));
        let a = dbscan(&set, DEFAULT_EPS_MM, DEFAULT_MIN_PTS).unwrap();
        let b = dbscan(&RawPointSet::new(pts).unwrap(), DEFAULT_EPS_MM, DEFAULT_MIN_PTS).unwrap();
        prop_assert_eq!(a.clusters.len(), b.clusters.len());
        let (ca, cb) = (sorted_centroids(&a.centroids), sorted_centroids(&b.centroids));
        for (p, q) in ca.iter().zip(&cb) {
            for k in 0..3 {
                prop_assert!((p[k] - q[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn far_outliers_are_noise(seed in 0u64..10_000, extra in prop::collection::vec(prop::array::uniform3(-1.0..1.0_f64), 1..20)) {
        let set = synthetic_measurements(&SyntheticSpec::new(backbone(0.3)), seed).unwrap();
        let mut pts = set.points().to_vec();
        let n0 = pts.len();
        // isolated points spaced well beyond eps from everything else
        for (i, e) in extra.iter().enumerate() {
            pts.push(Vector3::new(5000.0 + 100.0 * i as f64, 5000.0, 5000.0) + Vector3::from(*e));
        }
        let base = dbscan(&set, DEFAULT_EPS_MM, DEFAULT_MIN_PTS).unwrap();
        let r = dbscan(&RawPointSet::new(pts).unwrap(), DEFAULT_EPS_MM, DEFAULT_MIN_PTS).unwrap();
        prop_assert_eq!(r.clusters.len(), base.clusters.len());
        for i in n0..n0 + extra.len() {
            prop_assert!(r.noise.contains(&i));
        }
    }
}
