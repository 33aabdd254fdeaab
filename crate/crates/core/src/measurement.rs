//! Repeated point measurements of disk centers reduced to an ordered curve
//! by DBSCAN centroiding and nearest-neighbour chaining.

use nalgebra::Vector3;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{arc_length_parameterize, Curve3D};

pub const DEFAULT_EPS_MM: f64 = 8.0;
pub const DEFAULT_MIN_PTS: usize = 3;

/// Raw measured points with optional 1-based disk labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPointSet {
    points: Vec<Vector3<f64>>,
    labels: Option<Vec<usize>>,
}

impl RawPointSet {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        Self::build(points, None)
    }

    pub fn with_labels(points: Vec<Vector3<f64>>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: labels.len(),
            });
        }
        Self::build(points, Some(labels))
    }

    fn build(points: Vec<Vector3<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints { found: 0, required: 1 });
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidParams(format!("point {i} has a non-finite coordinate")));
        }
        Ok(RawPointSet { points, labels })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterResult {
    /// Member point indices per cluster, ascending.
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
    #[serde(skip)]
    pub centroids: Vec<Vector3<f64>>,
    /// Whether each point is a core point.
    #[serde(skip)]
    pub core: Vec<bool>,
}

impl ClusterResult {
    /// Cluster id per point, `None` for noise.
    pub fn labels(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (c, members) in self.clusters.iter().enumerate() {
            for &i in members {
                out[i] = Some(c);
            }
        }
        out
    }
}

fn neighbours(points: &[Vector3<f64>], eps: f64) -> Vec<Vec<usize>> {
    let eps2 = eps * eps;
    points
        .iter()
        .map(|p| {
            points
                .iter()
                .enumerate()
                .filter(|(_, q)| (p - *q).norm_squared() <= eps2)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Density-based clustering.
///
/// A point is core when at least `min_pts` points (itself included) lie
/// within `eps`. Clusters grow from unvisited core points in input order;
/// a border point reachable from several clusters joins the first one to
/// reach it.
pub fn dbscan(set: &RawPointSet, eps: f64, min_pts: usize) -> Result<ClusterResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
    }
    if min_pts < 1 {
        return Err(Error::InvalidParams("min_pts must be at least 1".into()));
    }
    let pts = set.points();
    let nbrs = neighbours(pts, eps);
    let core: Vec<bool> = nbrs.iter().map(|n| n.len() >= min_pts).collect();
    let mut label: Vec<Option<usize>> = vec![None; pts.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for seed in 0..pts.len() {
        if !core[seed] || label[seed].is_some() {
            continue;
        }
        let id = clusters.len();
        let mut members = Vec::new();
        let mut queue = std::collections::VecDeque::from([seed]);
        label[seed] = Some(id);
        while let Some(p) = queue.pop_front() {
            members.push(p);
            if !core[p] {
                continue;
            }
            for &q in &nbrs[p] {
                if label[q].is_none() {
                    label[q] = Some(id);
                    queue.push_back(q);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    let noise = (0..pts.len()).filter(|&i| label[i].is_none()).collect();
    let centroids = clusters
        .iter()
        .map(|m| m.iter().map(|&i| pts[i]).sum::<Vector3<f64>>() / m.len() as f64)
        .collect();
    Ok(ClusterResult {
        clusters,
        noise,
        centroids,
        core,
    })
}

/// Orders the centroids into a backbone curve: start at the centroid
/// nearest `base_hint`, then repeatedly step to the nearest unused one.
pub fn centers_to_curve(result: &ClusterResult, expected_count: usize, base_hint: Vector3<f64>) -> Result<Curve3D> {
    let cs = &result.centroids;
    if cs.len() != expected_count {
        return Err(Error::ClusterCountMismatch {
            expected: expected_count,
            found: cs.len(),
        });
    }
    let nearest = |from: Vector3<f64>, used: &[bool]| {
        (0..cs.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (cs[a] - from).norm().total_cmp(&(cs[b] - from).norm()))
    };
    let mut used = vec![false; cs.len()];
    let mut ordered = Vec::with_capacity(cs.len());
    let mut at = base_hint;
    while let Some(j) = nearest(at, &used) {
        used[j] = true;
        ordered.push(cs[j]);
        at = cs[j];
    }
    arc_length_parameterize(ordered)
}

/// Synthetic repeated measurements: Gaussian scatter around known disk
/// centers plus uniform outliers in the padded bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub centers: Vec<Vector3<f64>>,
    pub points_per_center: usize,
    pub sigma_mm: f64,
    /// Outliers as a fraction of the blob points.
    pub outlier_fraction: f64,
    pub padding_mm: f64,
}

impl SyntheticSpec {
    pub fn new(centers: Vec<Vector3<f64>>) -> Self {
        SyntheticSpec {
            centers,
            points_per_center: 20,
            sigma_mm: 1.0,
            outlier_fraction: 0.05,
            padding_mm: 50.0,
        }
    }
}

/// Generated points, labeled with their 1-based center (0 for outliers).
pub fn synthetic_measurements(spec: &SyntheticSpec, seed: u64) -> Result<RawPointSet> {
    if spec.centers.is_empty() || !(spec.sigma_mm >= 0.0) || !(spec.outlier_fraction >= 0.0) {
        return Err(Error::InvalidParams("synthetic spec needs centers and non-negative spreads".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.sigma_mm).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (k, c) in spec.centers.iter().enumerate() {
        for _ in 0..spec.points_per_center {
            points.push(c + Vector3::from_fn(|_, _| noise.sample(&mut rng)));
            labels.push(k + 1);
        }
    }
    let lo = spec.centers.iter().fold(Vector3::repeat(f64::INFINITY), |m, c| m.inf(c)).add_scalar(-spec.padding_mm);
    let hi = spec.centers.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |m, c| m.sup(c)).add_scalar(spec.padding_mm);
    let n_out = (spec.outlier_fraction * points.len() as f64).round() as usize;
    for _ in 0..n_out {
        points.push(Vector3::from_fn(|i, _| rng.random_range(lo[i]..=hi[i])));
        labels.push(0);
    }
    RawPointSet::with_labels(points, labels)
}
