use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples for a third derivative.
pub const MIN_CURVE_POINTS: usize = 4;

/// Chords shorter than this (mm) count as coincident points.
pub const MIN_CHORD_MM: f64 = 1e-6;

/// Below this value of |r' x r''|^2 (mm^-4 scale) torsion is undefined.
pub const EPS_CROSS: f64 = 1e-12;

/// Ordered backbone samples with cumulative-chord arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve3D {
    points: Vec<Vector3<f64>>,
    s: Vec<f64>,
}

impl Curve3D {
    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn arc(&self) -> &[f64] {
        &self.s
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        *self.s.last().unwrap_or(&0.0)
    }

    pub fn first(&self) -> Vector3<f64> {
        self.points[0]
    }

    pub fn last(&self) -> Vector3<f64> {
        self.points[self.points.len() - 1]
    }

    /// Point at arc length `s` by linear interpolation along the chords.
    pub fn point_at(&self, s: f64) -> Vector3<f64> {
        if s <= 0.0 {
            return self.points[0];
        }
        let n = self.s.len();
        if s >= self.s[n - 1] {
            return self.points[n - 1];
        }
        let k = self.s.partition_point(|&v| v <= s) - 1;
        let t = (s - self.s[k]) / (self.s[k + 1] - self.s[k]);
        self.points[k] + (self.points[k + 1] - self.points[k]) * t
    }

    /// Applies `f` to every point and re-parameterizes.
    /// Curve through the points at arc positions `f * total_length` for
    /// each fraction `f` in `[0, 1]`.
    pub fn resample_fractions(&self, fractions: &[f64]) -> Result<Curve3D> {
        let total = self.total_length();
        arc_length_parameterize(fractions.iter().map(|f| self.point_at(f * total)).collect())
    }

    pub fn map_points<F>(&self, f: F) -> Result<Curve3D>
    where
        F: Fn(&Vector3<f64>) -> Vector3<f64>,
    {
        arc_length_parameterize(self.points.iter().map(f).collect())
    }
}

/// Builds a [`Curve3D`] with cumulative chord length as the arc parameter.
pub fn arc_length_parameterize(points: Vec<Vector3<f64>>) -> Result<Curve3D> {
    if points.len() < MIN_CURVE_POINTS {
        return Err(Error::TooFewPoints {
            found: points.len(),
            required: MIN_CURVE_POINTS,
        });
    }
    if let Some(bad) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidParams(format!(
            "point {bad} has a non-finite coordinate"
        )));
    }
    let mut s = Vec::with_capacity(points.len());
    s.push(0.0);
    for (i, w) in points.windows(2).enumerate() {
        let chord = (w[1] - w[0]).norm();
        if chord <= MIN_CHORD_MM {
            return Err(Error::DegenerateSegment { index: i });
        }
        s.push(s[i] + chord);
    }
    Ok(Curve3D { points, s })
}

/// Curvature and torsion sampled along arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CTProfile {
    pub s: Vec<f64>,
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    pub kappa_valid: Vec<bool>,
}

impl CTProfile {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap_or(&0.0)
    }

    pub fn max_abs_tau(&self) -> f64 {
        self.tau.iter().fold(0.0_f64, |m, t| m.max(t.abs()))
    }

    pub fn peak_kappa(&self) -> f64 {
        self.kappa.iter().fold(0.0_f64, |m, &k| m.max(k))
    }

    pub fn valid_count(&self) -> usize {
        self.kappa_valid.iter().filter(|v| **v).count()
    }
}

/// Finite-difference weights (Fornberg) for derivatives 0..=max_order at `z`
/// on the stencil `x`. Returns `w[order][j]`.
pub(crate) fn fd_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil of `width` consecutive indices around `i`, shifted to fit in `0..n`.
fn stencil(i: usize, width: usize, n: usize) -> std::ops::Range<usize> {
    let width = width.min(n);
    let half = width / 2;
    let start = i.saturating_sub(half).min(n - width);
    start..start + width
}

fn derivative(curve: &Curve3D, i: usize, order: usize, width: usize) -> Vector3<f64> {
    let range = stencil(i, width, curve.len());
    let w = fd_weights(curve.s[i], &curve.s[range.clone()], order);
    range
        .zip(&w[order])
        .fold(Vector3::zeros(), |acc, (j, wj)| acc + curve.points[j] * *wj)
}

/// Frenet-Serret curvature and torsion at every sample.
///
/// r' and r'' use 3-point non-uniform stencils, r''' a 5-point stencil
/// (4-point on the shortest curves); stencils are shifted one-sided at the
/// ends. Where |r' x r''|^2 < [`EPS_CROSS`] the torsion is set to 0 and the
/// sample flagged invalid.
pub fn ct_profile(curve: &Curve3D) -> Result<CTProfile> {
    let n = curve.len();
    if n < MIN_CURVE_POINTS {
        return Err(Error::TooFewPoints {
            found: n,
            required: MIN_CURVE_POINTS,
        });
    }
    let mut kappa = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for i in 0..n {
        let d1 = derivative(curve, i, 1, 3);
        let d2 = derivative(curve, i, 2, 3);
        let d3 = derivative(curve, i, 3, 5);
        let cross = d1.cross(&d2);
        let cross2 = cross.norm_squared();
        kappa.push(cross2.sqrt() / d1.norm().powi(3));
        if cross2 < EPS_CROSS {
            tau.push(0.0);
            valid.push(false);
        } else {
            tau.push(cross.dot(&d3) / cross2);
            valid.push(true);
        }
    }
    Ok(CTProfile {
        s: curve.s.clone(),
        kappa,
        tau,
        kappa_valid: valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    #[test]
    fn collinear_arc_length() {
        let c = arc_length_parameterize(vec![
            v(0., 0., 0.),
            v(0., 0., 10.),
            v(0., 0., 20.),
            v(0., 0., 30.),
        ])
        .unwrap();
        assert_eq!(c.arc(), &[0.0, 10.0, 20.0, 30.0]);
    }

    #[test]
    fn pythagorean_chords() {
        let c = arc_length_parameterize(vec![
            v(0., 0., 0.),
            v(3., 4., 0.),
            v(3., 4., 5.),
            v(6., 8., 5.),
        ])
        .unwrap();
        for (a, b) in c.arc().iter().zip([0.0, 5.0, 10.0, 15.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn three_points_rejected() {
        let err =
            arc_length_parameterize(vec![v(0., 0., 0.), v(1., 0., 0.), v(2., 0., 0.)]).unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { found: 3, .. }));
    }

    #[test]
    fn duplicate_points_rejected() {
        let err = arc_length_parameterize(vec![
            v(0., 0., 0.),
            v(1., 0., 0.),
            v(1., 0., 0.),
            v(2., 0., 0.),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateSegment { index: 1 }));
    }

    #[test]
    fn fornberg_matches_uniform_central() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_relative_eq!(w[1][0], -0.5);
        assert_relative_eq!(w[1][2], 0.5);
        assert_relative_eq!(w[2][0], 1.0);
        assert_relative_eq!(w[2][1], -2.0);
        // third derivative, 5-point central
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 3);
        let expect = [-0.5, 1.0, 0.0, -1.0, 0.5];
        for (a, b) in w[3].iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fornberg_exact_on_cubics_nonuniform() {
        let x = [0.0, 0.7, 1.9, 2.4, 4.0];
        let f = |t: f64| 2.0 - t + 0.5 * t * t - 0.25 * t * t * t;
        let w = fd_weights(1.9, &x, 3);
        let d3: f64 = x.iter().zip(&w[3]).map(|(t, c)| f(*t) * c).sum();
        let d1: f64 = x.iter().zip(&w[1]).map(|(t, c)| f(*t) * c).sum();
        assert!((d3 + 1.5).abs() < 1e-9);
        assert!((d1 - (-1.0 + 1.9 - 0.75 * 1.9 * 1.9)).abs() < 1e-9);
    }

    #[test]
    fn straight_line_has_no_curvature() {
        let pts = (0..20)
            .map(|i| v(1.0 * i as f64, 2.0 * i as f64, -0.5 * i as f64))
            .collect();
        let p = ct_profile(&arc_length_parameterize(pts).unwrap()).unwrap();
        assert!(p.kappa.iter().all(|k| *k <= 1e-9));
        assert!(p.tau.iter().all(|t| *t == 0.0));
        assert!(p.kappa_valid.iter().all(|v| !v));
    }

    #[test]
    fn stencils_fit_inside() {
        assert_eq!(stencil(0, 5, 10), 0..5);
        assert_eq!(stencil(1, 5, 10), 0..5);
        assert_eq!(stencil(5, 5, 10), 3..8);
        assert_eq!(stencil(9, 5, 10), 5..10);
        assert_eq!(stencil(2, 5, 4), 0..4);
        assert_eq!(stencil(0, 3, 4), 0..3);
        assert_eq!(stencil(3, 3, 4), 1..4);
    }
}
