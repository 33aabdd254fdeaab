//! Cubic smoothing splines (Reinsch form) with GCV weight selection, and
//! their application to curvature/torsion profiles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::curve::CTProfile;
use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    /// Roughness penalty weight; `None` selects it by generalized cross-validation.
    pub weight: Option<f64>,
    pub grid_points: usize,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            weight: None,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

impl SmoothingParams {
    /// Interpolating spline (weight 0) on the default grid.
    pub fn interpolating() -> Self {
        SmoothingParams {
            weight: Some(0.0),
            ..Default::default()
        }
    }
}

/// Natural cubic spline minimizing `sum (y_i - f(x_i))^2 + weight * int f''^2`.
#[derive(Debug, Clone)]
pub struct SmoothingSpline {
    x: Vec<f64>,
    fitted: Vec<f64>,
    /// Second derivatives at the knots (zero at both ends).
    m: Vec<f64>,
    weight: f64,
}

struct Penalty {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl Penalty {
    fn new(x: &[f64]) -> Penalty {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let mut q = DMatrix::zeros(n, n - 2);
        let mut r = DMatrix::zeros(n - 2, n - 2);
        for j in 1..n - 1 {
            let c = j - 1;
            q[(j - 1, c)] = 1.0 / h[j - 1];
            q[(j, c)] = -1.0 / h[j - 1] - 1.0 / h[j];
            q[(j + 1, c)] = 1.0 / h[j];
            r[(c, c)] = (h[j - 1] + h[j]) / 3.0;
            if c + 1 < n - 2 {
                r[(c, c + 1)] = h[j] / 6.0;
                r[(c + 1, c)] = h[j] / 6.0;
            }
        }
        Penalty { q, r }
    }

    /// R^-1 Q^T
    fn r_inv_qt(&self) -> DMatrix<f64> {
        let chol = self
            .r
            .clone()
            .cholesky()
            .expect("tridiagonal R is positive definite");
        chol.solve(&self.q.transpose())
    }
}

impl SmoothingSpline {
    pub fn fit(x: &[f64], y: &[f64], weight: Option<f64>) -> Result<SmoothingSpline> {
        let n = x.len();
        if n < 4 || y.len() != n {
            return Err(Error::TooFewValidSamples {
                channel: "spline",
                found: n.min(y.len()),
            });
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams(
                "spline knots must be strictly increasing".into(),
            ));
        }
        if let Some(w) = weight {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "smoothing weight {w} must be finite and >= 0"
                )));
            }
        }
        let pen = Penalty::new(x);
        let r_inv_qt = pen.r_inv_qt();

        let fitted = match weight {
            Some(0.0) => (DVector::from_column_slice(y), 0.0),
            _ => {
                // f = (I + w K)^-1 y with K = Q R^-1 Q^T; the eigenvectors of K
                // diagonalize the smoother for every w at once.
                let k = &pen.q * &r_inv_qt;
                let k = (&k + k.transpose()) * 0.5;
                let eig = SymmetricEigen::new(k);
                // the two linear modes are unpenalized; clear their round-off
                let d_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
                let d: Vec<f64> = eig
                    .eigenvalues
                    .iter()
                    .map(|v| if *v > 1e-13 * d_max { *v } else { 0.0 })
                    .collect();
                let proj = eig.eigenvectors.transpose() * DVector::from_column_slice(y);
                let w = match weight {
                    Some(w) => w,
                    None => gcv_weight(&d, proj.as_slice()),
                };
                let shrunk = DVector::from_iterator(
                    n,
                    d.iter()
                        .zip(proj.iter())
                        .map(|(di, pi)| pi / (1.0 + w * di)),
                );
                (&eig.eigenvectors * shrunk, w)
            }
        };
        let (fitted, weight) = fitted;

        let gamma = &r_inv_qt * &fitted;
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(gamma.as_slice());
        Ok(SmoothingSpline {
            x: x.to_vec(),
            fitted: fitted.as_slice().to_vec(),
            m,
            weight,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Evaluates the spline; outside the knot range it continues linearly.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let (x0, xn) = self.domain();
        if t <= x0 {
            let h = self.x[1] - x0;
            let slope = (self.fitted[1] - self.fitted[0]) / h - h * self.m[1] / 6.0;
            return self.fitted[0] + slope * (t - x0);
        }
        if t >= xn {
            let h = xn - self.x[n - 2];
            let slope = (self.fitted[n - 1] - self.fitted[n - 2]) / h + h * self.m[n - 2] / 6.0;
            return self.fitted[n - 1] + slope * (t - xn);
        }
        let i = (self.x.partition_point(|&v| v <= t) - 1).min(n - 2);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = 1.0 - a;
        a * self.fitted[i]
            + b * self.fitted[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// GCV score for weight `w` given penalty eigenvalues and the data projected
/// on their eigenvectors.
fn gcv_score(d: &[f64], proj: &[f64], w: f64) -> f64 {
    let n = d.len() as f64;
    let mut rss = 0.0;
    let mut trace = 0.0;
    for (di, pi) in d.iter().zip(proj) {
        let a = 1.0 / (1.0 + w * di);
        trace += a;
        let r = (1.0 - a) * pi;
        rss += r * r;
    }
    let denom = 1.0 - trace / n;
    (rss / n) / (denom * denom)
}

fn gcv_weight(d: &[f64], proj: &[f64]) -> f64 {
    let d_max = d.iter().cloned().fold(0.0_f64, f64::max);
    let d_min = d
        .iter()
        .cloned()
        .filter(|v| *v > d_max * 1e-12)
        .fold(f64::INFINITY, f64::min);
    if d_max <= 0.0 || !d_min.is_finite() {
        return 0.0;
    }
    let lo = (1e-4 / d_max).log10();
    let hi = (1e4 / d_min).log10();
    let steps = 120;
    let score = |p: f64| gcv_score(d, proj, 10f64.powf(p));
    let mut best = (lo, score(lo));
    for k in 1..=steps {
        let p = lo + (hi - lo) * k as f64 / steps as f64;
        let sc = score(p);
        if sc < best.1 {
            best = (p, sc);
        }
    }
    // golden refinement inside the neighbouring grid cells
    let cell = (hi - lo) / steps as f64;
    let (mut a, mut b) = ((best.0 - cell).max(lo), (best.0 + cell).min(hi));
    let rho = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - rho * (b - a);
    let mut x2 = a + rho * (b - a);
    let (mut f1, mut f2) = (score(x1), score(x2));
    for _ in 0..40 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - rho * (b - a);
            f1 = score(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + rho * (b - a);
            f2 = score(x2);
        }
    }
    let p = if f1 <= f2 { x1 } else { x2 };
    if score(p) <= best.1 {
        10f64.powf(p)
    } else {
        10f64.powf(best.0)
    }
}

/// Uniform grid of `n` points over `[0, s_max]`.
pub fn uniform_grid(s_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| s_max * i as f64 / (n - 1) as f64).collect()
}

fn smooth_kappa(profile: &CTProfile, params: &SmoothingParams, grid: &[f64]) -> Result<Vec<f64>> {
    if profile.len() < 4 {
        return Err(Error::TooFewValidSamples {
            channel: "curvature",
            found: profile.len(),
        });
    }
    let spline = SmoothingSpline::fit(&profile.s, &profile.kappa, params.weight)?;
    Ok(grid.iter().map(|&t| spline.eval(t).max(0.0)).collect())
}

fn smooth_tau(
    profile: &CTProfile,
    params: &SmoothingParams,
    grid: &[f64],
) -> Result<(Vec<f64>, Vec<bool>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..profile.len() {
        if profile.kappa_valid[i] {
            xs.push(profile.s[i]);
            ys.push(profile.tau[i]);
        }
    }
    if xs.len() < 4 {
        return Err(Error::TooFewValidSamples {
            channel: "torsion",
            found: xs.len(),
        });
    }
    let spline = SmoothingSpline::fit(&xs, &ys, params.weight)?;
    let (lo, hi) = spline.domain();
    let mut tau = Vec::with_capacity(grid.len());
    let mut valid = Vec::with_capacity(grid.len());
    for &t in grid {
        let inside = t >= lo - 1e-9 && t <= hi + 1e-9;
        valid.push(inside);
        tau.push(if inside { spline.eval(t) } else { 0.0 });
    }
    Ok((tau, valid))
}

/// Replaces both channels by smoothing-spline evaluations on a uniform arc grid.
///
/// Torsion is fitted only through valid samples; grid points outside their
/// span are flagged invalid with torsion 0.
pub fn smooth_profile(profile: &CTProfile, params: &SmoothingParams) -> Result<CTProfile> {
    let grid = uniform_grid(profile.s_max(), params.grid_points);
    let kappa = smooth_kappa(profile, params, &grid)?;
    let (tau, kappa_valid) = smooth_tau(profile, params, &grid)?;
    Ok(CTProfile {
        s: grid,
        kappa,
        tau,
        kappa_valid,
    })
}

/// Like [`smooth_profile`], but a profile without enough valid torsion
/// samples (a straight or nearly straight curve) yields torsion 0 everywhere.
pub fn smooth_profile_or_flat(profile: &CTProfile, params: &SmoothingParams) -> Result<CTProfile> {
    let grid = uniform_grid(profile.s_max(), params.grid_points);
    let kappa = smooth_kappa(profile, params, &grid)?;
    let (tau, kappa_valid) = match smooth_tau(profile, params, &grid) {
        Ok(v) => v,
        Err(Error::TooFewValidSamples { .. }) => (vec![0.0; grid.len()], vec![false; grid.len()]),
        Err(e) => return Err(e),
    };
    Ok(CTProfile {
        s: grid,
        kappa,
        tau,
        kappa_valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_weight_interpolates() {
        let x: Vec<f64> = (0..30)
            .map(|i| i as f64 * 3.0 + (i as f64 * 0.7).sin())
            .collect();
        let y: Vec<f64> = x.iter().map(|t| (t / 20.0).sin()).collect();
        let sp = SmoothingSpline::fit(&x, &y, Some(0.0)).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((sp.eval(*xi) - yi).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolant_reproduces_cubic_interior() {
        // natural spline is exact for linear data
        let x: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.0 * t - 1.0).collect();
        let sp = SmoothingSpline::fit(&x, &y, Some(0.0)).unwrap();
        assert!((sp.eval(37.5) - 74.0).abs() < 1e-9);
    }

    #[test]
    fn huge_weight_gives_regression_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|t| 1.0 + 0.5 * t + if (*t as i64) % 2 == 0 { 0.3 } else { -0.3 })
            .collect();
        let sp = SmoothingSpline::fit(&x, &y, Some(1e12)).unwrap();
        // least-squares line through alternating +-0.3 noise on 20 points
        let n = 20.0;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let slope = sxy / sxx;
        for t in [0.0, 7.0, 19.0] {
            let line = my + slope * (t - mx);
            assert!((sp.eval(t) - line).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn gcv_recovers_noisy_sine_better_than_raw() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let x: Vec<f64> = (0..80).map(|i| i as f64 * 0.1).collect();
        let truth: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let y: Vec<f64> = truth
            .iter()
            .map(|t| t + rng.random_range(-0.2..0.2))
            .collect();
        let sp = SmoothingSpline::fit(&x, &y, None).unwrap();
        let raw: f64 = y.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum();
        let fit: f64 = x
            .iter()
            .zip(&truth)
            .map(|(t, b)| (sp.eval(*t) - b).powi(2))
            .sum();
        assert!(fit < 0.3 * raw, "fit {fit} raw {raw}");
        assert!(sp.weight() > 0.0);
    }

    #[test]
    fn rejects_three_samples() {
        let e = SmoothingSpline::fit(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], None).unwrap_err();
        assert!(matches!(e, Error::TooFewValidSamples { .. }));
    }
}
