//! Golden-section search and the error metrics minimized by the sequential
//! matching framework.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{uniform_grid, CTProfile, DEFAULT_GRID_POINTS};

/// Golden ratio conjugate, (sqrt(5) - 1) / 2.
pub const RHO: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenSearchSpec {
    pub lo: f64,
    pub hi: f64,
    /// Bracket width at which the search stops.
    pub tol: f64,
    /// Evaluate only on multiples of this step.
    pub quantize: Option<f64>,
    pub max_evals: usize,
    /// Current parameter value, evaluated before the bracket.
    pub entry: Option<f64>,
}

impl GoldenSearchSpec {
    pub fn new(lo: f64, hi: f64, tol: f64) -> Self {
        GoldenSearchSpec {
            lo,
            hi,
            tol,
            quantize: None,
            max_evals: 200,
            entry: None,
        }
    }

    pub fn quantized(self, step: f64) -> Self {
        GoldenSearchSpec {
            quantize: Some(step),
            ..self
        }
    }

    pub fn with_entry(self, x: f64) -> Self {
        GoldenSearchSpec {
            entry: Some(x),
            ..self
        }
    }

    pub fn with_max_evals(self, max_evals: usize) -> Self {
        GoldenSearchSpec { max_evals, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidBracket {
                lo: self.lo,
                hi: self.hi,
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if let Some(q) = self.quantize {
            if !(q > 0.0 && q <= self.hi - self.lo) {
                return Err(Error::InvalidParams(format!(
                    "quantize step {q} must lie in (0, {}]",
                    self.hi - self.lo
                )));
            }
            if (self.lo / q).ceil() > (self.hi / q).floor() {
                return Err(Error::InvalidParams(format!(
                    "no multiple of {q} inside [{}, {}]",
                    self.lo, self.hi
                )));
            }
        }
        if self.max_evals < 2 {
            return Err(Error::InvalidParams("max_evals must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub x: f64,
    pub f: f64,
}

/// Every distinct evaluation in call order plus the best one found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace {
    pub evals: Vec<Evaluation>,
    pub best_x: f64,
    pub best_f: f64,
    /// False when the evaluation budget ran out before the bracket closed.
    pub converged: bool,
    /// Bracket after each iteration, starting with `[lo, hi]`.
    #[serde(skip)]
    pub brackets: Vec<(f64, f64)>,
}

impl SearchTrace {
    /// The first evaluation, which is the entry state when one was given.
    pub fn first(&self) -> Option<Evaluation> {
        self.evals.first().copied()
    }
}

struct BudgetExhausted;

struct Evaluator<F> {
    f: F,
    spec: GoldenSearchSpec,
    memo: BTreeMap<i64, f64>,
    evals: Vec<Evaluation>,
    best: Option<Evaluation>,
}

impl<F: FnMut(f64) -> Result<f64>> Evaluator<F> {
    fn snap(&self, x: f64) -> (f64, i64) {
        let x = x.clamp(self.spec.lo, self.spec.hi);
        match self.spec.quantize {
            Some(q) => {
                let k_lo = (self.spec.lo / q).ceil();
                let k_hi = (self.spec.hi / q).floor();
                let k = (x / q).round().clamp(k_lo, k_hi);
                (k * q, k as i64)
            }
            None => (x, x.to_bits() as i64),
        }
    }

    fn eval(&mut self, x: f64) -> Result<std::result::Result<f64, BudgetExhausted>> {
        let (x, key) = self.snap(x);
        if let Some(&f) = self.memo.get(&key) {
            return Ok(Ok(f));
        }
        if self.evals.len() >= self.spec.max_evals {
            return Ok(Err(BudgetExhausted));
        }
        let raw = (self.f)(x)?;
        let f = if raw.is_nan() { f64::INFINITY } else { raw };
        self.memo.insert(key, f);
        let e = Evaluation { x, f };
        self.evals.push(e);
        if self.best.is_none_or(|b| f < b.f) {
            self.best = Some(e);
        }
        Ok(Ok(f))
    }
}

/// Minimizes `f` over `[spec.lo, spec.hi]` by golden-section search.
///
/// With `quantize` set, `f` is only evaluated on grid multiples, each at
/// most once, and the grid points around the final bracket are checked.
/// Errors from `f` abort the search.
pub fn golden_section<F>(f: F, spec: GoldenSearchSpec) -> Result<SearchTrace>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    let mut ev = Evaluator {
        f,
        spec,
        memo: BTreeMap::new(),
        evals: Vec::new(),
        best: None,
    };
    let (mut a, mut b) = (spec.lo, spec.hi);
    let mut brackets = vec![(a, b)];
    let stop_width = spec.tol.max(spec.quantize.unwrap_or(0.0));
    let converged = 'search: {
        if let Some(x0) = spec.entry {
            if ev.eval(x0)?.is_err() {
                break 'search false;
            }
        }
        let mut c = b - RHO * (b - a);
        let mut d = a + RHO * (b - a);
        let Ok(mut fc) = ev.eval(c)? else { break 'search false };
        let Ok(mut fd) = ev.eval(d)? else { break 'search false };
        while b - a > stop_width && ev.snap(c).1 != ev.snap(d).1 {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - RHO * (b - a);
                match ev.eval(c)? {
                    Ok(v) => fc = v,
                    Err(_) => break 'search false,
                }
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + RHO * (b - a);
                match ev.eval(d)? {
                    Ok(v) => fd = v,
                    Err(_) => break 'search false,
                }
            }
            brackets.push((a, b));
        }
        if let Some(q) = spec.quantize {
            let mut k = ((a - q) / q).ceil();
            while k * q <= b + q {
                if ev.eval(k * q)?.is_err() {
                    break 'search false;
                }
                k += 1.0;
            }
        }
        true
    };
    let best = ev.best.expect("at least one evaluation");
    Ok(SearchTrace {
        evals: ev.evals,
        best_x: best.x,
        best_f: best.f,
        converged,
        brackets,
    })
}

/// Inclusive range of center indices compared by [`rmse_shape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexRange {
    pub lo: usize,
    pub hi: usize,
}

impl IndexRange {
    pub const fn new(lo: usize, hi: usize) -> Self {
        IndexRange { lo, hi }
    }
}

/// Root-mean-square distance (cm) between corresponding centers `lo..=hi`.
pub fn rmse_shape(a: &[Vector3<f64>], b: &[Vector3<f64>], range: IndexRange) -> Result<f64> {
    let len = a.len().min(b.len());
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if range.lo > range.hi || range.hi >= len {
        return Err(Error::IndexRangeInvalid {
            lo: range.lo,
            hi: range.hi,
            len,
        });
    }
    let n = (range.hi - range.lo + 1) as f64;
    let sum: f64 = (range.lo..=range.hi).map(|i| (a[i] - b[i]).norm_squared()).sum();
    Ok((sum / n).sqrt() / 10.0)
}

fn interp(s: &[f64], v: &[f64], t: f64) -> f64 {
    let j = s.partition_point(|&x| x <= t).clamp(1, s.len() - 1);
    let (s0, s1) = (s[j - 1], s[j]);
    let w = if s1 > s0 { ((t - s0) / (s1 - s0)).clamp(0.0, 1.0) } else { 0.0 };
    v[j - 1] + w * (v[j] - v[j - 1])
}

/// RMSE (1/cm) between the curvature channels on their common arc range,
/// resampled at 200 points.
pub fn rmse_curvature(a: &CTProfile, b: &CTProfile) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::EmptyOverlap);
    }
    let start = a.s[0].max(b.s[0]);
    let end = a.s_max().min(b.s_max());
    if !(end > start) {
        return Err(Error::EmptyOverlap);
    }
    let grid = uniform_grid(end - start, DEFAULT_GRID_POINTS);
    let sum: f64 = grid
        .iter()
        .map(|g| {
            let t = start + g;
            let d = interp(&a.s, &a.kappa, t) - interp(&b.s, &b.kappa, t);
            d * d
        })
        .sum();
    Ok((sum / grid.len() as f64).sqrt() * 10.0)
}

/// Distance (mm) between the last centers.
pub fn tip_error(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    match (a.last(), b.last()) {
        (Some(p), Some(q)) => (p - q).norm(),
        _ => f64::NAN,
    }
}
