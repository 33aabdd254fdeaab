//! Limited-memory BFGS with backtracking (Armijo) line search.

use std::collections::VecDeque;

pub(crate) struct SolverSettings {
    pub grad_tol: f64,
    pub max_iterations: usize,
    pub memory: usize,
    /// Largest change of any single variable per step (rad).
    pub max_step: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            grad_tol: 1e-4,
            max_iterations: 5000,
            memory: 12,
            max_step: 0.2,
        }
    }
}

pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_inf: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Two-loop recursion: returns -H * g.
fn lbfgs_direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

pub(crate) fn minimize<F>(mut fg: F, x0: Vec<f64>, settings: &SolverSettings) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(settings.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        let g_inf = inf_norm(&g);
        if !f.is_finite() || g_inf <= settings.grad_tol {
            break;
        }
        iterations += 1;

        let mut d = lbfgs_direction(&g, &pairs);
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        let d_inf = inf_norm(&d);
        let mut alpha = if d_inf > settings.max_step {
            settings.max_step / d_inf
        } else {
            1.0
        };

        let mut accepted = false;
        for _ in 0..60 {
            x_new
                .iter_mut()
                .zip(x.iter().zip(&d))
                .for_each(|(xn, (xi, di))| *xn = xi + alpha * di);
            let f_new = fg(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f + 1e-4 * alpha * slope {
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                    if pairs.len() == settings.memory {
                        pairs.pop_front();
                    }
                    pairs.push_back((s, y, 1.0 / sy));
                }
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut g, &mut g_new);
                f = f_new;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            if pairs.is_empty() {
                break;
            }
            // stale curvature information; retry from steepest descent
            pairs.clear();
        }
    }

    let grad_inf = inf_norm(&g);
    Minimum {
        converged: f.is_finite() && grad_inf <= settings.grad_tol,
        x,
        f,
        grad_inf,
        iterations,
    }
}
