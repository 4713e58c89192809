//! BFGS with a strong-Wolfe line search.

/// Stopping rules and multistart budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Unconstrained gradient norm that counts as converged.
    pub grad_tol: f64,
    /// Gradient norm at which iteration stops outright.
    pub grad_tol_strict: f64,
    /// Objective change below which iteration stops once `grad_tol` holds.
    pub f_tol: f64,
    pub max_iter: usize,
    pub multistarts: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            grad_tol_strict: 1e-9,
            f_tol: 1e-10,
            max_iter: 500,
            multistarts: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `fg`, which returns value and gradient or `None` outside the
/// domain.
pub(crate) fn bfgs<F>(fg: &F, x0: &[f64], opts: &OptimizerOptions) -> Option<Minimum>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let p = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x)?;
    if !f.is_finite() {
        return None;
    }
    let identity = |h: &mut Vec<f64>, scale: f64| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..p {
            h[i * p + i] = scale;
        }
    };
    let mut h = vec![0.0; p * p];
    identity(&mut h, 1.0);
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let gn = norm(&g);
        if gn < opts.grad_tol_strict {
            break;
        }
        let mut d: Vec<f64> = (0..p).map(|i| -dot(&h[i * p..(i + 1) * p], &g)).collect();
        if dot(&d, &g) >= 0.0 {
            identity(&mut h, 1.0);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if fresh {
            (1.0 / norm(&d)).min(1.0)
        } else {
            1.0
        };
        let step = line_search(fg, &x, f, &g, &d, alpha0);
        let Some((alpha, f_new, g_new)) = step else {
            if fresh {
                break;
            }
            identity(&mut h, 1.0);
            fresh = true;
            continue;
        };
        iterations += 1;
        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let df = f - f_new;
        x.iter_mut().zip(&s).for_each(|(xi, si)| *xi += si);
        f = f_new;
        g = g_new;

        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if fresh {
                identity(&mut h, sy / dot(&y, &y));
                fresh = false;
            }
            let hy: Vec<f64> = (0..p).map(|i| dot(&h[i * p..(i + 1) * p], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..p {
                for j in 0..p {
                    h[i * p + j] +=
                        rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        if df.abs() < opts.f_tol && norm(&g) < opts.grad_tol {
            break;
        }
    }
    let grad_norm = norm(&g);
    Some(Minimum {
        x,
        f,
        grad_norm,
        iterations,
        converged: grad_norm < opts.grad_tol,
    })
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

fn line_search<F>(
    fg: &F,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    alpha0: f64,
) -> Option<(f64, f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let dg0 = dot(g0, d);
    let eval = |a: f64| -> Option<(f64, Vec<f64>, f64)> {
        let xa: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + a * di).collect();
        let (fa, ga) = fg(&xa)?;
        if !fa.is_finite() || ga.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let dga = dot(&ga, d);
        Some((fa, ga, dga))
    };

    let mut lo = (0.0, f0, dg0);
    let mut alpha = alpha0;
    for i in 0..60 {
        let Some((fa, ga, dga)) = eval(alpha) else {
            // outside the domain: shrink toward the last good point
            alpha = 0.5 * (lo.0 + alpha);
            continue;
        };
        if fa > f0 + C1 * alpha * dg0 || (i > 0 && fa >= lo.1) {
            return zoom(&eval, f0, dg0, lo, (alpha, fa, dga));
        }
        if dga.abs() <= -C2 * dg0 {
            return Some((alpha, fa, ga));
        }
        if dga >= 0.0 {
            return zoom(&eval, f0, dg0, (alpha, fa, dga), lo);
        }
        lo = (alpha, fa, dga);
        alpha *= 2.0;
    }
    None
}

type Eval<'a> = dyn Fn(f64) -> Option<(f64, Vec<f64>, f64)> + 'a;

fn zoom(
    eval: &Eval<'_>,
    f0: f64,
    dg0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
) -> Option<(f64, f64, Vec<f64>)> {
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for _ in 0..60 {
        let a = interpolate(lo, hi);
        let Some((fa, ga, dga)) = eval(a) else {
            hi = (a, f64::INFINITY, 0.0);
            continue;
        };
        if fa < f0 && best.as_ref().is_none_or(|b| fa < b.1) {
            best = Some((a, fa, ga.clone()));
        }
        if fa > f0 + C1 * a * dg0 || fa >= lo.1 {
            hi = (a, fa, dga);
        } else {
            if dga.abs() <= -C2 * dg0 {
                return Some((a, fa, ga));
            }
            if dga * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, fa, dga);
        }
        if (hi.0 - lo.0).abs() < 1e-16 * lo.0.abs().max(1e-300) {
            break;
        }
    }
    // accept any strict decrease when the interval collapses
    best.filter(|b| b.1 < f0)
}

/// Cubic interpolation inside the bracket, safeguarded to its middle 80%.
fn interpolate(lo: (f64, f64, f64), hi: (f64, f64, f64)) -> f64 {
    let (a0, f0, d0) = lo;
    let (a1, f1, d1) = hi;
    let (left, right) = if a0 < a1 { (a0, a1) } else { (a1, a0) };
    let width = right - left;
    let mut a = f64::NAN;
    if f1.is_finite() {
        let d1_ = d0 + d1 - 3.0 * (f0 - f1) / (a0 - a1);
        let disc = d1_ * d1_ - d0 * d1;
        if disc >= 0.0 {
            let d2 = (a1 - a0).signum() * disc.sqrt();
            a = a1 - (a1 - a0) * (d1 + d2 - d1_) / (d1 - d0 + 2.0 * d2);
        }
    }
    if !a.is_finite() || a < left + 0.1 * width || a > right - 0.1 * width {
        a = 0.5 * (left + right);
    }
    a
}

/// Central-difference gradient with step `1e−6·max(1, |x_i|)`.
pub(crate) fn numeric_gradient<F>(f: &F, x: &[f64]) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut g = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let up = f(&xp)?;
        xp[i] = x[i] - h;
        let dn = f(&xp)?;
        xp[i] = x[i];
        g.push((up - dn) / (2.0 * h));
    }
    Some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Some((f, g))
        };
        let m = bfgs(&fg, &[-1.2, 1.0], &OptimizerOptions::default()).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn respects_domain() {
        // log barrier at 0, minimum at x = 1
        let fg = |x: &[f64]| {
            if x[0] <= 0.0 {
                None
            } else {
                Some((x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]]))
            }
        };
        let m = bfgs(&fg, &[8.0], &OptimizerOptions::default()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn numeric_gradient_of_quadratic() {
        let f = |x: &[f64]| Some(3.0 * x[0] * x[0] + x[0] * x[1]);
        let g = numeric_gradient(&f, &[1.0, 2.0]).unwrap();
        assert!((g[0] - 8.0).abs() < 1e-8 && (g[1] - 1.0).abs() < 1e-8);
    }
}
