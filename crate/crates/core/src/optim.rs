//! Dense BFGS with Armijo backtracking, sized for the handful of
//! coefficients in a Dirichlet regression.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsConfig {
    pub max_iter: usize,
    /// Stop once the Euclidean gradient norm drops to this value.
    pub grad_tol: f64,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo_c: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig { max_iter: 500, grad_tol: 1e-6, armijo_c: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

// Relative resolution assumed for objective values that are sums of many
// cancelling terms.
const NOISE_REL: f64 = 1e-9;
const WOLFE_SIGMA: f64 = 0.9;
const WOLFE_DELTA: f64 = 0.1;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimises `objective`, which returns `None` where it is undefined
/// (treated as +inf by the line search).
pub fn minimize<F>(mut objective: F, x0: Vec<f64>, config: &BfgsConfig) -> Option<BfgsResult>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = objective(&x)?;
    if !fx.is_finite() {
        return None;
    }
    // Inverse Hessian approximation, row-major.
    let mut h = vec![0.0; n * n];
    let reset = |h: &mut [f64], scale: f64| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = scale;
        }
    };
    reset(&mut h, 1.0 / norm(&g).max(1.0));
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < config.max_iter {
        let gnorm = norm(&g);
        if gnorm <= config.grad_tol {
            return Some(BfgsResult { x, value: fx, grad_norm: gnorm, iterations, converged: true });
        }
        iterations += 1;

        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            reset(&mut h, 1.0 / gnorm.max(1.0));
            dir = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&dir, &g);
            fresh = true;
        }

        // Once decreases fall below the resolution of `fx`, a step is judged
        // by the directional derivative instead (approximate Wolfe test).
        let slack = NOISE_REL * (1.0 + fx.abs());
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-20 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Some((ft, gt)) = objective(&trial) {
                let armijo = ft <= fx + config.armijo_c * step * slope;
                let approx_wolfe = ft <= fx + slack && {
                    let dt = dot(&dir, &gt);
                    (WOLFE_SIGMA * slope..=(2.0 * WOLFE_DELTA - 1.0) * slope).contains(&dt)
                };
                if ft.is_finite() && (armijo || approx_wolfe) {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if fresh {
                let grad_norm = norm(&g);
                return Some(BfgsResult { x, value: fx, grad_norm, iterations, converged: false });
            }
            reset(&mut h, 1.0 / gnorm.max(1.0));
            fresh = true;
            continue;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if fresh {
                reset(&mut h, sy / dot(&y, &y));
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    let grad_norm = norm(&g);
    Some(BfgsResult { x, value: fx, grad_norm, converged: grad_norm <= config.grad_tol, iterations })
}
