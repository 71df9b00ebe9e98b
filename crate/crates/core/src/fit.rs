//! Damped Gauss-Newton least-squares engine used by every fit in the
//! crate.
//!
//! The damping schedule is fixed: λ starts at 1e-3, divides by 10 on an
//! accepted step and multiplies by 10 on a rejected one; the normal
//! matrix is regularized Marquardt-style with λ·diag(JᵀJ). Derivatives
//! are central finite differences with a per-parameter relative step of
//! 1e-6. Bounds are enforced by projection.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One model parameter: name, starting value, box bounds, fixed flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub fixed: bool,
}

impl Param {
    pub fn free(name: &str, value: f64) -> Self {
        Param {
            name: String::from(name),
            value,
            min: f64::NEG_INFINITY,
            max: f64::INFINITY,
            fixed: false,
        }
    }

    pub fn bounded(name: &str, value: f64, min: f64, max: f64) -> Self {
        Param { name: String::from(name), value, min, max, fixed: false }
    }

    pub fn fixed(name: &str, value: f64) -> Self {
        Param { name: String::from(name), value, min: value, max: value, fixed: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    MaxIter,
    Singular,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub names: Vec<String>,
    /// Best-fit values for every parameter, fixed ones included.
    pub values: Vec<f64>,
    /// 1σ uncertainties from the inverse normal matrix; None for fixed
    /// parameters or when the normal matrix is not invertible.
    pub sigma: Vec<Option<f64>>,
    pub fixed: Vec<bool>,
    /// Sum of squared (weighted) residuals.
    pub chi2: f64,
    /// chi² per degree of freedom.
    pub chi2_red: f64,
    pub status: FitStatus,
    pub n_iter: usize,
    /// Cost after each accepted step, starting from the initial cost.
    pub cost_trace: Vec<f64>,
}

impl FitResult {
    pub fn value_of(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn sigma_of(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).and_then(|i| self.sigma[i])
    }

    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Relative cost-change convergence threshold.
    pub cost_tol: f64,
    /// Step-norm convergence threshold.
    pub step_tol: f64,
    pub lambda_init: f64,
    pub fd_rel_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 500,
            cost_tol: 1e-10,
            step_tol: 1e-12,
            lambda_init: 1e-3,
            fd_rel_step: 1e-6,
        }
    }
}

/// Solve A x = b for symmetric positive-definite A (in-place Cholesky).
/// Returns false when a pivot collapses.
fn cholesky_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    // factor: A = L Lᵀ, L stored in the lower triangle
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    // forward substitution L y = b
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    // back substitution Lᵀ x = y
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

/// Inverse of a symmetric positive-definite matrix via Cholesky solves
/// against unit vectors. Returns None when not invertible.
fn spd_inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        let mut m = a.to_vec();
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        if !cholesky_solve(&mut m, n, &mut e) {
            return None;
        }
        for row in 0..n {
            inv[row * n + col] = e[row];
        }
    }
    Some(inv)
}

struct Workspace {
    full: Vec<f64>,
    r: Vec<f64>,
    r_lo: Vec<f64>,
    r_hi: Vec<f64>,
    jac: Vec<f64>, // n_res x n_free, row-major
}

/// Minimize the sum of squared residuals produced by `residual_fn` over
/// the free parameters.
///
/// `residual_fn(params, out)` must fill `out` (length `n_residuals`) with
/// the weighted residuals at the full parameter vector.
pub fn least_squares<F>(
    params: &[Param],
    n_residuals: usize,
    mut residual_fn: F,
    opts: &FitOptions,
) -> Result<FitResult>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let free: Vec<usize> = params
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.fixed)
        .map(|(i, _)| i)
        .collect();
    let n_free = free.len();
    if n_free == 0 {
        return Err(Error::UnderDetermined("no free parameters"));
    }
    if n_residuals < n_free {
        return Err(Error::UnderDetermined("fewer residuals than free parameters"));
    }
    for p in params {
        if !(p.value >= p.min && p.value <= p.max) {
            return Err(Error::Domain("initial value outside bounds"));
        }
        if !p.value.is_finite() {
            return Err(Error::Domain("initial value not finite"));
        }
    }

    let mut ws = Workspace {
        full: params.iter().map(|p| p.value).collect(),
        r: vec![0.0; n_residuals],
        r_lo: vec![0.0; n_residuals],
        r_hi: vec![0.0; n_residuals],
        jac: vec![0.0; n_residuals * n_free],
    };

    let mut eval = |full: &[f64], out: &mut [f64], f: &mut F| -> Result<f64> {
        f(full, out)?;
        let mut cost = 0.0;
        for &v in out.iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("{full:?}")));
            }
            cost += v * v;
        }
        Ok(cost)
    };

    let mut x: Vec<f64> = free.iter().map(|&i| params[i].value).collect();
    let mut cost = eval(&ws.full, &mut ws.r, &mut residual_fn)?;
    let mut cost_trace = vec![cost];
    let mut lambda = opts.lambda_init;
    let mut status = FitStatus::MaxIter;
    let mut n_iter = 0;

    'outer: for iter in 0..opts.max_iter {
        n_iter = iter + 1;
        // central-difference Jacobian at x
        for (jf, &jp) in free.iter().enumerate() {
            let x0 = ws.full[jp];
            let h = opts.fd_rel_step * x0.abs().max(1.0);
            let hi = (x0 + h).min(params[jp].max);
            let lo = (x0 - h).max(params[jp].min);
            if !(hi > lo) {
                for i in 0..n_residuals {
                    ws.jac[i * n_free + jf] = 0.0;
                }
                continue;
            }
            ws.full[jp] = hi;
            residual_fn(&ws.full, &mut ws.r_hi)?;
            ws.full[jp] = lo;
            residual_fn(&ws.full, &mut ws.r_lo)?;
            ws.full[jp] = x0;
            let inv = 1.0 / (hi - lo);
            for i in 0..n_residuals {
                ws.jac[i * n_free + jf] = (ws.r_hi[i] - ws.r_lo[i]) * inv;
            }
        }

        // normal matrix and gradient
        let mut a = vec![0.0; n_free * n_free];
        let mut g = vec![0.0; n_free];
        for i in 0..n_residuals {
            let row = &ws.jac[i * n_free..(i + 1) * n_free];
            for (j, &rj) in row.iter().enumerate() {
                g[j] += rj * ws.r[i];
                for (k, &rk) in row.iter().enumerate().skip(j) {
                    a[j * n_free + k] += rj * rk;
                }
            }
        }
        for j in 0..n_free {
            for k in 0..j {
                a[j * n_free + k] = a[k * n_free + j];
            }
        }

        // inner accept/reject loop on lambda
        loop {
            let mut m = a.clone();
            for j in 0..n_free {
                let d = a[j * n_free + j];
                m[j * n_free + j] = d + lambda * if d > 0.0 { d } else { 1.0 };
            }
            let mut step = g.clone();
            if !cholesky_solve(&mut m, n_free, &mut step) {
                status = FitStatus::Singular;
                break 'outer;
            }
            let mut x_new = x.clone();
            for j in 0..n_free {
                x_new[j] = (x[j] - step[j]).clamp(params[free[j]].min, params[free[j]].max);
            }
            let mut full_new = ws.full.clone();
            for (jf, &jp) in free.iter().enumerate() {
                full_new[jp] = x_new[jf];
            }
            let mut r_new = vec![0.0; n_residuals];
            match eval(&full_new, &mut r_new, &mut residual_fn) {
                Ok(cost_new) if cost_new <= cost => {
                    let step_norm: f64 = x_new
                        .iter()
                        .zip(&x)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    let x_norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let drop = cost - cost_new;
                    x = x_new;
                    ws.full = full_new;
                    ws.r = r_new;
                    cost = cost_new;
                    cost_trace.push(cost);
                    lambda = (lambda / 10.0).max(1e-14);
                    if drop <= opts.cost_tol * cost.max(1e-300)
                        || step_norm <= opts.step_tol * (1.0 + x_norm)
                    {
                        status = FitStatus::Converged;
                        break 'outer;
                    }
                    break;
                }
                Ok(_) | Err(Error::NonFinite(_)) => {
                    lambda *= 10.0;
                    if lambda > 1e13 {
                        // no descent direction improves the cost: at a
                        // minimum to within arithmetic precision
                        status = FitStatus::Converged;
                        break 'outer;
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }

    // covariance from the undamped normal matrix at the solution
    let mut a = vec![0.0; n_free * n_free];
    for (jf, &jp) in free.iter().enumerate() {
        let x0 = ws.full[jp];
        let h = opts.fd_rel_step * x0.abs().max(1.0);
        let hi = (x0 + h).min(params[jp].max);
        let lo = (x0 - h).max(params[jp].min);
        if !(hi > lo) {
            continue;
        }
        ws.full[jp] = hi;
        residual_fn(&ws.full, &mut ws.r_hi)?;
        ws.full[jp] = lo;
        residual_fn(&ws.full, &mut ws.r_lo)?;
        ws.full[jp] = x0;
        let inv = 1.0 / (hi - lo);
        for i in 0..n_residuals {
            ws.jac[i * n_free + jf] = (ws.r_hi[i] - ws.r_lo[i]) * inv;
        }
    }
    for i in 0..n_residuals {
        let row = &ws.jac[i * n_free..(i + 1) * n_free];
        for (j, &rj) in row.iter().enumerate() {
            for (k, &rk) in row.iter().enumerate().skip(j) {
                a[j * n_free + k] += rj * rk;
            }
        }
    }
    for j in 0..n_free {
        for k in 0..j {
            a[j * n_free + k] = a[k * n_free + j];
        }
    }
    let cov = spd_inverse(&a, n_free);
    if cov.is_none() && status == FitStatus::Converged {
        status = FitStatus::Singular;
    }

    let mut sigma = vec![None; params.len()];
    if let Some(cov) = &cov {
        for (jf, &jp) in free.iter().enumerate() {
            let v = cov[jf * n_free + jf];
            if v.is_finite() && v >= 0.0 {
                sigma[jp] = Some(v.sqrt());
            }
        }
    }

    let dof = (n_residuals - n_free).max(1);
    Ok(FitResult {
        names: params.iter().map(|p| p.name.clone()).collect(),
        values: ws.full,
        sigma,
        fixed: params.iter().map(|p| p.fixed).collect(),
        chi2: cost,
        chi2_red: cost / dof as f64,
        status,
        n_iter,
        cost_trace,
    })
}

/// Multi-start configuration for fits with parameter trade-offs.
#[derive(Debug, Clone, Copy)]
pub struct MultiStart {
    pub starts: usize,
    pub seed: u64,
}

impl Default for MultiStart {
    fn default() -> Self {
        MultiStart { starts: 8, seed: 7 }
    }
}

/// Run `least_squares` from the given start and from seeded random
/// perturbations of it, keeping the lowest-cost converged result.
pub fn least_squares_multistart<F>(
    params: &[Param],
    n_residuals: usize,
    mut residual_fn: F,
    opts: &FitOptions,
    ms: &MultiStart,
) -> Result<FitResult>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(ms.seed);
    let mut best: Option<FitResult> = None;
    let mut first_err: Option<Error> = None;
    for start in 0..ms.starts.max(1) {
        let mut trial = params.to_vec();
        if start > 0 {
            for p in trial.iter_mut().filter(|p| !p.fixed) {
                let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                let amp = 0.25 * p.value.abs() + 0.05 * (1.0 + p.value.abs());
                p.value = (p.value + amp * u).clamp(p.min, p.max);
            }
        }
        match least_squares(&trial, n_residuals, &mut residual_fn, opts) {
            Ok(res) => {
                let better = match &best {
                    None => true,
                    Some(b) => res.chi2 < b.chi2,
                };
                if better {
                    best = Some(res);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match best {
        Some(b) => Ok(b),
        None => Err(first_err.unwrap_or(Error::UnderDetermined("no start succeeded"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_model_exact_recovery() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.25).collect();
        let params = [Param::free("a", 1.0), Param::free("b", 0.0)];
        let res = least_squares(
            &params,
            xs.len(),
            |p, out| {
                for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                    out[i] = p[0] * x + p[1] - y;
                }
                Ok(())
            },
            &FitOptions::default(),
        )
        .unwrap();
        assert!(res.converged());
        assert!((res.values[0] - 2.5).abs() < 1e-8, "a = {}", res.values[0]);
        assert!((res.values[1] + 1.25).abs() < 1e-8);
        assert!(res.n_iter <= 6, "took {} iterations", res.n_iter);
    }

    #[test]
    fn rosenbrock_valley() {
        // residuals (1-x, 10(y-x^2)) have their minimum at (1, 1)
        let params = [Param::free("x", -1.2), Param::free("y", 1.0)];
        let res = least_squares(
            &params,
            2,
            |p, out| {
                out[0] = 1.0 - p[0];
                out[1] = 10.0 * (p[1] - p[0] * p[0]);
                Ok(())
            },
            &FitOptions::default(),
        )
        .unwrap();
        assert!(res.converged());
        assert!((res.values[0] - 1.0).abs() < 1e-8);
        assert!((res.values[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cost_trace_never_increases() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-0.8 * x).exp() + 0.1).collect();
        let params = [
            Param::bounded("amp", 1.0, 0.0, f64::INFINITY),
            Param::bounded("rate", 0.2, 1e-6, 1e3),
            Param::free("bg", 0.0),
        ];
        let res = least_squares(
            &params,
            xs.len(),
            |p, out| {
                for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                    out[i] = p[0] * (-p[1] * x).exp() + p[2] - y;
                }
                Ok(())
            },
            &FitOptions::default(),
        )
        .unwrap();
        for w in res.cost_trace.windows(2) {
            assert!(w[1] <= w[0], "cost increased: {:?}", w);
        }
        assert!(res.converged());
    }

    #[test]
    fn fixed_and_bounded_params_respected() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 5.0).collect();
        let params = [Param::fixed("a", 2.0), Param::bounded("b", 0.0, -1.0, 3.0)];
        let res = least_squares(
            &params,
            xs.len(),
            |p, out| {
                for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                    out[i] = p[0] * x + p[1] - y;
                }
                Ok(())
            },
            &FitOptions::default(),
        )
        .unwrap();
        assert_eq!(res.values[0], 2.0);
        assert_eq!(res.sigma[0], None);
        // true b = 5 is outside the box; projection pins it at 3
        assert!((res.values[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn nan_model_is_reported() {
        let params = [Param::free("a", 1.0)];
        let err = least_squares(
            &params,
            2,
            |_p, out| {
                out[0] = f64::NAN;
                out[1] = 0.0;
                Ok(())
            },
            &FitOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::NonFinite(s) => assert!(s.contains('1')),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn no_free_parameters_is_rejected() {
        let params = [Param::fixed("a", 1.0)];
        assert!(least_squares(&params, 3, |_, _| Ok(()), &FitOptions::default()).is_err());
    }

    #[test]
    fn multistart_is_deterministic() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> =
            xs.iter().map(|x| 2.0 * (-0.7 * x).exp() + 1.0 * (-0.1 * x).exp()).collect();
        let model = |p: &[f64], out: &mut [f64]| {
            for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                out[i] = p[0] * (-p[1] * x).exp() + p[2] * (-p[3] * x).exp() - y;
            }
            Ok(())
        };
        let params = [
            Param::bounded("a1", 1.5, 0.0, 10.0),
            Param::bounded("g1", 0.5, 1e-4, 10.0),
            Param::bounded("a2", 1.5, 0.0, 10.0),
            Param::bounded("g2", 0.2, 1e-4, 10.0),
        ];
        let ms = MultiStart { starts: 6, seed: 42 };
        let r1 =
            least_squares_multistart(&params, xs.len(), model, &FitOptions::default(), &ms)
                .unwrap();
        let r2 =
            least_squares_multistart(&params, xs.len(), model, &FitOptions::default(), &ms)
                .unwrap();
        assert_eq!(r1.values, r2.values);
        assert!(r1.chi2 < 1e-12);
    }
}
