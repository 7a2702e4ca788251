//! Preconditioned Krylov solvers: restarted GMRES and conjugate gradients.

use super::{dot, norm2, Csr, Precond};
use crate::error::{Error, Result};
use crate::scalar::{real, to_f64, Scalar};

#[derive(Debug, Clone)]
pub struct IterStats<T> {
    pub iterations: usize,
    pub rel_residual: T,
}

/// Right-preconditioned GMRES with restart. Stops when the true relative
/// residual `|b - Ax| / |b|` drops below `rtol`.
pub fn gmres<T: Scalar, P: Precond<T>>(
    a: &Csr<T>,
    b: &[T],
    x: &mut [T],
    pre: &P,
    restart: usize,
    max_iter: usize,
    rtol: f64,
) -> Result<IterStats<T>> {
    let n = a.n;
    let bnorm = norm2(b);
    if to_f64(bnorm) == 0.0 {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(IterStats {
            iterations: 0,
            rel_residual: T::zero(),
        });
    }
    let tol = real::<T>(rtol) * bnorm;
    let mut total = 0usize;
    let mut r = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    let mut history: Vec<f64> = Vec::new();

    loop {
        a.matvec(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        history.push(to_f64(beta / bnorm));
        if beta <= tol {
            return Ok(IterStats {
                iterations: total,
                rel_residual: beta / bnorm,
            });
        }
        if total >= max_iter {
            return Err(Error::Solve(format!(
                "GMRES({}) did not reach rtol {:.1e} in {} iterations; residual history tail: {:?}",
                restart,
                rtol,
                max_iter,
                &history[history.len().saturating_sub(5)..]
            )));
        }

        let m = restart;
        let mut v: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|&q| q / beta).collect());
        let mut h = vec![vec![T::zero(); m]; m + 1];
        let mut cs = vec![T::zero(); m];
        let mut sn = vec![T::zero(); m];
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            if total >= max_iter {
                break;
            }
            total += 1;
            // w = A M^{-1} v_k
            pre.apply(&v[k], &mut tmp);
            let mut w = vec![T::zero(); n];
            a.matvec(&tmp, &mut w);
            for j in 0..=k {
                let hjk = dot(&w, &v[j]);
                h[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * v[j][i];
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            if to_f64(wn) > 0.0 {
                v.push(w.iter().map(|&q| q / wn).collect());
            } else {
                v.push(w);
            }
            // Apply previous Givens rotations to the new column.
            for j in 0..k {
                let t1 = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                let t2 = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t1;
                h[j + 1][k] = t2;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if to_f64(denom) == 0.0 {
                k_used = k + 1;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = T::zero();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            k_used = k + 1;
            if g[k + 1].abs() <= tol {
                break;
            }
        }

        // Solve the small triangular system and update x += M^{-1} V y.
        let k = k_used;
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut z = vec![T::zero(); n];
        for j in 0..k {
            for i in 0..n {
                z[i] += y[j] * v[j][i];
            }
        }
        pre.apply(&z, &mut tmp);
        for i in 0..n {
            x[i] += tmp[i];
        }
    }
}

/// Preconditioned conjugate gradients for SPD systems.
pub fn cg<T: Scalar, P: Precond<T>>(
    a: &Csr<T>,
    b: &[T],
    x: &mut [T],
    pre: &P,
    max_iter: usize,
    rtol: f64,
) -> Result<IterStats<T>> {
    let n = a.n;
    let bnorm = norm2(b);
    if to_f64(bnorm) == 0.0 {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(IterStats {
            iterations: 0,
            rel_residual: T::zero(),
        });
    }
    let tol = real::<T>(rtol) * bnorm;

    let mut r = vec![T::zero(); n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![T::zero(); n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];

    for it in 0..max_iter {
        let rnorm = norm2(&r);
        if rnorm <= tol {
            return Ok(IterStats {
                iterations: it,
                rel_residual: rnorm / bnorm,
            });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(to_f64(pap) > 0.0) {
            return Err(Error::Solve(format!(
                "CG broke down at iteration {}: p'Ap = {} (matrix not SPD?)",
                it, pap
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm2(&r) / bnorm;
    if rel <= real::<T>(rtol) {
        Ok(IterStats {
            iterations: max_iter,
            rel_residual: rel,
        })
    } else {
        Err(Error::Solve(format!(
            "CG did not reach rtol {:.1e} in {} iterations (relative residual {})",
            rtol, max_iter, rel
        )))
    }
}
