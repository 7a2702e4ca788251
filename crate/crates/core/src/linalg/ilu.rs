//! Zero fill-in incomplete LU factorization on the CSR pattern.

use super::{Csr, Precond};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub struct Ilu0<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<T>,
    diag_pos: Vec<usize>,
}

impl<T: Scalar> Ilu0<T> {
    pub fn factor(a: &Csr<T>) -> Result<Self> {
        let n = a.n;
        let mut val = a.val.clone();
        let col = a.col.clone();
        let row_ptr = a.row_ptr.clone();
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if col[k] as usize == i {
                    diag_pos[i] = k;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(Error::Solve(format!(
                    "ILU(0): missing diagonal at dof {}",
                    i
                )));
            }
        }

        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            let mut kk = lo;
            while kk < hi {
                let k = col[kk] as usize;
                if k >= i {
                    break;
                }
                let piv = val[diag_pos[k]];
                if !(piv.abs() > T::zero()) {
                    return Err(Error::Solve(format!("ILU(0): zero pivot at dof {}", k)));
                }
                let lik = val[kk] / piv;
                val[kk] = lik;
                // Update row i against row k on the shared pattern, columns > k.
                let mut p = kk + 1;
                let mut q = diag_pos[k] + 1;
                let qh = row_ptr[k + 1];
                while p < hi && q < qh {
                    match col[p].cmp(&col[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            let delta = lik * val[q];
                            val[p] -= delta;
                            p += 1;
                            q += 1;
                        }
                    }
                }
                kk += 1;
            }
        }
        Ok(Self {
            n,
            row_ptr,
            col,
            val,
            diag_pos,
        })
    }
}

impl<T: Scalar> Precond<T> for Ilu0<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        // Lz = r (unit lower triangular), then Uz = z.
        for i in 0..self.n {
            let mut s = r[i];
            for k in self.row_ptr[i]..self.diag_pos[i] {
                s -= self.val[k] * z[self.col[k] as usize];
            }
            z[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..self.row_ptr[i + 1] {
                s -= self.val[k] * z[self.col[k] as usize];
            }
            z[i] = s / self.val[self.diag_pos[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Triplets;
    use approx::assert_relative_eq;

    #[test]
    fn ilu_exact_on_tridiagonal() {
        // Tridiagonal pattern has no fill, so ILU(0) is the exact LU and the
        // preconditioner is a direct solve.
        let n = 20;
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
            }
        }
        let a = t.into_csr();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x_true, &mut b);
        let ilu = Ilu0::factor(&a).unwrap();
        let mut x = vec![0.0; n];
        ilu.apply(&b, &mut x);
        for i in 0..n {
            assert_relative_eq!(x[i], x_true[i], epsilon = 1e-12);
        }
    }
}
