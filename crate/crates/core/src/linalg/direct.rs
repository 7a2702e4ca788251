//! Profile (skyline) LDL^T factorization with reverse Cuthill-McKee
//! reordering. This is the default solver; the factorization succeeding with
//! positive pivots doubles as the positive-definiteness check of the
//! assembled systems.

use super::Csr;
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Scalar};
use std::collections::VecDeque;

/// Reverse Cuthill-McKee ordering of a symmetric-pattern matrix.
/// `perm[new] = old`.
pub fn rcm_order<T: Scalar>(a: &Csr<T>) -> Vec<usize> {
    let n = a.n;
    let degree = |i: usize| a.row_ptr[i + 1] - a.row_ptr[i];
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];

    let bfs_far = |start: usize, visited: &mut [bool]| -> usize {
        // Find a node of maximal BFS depth and small degree from `start`,
        // giving a pseudo-peripheral starting point.
        let mut depth = vec![usize::MAX; n];
        let mut q = VecDeque::new();
        depth[start] = 0;
        q.push_back(start);
        let mut last = start;
        while let Some(u) = q.pop_front() {
            last = u;
            let (cols, _) = a.row(u);
            for &c in cols {
                let v = c as usize;
                if depth[v] == usize::MAX && !visited[v] {
                    depth[v] = depth[u] + 1;
                    q.push_back(v);
                }
            }
        }
        last
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = bfs_far(bfs_far(seed, &mut visited), &mut visited);
        let mut q = VecDeque::new();
        visited[start] = true;
        q.push_back(start);
        while let Some(u) = q.pop_front() {
            order.push(u);
            let (cols, _) = a.row(u);
            let mut nbrs: Vec<usize> = cols
                .iter()
                .map(|&c| c as usize)
                .filter(|&v| v != u && !visited[v])
                .collect();
            nbrs.sort_unstable_by_key(|&v| degree(v));
            for v in nbrs {
                if !visited[v] {
                    visited[v] = true;
                    q.push_back(v);
                }
            }
        }
    }
    order.reverse();
    order
}

/// LDL^T factors stored by envelope rows.
pub struct SkylineLdl<T> {
    n: usize,
    /// First stored column of each (permuted) row.
    first: Vec<usize>,
    start: Vec<usize>,
    low: Vec<T>,
    diag: Vec<T>,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl<T: Scalar> SkylineLdl<T> {
    /// Factor a symmetric positive definite matrix under the given ordering.
    /// Fails on non-positive pivots (matrix not SPD) or when the envelope
    /// exceeds `max_entries`.
    pub fn factor(a: &Csr<T>, perm: &[usize], max_entries: usize) -> Result<Self> {
        let n = a.n;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0usize; n];
        for new in 0..n {
            let old = perm[new];
            let (cols, _) = a.row(old);
            let mut lo = new;
            for &c in cols {
                lo = lo.min(inv[c as usize]);
            }
            first[new] = lo;
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        if start[n] > max_entries {
            return Err(Error::Solve(format!(
                "direct factorization envelope has {} entries, above the {} limit",
                start[n], max_entries
            )));
        }

        let mut low = vec![T::zero(); start[n]];
        let mut diag = vec![T::zero(); n];
        // Scatter the permuted matrix into the envelope.
        for new in 0..n {
            let old = perm[new];
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c as usize];
                if j < new {
                    low[start[new] + (j - first[new])] += v;
                } else if j == new {
                    diag[new] += v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = low[start[i] + (j - fi)];
                for k in lo..j {
                    s -= low[start[i] + (k - fi)] * diag[k] * low[start[j] + (k - fj)];
                }
                if !(diag[j] != T::zero()) {
                    return Err(Error::Solve(format!("zero pivot at dof {}", perm[j])));
                }
                low[start[i] + (j - fi)] = s / diag[j];
            }
            let mut d = diag[i];
            for k in fi..i {
                let l = low[start[i] + (k - fi)];
                d -= l * l * diag[k];
            }
            if !(d > T::zero()) {
                return Err(Error::Solve(format!(
                    "non-positive pivot {} at dof {}: matrix is not positive definite",
                    d, perm[i]
                )));
            }
            diag[i] = d;
        }
        Ok(Self {
            n,
            first,
            start,
            low,
            diag,
            perm: perm.to_vec(),
            inv,
        })
    }

    pub fn min_pivot(&self) -> T {
        self.diag.iter().cloned().fold(T::infinity(), T::min)
    }

    pub fn envelope_entries(&self) -> usize {
        self.low.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y: Vec<T> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.low[self.start[i] + (k - fi)] * y[k];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.low[self.start[i] + (k - fi)] * yi;
            }
        }
        (0..n).map(|old| y[self.inv[old]]).collect()
    }

    /// Relative residual of a solve, for reporting.
    pub fn residual(&self, a: &Csr<T>, x: &[T], b: &[T]) -> T {
        let mut r = vec![T::zero(); a.n];
        a.matvec(x, &mut r);
        let mut num = T::zero();
        let mut den = T::zero();
        for i in 0..a.n {
            num += (r[i] - b[i]) * (r[i] - b[i]);
            den += b[i] * b[i];
        }
        if to_f64(den) == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}
