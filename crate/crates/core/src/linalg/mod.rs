//! Sparse linear algebra for the assembled hybrid systems: triplet
//! accumulation, CSR storage, a profile LDL^T direct factorization with
//! reverse Cuthill-McKee ordering, ILU(0) preconditioning, restarted GMRES
//! and preconditioned conjugate gradients.

mod direct;
mod ilu;
mod iterative;

pub use direct::{rcm_order, SkylineLdl};
pub use ilu::Ilu0;
pub use iterative::{cg, gmres, IterStats};

use crate::scalar::Scalar;

/// Duplicate-summing triplet accumulator.
#[derive(Debug, Clone)]
pub struct Triplets<T> {
    n: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> Triplets<T> {
    pub fn new(n: usize) -> Self {
        assert!(n < u32::MAX as usize);
        Self {
            n,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        self.rows.push(i as u32);
        self.cols.push(j as u32);
        self.vals.push(v);
    }

    pub fn into_csr(self) -> Csr<T> {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &r in &self.rows {
            counts[r as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut col = vec![0u32; self.vals.len()];
        let mut val = vec![T::zero(); self.vals.len()];
        let mut cursor = counts.clone();
        for k in 0..self.vals.len() {
            let r = self.rows[k] as usize;
            col[cursor[r]] = self.cols[k];
            val[cursor[r]] = self.vals[k];
            cursor[r] += 1;
        }
        drop(self.rows);
        // Sort each row by column and merge duplicates in place.
        let mut row_ptr = vec![0usize; n + 1];
        let mut write = 0usize;
        let mut scratch: Vec<(u32, T)> = Vec::new();
        for i in 0..n {
            let (lo, hi) = (counts[i], counts[i + 1]);
            scratch.clear();
            scratch.extend(col[lo..hi].iter().cloned().zip(val[lo..hi].iter().cloned()));
            scratch.sort_unstable_by_key(|e| e.0);
            row_ptr[i] = write;
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut s = T::zero();
                while k < scratch.len() && scratch[k].0 == c {
                    s += scratch[k].1;
                    k += 1;
                }
                col[write] = c;
                val[write] = s;
                write += 1;
            }
        }
        row_ptr[n] = write;
        col.truncate(write);
        val.truncate(write);
        col.shrink_to_fit();
        val.shrink_to_fit();
        Csr {
            n,
            row_ptr,
            col,
            val,
        }
    }
}

/// Compressed sparse rows with sorted column indices.
#[derive(Debug, Clone)]
pub struct Csr<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[T]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col[lo..hi], &self.val[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = T::zero();
            for (c, v) in cols.iter().zip(vals) {
                s += *v * x[*c as usize];
            }
            y[i] = s;
        }
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry magnitude.
    pub fn max_relative_asymmetry(&self) -> T {
        let scale = self
            .val
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
            .max(T::min_positive_value());
        let mut worst = T::zero();
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let j = *c as usize;
                if j > i {
                    worst = worst.max((*v - self.get(j, i)).abs());
                }
            }
        }
        worst / scale
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Action of a preconditioner `z = M^{-1} r`.
pub trait Precond<T> {
    fn apply(&self, r: &[T], z: &mut [T]);
}

/// No preconditioning.
pub struct Ident;

impl<T: Scalar> Precond<T> for Ident {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}
