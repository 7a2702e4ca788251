//! Discrete differential operators of the hybrid finite volume scheme.
//!
//! Unknowns live on cells and faces. On each cell the scheme builds the
//! constant cell gradient
//! `grad_K v = (1/|K|) sum |sigma| (v_sigma - v_K) n_{K,sigma}`
//! and, cone by cone, a stabilized gradient
//! `grad_D v |_{D_{K,sigma}} = grad_K v + R_{K,sigma} v n_{K,sigma}` with
//! `R_{K,sigma} v = (alpha sqrt(N)/d_{K,sigma}) [v_sigma - v_K - grad_K v . (x_sigma - x_K)]`.
//! Local stiffness matrices are the cone sums
//! `sum |D_{K,sigma}| (grad_D u)' Lambda (grad_D v)`; the fault analogue runs
//! the same construction in one dimension with `alpha_hat sqrt(N-1)`.
//!
//! All operations here are pure functions of immutable inputs.

use crate::error::{Error, Result};
use crate::geom::{Point2, Tensor2, Vec2};
use crate::mesh::{FaceKind, Mesh};
use crate::scalar::{real, Scalar};

/// One degree of freedom per cell and per face.
#[derive(Debug, Clone)]
pub struct HybridValues<T> {
    pub cell: Vec<T>,
    pub face: Vec<T>,
}

impl<T: Scalar> HybridValues<T> {
    pub fn zeros(mesh: &Mesh<T>) -> Self {
        Self {
            cell: vec![T::zero(); mesh.n_cells()],
            face: vec![T::zero(); mesh.n_faces()],
        }
    }
}

/// Geometry of one cell seen by the scheme: centre, measure and one record
/// per face. Matrix cells always have four faces; virtually extruded fault
/// cells may have more.
#[derive(Debug, Clone)]
pub struct CellPatch<T> {
    pub center: Point2<T>,
    pub area: T,
    pub faces: Vec<PatchFace<T>>,
}

#[derive(Debug, Clone, Copy)]
pub struct PatchFace<T> {
    pub center: Point2<T>,
    pub measure: T,
    pub normal: Vec2<T>,
    pub dist: T,
}

impl<T: Scalar> PatchFace<T> {
    /// Cone measure `|sigma| d / N` with `N = 2`.
    pub fn cone_area(&self) -> T {
        self.measure * self.dist / real::<T>(2.0)
    }
}

impl<T: Scalar> Mesh<T> {
    /// Patch view of a matrix cell.
    pub fn patch(&self, cell: usize) -> CellPatch<T> {
        let faces = (0..4)
            .map(|k| {
                let f = self.cell_faces[cell][k];
                let cone = self.cones[cell][k];
                PatchFace {
                    center: self.face_center[f],
                    measure: self.face_len[f],
                    normal: cone.normal,
                    dist: cone.dist,
                }
            })
            .collect();
        CellPatch {
            center: self.cell_center[cell],
            area: self.cell_area[cell],
            faces,
        }
    }
}

/// Classical cell gradient, exact on affine data.
pub fn cell_gradient<T: Scalar>(patch: &CellPatch<T>, v_cell: T, v_faces: &[T]) -> Vec2<T> {
    let mut g = Vec2::zero();
    for (f, &v) in patch.faces.iter().zip(v_faces) {
        g = g + f.normal * (f.measure * (v - v_cell));
    }
    g * patch.area.recip()
}

/// Cone stabilization residual `R_{K,sigma} v` for the face of index `k`.
pub fn stabilization_residual<T: Scalar>(
    patch: &CellPatch<T>,
    k: usize,
    v_cell: T,
    v_faces: &[T],
    alpha: T,
) -> T {
    let grad = cell_gradient(patch, v_cell, v_faces);
    let f = &patch.faces[k];
    let r = f.center - patch.center;
    alpha * real::<T>(2.0).sqrt() / f.dist * (v_faces[k] - v_cell - grad.dot(r))
}

/// Stabilized discrete gradient on the cone of face `k`.
pub fn cone_gradient<T: Scalar>(
    patch: &CellPatch<T>,
    k: usize,
    v_cell: T,
    v_faces: &[T],
    alpha: T,
) -> Vec2<T> {
    let grad = cell_gradient(patch, v_cell, v_faces);
    let f = &patch.faces[k];
    let r = f.center - patch.center;
    let res = alpha * real::<T>(2.0).sqrt() / f.dist * (v_faces[k] - v_cell - grad.dot(r));
    grad + f.normal * res
}

/// Dense symmetric matrix over the local dofs `{K} + faces`, row 0 the cell.
#[derive(Debug, Clone)]
pub struct LocalStiffness<T> {
    pub n: usize,
    a: Vec<T>,
}

impl<T: Scalar> LocalStiffness<T> {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![T::zero(); n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] += v;
    }

    /// `A u` for a local dof vector.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * u[j]).sum())
            .collect()
    }

    /// Energy `u' A u`.
    pub fn energy(&self, u: &[T]) -> T {
        self.apply(u).iter().zip(u).map(|(&r, &v)| r * v).sum()
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Local stiffness of one 2D cell: `sum_cones |D| (grad_D u)' Lambda (grad_D v)`.
/// Rejects a non-SPD permeability.
pub fn local_stiffness<T: Scalar>(
    patch: &CellPatch<T>,
    lambda: Tensor2<T>,
    alpha: T,
) -> Result<LocalStiffness<T>> {
    if !lambda.is_spd() {
        return Err(Error::Assembly(
            "cell permeability tensor is not SPD".into(),
        ));
    }
    let m = patch.faces.len();
    let n = m + 1;
    let mut a = LocalStiffness::zeros(n);
    let sqrt_n = real::<T>(2.0).sqrt();

    // Columns of the cell-gradient map: dof 0 is the cell, dof k+1 face k.
    let mut gcols = vec![Vec2::<T>::zero(); n];
    for (k, f) in patch.faces.iter().enumerate() {
        let w = f.normal * (f.measure / patch.area);
        gcols[k + 1] = w;
        gcols[0] = gcols[0] - w;
    }

    let mut cone_cols = vec![Vec2::<T>::zero(); n];
    for (k, f) in patch.faces.iter().enumerate() {
        let r = f.center - patch.center;
        let scale = alpha * sqrt_n / f.dist;
        for d in 0..n {
            let mut res = -gcols[d].dot(r);
            if d == 0 {
                res -= T::one();
            }
            if d == k + 1 {
                res += T::one();
            }
            cone_cols[d] = gcols[d] + f.normal * (scale * res);
        }
        let w = f.cone_area();
        for i in 0..n {
            let li = lambda.apply(cone_cols[i]);
            for j in 0..n {
                a.add(i, j, w * li.dot(cone_cols[j]));
            }
        }
    }
    Ok(a)
}

/// Local stiffness of one 1D fault cell of length `len`: dofs are
/// [cell, lower face, upper face]; faces carry the unit counting measure and
/// `d_{K,sigma} = len/2`.
pub fn tangential_local_stiffness<T: Scalar>(
    len: T,
    lambda_hat: T,
    alpha_hat: T,
) -> LocalStiffness<T> {
    let half = real::<T>(0.5);
    let d = len * half;
    let mut a = LocalStiffness::zeros(3);
    // Gradient columns: grad = (v_hi - v_lo)/len.
    let g = [T::zero(), -len.recip(), len.recip()];
    // Residual functionals for the two cones; sqrt(N-1) = 1.
    for (k, sgn) in [(1usize, -T::one()), (2usize, T::one())] {
        let off = sgn * d; // x_sigma - x_K along the tangent
        let scale = alpha_hat / d;
        let mut cols = [T::zero(); 3];
        for dof in 0..3 {
            let mut res = -g[dof] * off;
            if dof == 0 {
                res -= T::one();
            }
            if dof == k {
                res += T::one();
            }
            // Cone value of the tangential discrete gradient (scalar, signed
            // along the outward direction contribution).
            cols[dof] = g[dof] + sgn * scale * res;
        }
        let w = d; // cone measure |sigma| d / (N-1) with |sigma| = 1
        for i in 0..3 {
            for j in 0..3 {
                a.add(i, j, lambda_hat * w * cols[i] * cols[j]);
            }
        }
    }
    a
}

/// Discrete semi-norm `|v|_{V_D}` of matrix hybrid values: square root of
/// `sum_K sum_sigma (|sigma|/d_{K,sigma}) (v_sigma - v_K)^2`.
pub fn semi_norm<T: Scalar>(mesh: &Mesh<T>, v: &HybridValues<T>) -> T {
    let mut s = T::zero();
    for c in 0..mesh.n_cells() {
        for k in 0..4 {
            let f = mesh.cell_faces[c][k];
            let diff = v.face[f] - v.cell[c];
            s += mesh.face_len[f] / mesh.cones[c][k].dist * diff * diff;
        }
    }
    s.sqrt()
}

/// Same semi-norm for a 1D fault layer grid given the cell lengths; face
/// values are indexed by the `len(cells)+1` junction points.
pub fn semi_norm_1d<T: Scalar>(cell_len: &[T], v_cell: &[T], v_face: &[T]) -> T {
    let half = real::<T>(0.5);
    let mut s = T::zero();
    for (k, &len) in cell_len.iter().enumerate() {
        let d = len * half;
        for vf in [v_face[k], v_face[k + 1]] {
            let diff = vf - v_cell[k];
            s += diff * diff / d;
        }
    }
    s.sqrt()
}

/// Discrete `1,M` norm of a cell-wise constant field: square root of
/// `sum_sigma |sigma| (D_sigma v)^2 / d_sigma` with `D_sigma v = |v_K - v_L|`
/// and `d_sigma = d_K + d_L` on interior faces, `D_sigma v = |v_K|` and
/// `d_sigma = d_K` on external boundary faces. Fault-trace faces carry their
/// own unknowns on each side and do not enter this jump norm.
pub fn discrete_norm_1m<T: Scalar>(mesh: &Mesh<T>, cell_values: &[T]) -> T {
    let mut dist = vec![T::zero(); mesh.n_faces()];
    for c in 0..mesh.n_cells() {
        for k in 0..4 {
            dist[mesh.cell_faces[c][k]] += mesh.cones[c][k].dist;
        }
    }
    let mut s = T::zero();
    for (f, face) in mesh.faces.iter().enumerate() {
        let term = match face.kind {
            FaceKind::Interior => {
                let (k, l) = (face.cells[0].unwrap(), face.cells[1].unwrap());
                let d = cell_values[k] - cell_values[l];
                d * d / dist[f]
            }
            FaceKind::Boundary(_) => {
                let v = cell_values[face.cells[0].unwrap()];
                v * v / dist[f]
            }
            FaceKind::FaultTrace(_) => continue,
        };
        s += mesh.face_len[f] * term;
    }
    s.sqrt()
}

/// Projection `P_D`: evaluate a continuous function at cell and face
/// barycenters.
pub fn project_pointwise<T: Scalar>(
    mesh: &Mesh<T>,
    phi: impl Fn(Point2<T>) -> T,
) -> HybridValues<T> {
    HybridValues {
        cell: mesh.cell_center.iter().map(|&p| phi(p)).collect(),
        face: mesh.face_center.iter().map(|&p| phi(p)).collect(),
    }
}

/// Projection `Pi_M`: the cell-wise constant field of the cell unknowns.
pub fn project_cellwise<T: Scalar>(v: &HybridValues<T>) -> Vec<T> {
    v.cell.clone()
}
