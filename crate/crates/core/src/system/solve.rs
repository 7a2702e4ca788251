//! Linear solve drivers: direct profile LDL^T by default, restarted GMRES
//! with ILU(0) or preconditioned CG on request, optional static condensation
//! of the cell unknowns.

use crate::error::{Error, Result};
use crate::linalg::{cg, gmres, rcm_order, Csr, Ilu0, SkylineLdl, Triplets};
use crate::scalar::{to_f64, Scalar};
use crate::system::assemble::{apply_dirichlet, GlobalSystem, ReducedSystem};
use crate::system::scenario::{CouplingMode, Discretization};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Direct,
    Gmres,
    Cg,
    /// Direct below `auto_direct_limit` unknowns, CG above.
    Auto,
}

#[derive(Debug, Clone)]
pub struct SolverOpts {
    pub kind: SolverKind,
    pub rtol: f64,
    pub max_iter: usize,
    pub restart: usize,
    /// Eliminate cell unknowns before the solve (virtual or faultless modes).
    pub condense: bool,
    pub direct_max_envelope: usize,
    pub auto_direct_limit: usize,
}

impl Default for SolverOpts {
    fn default() -> Self {
        Self {
            kind: SolverKind::Direct,
            rtol: 1e-12,
            max_iter: 400_000,
            restart: 30,
            condense: false,
            direct_max_envelope: 150_000_000,
            auto_direct_limit: 90_000,
        }
    }
}

impl SolverOpts {
    pub fn direct() -> Self {
        Self::default()
    }

    pub fn auto() -> Self {
        Self {
            kind: SolverKind::Auto,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: String,
    pub n_total: usize,
    pub n_solved: usize,
    pub iterations: usize,
    pub rel_residual: f64,
    pub min_pivot: Option<f64>,
    pub condensed: bool,
    pub wall_seconds: f64,
}

/// The discrete solution: pressures on matrix cells and faces, on the fault
/// layers and (virtual mode) on the mid-plane sub-faces. Dirichlet faces
/// hold their prescribed values exactly.
#[derive(Debug, Clone)]
pub struct HybridState<T> {
    pub mode: CouplingMode,
    pub matrix: crate::hfv::HybridValues<T>,
    pub fault_cell: [Vec<T>; 2],
    pub fault_face: [Vec<T>; 2],
    pub midplane: Vec<T>,
}

impl<T: Scalar> HybridState<T> {
    pub fn from_dofs(disc: &Discretization<T>, vals: &[T]) -> Self {
        let dofs = &disc.dofs;
        let matrix = crate::hfv::HybridValues {
            cell: (0..dofs.n_cells).map(|c| vals[dofs.cell(c)]).collect(),
            face: (0..dofs.n_faces).map(|f| vals[dofs.face(f)]).collect(),
        };
        let mut fault_cell: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        let mut fault_face: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        for layer in 0..2 {
            let m = dofs.layer_cells[layer];
            fault_cell[layer] = (0..m).map(|k| vals[dofs.fault_cell(layer, k)]).collect();
            if m > 0 {
                fault_face[layer] = (0..=m).map(|i| vals[dofs.fault_face(layer, i)]).collect();
            }
        }
        let midplane = (0..dofs.n_midplane)
            .map(|s| vals[dofs.midplane(s)])
            .collect();
        Self {
            mode: disc.mode,
            matrix,
            fault_cell,
            fault_face,
            midplane,
        }
    }

    /// Range over every stored pressure value.
    pub fn value_range(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let mut scan = |vs: &[T]| {
            for &v in vs {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        };
        scan(&self.matrix.cell);
        scan(&self.matrix.face);
        for layer in 0..2 {
            scan(&self.fault_cell[layer]);
            scan(&self.fault_face[layer]);
        }
        scan(&self.midplane);
        (lo, hi)
    }
}

/// Solve an assembled system. The report carries the method, iteration count
/// and the relative residual actually reached.
pub fn solve_steady<T: Scalar>(
    disc: &Discretization<T>,
    sys: &GlobalSystem<T>,
    opts: &SolverOpts,
) -> Result<(HybridState<T>, SolveReport)> {
    let start = std::time::Instant::now();
    let reduced = apply_dirichlet(sys);
    let n_total = sys.n();

    let condensable = if opts.condense {
        condensable_mask(disc, &reduced)?
    } else {
        Vec::new()
    };

    let (x_free, mut report) = if opts.condense {
        let cond = condense(&reduced, &condensable)?;
        let (x_kept, mut rep) = solve_csr(&cond.matrix, &cond.rhs, opts)?;
        rep.condensed = true;
        (cond.expand(&reduced, &x_kept), rep)
    } else {
        solve_csr(&reduced.matrix, &reduced.rhs, opts)?
    };

    let mut vals = vec![T::zero(); n_total];
    for (fi, &i) in reduced.free.iter().enumerate() {
        vals[i] = x_free[fi];
    }
    for i in 0..n_total {
        if let Some(g) = sys.dirichlet[i] {
            vals[i] = g;
        }
    }
    report.n_total = n_total;
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((HybridState::from_dofs(disc, &vals), report))
}

fn solve_csr<T: Scalar>(a: &Csr<T>, b: &[T], opts: &SolverOpts) -> Result<(Vec<T>, SolveReport)> {
    let kind = match opts.kind {
        SolverKind::Auto => {
            if a.n <= opts.auto_direct_limit {
                SolverKind::Direct
            } else {
                SolverKind::Cg
            }
        }
        k => k,
    };
    let mut report = SolveReport {
        method: String::new(),
        n_total: a.n,
        n_solved: a.n,
        iterations: 0,
        rel_residual: 0.0,
        min_pivot: None,
        condensed: false,
        wall_seconds: 0.0,
    };
    let x = match kind {
        SolverKind::Direct => {
            let perm = rcm_order(a);
            let ldl = SkylineLdl::factor(a, &perm, opts.direct_max_envelope)?;
            let x = ldl.solve(b);
            report.method = "direct-ldlt".into();
            report.min_pivot = Some(to_f64(ldl.min_pivot()));
            report.rel_residual = to_f64(ldl.residual(a, &x, b));
            x
        }
        SolverKind::Gmres => {
            let ilu = Ilu0::factor(a)?;
            let mut x = vec![T::zero(); a.n];
            let stats = gmres(a, b, &mut x, &ilu, opts.restart, opts.max_iter, opts.rtol)?;
            report.method = format!("gmres{}-ilu0", opts.restart);
            report.iterations = stats.iterations;
            report.rel_residual = to_f64(stats.rel_residual);
            x
        }
        SolverKind::Cg => {
            let ilu = Ilu0::factor(a)?;
            let mut x = vec![T::zero(); a.n];
            let stats = cg(a, b, &mut x, &ilu, opts.max_iter, opts.rtol)?;
            report.method = "cg-ilu0".into();
            report.iterations = stats.iterations;
            report.rel_residual = to_f64(stats.rel_residual);
            x
        }
        SolverKind::Auto => unreachable!(),
    };
    Ok((x, report))
}

/// Free indices of the cell unknowns that can be eliminated locally: matrix
/// cells always, fault cells only in virtual mode (the reduced jump term
/// couples the two fault cell values directly).
fn condensable_mask<T: Scalar>(
    disc: &Discretization<T>,
    reduced: &ReducedSystem<T>,
) -> Result<Vec<bool>> {
    if disc.mode == CouplingMode::Reduced && disc.fault.is_some() {
        return Err(Error::Solve(
            "static condensation is only available in the virtual coupling mode".into(),
        ));
    }
    let dofs = &disc.dofs;
    let mut is_cell = vec![false; dofs.total];
    for c in 0..dofs.n_cells {
        is_cell[dofs.cell(c)] = true;
    }
    for layer in 0..2 {
        for k in 0..dofs.layer_cells[layer] {
            is_cell[dofs.fault_cell(layer, k)] = true;
        }
    }
    Ok(reduced.free.iter().map(|&g| is_cell[g]).collect())
}

/// Recovery data of one condensed dof: its free index, diagonal, right-hand
/// side and row entries over the kept indices.
struct CellRecovery<T> {
    free_index: usize,
    diag: T,
    rhs: T,
    row: Vec<(usize, T)>,
}

struct Condensed<T> {
    matrix: Csr<T>,
    rhs: Vec<T>,
    /// Kept free-index of each original free index, `usize::MAX` if condensed.
    keep_pos: Vec<usize>,
    recover: Vec<CellRecovery<T>>,
}

fn condense<T: Scalar>(reduced: &ReducedSystem<T>, condensable: &[bool]) -> Result<Condensed<T>> {
    let n = reduced.matrix.n;
    let mut keep_pos = vec![usize::MAX; n];
    let mut kept = 0usize;
    for i in 0..n {
        if !condensable[i] {
            keep_pos[i] = kept;
            kept += 1;
        }
    }
    let mut trip = Triplets::new(kept);
    let mut rhs = vec![T::zero(); kept];
    let mut recover = Vec::new();
    for i in 0..n {
        let (cols, vals) = reduced.matrix.row(i);
        if !condensable[i] {
            let ki = keep_pos[i];
            rhs[ki] += reduced.rhs[i];
            for (c, v) in cols.iter().zip(vals) {
                let j = *c as usize;
                if !condensable[j] {
                    trip.push(ki, keep_pos[j], *v);
                }
            }
        } else {
            let mut diag = T::zero();
            let mut row: Vec<(usize, T)> = Vec::with_capacity(cols.len());
            for (c, v) in cols.iter().zip(vals) {
                let j = *c as usize;
                if j == i {
                    diag = *v;
                } else if condensable[j] {
                    return Err(Error::Solve(
                        "condensation found a cell-cell coupling; cannot eliminate locally".into(),
                    ));
                } else {
                    row.push((keep_pos[j], *v));
                }
            }
            if !(diag.abs() > T::zero()) {
                return Err(Error::Solve(format!(
                    "zero cell diagonal at free dof {}",
                    i
                )));
            }
            let binv = reduced.rhs[i] / diag;
            for &(kj, vj) in &row {
                rhs[kj] -= vj * binv;
                for &(kk, vk) in &row {
                    trip.push(kj, kk, -vj * vk / diag);
                }
            }
            recover.push(CellRecovery { free_index: i, diag, rhs: reduced.rhs[i], row });
        }
    }
    Ok(Condensed {
        matrix: trip.into_csr(),
        rhs,
        keep_pos,
        recover,
    })
}

impl<T: Scalar> Condensed<T> {
    fn expand(&self, reduced: &ReducedSystem<T>, x_kept: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); reduced.matrix.n];
        for i in 0..reduced.matrix.n {
            if self.keep_pos[i] != usize::MAX {
                x[i] = x_kept[self.keep_pos[i]];
            }
        }
        for rec in &self.recover {
            let mut s = rec.rhs;
            for &(kj, vj) in &rec.row {
                s -= vj * x_kept[kj];
            }
            x[rec.free_index] = s / rec.diag;
        }
        x
    }
}
