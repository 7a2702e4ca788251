//! Assembly of the global discrete problem
//! `b_D((p, p_hat), (v, v_hat)) = F(v, v_hat)`.
//!
//! The matrix part is the cone-sum bilinear form cell by cell. The fault is
//! coupled either through the reduced forms (tangential 1D stiffness plus
//! the interface terms `2 lambda_gamma (p_j - p_hat_j)(v_j - v_hat_j)` per
//! side and the mid-plane jump term), or by assembling the virtually
//! extruded fault cells with `Lambda_f = lambda_n N + lambda_t T` like any
//! other cell; shared footprint and mid-plane unknowns then provide the
//! coupling. In transient runs the implicit Euler mass `c Phi |K| / dt`
//! lands on the cell diagonals and the right-hand side.

use crate::error::{Error, Result};
use crate::fault::{effective_coefficients, VirtualFaceKind};
use crate::geom::{Point2, Tensor2};
use crate::hfv::local_stiffness;
use crate::linalg::{Csr, Triplets};
use crate::mesh::FaceKind;
use crate::scalar::{real, Scalar};
use crate::system::scenario::{BcValue, CouplingMode, Discretization, Scenario};

/// Assembled linear system over all hybrid unknowns, Dirichlet data attached.
#[derive(Debug, Clone)]
pub struct GlobalSystem<T> {
    pub matrix: Csr<T>,
    pub rhs: Vec<T>,
    pub dirichlet: Vec<Option<T>>,
}

impl<T: Scalar> GlobalSystem<T> {
    pub fn n(&self) -> usize {
        self.matrix.n
    }
}

/// Previous-step cell values for the implicit Euler term, mapped by cell
/// identity.
#[derive(Debug, Clone)]
pub struct CellState<T> {
    pub matrix: Vec<T>,
    pub fault: [Vec<T>; 2],
}

/// Assemble the steady problem.
pub fn assemble_steady<T: Scalar>(
    disc: &Discretization<T>,
    scenario: &Scenario<T>,
) -> Result<GlobalSystem<T>> {
    assemble_inner(disc, scenario, None)
}

/// Assemble one implicit Euler step given the previous cell values.
pub fn assemble_transient_step<T: Scalar>(
    disc: &Discretization<T>,
    scenario: &Scenario<T>,
    previous: &CellState<T>,
    dt: T,
) -> Result<GlobalSystem<T>> {
    if !(dt > T::zero()) {
        return Err(Error::Assembly(format!(
            "time step must be positive, got {}",
            dt
        )));
    }
    if previous.matrix.len() != disc.mesh.n_cells() {
        return Err(Error::Assembly(format!(
            "previous state has {} matrix cells, current mesh {}",
            previous.matrix.len(),
            disc.mesh.n_cells()
        )));
    }
    if let Some(fault) = &disc.fault {
        for layer in 0..2 {
            if previous.fault[layer].len() != fault.layers[layer].cells.len() {
                return Err(Error::Assembly(format!(
                    "previous state has {} fault cells in layer {}, current grid {}",
                    previous.fault[layer].len(),
                    layer + 1,
                    fault.layers[layer].cells.len()
                )));
            }
        }
    }
    assemble_inner(disc, scenario, Some((previous, dt)))
}

fn assemble_inner<T: Scalar>(
    disc: &Discretization<T>,
    scenario: &Scenario<T>,
    mass: Option<(&CellState<T>, T)>,
) -> Result<GlobalSystem<T>> {
    let mesh = &disc.mesh;
    let dofs = &disc.dofs;
    let mu = scenario.viscosity;
    let alpha = scenario.scheme.alpha;
    let mut trip = Triplets::new(dofs.total);
    let mut rhs = vec![T::zero(); dofs.total];

    // Matrix cells.
    let mut scatter_dofs = Vec::with_capacity(8);
    for c in 0..mesh.n_cells() {
        let lambda = scenario.materials.cell_lambda(mesh, c).scale(mu.recip());
        let local = local_stiffness(&mesh.patch(c), lambda, alpha)?;
        scatter_dofs.clear();
        scatter_dofs.push(dofs.cell(c));
        for &f in &mesh.cell_faces[c] {
            scatter_dofs.push(dofs.face(f));
        }
        scatter(&mut trip, &scatter_dofs, &local);
        rhs[dofs.cell(c)] += scenario.materials.cell_source(mesh, c) * mesh.cell_area[c];
        if let Some((prev, dt)) = mass {
            let m = scenario.materials.cell_c_phi(mesh, c) * mesh.cell_area[c] / dt;
            trip.push(dofs.cell(c), dofs.cell(c), m);
            rhs[dofs.cell(c)] += m * prev.matrix[c];
        }
    }

    // Fault.
    if let Some(fault) = &disc.fault {
        let spec = scenario
            .fault
            .as_ref()
            .expect("fault model without fault spec");
        let d = fault.geometry.thickness;
        let half = real::<T>(0.5);

        // Intrinsic coefficients per layer cell.
        let mut coeffs: [Vec<(T, T, T)>; 2] = [Vec::new(), Vec::new()];
        for layer in 0..2 {
            for cell in &fault.layers[layer].cells {
                coeffs[layer].push(spec.cell_coeffs(
                    &scenario.materials,
                    mesh,
                    layer,
                    cell.center_y(),
                    cell.trace_face,
                )?);
            }
        }
        let fault_c_phi = |layer: usize, k: usize| -> T {
            let trace = fault.layers[layer].cells[k].trace_face;
            let cell = mesh.faces[trace].cells[0].expect("trace face has one cell");
            scenario.materials.cell_c_phi(mesh, cell)
        };

        match disc.mode {
            CouplingMode::Virtual => {
                for layer in 0..2 {
                    for vc in &fault.virtual_grid.cells[layer] {
                        let (ln, lt, qhat) = coeffs[layer][vc.index];
                        let lambda_f = Tensor2::diagonal(ln, lt).scale(mu.recip());
                        let local = local_stiffness(&vc.patch(), lambda_f, alpha)?;
                        scatter_dofs.clear();
                        scatter_dofs.push(dofs.fault_cell(layer, vc.index));
                        for f in &vc.faces {
                            scatter_dofs.push(match f.kind {
                                VirtualFaceKind::Footprint(trace) => dofs.face(trace),
                                VirtualFaceKind::MidPlane(s) => dofs.midplane(s),
                                VirtualFaceKind::Lateral(i) => dofs.fault_face(layer, i),
                            });
                        }
                        scatter(&mut trip, &scatter_dofs, &local);
                        let len = fault.layers[layer].cells[vc.index].len();
                        rhs[dofs.fault_cell(layer, vc.index)] += qhat * len;
                        if let Some((prev, dt)) = mass {
                            let m = fault_c_phi(layer, vc.index) * vc.area / dt;
                            let dof = dofs.fault_cell(layer, vc.index);
                            trip.push(dof, dof, m);
                            rhs[dof] += m * prev.fault[layer][vc.index];
                        }
                    }
                }
            }
            CouplingMode::Reduced => {
                if !fault.matching() {
                    return Err(Error::Assembly(
                        "reduced coupling mode requires matching fault layer grids".into(),
                    ));
                }
                // Per-layer tangential problems.
                for layer in 0..2 {
                    for (k, cell) in fault.layers[layer].cells.iter().enumerate() {
                        let (_, lt, qhat) = coeffs[layer][k];
                        let lambda_hat = d * lt * half / mu;
                        let local = crate::hfv::tangential_local_stiffness(
                            cell.len(),
                            lambda_hat,
                            scenario.scheme.alpha_hat,
                        );
                        let local_dofs = [
                            dofs.fault_cell(layer, k),
                            dofs.fault_face(layer, k),
                            dofs.fault_face(layer, k + 1),
                        ];
                        scatter(&mut trip, &local_dofs, &local);
                        rhs[local_dofs[0]] += qhat * cell.len();
                        if let Some((prev, dt)) = mass {
                            let m = fault_c_phi(layer, k) * d * half * cell.len() / dt;
                            trip.push(local_dofs[0], local_dofs[0], m);
                            rhs[local_dofs[0]] += m * prev.fault[layer][k];
                        }
                    }
                }
                // Coupling conditions with midpoint quadrature on each fault
                // cell: side terms and the mid-plane jump term.
                for k in 0..fault.layers[0].cells.len() {
                    let len = fault.layers[0].cells[k].len();
                    let mut lam_gamma = [T::zero(); 2];
                    for layer in 0..2 {
                        let (ln, lt, _) = coeffs[layer][k];
                        lam_gamma[layer] = effective_coefficients(ln, lt, d)?.lambda_gamma;
                        let c = real::<T>(2.0) * lam_gamma[layer] / mu * len;
                        let trace = dofs.face(fault.layers[layer].cells[k].trace_face);
                        let hat = dofs.fault_cell(layer, k);
                        trip.push(trace, trace, c);
                        trip.push(hat, hat, c);
                        trip.push(trace, hat, -c);
                        trip.push(hat, trace, -c);
                    }
                    // Half-layer transmissibilities in series across the
                    // mid-plane; equals lambda_gamma for equal layers.
                    let jump = real::<T>(2.0) * lam_gamma[0] * lam_gamma[1]
                        / (lam_gamma[0] + lam_gamma[1])
                        / mu
                        * len;
                    let (h1, h2) = (dofs.fault_cell(0, k), dofs.fault_cell(1, k));
                    trip.push(h1, h1, jump);
                    trip.push(h2, h2, jump);
                    trip.push(h1, h2, -jump);
                    trip.push(h2, h1, -jump);
                }
            }
        }
    }

    // Boundary conditions.
    let mut dirichlet = vec![None; dofs.total];
    for f in 0..mesh.n_faces() {
        if let FaceKind::Boundary(_) = mesh.faces[f].kind {
            match disc
                .boundary_bc(scenario, f)
                .expect("boundary face has a bc")
            {
                BcValue::Dirichlet(v) => dirichlet[dofs.face(f)] = Some(v),
                BcValue::Neumann(g) => rhs[dofs.face(f)] -= g * mesh.face_len[f],
            }
        }
    }
    if let Some(fault) = &disc.fault {
        for layer in 0..2 {
            let grid = &fault.layers[layer];
            let ends = [(0usize, false), (grid.cells.len(), true)];
            for (i, top) in ends {
                let y = if top {
                    grid.y_range()[1]
                } else {
                    grid.y_range()[0]
                };
                let at = Point2::new(grid.centerline_x, y);
                match scenario.bc.on_fault_end(top, at) {
                    BcValue::Dirichlet(v) => dirichlet[dofs.fault_face(layer, i)] = Some(v),
                    BcValue::Neumann(g) => rhs[dofs.fault_face(layer, i)] -= g,
                }
            }
        }
    }

    Ok(GlobalSystem {
        matrix: trip.into_csr(),
        rhs,
        dirichlet,
    })
}

fn scatter<T: Scalar>(
    trip: &mut Triplets<T>,
    dofs: &[usize],
    local: &crate::hfv::LocalStiffness<T>,
) {
    for i in 0..local.n {
        for j in 0..local.n {
            let v = local.get(i, j);
            if v != T::zero() {
                trip.push(dofs[i], dofs[j], v);
            }
        }
    }
}

/// The system restricted to non-Dirichlet unknowns, with the boundary data
/// moved to the right-hand side symmetrically.
#[derive(Debug, Clone)]
pub struct ReducedSystem<T> {
    pub matrix: Csr<T>,
    pub rhs: Vec<T>,
    /// Global dof of each free unknown.
    pub free: Vec<usize>,
    /// Free index of each global dof, `usize::MAX` for Dirichlet dofs.
    pub pos: Vec<usize>,
}

/// Eliminate the Dirichlet unknowns.
pub fn apply_dirichlet<T: Scalar>(sys: &GlobalSystem<T>) -> ReducedSystem<T> {
    let n = sys.n();
    let mut pos = vec![usize::MAX; n];
    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        if sys.dirichlet[i].is_none() {
            pos[i] = free.len();
            free.push(i);
        }
    }
    let mut trip = Triplets::new(free.len());
    let mut rhs: Vec<T> = free.iter().map(|&i| sys.rhs[i]).collect();
    for (fi, &i) in free.iter().enumerate() {
        let (cols, vals) = sys.matrix.row(i);
        for (c, v) in cols.iter().zip(vals) {
            let j = *c as usize;
            match sys.dirichlet[j] {
                None => trip.push(fi, pos[j], *v),
                Some(g) => rhs[fi] -= *v * g,
            }
        }
    }
    ReducedSystem {
        matrix: trip.into_csr(),
        rhs,
        free,
        pos,
    }
}
