//! Discrete Darcy flux recovery and conservation checks.
//!
//! The flux of a cell through one of its faces is read off the local
//! stiffness: `F_{K,sigma} = -(A_K u_loc)_sigma`, the outward discrete flux.
//! Interior faces then balance exactly up to solver accuracy, which is the
//! local conservativity of the hybrid scheme. Across the fault mid-plane the
//! normal flux density `u_n` comes from the virtual-cell face fluxes, or
//! from `lambda_gamma [p_hat]` in reduced mode.

use crate::error::Result;
use crate::fault::{effective_coefficients, VirtualFaceKind};
use crate::geom::{Tensor2, Vec2};
use crate::hfv::{local_stiffness, tangential_local_stiffness};
use crate::mesh::FaceKind;
use crate::scalar::{real, Scalar};
use crate::system::scenario::{CouplingMode, Discretization, Scenario};
use crate::system::solve::HybridState;

/// One mid-plane sub-face flux across the fault (positive toward `Omega_2`).
#[derive(Debug, Clone, Copy)]
pub struct SubFlux<T> {
    pub y0: T,
    pub y1: T,
    pub density: T,
}

/// Recovered fluxes of a solved state.
#[derive(Debug, Clone)]
pub struct FluxField<T> {
    /// Outward flux of each matrix cell through its four faces.
    pub matrix: Vec<[T; 4]>,
    /// Outward fluxes of the virtual fault cells (virtual mode).
    pub virtual_cells: [Vec<Vec<T>>; 2],
    /// Normal flux density across the fault mid-plane per sub-face.
    pub u_n: Vec<SubFlux<T>>,
    /// Reduced mode: flux leaving the matrix into each fault layer cell.
    pub side_exchange: [Vec<T>; 2],
    /// Outward tangential flux at each layer end, [bottom, top] per layer.
    pub fault_end_flux: [[T; 2]; 2],
}

impl<T: Scalar> FluxField<T> {
    /// Signed flux density of a matrix face with respect to the outward
    /// normal of its first adjacent cell.
    pub fn face_density(&self, disc: &Discretization<T>, face: usize) -> T {
        let mesh = &disc.mesh;
        let c = mesh.faces[face].cells[0].expect("face has a first cell");
        let k = mesh.cell_faces[c].iter().position(|&f| f == face).unwrap();
        self.matrix[c][k] / mesh.face_len[face]
    }

    /// Cell-averaged Darcy velocity reconstructed from the face fluxes:
    /// `u_K = (1/|K|) sum F_{K,sigma} (x_sigma - x_K)`.
    pub fn cell_velocity(&self, disc: &Discretization<T>, cell: usize) -> Vec2<T> {
        let mesh = &disc.mesh;
        let mut u = Vec2::zero();
        for (k, &f) in mesh.cell_faces[cell].iter().enumerate() {
            let r = mesh.face_center[f] - mesh.cell_center[cell];
            u = u + r * self.matrix[cell][k];
        }
        u * mesh.cell_area[cell].recip()
    }
}

/// Recover all discrete fluxes from a solved state.
pub fn recover_fluxes<T: Scalar>(
    disc: &Discretization<T>,
    scenario: &Scenario<T>,
    state: &HybridState<T>,
) -> Result<FluxField<T>> {
    let mesh = &disc.mesh;
    let mu = scenario.viscosity;
    let alpha = scenario.scheme.alpha;

    let mut matrix = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let lambda = scenario.materials.cell_lambda(mesh, c).scale(mu.recip());
        let local = local_stiffness(&mesh.patch(c), lambda, alpha)?;
        let mut dofs = vec![state.matrix.cell[c]];
        for &f in &mesh.cell_faces[c] {
            dofs.push(state.matrix.face[f]);
        }
        let row = local.apply(&dofs);
        matrix.push([-row[1], -row[2], -row[3], -row[4]]);
    }

    let mut virtual_cells: [Vec<Vec<T>>; 2] = [Vec::new(), Vec::new()];
    let mut u_n = Vec::new();
    let mut side_exchange: [Vec<T>; 2] = [Vec::new(), Vec::new()];
    let mut fault_end_flux = [[T::zero(); 2]; 2];

    if let Some(fault) = &disc.fault {
        let spec = scenario.fault.as_ref().expect("fault spec");
        let d = fault.geometry.thickness;
        let half = real::<T>(0.5);
        let two = real::<T>(2.0);
        let coeffs_of = |layer: usize, k: usize| {
            let cell = &fault.layers[layer].cells[k];
            spec.cell_coeffs(
                &scenario.materials,
                mesh,
                layer,
                cell.center_y(),
                cell.trace_face,
            )
        };

        match disc.mode {
            CouplingMode::Virtual => {
                for layer in 0..2 {
                    let m = fault.layers[layer].cells.len();
                    for (k, vc) in fault.virtual_grid.cells[layer].iter().enumerate() {
                        let (ln, lt, _) = coeffs_of(layer, k)?;
                        let lambda_f = Tensor2::diagonal(ln, lt).scale(mu.recip());
                        let local = local_stiffness(&vc.patch(), lambda_f, alpha)?;
                        let mut dofs = vec![state.fault_cell[layer][k]];
                        for f in &vc.faces {
                            dofs.push(match f.kind {
                                VirtualFaceKind::Footprint(trace) => state.matrix.face[trace],
                                VirtualFaceKind::MidPlane(s) => state.midplane[s],
                                VirtualFaceKind::Lateral(i) => state.fault_face[layer][i],
                            });
                        }
                        let row = local.apply(&dofs);
                        let fluxes: Vec<T> = row[1..].iter().map(|&v| -v).collect();
                        for (fi, vf) in vc.faces.iter().enumerate() {
                            if let VirtualFaceKind::Lateral(i) = vf.kind {
                                if i == 0 {
                                    fault_end_flux[layer][0] += fluxes[fi];
                                } else if i == m {
                                    fault_end_flux[layer][1] += fluxes[fi];
                                }
                            }
                        }
                        virtual_cells[layer].push(fluxes);
                    }
                }
                // Mid-plane densities from the layer-1 side when covered,
                // otherwise from the layer-2 side with flipped sign.
                for (s, sub) in fault.partition.subs.iter().enumerate() {
                    let density = if let Some(k) = sub.cells[0] {
                        let vc = &fault.virtual_grid.cells[0][k];
                        let fi = vc
                            .faces
                            .iter()
                            .position(|f| f.kind == VirtualFaceKind::MidPlane(s))
                            .unwrap();
                        virtual_cells[0][k][fi] / sub.len()
                    } else if let Some(k) = sub.cells[1] {
                        let vc = &fault.virtual_grid.cells[1][k];
                        let fi = vc
                            .faces
                            .iter()
                            .position(|f| f.kind == VirtualFaceKind::MidPlane(s))
                            .unwrap();
                        -virtual_cells[1][k][fi] / sub.len()
                    } else {
                        T::zero()
                    };
                    u_n.push(SubFlux {
                        y0: sub.y0,
                        y1: sub.y1,
                        density,
                    });
                }
            }
            CouplingMode::Reduced => {
                let mut lam_gamma = [Vec::new(), Vec::new()];
                for layer in 0..2 {
                    let m = fault.layers[layer].cells.len();
                    for (k, cell) in fault.layers[layer].cells.iter().enumerate() {
                        let (ln, lt, _) = coeffs_of(layer, k)?;
                        let lg = effective_coefficients(ln, lt, d)?.lambda_gamma;
                        lam_gamma[layer].push(lg);
                        let p_trace = state.matrix.face[cell.trace_face];
                        let p_hat = state.fault_cell[layer][k];
                        side_exchange[layer].push(two * lg / mu * (p_trace - p_hat) * cell.len());
                        // Tangential end fluxes from the 1D local stiffness.
                        if k == 0 || k == m - 1 {
                            let lambda_hat = d * lt * half / mu;
                            let local = tangential_local_stiffness(
                                cell.len(),
                                lambda_hat,
                                scenario.scheme.alpha_hat,
                            );
                            let dofs = [
                                state.fault_cell[layer][k],
                                state.fault_face[layer][k],
                                state.fault_face[layer][k + 1],
                            ];
                            let row = local.apply(&dofs);
                            if k == 0 {
                                fault_end_flux[layer][0] += -row[1];
                            }
                            if k == m - 1 {
                                fault_end_flux[layer][1] += -row[2];
                            }
                        }
                    }
                }
                for (k, cell) in fault.layers[0].cells.iter().enumerate() {
                    let jump_coef = two * lam_gamma[0][k] * lam_gamma[1][k]
                        / (lam_gamma[0][k] + lam_gamma[1][k])
                        / mu;
                    let density = jump_coef * (state.fault_cell[0][k] - state.fault_cell[1][k]);
                    u_n.push(SubFlux {
                        y0: cell.y0,
                        y1: cell.y1,
                        density,
                    });
                }
            }
        }
    }

    Ok(FluxField {
        matrix,
        virtual_cells,
        u_n,
        side_exchange,
        fault_end_flux,
    })
}

/// Largest face imbalance relative to the largest face flux: the local
/// conservativity defect over interior matrix faces, footprints, shared
/// mid-plane sub-faces and the lateral faces between virtual cells.
pub fn conservativity_defect<T: Scalar>(disc: &Discretization<T>, flux: &FluxField<T>) -> T {
    let mesh = &disc.mesh;
    let mut scale = T::min_positive_value();
    for fs in &flux.matrix {
        for f in fs {
            scale = scale.max(f.abs());
        }
    }
    let mut worst = T::zero();

    let mut face_sum = vec![T::zero(); mesh.n_faces()];
    for c in 0..mesh.n_cells() {
        for (k, &f) in mesh.cell_faces[c].iter().enumerate() {
            face_sum[f] += flux.matrix[c][k];
        }
    }
    for (f, face) in mesh.faces.iter().enumerate() {
        if face.kind == FaceKind::Interior {
            worst = worst.max(face_sum[f].abs());
        }
    }

    if let Some(fault) = &disc.fault {
        match disc.mode {
            CouplingMode::Virtual => {
                let mut mid_sum = vec![T::zero(); fault.partition.subs.len()];
                let mut mid_seen = vec![0usize; fault.partition.subs.len()];
                for layer in 0..2 {
                    let grid = &fault.layers[layer];
                    let mut lateral = vec![T::zero(); grid.cells.len() + 1];
                    for (k, vc) in fault.virtual_grid.cells[layer].iter().enumerate() {
                        for (fi, vf) in vc.faces.iter().enumerate() {
                            let f = flux.virtual_cells[layer][k][fi];
                            scale = scale.max(f.abs());
                            match vf.kind {
                                VirtualFaceKind::Footprint(trace) => {
                                    worst = worst.max((face_sum[trace] + f).abs());
                                }
                                VirtualFaceKind::MidPlane(s) => {
                                    mid_sum[s] += f;
                                    mid_seen[s] += 1;
                                }
                                VirtualFaceKind::Lateral(i) => lateral[i] += f,
                            }
                        }
                    }
                    for i in 1..grid.cells.len() {
                        worst = worst.max(lateral[i].abs());
                    }
                }
                for s in 0..mid_sum.len() {
                    if mid_seen[s] == 2 {
                        worst = worst.max(mid_sum[s].abs());
                    }
                }
            }
            CouplingMode::Reduced => {
                for layer in 0..2 {
                    for (k, cell) in fault.layers[layer].cells.iter().enumerate() {
                        let ex = flux.side_exchange[layer][k];
                        scale = scale.max(ex.abs());
                        worst = worst.max((face_sum[cell.trace_face] - ex).abs());
                    }
                }
            }
        }
    }
    worst / scale
}

/// Global balance defect: boundary outflux (matrix boundary, fault ends and
/// uncovered mid-plane parts) minus the total sources, relative to the gross
/// boundary throughput.
pub fn global_balance_defect<T: Scalar>(
    disc: &Discretization<T>,
    scenario: &Scenario<T>,
    flux: &FluxField<T>,
) -> T {
    let mesh = &disc.mesh;
    let mut outflux = T::zero();
    let mut gross = T::zero();
    for c in 0..mesh.n_cells() {
        for (k, &f) in mesh.cell_faces[c].iter().enumerate() {
            if matches!(mesh.faces[f].kind, FaceKind::Boundary(_)) {
                outflux += flux.matrix[c][k];
                gross += flux.matrix[c][k].abs();
            }
        }
    }
    if let Some(fault) = &disc.fault {
        for layer in 0..2 {
            for end in 0..2 {
                outflux += flux.fault_end_flux[layer][end];
                gross += flux.fault_end_flux[layer][end].abs();
            }
        }
        if disc.mode == CouplingMode::Virtual {
            for (s, sub) in fault.partition.subs.iter().enumerate() {
                if !sub.is_shared() {
                    // Uncovered mid-plane parts are no-flow boundaries.
                    let signed = if sub.cells[0].is_some() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    outflux += signed * flux.u_n[s].density * sub.len();
                    gross += (flux.u_n[s].density * sub.len()).abs();
                }
            }
        }
    }
    let sources = total_sources(disc, scenario);
    (outflux - sources).abs() / sources.abs().max(gross).max(T::min_positive_value())
}

/// Total volumetric sources `sum q |K| + sum q_hat |cell|`.
pub fn total_sources<T: Scalar>(disc: &Discretization<T>, scenario: &Scenario<T>) -> T {
    let mesh = &disc.mesh;
    let mut total = T::zero();
    for c in 0..mesh.n_cells() {
        total += scenario.materials.cell_source(mesh, c) * mesh.cell_area[c];
    }
    if let (Some(fault), Some(spec)) = (&disc.fault, &scenario.fault) {
        for layer in 0..2 {
            for cell in &fault.layers[layer].cells {
                if let Ok((_, _, qhat)) = spec.cell_coeffs(
                    &scenario.materials,
                    mesh,
                    layer,
                    cell.center_y(),
                    cell.trace_face,
                ) {
                    total += qhat * cell.len();
                }
            }
        }
    }
    total
}
