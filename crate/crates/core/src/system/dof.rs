//! Global degree-of-freedom numbering: matrix cells, matrix faces, fault
//! layer cells, fault layer junction faces and (virtual mode) mid-plane
//! sub-faces. Without a fault, matching trace-face pairs collapse onto a
//! shared face unknown and the plain hybrid scheme is recovered.

use crate::error::{Error, Result};
use crate::fault::FaultModel;
use crate::mesh::{Mesh, Subdomain};
use crate::scalar::{to_f64, Scalar};
use crate::system::scenario::CouplingMode;

#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_cells: usize,
    pub n_faces: usize,
    /// Face id to dof index (trace pairs may share a dof when no fault is
    /// modelled).
    pub face_dof: Vec<usize>,
    pub n_face_dofs: usize,
    pub layer_cells: [usize; 2],
    pub layer_cell_off: [usize; 2],
    pub layer_face_off: [usize; 2],
    pub midplane_off: usize,
    pub n_midplane: usize,
    pub total: usize,
}

impl DofMap {
    pub fn build<T: Scalar>(
        mesh: &Mesh<T>,
        fault: Option<&FaultModel<T>>,
        mode: CouplingMode,
    ) -> Result<Self> {
        let n_cells = mesh.n_cells();
        let n_faces = mesh.n_faces();
        let mut face_dof: Vec<usize> = (0..n_faces).map(|f| n_cells + f).collect();
        let mut n_face_dofs = n_faces;

        if fault.is_none() {
            // Fuse coincident trace pairs into one interior-like unknown.
            let t1 = mesh.trace_faces(Subdomain::One);
            let t2 = mesh.trace_faces(Subdomain::Two);
            if t1.len() != t2.len() {
                return Err(Error::Scenario(
                    "a faultless scenario needs matching trace faces (or none)".into(),
                ));
            }
            for (&a, &b) in t1.iter().zip(&t2) {
                let ya = to_f64(mesh.face_center[a].y);
                let yb = to_f64(mesh.face_center[b].y);
                if (ya - yb).abs() > 1e-12 * to_f64(mesh.h_max).max(1.0) {
                    return Err(Error::Scenario(
                        "trace faces do not coincide; cannot fuse them".into(),
                    ));
                }
                face_dof[b] = face_dof[a];
            }
            if !t2.is_empty() {
                // Renumber densely.
                let mut next = n_cells;
                let mut map = vec![usize::MAX; n_cells + n_faces];
                for f in 0..n_faces {
                    let d = face_dof[f];
                    if map[d] == usize::MAX {
                        map[d] = next;
                        next += 1;
                    }
                    face_dof[f] = map[d];
                }
                n_face_dofs = next - n_cells;
            }
        }

        let (layer_cells, n_midplane) = match fault {
            Some(model) => (
                [model.layers[0].cells.len(), model.layers[1].cells.len()],
                if mode == CouplingMode::Virtual {
                    model.partition.subs.len()
                } else {
                    0
                },
            ),
            None => ([0, 0], 0),
        };
        let base = n_cells + n_face_dofs;
        let layer_cell_off = [base, base + layer_cells[0]];
        let after_cells = base + layer_cells[0] + layer_cells[1];
        let layer_face_off = [
            after_cells,
            after_cells
                + if layer_cells[0] > 0 {
                    layer_cells[0] + 1
                } else {
                    0
                },
        ];
        let after_faces = layer_face_off[1]
            + if layer_cells[1] > 0 {
                layer_cells[1] + 1
            } else {
                0
            };
        let midplane_off = after_faces;
        let total = midplane_off + n_midplane;

        Ok(Self {
            n_cells,
            n_faces,
            face_dof,
            n_face_dofs,
            layer_cells,
            layer_cell_off,
            layer_face_off,
            midplane_off,
            n_midplane,
            total,
        })
    }

    #[inline]
    pub fn cell(&self, c: usize) -> usize {
        c
    }

    #[inline]
    pub fn face(&self, f: usize) -> usize {
        self.face_dof[f]
    }

    #[inline]
    pub fn fault_cell(&self, layer: usize, k: usize) -> usize {
        self.layer_cell_off[layer] + k
    }

    /// Junction dof `i` of a layer, `i` in `0 ..= n_cells(layer)`; 0 and the
    /// last one are the layer ends.
    #[inline]
    pub fn fault_face(&self, layer: usize, i: usize) -> usize {
        self.layer_face_off[layer] + i
    }

    #[inline]
    pub fn midplane(&self, s: usize) -> usize {
        self.midplane_off + s
    }
}
