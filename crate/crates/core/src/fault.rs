//! Co-dimension-one fault representation with two independent layers.
//!
//! Each side of the fault carries its own 1D grid inherited one-to-one from
//! the matrix fault-trace faces of that side. The two grids may be
//! non-matching; the mid-plane coupling then runs over the intersection of
//! their partitions. For the virtual-cell coupling every fault layer cell is
//! extruded in the normal direction by half the fault thickness, yielding a
//! thin rectangle on which the ordinary 2D hybrid scheme applies.

use crate::error::{Error, Result};
use crate::geom::{Point2, Rect, Vec2};
use crate::hfv::PatchFace;
use crate::mesh::{Mesh, Subdomain};
use crate::scalar::{real, to_f64, Scalar};

/// Geometry of the fault: a straight vertical segment of the plane.
#[derive(Debug, Clone)]
pub struct FaultGeometry<T> {
    /// Abscissa of the centre line `gamma_hat`.
    pub locus_x: T,
    /// Vertical extent of the centre line (union of both layers).
    pub y_range: [T; 2],
    /// Thickness `d` of the fault zone.
    pub thickness: T,
}

impl<T: Scalar> FaultGeometry<T> {
    pub fn new(locus_x: T, y_range: [T; 2], thickness: T) -> Result<Self> {
        if !(thickness > T::zero()) {
            return Err(Error::Fault(format!(
                "fault thickness must be positive, got {}",
                thickness
            )));
        }
        Ok(Self {
            locus_x,
            y_range,
            thickness,
        })
    }

    /// Unit normal of the centre line, pointing from `Omega_1` to `Omega_2`.
    pub fn normal(&self) -> Vec2<T> {
        Vec2::new(T::one(), T::zero())
    }

    pub fn length(&self) -> T {
        self.y_range[1] - self.y_range[0]
    }

    /// Abscissa of the physical interface `gamma_j` of one layer.
    pub fn interface_x(&self, layer: usize) -> T {
        let half = self.thickness * real::<T>(0.5);
        match layer {
            0 => self.locus_x - half,
            _ => self.locus_x + half,
        }
    }

    /// Abscissa of the centre line of one fault layer.
    pub fn centerline_x(&self, layer: usize) -> T {
        let quarter = self.thickness * real::<T>(0.25);
        match layer {
            0 => self.locus_x - quarter,
            _ => self.locus_x + quarter,
        }
    }
}

/// One 1D fault cell: a y-interval linked to the matrix trace face it
/// inherits from.
#[derive(Debug, Clone, Copy)]
pub struct FaultCell1d<T> {
    pub y0: T,
    pub y1: T,
    pub trace_face: usize,
}

impl<T: Scalar> FaultCell1d<T> {
    pub fn len(&self) -> T {
        self.y1 - self.y0
    }

    pub fn center_y(&self) -> T {
        (self.y0 + self.y1) * real::<T>(0.5)
    }
}

/// The 1D grid of one fault layer, cells ordered bottom to top.
#[derive(Debug, Clone)]
pub struct FaultLayerGrid<T> {
    /// 0 for the `Omega_1` side, 1 for the `Omega_2` side.
    pub layer: usize,
    pub cells: Vec<FaultCell1d<T>>,
    /// Abscissa of this layer's centre line, used for projections.
    pub centerline_x: T,
}

impl<T: Scalar> FaultLayerGrid<T> {
    pub fn y_range(&self) -> [T; 2] {
        [self.cells[0].y0, self.cells.last().unwrap().y1]
    }

    /// The `n_cells + 1` junction ordinates; junctions 0 and `n_cells` are
    /// the layer ends carrying the `partial gamma_hat_j` conditions.
    pub fn junctions(&self) -> Vec<T> {
        let mut out: Vec<T> = self.cells.iter().map(|c| c.y0).collect();
        out.push(self.cells.last().unwrap().y1);
        out
    }

    pub fn cell_lengths(&self) -> Vec<T> {
        self.cells.iter().map(|c| c.len()).collect()
    }

    /// Uniform standalone grid, handy for kernel-level studies and tests.
    pub fn uniform(layer: usize, y0: T, y1: T, n: usize, centerline_x: T) -> Self {
        let h = (y1 - y0) / real::<T>(n as f64);
        let cells = (0..n)
            .map(|k| FaultCell1d {
                y0: y0 + h * real::<T>(k as f64),
                y1: y0 + h * real::<T>((k + 1) as f64),
                trace_face: usize::MAX,
            })
            .collect();
        Self {
            layer,
            cells,
            centerline_x,
        }
    }
}

/// Inherit the layer grids from the matrix trace faces of each side.
pub fn extract_layer_grids<T: Scalar>(
    mesh: &Mesh<T>,
    geometry: &FaultGeometry<T>,
) -> Result<[FaultLayerGrid<T>; 2]> {
    let mut out = Vec::with_capacity(2);
    for (layer, side) in [(0usize, Subdomain::One), (1usize, Subdomain::Two)] {
        let traces = mesh.trace_faces(side);
        if traces.is_empty() {
            return Err(Error::Fault(format!(
                "side {} has no fault-trace faces; the fault must cut the domain",
                layer + 1
            )));
        }
        let half = real::<T>(0.5);
        let cells: Vec<FaultCell1d<T>> = traces
            .iter()
            .map(|&f| {
                let c = mesh.face_center[f].y;
                let h = mesh.face_len[f] * half;
                FaultCell1d {
                    y0: c - h,
                    y1: c + h,
                    trace_face: f,
                }
            })
            .collect();
        let tol = real::<T>(1e-10) * mesh.h_max;
        for w in cells.windows(2) {
            if (w[1].y0 - w[0].y1).abs() > tol {
                return Err(Error::Fault(format!(
                    "trace faces of side {} are not contiguous near y = {}",
                    layer + 1,
                    w[0].y1
                )));
            }
        }
        out.push(FaultLayerGrid {
            layer,
            cells,
            centerline_x: geometry.centerline_x(layer),
        });
    }
    let mut it = out.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap()])
}

/// Effective permeabilities of the reduced model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoefficients<T> {
    /// Tangential conductance `lambda_hat = d lambda_{f,tau} / 2`.
    pub lambda_hat: T,
    /// Normal transmissibility `lambda_gamma = 2 lambda_{f,n} / d`.
    pub lambda_gamma: T,
}

pub fn effective_coefficients<T: Scalar>(
    lambda_n: T,
    lambda_t: T,
    d: T,
) -> Result<EffectiveCoefficients<T>> {
    if !(lambda_n > T::zero() && lambda_t > T::zero() && d > T::zero()) {
        return Err(Error::Fault(format!(
            "fault data must be strictly positive: lambda_n = {}, lambda_t = {}, d = {}",
            lambda_n, lambda_t, d
        )));
    }
    let two = real::<T>(2.0);
    Ok(EffectiveCoefficients {
        lambda_hat: d * lambda_t / two,
        lambda_gamma: two * lambda_n / d,
    })
}

/// One sub-face of the mid-plane: a y-interval together with the covering
/// cell of each layer, when present.
#[derive(Debug, Clone, Copy)]
pub struct SubFace<T> {
    pub y0: T,
    pub y1: T,
    /// Index into each layer's cell list; `None` where the layer does not
    /// cover this interval (sliding configurations).
    pub cells: [Option<usize>; 2],
}

impl<T: Scalar> SubFace<T> {
    pub fn len(&self) -> T {
        self.y1 - self.y0
    }

    pub fn mid(&self) -> T {
        (self.y0 + self.y1) * real::<T>(0.5)
    }

    pub fn is_shared(&self) -> bool {
        self.cells[0].is_some() && self.cells[1].is_some()
    }
}

/// Common refinement of the two layer partitions on the mid-plane.
#[derive(Debug, Clone)]
pub struct InterfacePartition<T> {
    pub subs: Vec<SubFace<T>>,
}

impl<T: Scalar> InterfacePartition<T> {
    /// Total length of the doubly covered part of the mid-plane.
    pub fn overlap_len(&self) -> T {
        self.subs
            .iter()
            .filter(|s| s.is_shared())
            .map(|s| s.len())
            .sum()
    }
}

/// Sorted merge of the two layers' breakpoints. Sub-faces shorter than
/// `sliver_tol` are merged into a neighbor to keep the hybrid unknowns well
/// conditioned.
pub fn intersect_partitions<T: Scalar>(
    layer1: &FaultLayerGrid<T>,
    layer2: &FaultLayerGrid<T>,
    sliver_tol: T,
) -> InterfacePartition<T> {
    let mut breaks: Vec<T> = layer1
        .junctions()
        .into_iter()
        .chain(layer2.junctions())
        .collect();
    breaks.sort_by(|a, b| to_f64(*a).partial_cmp(&to_f64(*b)).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= sliver_tol);

    let find = |grid: &FaultLayerGrid<T>, y: T| -> Option<usize> {
        let r = grid.y_range();
        if y < r[0] || y > r[1] {
            return None;
        }
        grid.cells.iter().position(|c| y >= c.y0 && y <= c.y1)
    };

    let mut subs: Vec<SubFace<T>> = Vec::new();
    for w in breaks.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        if y1 - y0 <= sliver_tol {
            continue;
        }
        let mid = (y0 + y1) * real::<T>(0.5);
        let cells = [find(layer1, mid), find(layer2, mid)];
        if cells[0].is_none() && cells[1].is_none() {
            continue;
        }
        subs.push(SubFace { y0, y1, cells });
    }
    InterfacePartition { subs }
}

/// Face roles of a virtually extruded fault cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VirtualFaceKind {
    /// Shared with the matrix fault-trace face of this layer cell.
    Footprint(usize),
    /// Mid-plane sub-face, indexed into the interface partition.
    MidPlane(usize),
    /// Lateral face at the given junction of this layer (junction 0 and
    /// `n_cells` are the layer ends).
    Lateral(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct VirtualFace<T> {
    pub kind: VirtualFaceKind,
    pub geom: PatchFace<T>,
}

/// A fault layer cell extruded by `d/2` into a thin rectangle.
#[derive(Debug, Clone)]
pub struct VirtualCell<T> {
    pub layer: usize,
    pub index: usize,
    pub rect: Rect<T>,
    pub center: Point2<T>,
    pub area: T,
    pub faces: Vec<VirtualFace<T>>,
}

impl<T: Scalar> VirtualCell<T> {
    pub fn patch(&self) -> crate::hfv::CellPatch<T> {
        crate::hfv::CellPatch {
            center: self.center,
            area: self.area,
            faces: self.faces.iter().map(|f| f.geom).collect(),
        }
    }
}

/// The virtual cells of both layers plus the shared mid-plane partition size.
#[derive(Debug, Clone)]
pub struct VirtualCellGrid<T> {
    pub cells: [Vec<VirtualCell<T>>; 2],
    pub n_midplane: usize,
}

/// Extrude every fault layer cell into its virtual rectangle and build the
/// full cone geometry. Mid-plane sub-faces not covered by the other layer
/// become no-flow boundary faces of their cell.
pub fn extrude_virtual_cells<T: Scalar>(
    layers: &[FaultLayerGrid<T>; 2],
    partition: &InterfacePartition<T>,
    geometry: &FaultGeometry<T>,
) -> VirtualCellGrid<T> {
    let half = real::<T>(0.5);
    let quarter = real::<T>(0.25);
    let w = geometry.thickness * half; // extrusion width d/2
    let d_mid = geometry.thickness * quarter; // centre to footprint / mid-plane

    let mut grids: [Vec<VirtualCell<T>>; 2] = [Vec::new(), Vec::new()];
    for (layer, grid) in layers.iter().enumerate() {
        // Outward direction toward the mid-plane: +x for layer 0, -x for layer 1.
        let toward_mid = if layer == 0 { T::one() } else { -T::one() };
        let cx = geometry.centerline_x(layer);
        for (k, cell) in grid.cells.iter().enumerate() {
            let rect = if layer == 0 {
                Rect::new(geometry.locus_x - w, cell.y0, geometry.locus_x, cell.y1)
            } else {
                Rect::new(geometry.locus_x, cell.y0, geometry.locus_x + w, cell.y1)
            };
            let center = Point2::new(cx, cell.center_y());
            let mut faces = Vec::with_capacity(4);
            faces.push(VirtualFace {
                kind: VirtualFaceKind::Footprint(cell.trace_face),
                geom: PatchFace {
                    center: Point2::new(geometry.interface_x(layer), cell.center_y()),
                    measure: cell.len(),
                    normal: Vec2::new(-toward_mid, T::zero()),
                    dist: d_mid,
                },
            });
            for (s, sub) in partition.subs.iter().enumerate() {
                if sub.cells[layer] == Some(k) {
                    faces.push(VirtualFace {
                        kind: VirtualFaceKind::MidPlane(s),
                        geom: PatchFace {
                            center: Point2::new(geometry.locus_x, sub.mid()),
                            measure: sub.len(),
                            normal: Vec2::new(toward_mid, T::zero()),
                            dist: d_mid,
                        },
                    });
                }
            }
            for (j, y, ny) in [(k, cell.y0, -T::one()), (k + 1, cell.y1, T::one())] {
                faces.push(VirtualFace {
                    kind: VirtualFaceKind::Lateral(j),
                    geom: PatchFace {
                        center: Point2::new(cx, y),
                        measure: w,
                        normal: Vec2::new(T::zero(), ny),
                        dist: cell.len() * half,
                    },
                });
            }
            grids[layer].push(VirtualCell {
                layer,
                index: k,
                rect,
                center,
                area: w * cell.len(),
                faces,
            });
        }
    }
    VirtualCellGrid {
        cells: grids,
        n_midplane: partition.subs.len(),
    }
}

/// Largest `|n_K + n_L|` over mid-plane sub-faces shared by the two layers.
pub fn normal_discrepancy<T: Scalar>(
    grid: &VirtualCellGrid<T>,
    partition: &InterfacePartition<T>,
) -> T {
    let mut normals: Vec<[Option<Vec2<T>>; 2]> = vec![[None, None]; partition.subs.len()];
    for layer in 0..2 {
        for cell in &grid.cells[layer] {
            for f in &cell.faces {
                if let VirtualFaceKind::MidPlane(s) = f.kind {
                    normals[s][layer] = Some(f.geom.normal);
                }
            }
        }
    }
    discrepancy_of(normals.iter().filter_map(|p| match p {
        [Some(a), Some(b)] => Some((*a, *b)),
        _ => None,
    }))
}

/// Maximum defect `|n_K + n_L|` over a set of opposing normal pairs.
pub fn discrepancy_of<T: Scalar>(pairs: impl IntoIterator<Item = (Vec2<T>, Vec2<T>)>) -> T {
    pairs
        .into_iter()
        .map(|(a, b)| (a + b).norm())
        .fold(T::zero(), T::max)
}

/// Quality parameter of a fault layer discretization, the 1D analogue of the
/// mesh quality: max of `h_K / d_{K,sigma} = 2` and the junction distance
/// ratios.
pub fn fault_quality<T: Scalar>(grid: &FaultLayerGrid<T>) -> T {
    let mut theta = real::<T>(2.0);
    for w in grid.cells.windows(2) {
        let r = w[0].len() / w[1].len();
        theta = theta.max(r).max(r.recip());
    }
    theta
}

/// Evaluate a function on a layer grid: cell values at the centre line cell
/// midpoints, face values at the junctions (the projection `P_hat_D`).
pub fn project_fault<T: Scalar>(
    grid: &FaultLayerGrid<T>,
    phi: impl Fn(Point2<T>) -> T,
) -> (Vec<T>, Vec<T>) {
    let cells = grid
        .cells
        .iter()
        .map(|c| phi(Point2::new(grid.centerline_x, c.center_y())))
        .collect();
    let faces = grid
        .junctions()
        .into_iter()
        .map(|y| phi(Point2::new(grid.centerline_x, y)))
        .collect();
    (cells, faces)
}

/// Fully assembled fault representation for one mesh.
#[derive(Debug, Clone)]
pub struct FaultModel<T> {
    pub geometry: FaultGeometry<T>,
    pub layers: [FaultLayerGrid<T>; 2],
    pub partition: InterfacePartition<T>,
    pub virtual_grid: VirtualCellGrid<T>,
}

impl<T: Scalar> FaultModel<T> {
    pub fn build(mesh: &Mesh<T>, thickness: T) -> Result<Self> {
        let locus = mesh
            .locus_x
            .ok_or_else(|| Error::Fault("mesh has no fault locus".into()))?;
        let mut geometry = FaultGeometry::new(locus, [T::zero(), T::zero()], thickness)?;
        let layers = extract_layer_grids(mesh, &geometry)?;
        let lo = layers[0].y_range()[0].min(layers[1].y_range()[0]);
        let hi = layers[0].y_range()[1].max(layers[1].y_range()[1]);
        geometry.y_range = [lo, hi];
        let sliver = real::<T>(1e-12) * mesh.h_max;
        let partition = intersect_partitions(&layers[0], &layers[1], sliver);
        let virtual_grid = extrude_virtual_cells(&layers, &partition, &geometry);
        Ok(Self {
            geometry,
            layers,
            partition,
            virtual_grid,
        })
    }

    /// Whether the two layer grids coincide (the reduced coupling form
    /// requires this).
    pub fn matching(&self) -> bool {
        if self.layers[0].cells.len() != self.layers[1].cells.len() {
            return false;
        }
        let tol = real::<T>(1e-10) * self.geometry.length().max(T::one());
        self.layers[0]
            .cells
            .iter()
            .zip(&self.layers[1].cells)
            .all(|(a, b)| (a.y0 - b.y0).abs() <= tol && (a.y1 - b.y1).abs() <= tol)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.geometry.thickness > real::<T>(0.1) * self.geometry.length() {
            out.push(format!(
                "fault thickness d = {} is not small against the fault length {}",
                self.geometry.thickness,
                self.geometry.length()
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rect;
    use crate::mesh::build_two_block;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> Rect<f64> {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    }

    fn model(nl: usize, nr: usize, offset: f64) -> FaultModel<f64> {
        let mesh = build_two_block(2, nl, 2, nr, unit(), 0.5, offset).unwrap();
        FaultModel::build(&mesh, 1e-2).unwrap()
    }

    #[test]
    fn matching_layers_are_identical_partitions() {
        let m = model(2, 2, 0.0);
        assert!(m.matching());
        for (a, b) in m.layers[0].cells.iter().zip(&m.layers[1].cells) {
            assert_relative_eq!(a.y0, b.y0);
            assert_relative_eq!(a.y1, b.y1);
        }
    }

    #[test]
    fn non_matching_layer_sizes() {
        let m = model(2, 8, 0.0);
        assert_eq!(m.layers[0].cells.len(), 2);
        assert_eq!(m.layers[1].cells.len(), 8);
        assert!(!m.matching());
    }

    #[test]
    fn offset_shifts_layer_ranges() {
        let m = model(4, 4, 0.25);
        let r1 = m.layers[0].y_range();
        let r2 = m.layers[1].y_range();
        assert_relative_eq!(r1[0] - r2[0], 0.25);
        assert_relative_eq!(r1[1] - r2[1], 0.25);
    }

    #[test]
    fn trace_links_are_one_to_one() {
        let m = model(3, 7, 0.0);
        for layer in &m.layers {
            let mut faces: Vec<usize> = layer.cells.iter().map(|c| c.trace_face).collect();
            faces.dedup();
            assert_eq!(faces.len(), layer.cells.len());
        }
    }

    #[test]
    fn effective_coefficient_values() {
        let c = effective_coefficients(1.0, 1e-2, 1e-2).unwrap();
        assert_relative_eq!(c.lambda_hat, 5e-5);
        assert_relative_eq!(c.lambda_gamma, 200.0);
        let fix = effective_coefficients(3.0, 3.0, 2.0).unwrap();
        assert_relative_eq!(fix.lambda_hat, 3.0);
        assert_relative_eq!(fix.lambda_gamma, 3.0);
        assert!(effective_coefficients(-1.0, 1.0, 1.0).is_err());
        assert!(effective_coefficients(1.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn effective_coefficients_are_homogeneous(
            ln in 1e-6f64..1e6, lt in 1e-6f64..1e6, d in 1e-6f64..1e2, c in 1e-3f64..1e3
        ) {
            let base = effective_coefficients(ln, lt, d).unwrap();
            let t_scaled = effective_coefficients(ln, c * lt, d).unwrap();
            prop_assert!((t_scaled.lambda_hat - c * base.lambda_hat).abs() <= 1e-12 * t_scaled.lambda_hat.abs());
            let d_scaled = effective_coefficients(ln, lt, c * d).unwrap();
            prop_assert!((d_scaled.lambda_hat - c * base.lambda_hat).abs() <= 1e-12 * d_scaled.lambda_hat.abs());
            prop_assert!((d_scaled.lambda_gamma - base.lambda_gamma / c).abs() <= 1e-12 * d_scaled.lambda_gamma.abs());
        }
    }

    fn grid(bounds: &[f64]) -> FaultLayerGrid<f64> {
        let cells = bounds
            .windows(2)
            .map(|w| FaultCell1d {
                y0: w[0],
                y1: w[1],
                trace_face: 0,
            })
            .collect();
        FaultLayerGrid {
            layer: 0,
            cells,
            centerline_x: 0.5,
        }
    }

    #[test]
    fn intersection_merges_breakpoints() {
        let p = intersect_partitions(&grid(&[0.0, 0.5, 1.0]), &grid(&[0.0, 0.25, 1.0]), 1e-12);
        let bounds: Vec<(f64, f64)> = p.subs.iter().map(|s| (s.y0, s.y1)).collect();
        assert_eq!(bounds, vec![(0.0, 0.25), (0.25, 0.5), (0.5, 1.0)]);
        assert!(p.subs.iter().all(|s| s.is_shared()));
    }

    #[test]
    fn intersection_of_identical_partitions_is_identity() {
        let g = grid(&[0.0, 0.3, 0.6, 1.0]);
        let p = intersect_partitions(&g, &g, 1e-12);
        assert_eq!(p.subs.len(), 3);
        for (s, c) in p.subs.iter().zip(&g.cells) {
            assert_relative_eq!(s.y0, c.y0);
            assert_relative_eq!(s.y1, c.y1);
            assert!(s.is_shared());
        }
    }

    #[test]
    fn intersection_with_offset_has_dangling_subfaces() {
        let p = intersect_partitions(&grid(&[0.0, 0.5, 1.0]), &grid(&[0.25, 0.75, 1.25]), 1e-12);
        let dangle1: Vec<_> = p.subs.iter().filter(|s| s.cells[1].is_none()).collect();
        let dangle2: Vec<_> = p.subs.iter().filter(|s| s.cells[0].is_none()).collect();
        assert_eq!(dangle1.len(), 1);
        assert_relative_eq!(dangle1[0].y0, 0.0);
        assert_relative_eq!(dangle1[0].y1, 0.25);
        assert_eq!(dangle2.len(), 1);
        assert_relative_eq!(dangle2[0].y0, 1.0);
        assert_relative_eq!(dangle2[0].y1, 1.25);
        let overlap: f64 = p.overlap_len();
        assert_relative_eq!(overlap, 0.75);
    }

    proptest! {
        #[test]
        fn subface_lengths_tile_the_covered_extent(n1 in 1usize..9, n2 in 1usize..9, off in -0.7f64..0.7) {
            let g1 = FaultLayerGrid::uniform(0, off, off + 1.0, n1, 0.5);
            let g2 = FaultLayerGrid::uniform(1, 0.0, 1.0, n2, 0.5);
            let p = intersect_partitions(&g1, &g2, 1e-12);
            let covered1: f64 = p.subs.iter().filter(|s| s.cells[0].is_some()).map(|s| s.len()).sum();
            let covered2: f64 = p.subs.iter().filter(|s| s.cells[1].is_some()).map(|s| s.len()).sum();
            prop_assert!((covered1 - 1.0).abs() < 1e-9);
            prop_assert!((covered2 - 1.0).abs() < 1e-9);
            let overlap = p.overlap_len();
            prop_assert!((overlap - (1.0 - off.abs())).abs() < 1e-9);
        }
    }

    #[test]
    fn virtual_cell_geometry() {
        let g1 = grid(&[0.0, 0.5, 1.0]);
        let geo = FaultGeometry::new(0.5, [0.0, 1.0], 1e-2).unwrap();
        let p = intersect_partitions(&g1, &g1, 1e-12);
        let vg = extrude_virtual_cells(&[g1.clone(), g1.clone()], &p, &geo);
        let vc = &vg.cells[0][0];
        assert_relative_eq!(vc.rect.x0, 0.5 - 5e-3);
        assert_relative_eq!(vc.rect.x1, 0.5);
        assert_relative_eq!(vc.rect.y0, 0.0);
        assert_relative_eq!(vc.rect.y1, 0.5);
        assert_relative_eq!(vc.area, 2.5e-3);
        // Matching grids: exactly one mid-plane face per virtual cell.
        for layer in &vg.cells {
            for c in layer {
                let mids = c
                    .faces
                    .iter()
                    .filter(|f| matches!(f.kind, VirtualFaceKind::MidPlane(_)))
                    .count();
                assert_eq!(mids, 1);
            }
        }
        // Cone areas tile each virtual cell.
        for c in vg.cells.iter().flatten() {
            let sum: f64 = c.faces.iter().map(|f| f.geom.cone_area()).sum();
            assert_relative_eq!(sum, c.area, max_relative = 1e-12);
        }
    }

    #[test]
    fn virtual_cell_midplane_split_follows_partition() {
        let g1 = grid(&[0.0, 0.5, 1.0]);
        let g2 = grid(&[0.0, 0.25, 1.0]);
        let geo = FaultGeometry::new(0.5, [0.0, 1.0], 1e-2).unwrap();
        let p = intersect_partitions(&g1, &g2, 1e-12);
        let vg = extrude_virtual_cells(&[g1, g2], &p, &geo);
        let first = &vg.cells[0][0];
        let mids: Vec<(f64, f64)> = first
            .faces
            .iter()
            .filter_map(|f| match f.kind {
                VirtualFaceKind::MidPlane(s) => Some((p.subs[s].y0, p.subs[s].y1)),
                _ => None,
            })
            .collect();
        assert_eq!(mids, vec![(0.0, 0.25), (0.25, 0.5)]);
    }

    #[test]
    fn virtual_areas_sum_per_layer() {
        let m = model(3, 8, 0.0);
        for layer in 0..2 {
            let total: f64 = m.virtual_grid.cells[layer].iter().map(|c| c.area).sum();
            let extent = m.layers[layer].y_range();
            assert_relative_eq!(
                total,
                0.5e-2 * (extent[1] - extent[0]),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn straight_fault_has_zero_normal_discrepancy() {
        for m in [model(2, 2, 0.0), model(2, 8, 0.0), model(4, 16, 0.0)] {
            assert_eq!(normal_discrepancy(&m.virtual_grid, &m.partition), 0.0);
        }
    }

    #[test]
    fn discrepancy_echoes_injected_perturbation() {
        let n = Vec2::new(1.0, 0.0);
        let perturbed = Vec2::new(-1.0, 1e-3);
        assert_relative_eq!(discrepancy_of([(n, perturbed)]), 1e-3);
    }

    #[test]
    fn thick_fault_warning() {
        let mesh = build_two_block(2, 2, 2, 2, unit(), 0.5, 0.0).unwrap();
        let m = FaultModel::build(&mesh, 0.5).unwrap();
        assert!(!m.warnings().is_empty());
        let thin = FaultModel::build(&mesh, 1e-3).unwrap();
        assert!(thin.warnings().is_empty());
    }

    #[test]
    fn projection_evaluates_at_midpoints_and_junctions() {
        let g = FaultLayerGrid::uniform(0, 0.0, 1.0, 4, 0.5);
        let (cells, faces) = project_fault(&g, |p| p.y);
        assert_eq!(cells, vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(faces, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let (ones, _) = project_fault(&g, |_| 1.0);
        assert!(ones.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn fault_quality_of_uniform_grid() {
        let g = FaultLayerGrid::uniform(0, 0.0, 1.0, 8, 0.5);
        assert_relative_eq!(fault_quality(&g), 2.0);
        let uneven = grid(&[0.0, 0.1, 0.4, 1.0]);
        assert_relative_eq!(fault_quality(&uneven), 3.0);
    }
}
