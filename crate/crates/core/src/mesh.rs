//! 2D polygonal discretizations with cone geometry.
//!
//! A mesh is the triplet of cells, faces and points, plus per-(cell, face)
//! cone data: outward unit normal, orthogonal distance from the cell centre
//! to the face and the cone area `|sigma| * d / 2`. The domain is one or two
//! axis-aligned structured blocks of rectangular cells; with two blocks the
//! common vertical locus is a fault trace and each side keeps its own trace
//! faces, which in general do not match.

use crate::error::{Error, Result};
use crate::geom::{Point2, Rect, Vec2};
use crate::scalar::{real, Scalar};

/// The two matrix subdomains separated by the fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subdomain {
    /// Left of the fault.
    One,
    /// Right of the fault.
    Two,
}

/// Domain boundary labels used for boundary-condition assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Role of a face in the discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary(Side),
    /// Trace of the fault on the given side; exactly one adjacent cell.
    FaultTrace(Subdomain),
}

/// Face topology: two endpoints, up to two adjacent cells.
#[derive(Debug, Clone)]
pub struct Face {
    pub points: [usize; 2],
    pub kind: FaceKind,
    pub cells: [Option<usize>; 2],
}

impl Face {
    pub fn n_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

/// Cone data for one (cell, face) pair.
#[derive(Debug, Clone, Copy)]
pub struct Cone<T> {
    /// Outward unit normal of the face with respect to the cell.
    pub normal: Vec2<T>,
    /// Orthogonal distance from the cell centre to the face line.
    pub dist: T,
    /// Cone area `|sigma| * dist / 2`.
    pub area: T,
}

/// One structured block of the mesh, kept for index arithmetic
/// (nested-family interpolation, material frames, VTK export).
#[derive(Debug, Clone)]
pub struct Block<T> {
    pub rect: Rect<T>,
    pub nx: usize,
    pub ny: usize,
    pub subdomain: Subdomain,
    pub cell_offset: usize,
    pub point_offset: usize,
    pub vface_offset: usize,
    pub hface_offset: usize,
}

impl<T: Scalar> Block<T> {
    pub fn hx(&self) -> T {
        self.rect.width() / real::<T>(self.nx as f64)
    }

    pub fn hy(&self) -> T {
        self.rect.height() / real::<T>(self.ny as f64)
    }

    pub fn cell_id(&self, i: usize, j: usize) -> usize {
        self.cell_offset + j * self.nx + i
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }
}

/// Immutable 2D discretization. Safe for concurrent reads once built.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub points: Vec<Point2<T>>,
    pub faces: Vec<Face>,
    pub face_center: Vec<Point2<T>>,
    pub face_len: Vec<T>,
    /// Faces of each cell in [west, east, south, north] order.
    pub cell_faces: Vec<[usize; 4]>,
    pub cell_center: Vec<Point2<T>>,
    pub cell_area: Vec<T>,
    pub cell_diam: Vec<T>,
    pub cell_sub: Vec<Subdomain>,
    /// Cones in the same per-cell face order as `cell_faces`.
    pub cones: Vec<[Cone<T>; 4]>,
    /// `sup h_K`.
    pub h_max: T,
    pub blocks: Vec<Block<T>>,
    /// Fault locus abscissa, when the mesh carries a fault trace.
    pub locus_x: Option<T>,
}

impl<T: Scalar> Mesh<T> {
    pub fn n_cells(&self) -> usize {
        self.cell_faces.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Ids of the fault-trace faces of one side, sorted bottom to top.
    pub fn trace_faces(&self, side: Subdomain) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.n_faces())
            .filter(|&f| self.faces[f].kind == FaceKind::FaultTrace(side))
            .collect();
        out.sort_by(|&a, &b| {
            crate::scalar::to_f64(self.face_center[a].y)
                .partial_cmp(&crate::scalar::to_f64(self.face_center[b].y))
                .unwrap()
        });
        out
    }

    /// Block index and structured coordinates of a cell.
    pub fn locate_cell(&self, cell: usize) -> (usize, usize, usize) {
        for (b, blk) in self.blocks.iter().enumerate() {
            if cell >= blk.cell_offset && cell < blk.cell_offset + blk.n_cells() {
                let local = cell - blk.cell_offset;
                return (b, local % blk.nx, local / blk.nx);
            }
        }
        unreachable!("cell id out of range")
    }

    /// Total measure of the meshed domain (sum of block areas).
    pub fn domain_area(&self) -> T {
        crate::scalar::kahan_sum(self.blocks.iter().map(|b| b.rect.area()))
    }
}

/// Resolution and extent of one block to be meshed.
#[derive(Debug, Clone, Copy)]
pub struct BlockSpec<T> {
    pub rect: Rect<T>,
    pub nx: usize,
    pub ny: usize,
}

/// Build a Cartesian mesh of the bounding box split at `split_x` into the
/// two subdomains. `split_x` must lie on a grid line; when it coincides with
/// the left or right edge the mesh degenerates to a single block without
/// fault traces.
pub fn build_cartesian<T: Scalar>(
    nx: usize,
    ny: usize,
    bbox: Rect<T>,
    split_x: T,
) -> Result<Mesh<T>> {
    if nx == 0 || ny == 0 {
        return Err(Error::Mesh("resolutions must be at least 1".into()));
    }
    let hx = bbox.width() / real::<T>(nx as f64);
    let pos = (split_x - bbox.x0) / hx;
    let idx = crate::scalar::to_f64(pos).round();
    if (crate::scalar::to_f64(pos) - idx).abs() > 1e-9 || idx < 0.0 || idx > nx as f64 {
        return Err(Error::Mesh(format!(
            "split_x = {} does not lie on a grid line of the {}-cell x-subdivision",
            split_x, nx
        )));
    }
    let idx = idx as usize;
    if idx == 0 || idx == nx {
        // Degenerate split: single subdomain, no fault trace.
        let sub = if idx == nx {
            Subdomain::One
        } else {
            Subdomain::Two
        };
        return build_blocks(&[(BlockSpec { rect: bbox, nx, ny }, sub)], None);
    }
    let left = BlockSpec {
        rect: Rect::new(bbox.x0, bbox.y0, split_x, bbox.y1),
        nx: idx,
        ny,
    };
    let right = BlockSpec {
        rect: Rect::new(split_x, bbox.y0, bbox.x1, bbox.y1),
        nx: nx - idx,
        ny,
    };
    build_blocks(
        &[(left, Subdomain::One), (right, Subdomain::Two)],
        Some(split_x),
    )
}

/// Build a two-block mesh, each side meshed independently so the fault
/// traces generally do not match. A positive `vertical_offset` shifts the
/// left block upwards.
pub fn build_two_block<T: Scalar>(
    nx_left: usize,
    ny_left: usize,
    nx_right: usize,
    ny_right: usize,
    bbox: Rect<T>,
    split_x: T,
    vertical_offset: T,
) -> Result<Mesh<T>> {
    let left = BlockSpec {
        rect: Rect::new(
            bbox.x0,
            bbox.y0 + vertical_offset,
            split_x,
            bbox.y1 + vertical_offset,
        ),
        nx: nx_left,
        ny: ny_left,
    };
    let right = BlockSpec {
        rect: Rect::new(split_x, bbox.y0, bbox.x1, bbox.y1),
        nx: nx_right,
        ny: ny_right,
    };
    if vertical_offset.abs() >= bbox.height() {
        return Err(Error::Mesh(
            "vertical offset at least the domain height".into(),
        ));
    }
    build_two_block_gapped(left, right, split_x)
}

/// General two-block builder: block rectangles are given explicitly, so the
/// fault slab of thickness `d` can be excluded from the matrix domain by
/// ending the left block at `locus - d/2` and starting the right one at
/// `locus + d/2`.
pub fn build_two_block_gapped<T: Scalar>(
    left: BlockSpec<T>,
    right: BlockSpec<T>,
    locus_x: T,
) -> Result<Mesh<T>> {
    if left.rect.x1 > locus_x || right.rect.x0 < locus_x {
        return Err(Error::Mesh("blocks overlap the fault locus".into()));
    }
    build_blocks(
        &[(left, Subdomain::One), (right, Subdomain::Two)],
        Some(locus_x),
    )
}

fn build_blocks<T: Scalar>(
    specs: &[(BlockSpec<T>, Subdomain)],
    locus_x: Option<T>,
) -> Result<Mesh<T>> {
    let two = real::<T>(2.0);
    let mut points = Vec::new();
    let mut faces: Vec<Face> = Vec::new();
    let mut face_center = Vec::new();
    let mut face_len = Vec::new();
    let mut cell_faces = Vec::new();
    let mut cell_center = Vec::new();
    let mut cell_area = Vec::new();
    let mut cell_diam = Vec::new();
    let mut cell_sub = Vec::new();
    let mut cones = Vec::new();
    let mut blocks = Vec::new();

    for (bi, (spec, sub)) in specs.iter().enumerate() {
        let (nx, ny, rect) = (spec.nx, spec.ny, spec.rect);
        if nx == 0 || ny == 0 {
            return Err(Error::Mesh(format!("block {} has a zero resolution", bi)));
        }
        if rect.width() <= T::zero() || rect.height() <= T::zero() {
            return Err(Error::Mesh(format!(
                "block {} has a non-positive extent",
                bi
            )));
        }
        let hx = rect.width() / real::<T>(nx as f64);
        let hy = rect.height() / real::<T>(ny as f64);
        let block = Block {
            rect,
            nx,
            ny,
            subdomain: *sub,
            cell_offset: cell_faces.len(),
            point_offset: points.len(),
            vface_offset: faces.len(),
            hface_offset: faces.len() + (nx + 1) * ny,
        };

        let px = |i: usize| rect.x0 + hx * real::<T>(i as f64);
        let py = |j: usize| rect.y0 + hy * real::<T>(j as f64);
        for j in 0..=ny {
            for i in 0..=nx {
                points.push(Point2::new(px(i), py(j)));
            }
        }
        let pid = |i: usize, j: usize| block.point_offset + j * (nx + 1) + i;
        let cid = |i: usize, j: usize| block.cell_offset + j * nx + i;

        // Vertical faces, column-major: id = vface_offset + j*(nx+1) + i.
        for j in 0..ny {
            for i in 0..=nx {
                let kind = if i == 0 {
                    if bi == 1 {
                        FaceKind::FaultTrace(Subdomain::Two)
                    } else {
                        FaceKind::Boundary(Side::Left)
                    }
                } else if i == nx {
                    if bi == 0 && specs.len() == 2 {
                        FaceKind::FaultTrace(Subdomain::One)
                    } else {
                        FaceKind::Boundary(Side::Right)
                    }
                } else {
                    FaceKind::Interior
                };
                let cells = [
                    if i > 0 { Some(cid(i - 1, j)) } else { None },
                    if i < nx { Some(cid(i, j)) } else { None },
                ];
                let cells = match kind {
                    FaceKind::Interior => cells,
                    _ => [cells[0].or(cells[1]), None],
                };
                faces.push(Face {
                    points: [pid(i, j), pid(i, j + 1)],
                    kind,
                    cells,
                });
                face_center.push(Point2::new(px(i), (py(j) + py(j + 1)) / two));
                face_len.push(hy);
            }
        }
        // Horizontal faces: id = hface_offset + j*nx + i.
        for j in 0..=ny {
            for i in 0..nx {
                let kind = if j == 0 {
                    FaceKind::Boundary(Side::Bottom)
                } else if j == ny {
                    FaceKind::Boundary(Side::Top)
                } else {
                    FaceKind::Interior
                };
                let cells = [
                    if j > 0 { Some(cid(i, j - 1)) } else { None },
                    if j < ny { Some(cid(i, j)) } else { None },
                ];
                let cells = match kind {
                    FaceKind::Interior => cells,
                    _ => [cells[0].or(cells[1]), None],
                };
                faces.push(Face {
                    points: [pid(i, j), pid(i + 1, j)],
                    kind,
                    cells,
                });
                face_center.push(Point2::new((px(i) + px(i + 1)) / two, py(j)));
                face_len.push(hx);
            }
        }

        let vface = |i: usize, j: usize| block.vface_offset + j * (nx + 1) + i;
        let hface = |i: usize, j: usize| block.hface_offset + j * nx + i;
        let half = real::<T>(0.5);
        let area = hx * hy;
        let diam = (hx * hx + hy * hy).sqrt();
        for j in 0..ny {
            for i in 0..nx {
                cell_faces.push([vface(i, j), vface(i + 1, j), hface(i, j), hface(i, j + 1)]);
                cell_center.push(Point2::new(
                    (px(i) + px(i + 1)) / two,
                    (py(j) + py(j + 1)) / two,
                ));
                cell_area.push(area);
                cell_diam.push(diam);
                cell_sub.push(*sub);
                let dx = hx * half;
                let dy = hy * half;
                cones.push([
                    Cone {
                        normal: Vec2::new(-T::one(), T::zero()),
                        dist: dx,
                        area: hy * dx / two,
                    },
                    Cone {
                        normal: Vec2::new(T::one(), T::zero()),
                        dist: dx,
                        area: hy * dx / two,
                    },
                    Cone {
                        normal: Vec2::new(T::zero(), -T::one()),
                        dist: dy,
                        area: hx * dy / two,
                    },
                    Cone {
                        normal: Vec2::new(T::zero(), T::one()),
                        dist: dy,
                        area: hx * dy / two,
                    },
                ]);
            }
        }
        blocks.push(block);
    }

    let h_max = cell_diam.iter().cloned().fold(T::zero(), T::max);
    let mesh = Mesh {
        points,
        faces,
        face_center,
        face_len,
        cell_faces,
        cell_center,
        cell_area,
        cell_diam,
        cell_sub,
        cones,
        h_max,
        blocks,
        locus_x,
    };
    for c in 0..mesh.n_cells() {
        for k in 0..4 {
            if mesh.cones[c][k].dist < real::<T>(1e-14) * mesh.cell_diam[c] {
                return Err(Error::Mesh(format!(
                    "degenerate cone for cell {} face {}",
                    c, k
                )));
            }
        }
    }
    Ok(mesh)
}

/// The two ingredients of the mesh quality parameter: the largest
/// `d_K / d_L` over interior faces and the largest `h_K / d_{K,sigma}`.
pub fn quality_parts<T: Scalar>(mesh: &Mesh<T>) -> (T, T) {
    let mut ratio = T::zero();
    let mut aspect = T::zero();
    let mut dist_of = vec![[T::zero(); 2]; mesh.n_faces()];
    let mut seen = vec![0usize; mesh.n_faces()];
    for c in 0..mesh.n_cells() {
        for k in 0..4 {
            let f = mesh.cell_faces[c][k];
            let d = mesh.cones[c][k].dist;
            aspect = aspect.max(mesh.cell_diam[c] / d);
            dist_of[f][seen[f].min(1)] = d;
            seen[f] += 1;
        }
    }
    for f in 0..mesh.n_faces() {
        if mesh.faces[f].kind == FaceKind::Interior && seen[f] == 2 {
            let (a, b) = (dist_of[f][0], dist_of[f][1]);
            ratio = ratio.max(a / b).max(b / a);
        }
    }
    (ratio, aspect)
}

/// Mesh quality parameter `theta_D`.
pub fn mesh_quality<T: Scalar>(mesh: &Mesh<T>) -> T {
    let (ratio, aspect) = quality_parts(mesh);
    ratio.max(aspect)
}

/// One violated invariant found by [`validate`].
#[derive(Debug, Clone)]
pub struct Violation {
    pub kind: &'static str,
    pub entity: Entity,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Cell(usize),
    Face(usize),
    Mesh,
}

/// Outcome of a validation pass: all violations found, never a panic.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every mesh invariant and report the violations with their
/// cell or face id.
pub fn validate<T: Scalar>(mesh: &Mesh<T>) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let tol = real::<T>(1e-12);
    let mut push = |kind: &'static str, entity: Entity, detail: String| {
        rep.violations.push(Violation {
            kind,
            entity,
            detail,
        });
    };

    for (f, face) in mesh.faces.iter().enumerate() {
        if !(mesh.face_len[f] > T::zero()) {
            push(
                "face measure",
                Entity::Face(f),
                format!("|sigma| = {}", mesh.face_len[f]),
            );
        }
        let expect = match face.kind {
            FaceKind::Interior => 2,
            _ => 1,
        };
        if face.n_cells() != expect {
            push(
                "face adjacency",
                Entity::Face(f),
                format!("{} adjacent cells, expected {}", face.n_cells(), expect),
            );
        }
        let mid = Point2::midpoint(mesh.points[face.points[0]], mesh.points[face.points[1]]);
        if (mid - mesh.face_center[f]).norm() > tol * mesh.h_max.max(T::one()) {
            push(
                "face barycenter",
                Entity::Face(f),
                "x_sigma is not the endpoint midpoint".into(),
            );
        }
    }

    let mut total_area = T::zero();
    let mut area_comp = T::zero();
    for c in 0..mesh.n_cells() {
        let area = mesh.cell_area[c];
        let t = total_area + area;
        if total_area.abs() >= area.abs() {
            area_comp += (total_area - t) + area;
        } else {
            area_comp += (area - t) + total_area;
        }
        total_area = t;
        if !(area > T::zero()) {
            push("cell measure", Entity::Cell(c), format!("|K| = {}", area));
        }
        let mut closure = Vec2::<T>::zero();
        let mut ident = [T::zero(); 4];
        let mut cone_area = T::zero();
        for k in 0..4 {
            let f = mesh.cell_faces[c][k];
            if f >= mesh.n_faces() {
                push(
                    "face reference",
                    Entity::Cell(c),
                    format!("face id {} out of range", f),
                );
                continue;
            }
            let cone = &mesh.cones[c][k];
            let len = mesh.face_len[f];
            closure = closure + cone.normal * len;
            let r = mesh.face_center[f] - mesh.cell_center[c];
            ident[0] += len * cone.normal.x * r.x;
            ident[1] += len * cone.normal.x * r.y;
            ident[2] += len * cone.normal.y * r.x;
            ident[3] += len * cone.normal.y * r.y;
            cone_area += cone.area;
            if (cone.normal.norm() - T::one()).abs() > tol {
                push(
                    "unit normal",
                    Entity::Cell(c),
                    format!("face {}: |n| != 1", f),
                );
            }
            if cone.dist < real::<T>(1e-14) * mesh.cell_diam[c] {
                push(
                    "degenerate cone",
                    Entity::Cell(c),
                    format!("face {}: d = {}", f, cone.dist),
                );
            }
            if !mesh.faces[f].cells.contains(&Some(c)) {
                push(
                    "face adjacency",
                    Entity::Face(f),
                    format!("cell {} not registered", c),
                );
            }
        }
        let scale = mesh.cell_diam[c];
        if closure.norm() > tol * scale.max(T::one()) {
            push(
                "closed polygon",
                Entity::Cell(c),
                "sum |sigma| n != 0".into(),
            );
        }
        let gid = (ident[0] - area)
            .abs()
            .max(ident[1].abs())
            .max(ident[2].abs())
            .max((ident[3] - area).abs());
        if gid > tol * area.max(T::one()) {
            push(
                "gradient identity",
                Entity::Cell(c),
                "sum |sigma| n (x_sigma - x_K) != |K| I".into(),
            );
        }
        if (cone_area - area).abs() > tol * area {
            push(
                "cone tiling",
                Entity::Cell(c),
                "cone areas do not tile the cell".into(),
            );
        }
    }

    let total_area = total_area + area_comp;
    let domain = mesh.domain_area();
    if (total_area - domain).abs() > tol * domain {
        push(
            "area tiling",
            Entity::Mesh,
            format!("sum |K| = {} but |Omega_12| = {}", total_area, domain),
        );
    }

    for (f, face) in mesh.faces.iter().enumerate() {
        if face.kind != FaceKind::Interior {
            continue;
        }
        if let [Some(k), Some(l)] = face.cells {
            let nk = mesh.cell_faces[k].iter().position(|&x| x == f);
            let nl = mesh.cell_faces[l].iter().position(|&x| x == f);
            if let (Some(a), Some(b)) = (nk, nl) {
                let n1 = mesh.cones[k][a].normal;
                let n2 = mesh.cones[l][b].normal;
                if (n1 + n2).norm() > tol {
                    push(
                        "opposite normals",
                        Entity::Face(f),
                        format!("cells {} and {}", k, l),
                    );
                }
            }
        }
    }

    let theta = mesh_quality(mesh);
    if !theta.is_finite() {
        push("quality", Entity::Mesh, "theta_D is not finite".into());
    } else if theta > real::<T>(1e3) {
        rep.warnings.push(format!(
            "mesh quality parameter theta_D = {} is unusually large",
            theta
        ));
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> Rect<f64> {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    }

    #[test]
    fn cartesian_degenerate_single_cell() {
        let m = build_cartesian(1, 1, unit_square(), 1.0).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_faces(), 4);
        assert!(m
            .faces
            .iter()
            .all(|f| matches!(f.kind, FaceKind::Boundary(_))));
        assert!(m.trace_faces(Subdomain::One).is_empty());
    }

    #[test]
    fn cartesian_smallest_split() {
        let m = build_cartesian(2, 1, unit_square(), 0.5).unwrap();
        assert_eq!(m.n_cells(), 2);
        let t1 = m.trace_faces(Subdomain::One);
        let t2 = m.trace_faces(Subdomain::Two);
        assert_eq!((t1.len(), t2.len()), (1, 1));
        assert_relative_eq!(m.face_center[t1[0]].x, 0.5);
        assert_relative_eq!(m.face_center[t2[0]].x, 0.5);
    }

    #[test]
    fn cartesian_area_tiling_exact() {
        let m = build_cartesian(4, 4, unit_square(), 0.5).unwrap();
        assert_eq!(m.n_cells(), 16);
        let total: f64 = m.cell_area.iter().sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn cartesian_rejects_off_grid_split() {
        let err = build_cartesian(4, 4, unit_square(), 0.3).unwrap_err();
        assert!(err.to_string().contains("grid line"));
    }

    #[test]
    fn two_block_matching_traces() {
        let m = build_two_block(2, 2, 2, 2, unit_square(), 0.5, 0.0).unwrap();
        let t1 = m.trace_faces(Subdomain::One);
        let t2 = m.trace_faces(Subdomain::Two);
        assert_eq!((t1.len(), t2.len()), (2, 2));
        for (a, b) in t1.iter().zip(&t2) {
            assert_relative_eq!(m.face_center[*a].y, m.face_center[*b].y);
            assert_relative_eq!(m.face_len[*a], m.face_len[*b]);
        }
    }

    #[test]
    fn two_block_non_matching_counts() {
        let m = build_two_block(2, 2, 8, 8, unit_square(), 0.5, 0.0).unwrap();
        assert_eq!(m.trace_faces(Subdomain::One).len(), 2);
        assert_eq!(m.trace_faces(Subdomain::Two).len(), 8);
    }

    #[test]
    fn two_block_offset_ranges() {
        let m = build_two_block(2, 2, 2, 2, unit_square(), 0.5, 0.25).unwrap();
        let t1 = m.trace_faces(Subdomain::One);
        let t2 = m.trace_faces(Subdomain::Two);
        // Left block shifted up by 0.25: traces cover [0.25, 1.25] and [0, 1],
        // so the overlap is [0.25, 1].
        let lo1 = m.face_center[t1[0]].y - 0.5 * m.face_len[t1[0]];
        let hi2 = m.face_center[*t2.last().unwrap()].y + 0.5 * m.face_len[t2[0]];
        assert_relative_eq!(lo1, 0.25);
        assert_relative_eq!(hi2, 1.0);
    }

    #[test]
    fn two_block_rejects_zero_height() {
        assert!(build_two_block(2, 0, 2, 2, unit_square(), 0.5, 0.0).is_err());
    }

    #[test]
    fn quality_unit_cell() {
        let m = build_cartesian(1, 1, unit_square(), 1.0).unwrap();
        assert_relative_eq!(mesh_quality(&m), 2.0 * 2.0_f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn quality_scale_invariant_across_family() {
        let mut thetas = Vec::new();
        for n in [2usize, 4, 8, 16] {
            let m = build_cartesian(n, n, unit_square(), 0.5).unwrap();
            thetas.push(mesh_quality(&m));
        }
        for t in &thetas {
            assert_relative_eq!(*t, thetas[0], max_relative = 1e-13);
        }
    }

    #[test]
    fn quality_distance_ratio_term() {
        // Width-1 cell next to a width-0.5 cell sharing a vertical interior
        // face: d_K/d_L = 2 must enter the maximum.
        let left = BlockSpec {
            rect: Rect::new(0.0, 0.0, 1.0, 1.0),
            nx: 1,
            ny: 1,
        };
        let right = BlockSpec {
            rect: Rect::new(1.0, 0.0, 1.5, 1.0),
            nx: 1,
            ny: 1,
        };
        let mut m = build_two_block_gapped(left, right, 1.0).unwrap();
        // Fuse the matching trace pair into a genuine interior face.
        let t1 = m.trace_faces(Subdomain::One)[0];
        let t2 = m.trace_faces(Subdomain::Two)[0];
        let right_cell = m.faces[t2].cells[0].unwrap();
        m.faces[t1].kind = FaceKind::Interior;
        m.faces[t1].cells = [m.faces[t1].cells[0], Some(right_cell)];
        for k in 0..4 {
            if m.cell_faces[right_cell][k] == t2 {
                m.cell_faces[right_cell][k] = t1;
            }
        }
        let (ratio, _) = quality_parts(&m);
        assert_relative_eq!(ratio, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn validate_accepts_builder_output() {
        for m in [
            build_cartesian(4, 4, unit_square(), 0.5).unwrap(),
            build_two_block(2, 2, 8, 8, unit_square(), 0.5, 0.0).unwrap(),
            build_two_block(3, 5, 4, 7, unit_square(), 0.5, -0.2).unwrap(),
        ] {
            let rep = validate(&m);
            assert!(rep.is_ok(), "unexpected violations: {:?}", rep.violations);
        }
    }

    #[test]
    fn validate_reports_zero_face_measure() {
        let mut m = build_cartesian(2, 2, unit_square(), 0.5).unwrap();
        m.face_len[3] = 0.0;
        let rep = validate(&m);
        assert!(rep
            .violations
            .iter()
            .any(|v| v.kind == "face measure" && v.entity == Entity::Face(3)));
    }

    #[test]
    fn validate_reports_flipped_normal() {
        let mut m = build_cartesian(2, 1, unit_square(), 1.0).unwrap();
        let f = (0..m.n_faces())
            .find(|&f| m.faces[f].kind == FaceKind::Interior)
            .unwrap();
        let c = m.faces[f].cells[0].unwrap();
        let k = m.cell_faces[c].iter().position(|&x| x == f).unwrap();
        m.cones[c][k].normal = -m.cones[c][k].normal;
        let rep = validate(&m);
        assert!(rep.violations.iter().any(|v| v.kind == "opposite normals"));
    }

    #[test]
    fn per_cell_geometric_identities() {
        let m = build_two_block(3, 4, 5, 6, unit_square(), 0.5, 0.1).unwrap();
        for c in 0..m.n_cells() {
            let mut closure = Vec2::zero();
            let mut xx = 0.0;
            let mut xy = 0.0;
            let mut yx = 0.0;
            let mut yy = 0.0;
            for k in 0..4 {
                let f = m.cell_faces[c][k];
                let n = m.cones[c][k].normal;
                let len = m.face_len[f];
                closure = closure + n * len;
                let r = m.face_center[f] - m.cell_center[c];
                xx += len * n.x * r.x;
                xy += len * n.x * r.y;
                yx += len * n.y * r.x;
                yy += len * n.y * r.y;
            }
            assert!(closure.norm() < 1e-12);
            assert_relative_eq!(xx, m.cell_area[c], max_relative = 1e-12);
            assert_relative_eq!(yy, m.cell_area[c], max_relative = 1e-12);
            assert!(xy.abs() < 1e-12 && yx.abs() < 1e-12);
        }
    }
}
