//! Scenario data: mesh family, fault data, materials, boundary conditions,
//! sources and transient parameters. A scenario is resolution-independent;
//! [`Scenario::discretize`] instantiates it on a concrete mesh.

use crate::error::{Error, Result};
use crate::fault::FaultModel;
use crate::geom::{Point2, Rect, Tensor2};
use crate::mesh::{self, BlockSpec, FaceKind, Mesh, Side};
use crate::scalar::{real, Scalar};
use std::sync::Arc;

/// How the fault is coupled to the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// Reduced interface forms; requires matching layer grids.
    Reduced,
    /// Virtually extruded fault cells; matching or non-matching grids.
    Virtual,
}

/// Resolution-independent description of the mesh family.
#[derive(Debug, Clone)]
pub struct MeshSpec<T> {
    pub bbox: Rect<T>,
    pub split_x: T,
    /// Cells per block at scale 1: (nx, ny) for the left and right block.
    pub left: (usize, usize),
    pub right: (usize, usize),
    /// Base vertical offset of the left block.
    pub offset: T,
}

impl<T: Scalar> MeshSpec<T> {
    /// Uniform Cartesian family: `n x n` cells over the box at scale 1,
    /// split in the middle.
    pub fn cartesian(bbox: Rect<T>, split_x: T, nx: usize, ny: usize) -> Result<Self> {
        let hx = bbox.width() / real::<T>(nx as f64);
        let pos = crate::scalar::to_f64((split_x - bbox.x0) / hx);
        let idx = pos.round();
        if (pos - idx).abs() > 1e-9 || idx < 1.0 || idx > nx as f64 - 1.0 {
            return Err(Error::Scenario(format!(
                "split_x must lie on an interior grid line, got {} for nx = {}",
                split_x, nx
            )));
        }
        let idx = idx as usize;
        Ok(Self {
            bbox,
            split_x,
            left: (idx, ny),
            right: (nx - idx, ny),
            offset: T::zero(),
        })
    }

    pub fn two_block(
        bbox: Rect<T>,
        split_x: T,
        left: (usize, usize),
        right: (usize, usize),
        offset: T,
    ) -> Self {
        Self {
            bbox,
            split_x,
            left,
            right,
            offset,
        }
    }

    /// Build the mesh at a resolution scale. When `gap` is given, a slab of
    /// that thickness around the split is excluded from the matrix domain
    /// (the physical fault zone); `offset` overrides the base offset.
    pub fn build(&self, scale: usize, gap: Option<T>, offset: Option<T>) -> Result<Mesh<T>> {
        let half_gap = gap.unwrap_or(T::zero()) * real::<T>(0.5);
        let ofs = offset.unwrap_or(self.offset);
        if self.split_x - half_gap <= self.bbox.x0 || self.split_x + half_gap >= self.bbox.x1 {
            return Err(Error::Scenario(
                "fault slab does not fit inside the domain".into(),
            ));
        }
        let left = BlockSpec {
            rect: Rect::new(
                self.bbox.x0,
                self.bbox.y0 + ofs,
                self.split_x - half_gap,
                self.bbox.y1 + ofs,
            ),
            nx: self.left.0 * scale,
            ny: self.left.1 * scale,
        };
        let right = BlockSpec {
            rect: Rect::new(
                self.split_x + half_gap,
                self.bbox.y0,
                self.bbox.x1,
                self.bbox.y1,
            ),
            nx: self.right.0 * scale,
            ny: self.right.1 * scale,
        };
        mesh::build_two_block_gapped(left, right, self.split_x)
    }
}

/// A boundary condition value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcValue<T> {
    Dirichlet(T),
    /// Prescribed outward flux density (thickness-integrated on fault ends).
    Neumann(T),
}

/// Boundary data per domain side and fault end.
#[derive(Debug, Clone, Copy)]
pub struct SideBcs<T> {
    pub left: BcValue<T>,
    pub right: BcValue<T>,
    pub bottom: BcValue<T>,
    pub top: BcValue<T>,
    pub fault_bottom: BcValue<T>,
    pub fault_top: BcValue<T>,
}

impl<T: Scalar> SideBcs<T> {
    pub fn side(&self, side: Side) -> BcValue<T> {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }
}

/// Boundary condition specification: per side, or Dirichlet everywhere from
/// a given field (manufactured solutions, patch tests).
#[derive(Clone)]
pub enum BcSpec<T> {
    Sides(SideBcs<T>),
    DirichletField(Arc<dyn Fn(Point2<T>) -> T + Send + Sync>),
}

impl<T> std::fmt::Debug for BcSpec<T>
where
    T: std::fmt::Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BcSpec::Sides(s) => f.debug_tuple("Sides").field(s).finish(),
            BcSpec::DirichletField(_) => f.write_str("DirichletField(..)"),
        }
    }
}

impl<T: Scalar> BcSpec<T> {
    pub fn on_boundary(&self, side: Side, at: Point2<T>) -> BcValue<T> {
        match self {
            BcSpec::Sides(s) => s.side(side),
            BcSpec::DirichletField(phi) => BcValue::Dirichlet(phi(at)),
        }
    }

    /// Condition at a fault layer end; `at` is the end point of the layer
    /// centre line.
    pub fn on_fault_end(&self, top: bool, at: Point2<T>) -> BcValue<T> {
        match self {
            BcSpec::Sides(s) => {
                if top {
                    s.fault_top
                } else {
                    s.fault_bottom
                }
            }
            BcSpec::DirichletField(phi) => BcValue::Dirichlet(phi(at)),
        }
    }
}

/// Frame a material region is pinned to: the domain, or one block (the
/// region then slides with that block).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Domain,
    /// Block-local coordinates relative to the block rectangle origin.
    Block(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct MaterialRegion<T> {
    pub rect: Rect<T>,
    pub frame: Frame,
    pub lambda: Option<Tensor2<T>>,
    pub c_phi: Option<T>,
    pub source: Option<T>,
}

/// Cell-wise material data: defaults plus overriding regions (the last
/// matching region wins).
#[derive(Debug, Clone)]
pub struct Materials<T> {
    pub lambda_default: Tensor2<T>,
    pub c_phi_default: T,
    pub source_default: T,
    pub regions: Vec<MaterialRegion<T>>,
}

impl<T: Scalar> Materials<T> {
    pub fn uniform(lambda: Tensor2<T>) -> Self {
        Self {
            lambda_default: lambda,
            c_phi_default: T::zero(),
            source_default: T::zero(),
            regions: Vec::new(),
        }
    }

    fn lookup<V: Copy>(
        &self,
        mesh: &Mesh<T>,
        cell: usize,
        default: V,
        pick: impl Fn(&MaterialRegion<T>) -> Option<V>,
    ) -> V {
        let center = mesh.cell_center[cell];
        let (b, _, _) = mesh.locate_cell(cell);
        let mut out = default;
        for region in &self.regions {
            let p = match region.frame {
                Frame::Domain => center,
                Frame::Block(rb) => {
                    if rb != b {
                        continue;
                    }
                    let rect = mesh.blocks[b].rect;
                    Point2::new(center.x - rect.x0, center.y - rect.y0)
                }
            };
            if region.rect.contains(p) {
                if let Some(v) = pick(region) {
                    out = v;
                }
            }
        }
        out
    }

    pub fn cell_lambda(&self, mesh: &Mesh<T>, cell: usize) -> Tensor2<T> {
        self.lookup(mesh, cell, self.lambda_default, |r| r.lambda)
    }

    pub fn cell_c_phi(&self, mesh: &Mesh<T>, cell: usize) -> T {
        self.lookup(mesh, cell, self.c_phi_default, |r| r.c_phi)
    }

    pub fn cell_source(&self, mesh: &Mesh<T>, cell: usize) -> T {
        self.lookup(mesh, cell, self.source_default, |r| r.source)
    }
}

/// Piecewise-constant fault data over a y-interval, optionally restricted to
/// one layer.
#[derive(Debug, Clone, Copy)]
pub struct FaultSegment<T> {
    pub y: [T; 2],
    pub lambda_n: T,
    pub lambda_t: T,
    /// `None` applies to both layers; layer-specific segments take
    /// precedence.
    pub layer: Option<usize>,
    /// Reduced source per unit fault length.
    pub source: T,
}

/// Fault permeability specification.
#[derive(Debug, Clone)]
pub enum FaultCoeffs<T> {
    Segments(Vec<FaultSegment<T>>),
    /// Isotropic permeability inherited from the adjacent matrix cell of
    /// each layer cell (the neutral fault of the transient runs).
    InheritMatrix,
}

#[derive(Debug, Clone)]
pub struct FaultSpec<T> {
    pub thickness: T,
    pub coeffs: FaultCoeffs<T>,
}

impl<T: Scalar> FaultSpec<T> {
    pub fn uniform(thickness: T, lambda_n: T, lambda_t: T) -> Self {
        Self {
            thickness,
            coeffs: FaultCoeffs::Segments(vec![FaultSegment {
                y: [T::neg_infinity(), T::infinity()],
                lambda_n,
                lambda_t,
                layer: None,
                source: T::zero(),
            }]),
        }
    }

    /// Intrinsic coefficients `(lambda_n, lambda_t, q_hat)` of one fault
    /// layer cell.
    pub fn cell_coeffs(
        &self,
        materials: &Materials<T>,
        mesh: &Mesh<T>,
        layer: usize,
        y_mid: T,
        trace_face: usize,
    ) -> Result<(T, T, T)> {
        match &self.coeffs {
            FaultCoeffs::InheritMatrix => {
                let cell = mesh.faces[trace_face].cells[0]
                    .ok_or_else(|| Error::Scenario("trace face without adjacent cell".into()))?;
                let lam = materials.cell_lambda(mesh, cell);
                Ok((lam.xx, lam.yy, T::zero()))
            }
            FaultCoeffs::Segments(segments) => {
                let mut hit: Option<&FaultSegment<T>> = None;
                for seg in segments {
                    if y_mid < seg.y[0] || y_mid > seg.y[1] {
                        continue;
                    }
                    match (seg.layer, hit.map(|h| h.layer)) {
                        (Some(l), _) if l != layer => continue,
                        (Some(_), _) => hit = Some(seg),
                        (None, Some(Some(_))) => {} // keep the layer-specific match
                        (None, _) => hit = Some(seg),
                    }
                }
                let seg = hit.ok_or_else(|| {
                    Error::Scenario(format!(
                        "no fault segment covers layer {} at y = {}",
                        layer + 1,
                        y_mid
                    ))
                })?;
                if !(seg.lambda_n > T::zero() && seg.lambda_t > T::zero()) {
                    return Err(Error::Scenario(
                        "fault permeabilities must be positive".into(),
                    ));
                }
                Ok((seg.lambda_n, seg.lambda_t, seg.source))
            }
        }
    }
}

/// Stabilization parameters of the scheme.
#[derive(Debug, Clone, Copy)]
pub struct SchemeParams<T> {
    pub alpha: T,
    pub alpha_hat: T,
}

impl<T: Scalar> Default for SchemeParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            alpha_hat: T::one(),
        }
    }
}

/// One transient step: implicit Euler increment and the vertical offset of
/// the left block at the end of the step.
#[derive(Debug, Clone, Copy)]
pub struct TransientStep<T> {
    pub dt: T,
    pub offset: T,
}

#[derive(Debug, Clone)]
pub struct TransientSpec<T> {
    pub steps: Vec<TransientStep<T>>,
    pub start_time: T,
    pub initial_offset: T,
    /// Boundary conditions of the initial steady solve (defaults to the
    /// scenario conditions).
    pub init_bc: Option<BcSpec<T>>,
    /// Compute the initial state with the fault permeability equal to the
    /// surrounding cells.
    pub init_neutral_fault: bool,
}

/// A complete problem description.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub name: String,
    pub mesh: MeshSpec<T>,
    pub fault: Option<FaultSpec<T>>,
    pub materials: Materials<T>,
    pub bc: BcSpec<T>,
    pub viscosity: T,
    pub scheme: SchemeParams<T>,
    pub transient: Option<TransientSpec<T>>,
}

impl<T: Scalar> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity > T::zero()) {
            return Err(Error::Scenario("viscosity must be positive".into()));
        }
        if !self.materials.lambda_default.is_spd() {
            return Err(Error::Scenario("default permeability must be SPD".into()));
        }
        for r in &self.materials.regions {
            if let Some(lam) = r.lambda {
                if !lam.is_spd() {
                    return Err(Error::Scenario("region permeability must be SPD".into()));
                }
            }
        }
        if let Some(f) = &self.fault {
            if !(f.thickness > T::zero()) {
                return Err(Error::Scenario(format!(
                    "fault thickness must be positive, got {}",
                    f.thickness
                )));
            }
            if let FaultCoeffs::Segments(segs) = &f.coeffs {
                for s in segs {
                    if !(s.lambda_n > T::zero() && s.lambda_t > T::zero()) {
                        return Err(Error::Scenario(
                            "fault permeabilities must be positive".into(),
                        ));
                    }
                }
            }
        }
        if let Some(t) = &self.transient {
            if t.steps.iter().any(|s| !(s.dt > T::zero())) {
                return Err(Error::Scenario("transient steps need dt > 0".into()));
            }
        }
        Ok(())
    }

    /// Instantiate the scenario on a mesh at the given resolution scale and
    /// left-block offset.
    pub fn discretize_at(
        &self,
        scale: usize,
        mode: CouplingMode,
        offset: Option<T>,
    ) -> Result<Discretization<T>> {
        self.validate()?;
        let gap = self.fault.as_ref().map(|f| f.thickness);
        let mesh = self.mesh.build(scale, gap, offset)?;
        let fault = match &self.fault {
            Some(spec) => {
                let model = FaultModel::build(&mesh, spec.thickness)?;
                if mode == CouplingMode::Reduced && !model.matching() {
                    return Err(Error::Scenario(
                        "reduced coupling mode requires matching fault layer grids; use the virtual mode".into(),
                    ));
                }
                Some(model)
            }
            None => None,
        };
        let dofs = super::dof::DofMap::build(&mesh, fault.as_ref(), mode)?;
        Ok(Discretization {
            mesh,
            fault,
            dofs,
            mode,
        })
    }

    pub fn discretize(&self, scale: usize, mode: CouplingMode) -> Result<Discretization<T>> {
        self.discretize_at(scale, mode, None)
    }
}

/// A scenario instantiated on one mesh: the objects assembly works on.
#[derive(Debug, Clone)]
pub struct Discretization<T> {
    pub mesh: Mesh<T>,
    pub fault: Option<FaultModel<T>>,
    pub dofs: super::dof::DofMap,
    pub mode: CouplingMode,
}

impl<T: Scalar> Discretization<T> {
    /// Boundary condition resolved for one external boundary face.
    pub fn boundary_bc(&self, scenario: &Scenario<T>, face: usize) -> Option<BcValue<T>> {
        match self.mesh.faces[face].kind {
            FaceKind::Boundary(side) => {
                Some(scenario.bc.on_boundary(side, self.mesh.face_center[face]))
            }
            _ => None,
        }
    }
}
