//! TOML scenario configuration.
//!
//! Sections: `[mesh]`, `[fault]`, `[materials]`, `[bc]`, `[solver]`,
//! `[transient]`, plus `[convergence]` for refinement studies and an
//! optional `[manufactured]` affine solution for verification runs. All
//! physical quantities are SI: lengths in m, permeability in m^2, viscosity
//! in Pa.s, compressibility in 1/Pa.

use crate::error::{Error, Result};
use crate::geom::{Point2, Rect, Tensor2};
use crate::system::{
    BcSpec, BcValue, FaultCoeffs, FaultSegment, FaultSpec, Frame, MaterialRegion, Materials,
    MeshSpec, Scenario, SchemeParams, SideBcs, SolverKind, SolverOpts, TransientSpec,
    TransientStep,
};
use serde::Deserialize;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub name: Option<String>,
    pub mesh: MeshSection,
    #[serde(default)]
    pub fault: Option<FaultSection>,
    #[serde(default)]
    pub materials: MaterialsSection,
    #[serde(default)]
    pub bc: Option<BcSection>,
    #[serde(default)]
    pub manufactured: Option<ManufacturedSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub convergence: Option<ConvergenceSection>,
    #[serde(default)]
    pub transient: Option<TransientSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    #[serde(default = "default_kind")]
    pub kind: String,
    pub bbox: [f64; 4],
    pub split_x: f64,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub ny: Option<usize>,
    #[serde(default)]
    pub left: Option<[usize; 2]>,
    #[serde(default)]
    pub right: Option<[usize; 2]>,
    #[serde(default)]
    pub offset: f64,
}

fn default_kind() -> String {
    "two_block".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSection {
    pub thickness: f64,
    #[serde(default)]
    pub lambda_n: Option<f64>,
    #[serde(default)]
    pub lambda_t: Option<f64>,
    #[serde(default)]
    pub segments: Vec<SegmentSection>,
    #[serde(default)]
    pub inherit_matrix: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub y: [f64; 2],
    pub lambda_n: f64,
    pub lambda_t: f64,
    #[serde(default)]
    pub layer: Option<usize>,
    #[serde(default)]
    pub source: f64,
}

/// Scalar, diagonal pair or full symmetric 2x2 tensor.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Scalar(f64),
    Diagonal([f64; 2]),
    Full([[f64; 2]; 2]),
}

impl LambdaSpec {
    pub fn tensor(&self) -> Result<Tensor2<f64>> {
        let t = match self {
            LambdaSpec::Scalar(l) => Tensor2::isotropic(*l),
            LambdaSpec::Diagonal([a, b]) => Tensor2::diagonal(*a, *b),
            LambdaSpec::Full(m) => {
                if (m[0][1] - m[1][0]).abs() > 1e-14 * (m[0][1].abs() + m[1][0].abs()).max(1.0) {
                    return Err(Error::Config(
                        "permeability tensor must be symmetric".into(),
                    ));
                }
                Tensor2::new(m[0][0], m[0][1], m[1][1])
            }
        };
        if !t.is_spd() {
            return Err(Error::Config("permeability tensor must be SPD".into()));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSection {
    #[serde(default = "one_lambda")]
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub c_phi: f64,
    #[serde(default = "one")]
    pub viscosity: f64,
    #[serde(default)]
    pub source: f64,
    #[serde(default, rename = "region")]
    pub regions: Vec<RegionSection>,
}

fn one() -> f64 {
    1.0
}

fn one_lambda() -> LambdaSpec {
    LambdaSpec::Scalar(1.0)
}

impl Default for MaterialsSection {
    fn default() -> Self {
        Self {
            lambda: one_lambda(),
            c_phi: 0.0,
            viscosity: 1.0,
            source: 0.0,
            regions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    #[serde(rename = "box")]
    pub rect: [f64; 4],
    #[serde(default = "default_frame")]
    pub frame: String,
    #[serde(default)]
    pub lambda: Option<LambdaSpec>,
    #[serde(default)]
    pub c_phi: Option<f64>,
    #[serde(default)]
    pub source: Option<f64>,
}

fn default_frame() -> String {
    "domain".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcEntry {
    #[serde(default)]
    pub dirichlet: Option<f64>,
    #[serde(default)]
    pub neumann: Option<f64>,
}

impl BcEntry {
    fn value(&self, name: &str) -> Result<BcValue<f64>> {
        match (self.dirichlet, self.neumann) {
            (Some(v), None) => Ok(BcValue::Dirichlet(v)),
            (None, Some(g)) => Ok(BcValue::Neumann(g)),
            _ => Err(Error::Config(format!(
                "boundary `{}` needs exactly one of `dirichlet` or `neumann`",
                name
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSection {
    pub left: BcEntry,
    pub right: BcEntry,
    pub bottom: BcEntry,
    pub top: BcEntry,
    #[serde(default)]
    pub fault_bottom: Option<BcEntry>,
    #[serde(default)]
    pub fault_top: Option<BcEntry>,
}

impl BcSection {
    fn side_bcs(&self) -> Result<SideBcs<f64>> {
        let no_flow = BcEntry {
            dirichlet: None,
            neumann: Some(0.0),
        };
        Ok(SideBcs {
            left: self.left.value("left")?,
            right: self.right.value("right")?,
            bottom: self.bottom.value("bottom")?,
            top: self.top.value("top")?,
            fault_bottom: self
                .fault_bottom
                .as_ref()
                .unwrap_or(&no_flow)
                .value("fault_bottom")?,
            fault_top: self
                .fault_top
                .as_ref()
                .unwrap_or(&no_flow)
                .value("fault_top")?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedSection {
    /// Affine solution `a_x x + a_y y + b`; Dirichlet data everywhere.
    pub affine: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default)]
    pub condense: bool,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub alpha_hat: f64,
}

fn default_method() -> String {
    "direct".into()
}

fn default_rtol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    400_000
}

fn default_restart() -> usize {
    30
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            rtol: default_rtol(),
            max_iter: default_max_iter(),
            restart: default_restart(),
            condense: false,
            alpha: 1.0,
            alpha_hat: 1.0,
        }
    }
}

pub fn solver_kind(name: &str) -> Result<SolverKind> {
    match name {
        "direct" => Ok(SolverKind::Direct),
        "gmres" => Ok(SolverKind::Gmres),
        "cg" => Ok(SolverKind::Cg),
        "auto" => Ok(SolverKind::Auto),
        other => Err(Error::Config(format!("unknown solver `{}`", other))),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub scales: Vec<usize>,
    pub reference_scale: usize,
    #[serde(default)]
    pub reference_left: Option<[usize; 2]>,
    #[serde(default)]
    pub reference_right: Option<[usize; 2]>,
    #[serde(default = "default_ref_solver")]
    pub reference_solver: String,
    #[serde(default = "default_ref_rtol")]
    pub reference_rtol: f64,
}

fn default_ref_solver() -> String {
    "auto".into()
}

fn default_ref_rtol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientSection {
    pub dt: Vec<f64>,
    #[serde(default)]
    pub offsets: Option<Vec<f64>>,
    #[serde(default)]
    pub start_time: f64,
    #[serde(default)]
    pub initial_offset: f64,
    #[serde(default)]
    pub init_neutral_fault: bool,
    #[serde(default)]
    pub init_bc: Option<BcSection>,
}

/// Everything the front-end needs besides the scenario itself.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub solver: SolverOpts,
    pub manufactured: Option<[f64; 3]>,
    pub convergence: Option<ConvergenceSection>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, toml::Value)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {}", path.display(), e)))?;
        let echo: toml::Value = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        Ok((Self::parse(&text)?, echo))
    }

    pub fn mesh_spec(&self) -> Result<MeshSpec<f64>> {
        let m = &self.mesh;
        let bbox = Rect::new(m.bbox[0], m.bbox[1], m.bbox[2], m.bbox[3]);
        if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
            return Err(Error::Config("mesh bbox must have positive extent".into()));
        }
        match m.kind.as_str() {
            "cartesian" => {
                let (nx, ny) = (
                    m.nx.ok_or_else(|| Error::Config("cartesian mesh needs `nx`".into()))?,
                    m.ny.ok_or_else(|| Error::Config("cartesian mesh needs `ny`".into()))?,
                );
                MeshSpec::cartesian(bbox, m.split_x, nx, ny)
            }
            "two_block" => {
                let left = m
                    .left
                    .ok_or_else(|| Error::Config("two_block mesh needs `left`".into()))?;
                let right = m
                    .right
                    .ok_or_else(|| Error::Config("two_block mesh needs `right`".into()))?;
                Ok(MeshSpec::two_block(
                    bbox,
                    m.split_x,
                    (left[0], left[1]),
                    (right[0], right[1]),
                    m.offset,
                ))
            }
            other => Err(Error::Config(format!("unknown mesh kind `{}`", other))),
        }
    }

    pub fn into_scenario(self) -> Result<(Scenario<f64>, RunSettings)> {
        let mesh = self.mesh_spec()?;

        let fault = match &self.fault {
            None => None,
            Some(f) => {
                if !(f.thickness > 0.0) {
                    return Err(Error::Config(format!(
                        "fault thickness must be positive, got {}",
                        f.thickness
                    )));
                }
                let coeffs = if f.inherit_matrix {
                    FaultCoeffs::InheritMatrix
                } else if !f.segments.is_empty() {
                    let segs = f
                        .segments
                        .iter()
                        .map(|s| {
                            if let Some(l) = s.layer {
                                if l != 1 && l != 2 {
                                    return Err(Error::Config(
                                        "segment layer must be 1 or 2".into(),
                                    ));
                                }
                            }
                            Ok(FaultSegment {
                                y: s.y,
                                lambda_n: s.lambda_n,
                                lambda_t: s.lambda_t,
                                layer: s.layer.map(|l| l - 1),
                                source: s.source,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    FaultCoeffs::Segments(segs)
                } else {
                    match (f.lambda_n, f.lambda_t) {
                        (Some(ln), Some(lt)) => FaultCoeffs::Segments(vec![FaultSegment {
                            y: [f64::NEG_INFINITY, f64::INFINITY],
                            lambda_n: ln,
                            lambda_t: lt,
                            layer: None,
                            source: 0.0,
                        }]),
                        _ => return Err(Error::Config(
                            "fault needs `lambda_n`/`lambda_t`, `segments`, or `inherit_matrix`"
                                .into(),
                        )),
                    }
                };
                Some(FaultSpec {
                    thickness: f.thickness,
                    coeffs,
                })
            }
        };

        let mut regions = Vec::new();
        for r in &self.materials.regions {
            let frame = match r.frame.as_str() {
                "domain" => Frame::Domain,
                "left" => Frame::Block(0),
                "right" => Frame::Block(1),
                other => return Err(Error::Config(format!("unknown region frame `{}`", other))),
            };
            regions.push(MaterialRegion {
                rect: Rect::new(r.rect[0], r.rect[1], r.rect[2], r.rect[3]),
                frame,
                lambda: r.lambda.as_ref().map(|l| l.tensor()).transpose()?,
                c_phi: r.c_phi,
                source: r.source,
            });
        }
        let materials = Materials {
            lambda_default: self.materials.lambda.tensor()?,
            c_phi_default: self.materials.c_phi,
            source_default: self.materials.source,
            regions,
        };

        let bc = match (&self.manufactured, &self.bc) {
            (Some(m), _) => {
                let [ax, ay, b] = m.affine;
                BcSpec::DirichletField(Arc::new(move |p: Point2<f64>| ax * p.x + ay * p.y + b))
            }
            (None, Some(bc)) => BcSpec::Sides(bc.side_bcs()?),
            (None, None) => {
                return Err(Error::Config(
                    "need a `[bc]` or `[manufactured]` section".into(),
                ))
            }
        };

        let transient = match &self.transient {
            None => None,
            Some(t) => {
                let offsets = match &t.offsets {
                    Some(o) => {
                        if o.len() != t.dt.len() {
                            return Err(Error::Config(
                                "`offsets` must match `dt` in length".into(),
                            ));
                        }
                        o.clone()
                    }
                    None => vec![t.initial_offset; t.dt.len()],
                };
                let steps =
                    t.dt.iter()
                        .zip(&offsets)
                        .map(|(&dt, &offset)| TransientStep { dt, offset })
                        .collect();
                Some(TransientSpec {
                    steps,
                    start_time: t.start_time,
                    initial_offset: t.initial_offset,
                    init_bc: t
                        .init_bc
                        .as_ref()
                        .map(|b| b.side_bcs().map(BcSpec::Sides))
                        .transpose()?,
                    init_neutral_fault: t.init_neutral_fault,
                })
            }
        };

        let scenario = Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            mesh,
            fault,
            materials,
            bc,
            viscosity: self.materials.viscosity,
            scheme: SchemeParams {
                alpha: self.solver.alpha,
                alpha_hat: self.solver.alpha_hat,
            },
            transient,
        };
        scenario.validate()?;

        let solver = SolverOpts {
            kind: solver_kind(&self.solver.method)?,
            rtol: self.solver.rtol,
            max_iter: self.solver.max_iter,
            restart: self.solver.restart,
            condense: self.solver.condense,
            ..SolverOpts::default()
        };
        let settings = RunSettings {
            solver,
            manufactured: self.manufactured.as_ref().map(|m| m.affine),
            convergence: self.convergence.clone(),
        };
        Ok((scenario, settings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_config() {
        let text = r#"
            name = "demo"
            [mesh]
            kind = "two_block"
            bbox = [0.0, 0.0, 1.0, 1.0]
            split_x = 0.5
            left = [8, 16]
            right = [8, 16]
            [fault]
            thickness = 1e-2
            lambda_n = 1.0
            lambda_t = 1e-2
            [bc]
            left = { dirichlet = 0.0 }
            right = { dirichlet = 1.0 }
            bottom = { neumann = 0.0 }
            top = { neumann = 0.0 }
            fault_bottom = { dirichlet = 0.0 }
            fault_top = { dirichlet = 1.0 }
        "#;
        let cfg = ConfigFile::parse(text).unwrap();
        let (scenario, settings) = cfg.into_scenario().unwrap();
        assert_eq!(scenario.name, "demo");
        assert!(scenario.fault.is_some());
        assert!(matches!(settings.solver.kind, SolverKind::Direct));
    }

    #[test]
    fn rejects_negative_thickness() {
        let text = r#"
            [mesh]
            bbox = [0.0, 0.0, 1.0, 1.0]
            split_x = 0.5
            left = [2, 2]
            right = [2, 2]
            [fault]
            thickness = -1e-2
            lambda_n = 1.0
            lambda_t = 1.0
            [bc]
            left = { dirichlet = 0.0 }
            right = { dirichlet = 1.0 }
            bottom = { neumann = 0.0 }
            top = { neumann = 0.0 }
        "#;
        let err = ConfigFile::parse(text)
            .unwrap()
            .into_scenario()
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_twofold_bc() {
        let text = r#"
            [mesh]
            bbox = [0.0, 0.0, 1.0, 1.0]
            split_x = 0.5
            left = [2, 2]
            right = [2, 2]
            [bc]
            left = { dirichlet = 0.0, neumann = 1.0 }
            right = { dirichlet = 1.0 }
            bottom = { neumann = 0.0 }
            top = { neumann = 0.0 }
        "#;
        assert!(ConfigFile::parse(text).unwrap().into_scenario().is_err());
    }

    #[test]
    fn cartesian_kind_splits_resolutions() {
        let text = r#"
            [mesh]
            kind = "cartesian"
            bbox = [0.0, 0.0, 1.0, 1.0]
            split_x = 0.25
            nx = 8
            ny = 4
            [bc]
            left = { dirichlet = 0.0 }
            right = { dirichlet = 1.0 }
            bottom = { neumann = 0.0 }
            top = { neumann = 0.0 }
        "#;
        let (scenario, _) = ConfigFile::parse(text).unwrap().into_scenario().unwrap();
        assert_eq!(scenario.mesh.left, (2, 4));
        assert_eq!(scenario.mesh.right, (6, 4));
    }
}
