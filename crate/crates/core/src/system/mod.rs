//! Global problem assembly and solution: scenario data, degree-of-freedom
//! map, steady and transient assembly in the reduced and virtual coupling
//! modes, linear solvers and flux recovery.

mod assemble;
mod dof;
mod flux;
mod scenario;
mod solve;
mod transient;

pub use assemble::{
    apply_dirichlet, assemble_steady, assemble_transient_step, CellState, GlobalSystem,
    ReducedSystem,
};
pub use dof::DofMap;
pub use flux::{
    conservativity_defect, global_balance_defect, recover_fluxes, total_sources, FluxField, SubFlux,
};
pub use scenario::{
    BcSpec, BcValue, CouplingMode, Discretization, FaultCoeffs, FaultSegment, FaultSpec, Frame,
    MaterialRegion, Materials, MeshSpec, Scenario, SchemeParams, SideBcs, TransientSpec,
    TransientStep,
};
pub use solve::{solve_steady, HybridState, SolveReport, SolverKind, SolverOpts};
pub use transient::{run_transient, StepRecord};
