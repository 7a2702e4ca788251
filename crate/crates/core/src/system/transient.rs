//! Implicit Euler time stepping over a possibly moving two-block domain.
//!
//! Each step rebuilds the mesh at that step's left-block offset and the
//! fault interface partition with it; the previous cell pressures transfer
//! by cell identity (block resolutions are fixed, cells keep their indices
//! while the block slides).

use crate::error::{Error, Result};
use crate::mesh::FaceKind;
use crate::scalar::Scalar;
use crate::system::assemble::{assemble_steady, assemble_transient_step, CellState};
use crate::system::scenario::{CouplingMode, Discretization, FaultCoeffs, Scenario};
use crate::system::solve::{solve_steady, HybridState, SolveReport, SolverOpts};

/// Summary of one emitted state.
#[derive(Debug, Clone)]
pub struct StepRecord<T> {
    pub step: usize,
    pub time: T,
    pub offset: T,
    pub min_p: T,
    pub max_p: T,
    /// Extremes over the matrix cells adjacent to the fault.
    pub near_fault_min: T,
    pub near_fault_max: T,
    pub report: SolveReport,
}

fn near_fault_range<T: Scalar>(disc: &Discretization<T>, state: &HybridState<T>) -> (T, T) {
    let mesh = &disc.mesh;
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for (f, face) in mesh.faces.iter().enumerate() {
        if matches!(face.kind, FaceKind::FaultTrace(_)) {
            if let Some(c) = mesh.faces[f].cells[0] {
                lo = lo.min(state.matrix.cell[c]);
                hi = hi.max(state.matrix.cell[c]);
            }
        }
    }
    (lo, hi)
}

fn record<T: Scalar>(
    step: usize,
    time: T,
    offset: T,
    disc: &Discretization<T>,
    state: &HybridState<T>,
    report: SolveReport,
) -> StepRecord<T> {
    let (min_p, max_p) = state.value_range();
    let (near_fault_min, near_fault_max) = near_fault_range(disc, state);
    StepRecord {
        step,
        time,
        offset,
        min_p,
        max_p,
        near_fault_min,
        near_fault_max,
        report,
    }
}

/// Run the transient schedule of a scenario. The initial state is a steady
/// solve (optionally with the neutral fault) at the initial offset; each
/// subsequent state is one implicit Euler step at that step's offset.
/// `on_state` is called for the initial state (step 0) and after every step.
pub fn run_transient<T: Scalar>(
    scenario: &Scenario<T>,
    mode: CouplingMode,
    opts: &SolverOpts,
    mut on_state: impl FnMut(usize, T, &Discretization<T>, &HybridState<T>) -> Result<()>,
) -> Result<Vec<StepRecord<T>>> {
    let transient = scenario
        .transient
        .as_ref()
        .ok_or_else(|| Error::Scenario("scenario has no transient schedule".into()))?;

    // Initial steady problem, possibly with neutral fault and its own BCs.
    let mut init_scenario = scenario.clone();
    if let Some(bc) = &transient.init_bc {
        init_scenario.bc = bc.clone();
    }
    if transient.init_neutral_fault {
        if let Some(f) = &mut init_scenario.fault {
            f.coeffs = FaultCoeffs::InheritMatrix;
        }
    }
    let mut disc = init_scenario.discretize_at(1, mode, Some(transient.initial_offset))?;
    let sys = assemble_steady(&disc, &init_scenario)
        .map_err(|e| Error::Assembly(format!("initial state: {}", e)))?;
    let (mut state, report) = solve_steady(&disc, &sys, opts)
        .map_err(|e| Error::Solve(format!("initial state: {}", e)))?;

    let mut time = transient.start_time;
    let mut records = vec![record(
        0,
        time,
        transient.initial_offset,
        &disc,
        &state,
        report,
    )];
    on_state(0, time, &disc, &state)?;

    for (k, step) in transient.steps.iter().enumerate() {
        let prev = CellState {
            matrix: state.matrix.cell.clone(),
            fault: [state.fault_cell[0].clone(), state.fault_cell[1].clone()],
        };
        disc = scenario
            .discretize_at(1, mode, Some(step.offset))
            .map_err(|e| Error::Scenario(format!("step {}: {}", k + 1, e)))?;
        let sys = assemble_transient_step(&disc, scenario, &prev, step.dt)
            .map_err(|e| Error::Assembly(format!("step {}: {}", k + 1, e)))?;
        let (next, report) = solve_steady(&disc, &sys, opts)
            .map_err(|e| Error::Solve(format!("step {}: {}", k + 1, e)))?;
        state = next;
        time += step.dt;
        records.push(record(k + 1, time, step.offset, &disc, &state, report));
        on_state(k + 1, time, &disc, &state)?;
    }
    Ok(records)
}
