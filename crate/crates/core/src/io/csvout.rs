//! CSV artifacts. Numeric values are serialized with the shortest exact
//! representation, so identical runs produce byte-identical files.

use crate::analysis::ErrorReport;
use crate::error::Result;
use crate::fault::FaultModel;
use crate::scalar::{to_f64, Scalar};
use crate::system::{FluxField, SolveReport, StepRecord};
use std::path::Path;

/// Fault layer pressures: one row per layer cell.
pub fn write_fault_csv<T: Scalar>(
    path: &Path,
    fault: &FaultModel<T>,
    pressures: [&[T]; 2],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["y_mid", "layer", "pressure"])?;
    for layer in 0..2 {
        for (k, cell) in fault.layers[layer].cells.iter().enumerate() {
            w.serialize((
                to_f64(cell.center_y()),
                layer + 1,
                to_f64(pressures[layer][k]),
            ))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mid-plane jump data: per sub-face the layer pressures, their jump and the
/// normal flux density.
pub fn write_jump_csv<T: Scalar>(
    path: &Path,
    fault: &FaultModel<T>,
    state_cells: [&[T]; 2],
    flux: &FluxField<T>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["y_mid", "length", "p_hat_1", "p_hat_2", "jump", "u_n"])?;
    for (s, sub) in fault.partition.subs.iter().enumerate() {
        let p1 = sub.cells[0].map(|k| to_f64(state_cells[0][k]));
        let p2 = sub.cells[1].map(|k| to_f64(state_cells[1][k]));
        let jump = match (p1, p2) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        };
        let u_n = flux.u_n.get(s).map(|f| to_f64(f.density));
        w.serialize((to_f64(sub.mid()), to_f64(sub.len()), p1, p2, jump, u_n))?;
    }
    w.flush()?;
    Ok(())
}

/// Reduced-mode jump data uses one row per fault cell; map through the
/// matching partition.
pub fn write_summary_csv(
    path: &Path,
    report: &SolveReport,
    manufactured_error: Option<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "dofs",
        "solved_dofs",
        "method",
        "iterations",
        "residual",
        "max_manufactured_error",
    ])?;
    w.serialize((
        report.n_total,
        report.n_solved,
        &report.method,
        report.iterations,
        report.rel_residual,
        manufactured_error,
    ))?;
    w.flush()?;
    Ok(())
}

/// Error history of a convergence run.
pub fn write_errors_csv<T: Scalar>(path: &Path, report: &ErrorReport<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "level",
        "h",
        "err_matrix",
        "err_fault",
        "eoc_matrix",
        "eoc_fault",
        "theta",
    ])?;
    for (i, lvl) in report.levels.iter().enumerate() {
        let em = if i > 0 {
            Some(to_f64(report.eoc_matrix[i - 1]))
        } else {
            None
        };
        let ef = if i > 0 {
            Some(to_f64(report.eoc_fault[i - 1]))
        } else {
            None
        };
        w.serialize((
            lvl.scale,
            to_f64(lvl.h),
            to_f64(lvl.err_matrix),
            to_f64(lvl.err_fault),
            em,
            ef,
            to_f64(lvl.theta),
        ))?;
    }
    w.flush()?;
    Ok(())
}

/// Transient summary: one row per emitted state.
pub fn write_series_csv<T: Scalar>(path: &Path, records: &[StepRecord<T>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "step",
        "time",
        "offset",
        "min_p",
        "max_p",
        "near_fault_min",
        "near_fault_max",
    ])?;
    for r in records {
        w.serialize((
            r.step,
            to_f64(r.time),
            to_f64(r.offset),
            to_f64(r.min_p),
            to_f64(r.max_p),
            to_f64(r.near_fault_min),
            to_f64(r.near_fault_max),
        ))?;
    }
    w.flush()?;
    Ok(())
}
