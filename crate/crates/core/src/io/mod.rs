//! Artifact output: VTK legacy ASCII files, RFC 4180 CSV summaries and the
//! JSON run manifest. All numeric CSV/VTK content is deterministic for a
//! given configuration; wall-clock timings go to the manifest only.

mod csvout;
mod manifest;
mod vtk;

pub use csvout::{
    write_errors_csv, write_fault_csv, write_jump_csv, write_series_csv, write_summary_csv,
};
pub use manifest::{write_manifest, ConfigEcho, Manifest};
pub use vtk::{write_fault_vtk, write_solution_vtk};
