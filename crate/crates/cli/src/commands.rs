//! Subcommand implementations.

use crate::CommonArgs;
use faultflow_core::analysis::{run_check_suites, run_convergence};
use faultflow_core::config::{ConfigFile, RunSettings};
use faultflow_core::error::{Error, Result};
use faultflow_core::geom::{Point2, Vec2};
use faultflow_core::io;
use faultflow_core::mesh::validate;
use faultflow_core::scalar::to_f64;
use faultflow_core::system::{
    assemble_steady, recover_fluxes, run_transient, solve_steady, CouplingMode, Discretization,
    FaultCoeffs, HybridState, Scenario, SolverKind, SolverOpts,
};
use std::path::Path;
use std::time::Instant;

struct Loaded {
    scenario: Scenario<f64>,
    settings: RunSettings,
    echo: faultflow_core::io::ConfigEcho,
    mode: CouplingMode,
}

fn load(args: &CommonArgs) -> Result<Loaded> {
    let (cfg, echo) = ConfigFile::load(&args.config)?;
    let (scenario, mut settings) = cfg.into_scenario()?;
    if let Some(solver) = args.solver {
        settings.solver.kind = solver.kind();
    }
    let mode = args.mode.map(|m| m.mode()).unwrap_or(CouplingMode::Virtual);
    std::fs::create_dir_all(&args.out)?;
    Ok(Loaded {
        scenario,
        settings,
        echo,
        mode,
    })
}

fn mode_name(mode: CouplingMode) -> &'static str {
    match mode {
        CouplingMode::Reduced => "reduced",
        CouplingMode::Virtual => "virtual",
    }
}

fn solver_name(kind: SolverKind) -> &'static str {
    match kind {
        SolverKind::Direct => "direct",
        SolverKind::Gmres => "gmres",
        SolverKind::Cg => "cg",
        SolverKind::Auto => "auto",
    }
}

fn validated(disc: &Discretization<f64>) -> Result<()> {
    let report = validate(&disc.mesh);
    for w in &report.warnings {
        eprintln!("warning: {}", w);
    }
    if let Some(v) = report.violations.first() {
        return Err(Error::Scenario(format!(
            "mesh invariant `{}` violated at {:?}: {}",
            v.kind, v.entity, v.detail
        )));
    }
    if let Some(fault) = &disc.fault {
        for w in fault.warnings() {
            eprintln!("warning: {}", w);
        }
    }
    Ok(())
}

fn manufactured_error(
    disc: &Discretization<f64>,
    state: &HybridState<f64>,
    affine: [f64; 3],
) -> f64 {
    let phi = |p: Point2<f64>| affine[0] * p.x + affine[1] * p.y + affine[2];
    let mesh = &disc.mesh;
    let mut err: f64 = 0.0;
    for c in 0..mesh.n_cells() {
        err = err.max((state.matrix.cell[c] - phi(mesh.cell_center[c])).abs());
    }
    for f in 0..mesh.n_faces() {
        err = err.max((state.matrix.face[f] - phi(mesh.face_center[f])).abs());
    }
    if let Some(fault) = &disc.fault {
        for layer in 0..2 {
            let grid = &fault.layers[layer];
            for (k, cell) in grid.cells.iter().enumerate() {
                err = err.max(
                    (state.fault_cell[layer][k]
                        - phi(Point2::new(grid.centerline_x, cell.center_y())))
                    .abs(),
                );
            }
        }
    }
    err
}

fn write_state_artifacts(
    dir: &Path,
    stem: &str,
    disc: &Discretization<f64>,
    scenario: &Scenario<f64>,
    state: &HybridState<f64>,
    outputs: &mut Vec<String>,
) -> Result<()> {
    let flux = recover_fluxes(disc, scenario, state)?;
    let velocity: Vec<Vec2<f64>> = (0..disc.mesh.n_cells())
        .map(|c| flux.cell_velocity(disc, c))
        .collect();
    let vtk = dir.join(format!("{}.vtk", stem));
    io::write_solution_vtk(
        &vtk,
        &disc.mesh,
        &[("pressure", &state.matrix.cell)],
        &[("velocity", &velocity)],
    )?;
    outputs.push(vtk.display().to_string());
    if let Some(fault) = &disc.fault {
        let cells = [
            state.fault_cell[0].as_slice(),
            state.fault_cell[1].as_slice(),
        ];
        let fvtk = dir.join(format!("{}_fault.vtk", stem));
        io::write_fault_vtk(&fvtk, fault, cells)?;
        outputs.push(fvtk.display().to_string());
        let fcsv = dir.join(format!("{}_fault.csv", stem));
        io::write_fault_csv(&fcsv, fault, cells)?;
        outputs.push(fcsv.display().to_string());
        let jcsv = dir.join(format!("{}_fault_jump.csv", stem));
        io::write_jump_csv(&jcsv, fault, cells, &flux)?;
        outputs.push(jcsv.display().to_string());
    }
    Ok(())
}

pub fn cmd_run(args: &CommonArgs) -> Result<()> {
    let start = Instant::now();
    let loaded = load(args)?;
    let disc = loaded.scenario.discretize(1, loaded.mode)?;
    validated(&disc)?;
    let sys = assemble_steady(&disc, &loaded.scenario)?;
    let (state, report) = solve_steady(&disc, &sys, &loaded.settings.solver)?;

    let mut manifest = io::Manifest::new(
        "run",
        &args.config,
        loaded.echo,
        mode_name(loaded.mode),
        solver_name(loaded.settings.solver.kind),
    );
    write_state_artifacts(
        &args.out,
        "solution",
        &disc,
        &loaded.scenario,
        &state,
        &mut manifest.outputs,
    )?;

    let error = loaded
        .settings
        .manufactured
        .map(|m| manufactured_error(&disc, &state, m));
    let summary = args.out.join("summary.csv");
    io::write_summary_csv(&summary, &report, error)?;
    manifest.outputs.push(summary.display().to_string());
    manifest
        .timings_seconds
        .insert("solve".into(), report.wall_seconds);
    manifest
        .timings_seconds
        .insert("total".into(), start.elapsed().as_secs_f64());
    io::write_manifest(&args.out.join("manifest.json"), &manifest)?;

    println!(
        "solved `{}`: {} dofs, method {}, residual {:.3e}",
        loaded.scenario.name, report.n_total, report.method, report.rel_residual
    );
    if let Some(e) = error {
        println!("max manufactured-solution error: {:.3e}", e);
    }
    Ok(())
}

pub fn cmd_convergence(args: &CommonArgs) -> Result<()> {
    let start = Instant::now();
    let loaded = load(args)?;
    let conv = loaded.settings.convergence.clone().ok_or_else(|| {
        Error::Config("convergence command needs a `[convergence]` section".into())
    })?;
    if conv.scales.is_empty() {
        return Err(Error::Config("`scales` must not be empty".into()));
    }

    // The reference runs on a matching family covering both sides.
    let mut reference = loaded.scenario.clone();
    let finer = (
        loaded
            .scenario
            .mesh
            .left
            .0
            .max(loaded.scenario.mesh.right.0),
        loaded
            .scenario
            .mesh
            .left
            .1
            .max(loaded.scenario.mesh.right.1),
    );
    reference.mesh.left = conv.reference_left.map(|r| (r[0], r[1])).unwrap_or(finer);
    reference.mesh.right = conv.reference_right.map(|r| (r[0], r[1])).unwrap_or(finer);

    let ref_opts = SolverOpts {
        kind: faultflow_core::config::solver_kind(&conv.reference_solver)?,
        rtol: conv.reference_rtol,
        condense: true,
        ..loaded.settings.solver.clone()
    };
    let report = run_convergence(
        &loaded.scenario,
        loaded.mode,
        &conv.scales,
        &reference,
        conv.reference_scale,
        &loaded.settings.solver,
        &ref_opts,
    )?;

    let errors = args.out.join("errors.csv");
    io::write_errors_csv(&errors, &report)?;
    let mut manifest = io::Manifest::new(
        "convergence",
        &args.config,
        loaded.echo,
        mode_name(loaded.mode),
        solver_name(loaded.settings.solver.kind),
    );
    manifest.outputs.push(errors.display().to_string());
    manifest
        .timings_seconds
        .insert("total".into(), start.elapsed().as_secs_f64());
    io::write_manifest(&args.out.join("manifest.json"), &manifest)?;

    println!("level        h    err_matrix     err_fault  eoc_m  eoc_f");
    for (i, lvl) in report.levels.iter().enumerate() {
        let (em, ef) = if i > 0 {
            (
                format!("{:5.2}", to_f64(report.eoc_matrix[i - 1])),
                format!("{:5.2}", to_f64(report.eoc_fault[i - 1])),
            )
        } else {
            ("    -".into(), "    -".into())
        };
        println!(
            "{:5} {:8.5} {:13.6e} {:13.6e} {} {}",
            lvl.scale,
            to_f64(lvl.h),
            to_f64(lvl.err_matrix),
            to_f64(lvl.err_fault),
            em,
            ef
        );
    }
    Ok(())
}

pub fn cmd_transient(args: &CommonArgs) -> Result<()> {
    let start = Instant::now();
    let loaded = load(args)?;
    if loaded.scenario.transient.is_none() {
        return Err(Error::Config(
            "transient command needs a `[transient]` section".into(),
        ));
    }
    let mut outputs = Vec::new();
    // The initial state is solved with the init variant of the scenario;
    // mirror that here so its artifacts use the right coefficients.
    let mut init_scenario = loaded.scenario.clone();
    if let Some(t) = &loaded.scenario.transient {
        if let Some(bc) = &t.init_bc {
            init_scenario.bc = bc.clone();
        }
        if t.init_neutral_fault {
            if let Some(f) = &mut init_scenario.fault {
                f.coeffs = FaultCoeffs::InheritMatrix;
            }
        }
    }
    let records = run_transient(
        &loaded.scenario,
        loaded.mode,
        &loaded.settings.solver,
        |step, _time, disc, state| {
            let stem = format!("solution_{:04}", step);
            let scn = if step == 0 {
                &init_scenario
            } else {
                &loaded.scenario
            };
            write_state_artifacts(&args.out, &stem, disc, scn, state, &mut outputs)
        },
    )?;

    let series = args.out.join("series.csv");
    io::write_series_csv(&series, &records)?;
    outputs.push(series.display().to_string());

    let mut manifest = io::Manifest::new(
        "transient",
        &args.config,
        loaded.echo,
        mode_name(loaded.mode),
        solver_name(loaded.settings.solver.kind),
    );
    manifest.outputs = outputs;
    manifest
        .timings_seconds
        .insert("total".into(), start.elapsed().as_secs_f64());
    io::write_manifest(&args.out.join("manifest.json"), &manifest)?;

    let last = records.last().expect("at least the initial state");
    println!(
        "{} states emitted; final pressure range [{:.6e}, {:.6e}]",
        records.len(),
        to_f64(last.min_p),
        to_f64(last.max_p)
    );
    Ok(())
}

pub fn cmd_check(args: &CommonArgs) -> Result<()> {
    let loaded = load(args)?;
    // Surface grid problems before the property suites.
    let disc = loaded.scenario.discretize(1, loaded.mode)?;
    validated(&disc)?;
    drop(disc);

    let outcomes = run_check_suites(&loaded.scenario, 1)?;
    let mut failed = Vec::new();
    for o in &outcomes {
        println!(
            "{} {:24} {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
        if !o.passed {
            failed.push(o.name);
        }
    }
    let mut manifest = io::Manifest::new(
        "check",
        &args.config,
        loaded.echo,
        mode_name(loaded.mode),
        solver_name(loaded.settings.solver.kind),
    );
    manifest
        .timings_seconds
        .insert("suites".into(), outcomes.len() as f64);
    io::write_manifest(&args.out.join("manifest.json"), &manifest)?;
    if !failed.is_empty() {
        return Err(Error::Property(format!(
            "failed invariants: {}",
            failed.join(", ")
        )));
    }
    Ok(())
}
