use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use epdiff_core::config::OutputFormat;
use epdiff_core::integrator::{run, RunOptions};
use epdiff_core::reference::{rk4_run, ReferenceOptions};
use epdiff_core::stats;
use epdiff_core::trajectory::PLOT_SCRIPT;
use epdiff_core::{make_grid, Grid, GridField, RunConfig, SchemeChoice, SchemeKind, TrajectoryRecord};

use crate::failure::CliError;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    f(&mut w).map_err(io)?;
    w.flush().map_err(io)
}

fn grid_for(config: &RunConfig) -> Result<Grid, CliError> {
    Ok(make_grid(config.grid.n_modes, config.grid.alpha)?)
}

/// Integrates `config` with its own scheme and dt.
fn integrate(config: &RunConfig, grid: &Grid, u0: &GridField) -> Result<TrajectoryRecord, CliError> {
    let n_steps = config.n_steps();
    let stride = config.output.stride;
    Ok(match config.scheme {
        SchemeChoice::Variational(kind) => {
            let opts = RunOptions::new(config.dt, n_steps).with_stride(stride).with_solver(config.solver);
            run(grid, kind, u0, &opts, &mut [])?
        }
        SchemeChoice::Reference => {
            let m0 = epdiff_core::spectral::apply_helmholtz(grid, u0)?;
            let opts = ReferenceOptions::new(config.dt, n_steps)
                .with_stride(stride)
                .with_dealias(config.reference.dealias);
            rk4_run(grid, &m0, &opts)?
        }
    })
}

/// Writes the artifacts selected in `config.output` for `record` into `dir`.
fn write_artifacts(dir: &Path, config: &RunConfig, record: &TrajectoryRecord, warnings: &[String]) -> Result<(), CliError> {
    create_dir(dir)?;
    let out = &config.output;
    if out.wants(OutputFormat::Csv) {
        write_file(&dir.join("trajectory.csv"), |w| record.write_velocity_csv(w))?;
        write_file(&dir.join("energy.csv"), |w| record.write_energy_csv(w))?;
    }
    if out.wants(OutputFormat::Json) {
        let mut meta = record.metadata_json();
        meta["metadata"]["config"] = serde_json::to_value(config)?;
        meta["warnings"] = serde_json::to_value(warnings)?;
        let text = serde_json::to_string_pretty(&meta)?;
        write_file(&dir.join("metadata.json"), |w| writeln!(w, "{text}"))?;
    }
    if out.wants(OutputFormat::Plot) {
        write_file(&dir.join("plot.py"), |w| w.write_all(PLOT_SCRIPT.as_bytes()))?;
    }
    Ok(())
}

pub fn cmd_run(config: &RunConfig) -> Result<(), CliError> {
    let grid = grid_for(config)?;
    let ic = config.scenario.generate(&grid)?;
    for w in &ic.warnings {
        eprintln!("warning: {w}");
    }
    let record = integrate(config, &grid, &ic.velocity)?;
    let dir = &config.output.directory;
    write_artifacts(dir, config, &record, &ic.warnings)?;

    let energies = record.energies();
    println!(
        "{}: {} steps to t = {}, energy {:.6e} -> {:.6e} (max relative excursion {:.3e}); wrote {}",
        record.label,
        record.energy.len() - 1,
        record.final_time(),
        energies.first().copied().unwrap_or(0.0),
        energies.last().copied().unwrap_or(0.0),
        stats::max_relative_excursion(&energies),
        dir.display()
    );
    record.into_result().map(|_| ()).map_err(CliError::from)
}

#[derive(Debug, Serialize)]
struct ErrorRow {
    scheme: String,
    dt: f64,
    error_inf: Option<f64>,
    error_l2: Option<f64>,
    /// log2 of the error ratio to the previous (coarser) row.
    order: Option<f64>,
    failure: Option<String>,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    t_final: f64,
    n_points: usize,
    reference_dt: f64,
    smooth: bool,
    note: Option<String>,
    rows: Vec<ErrorRow>,
}

fn error_norms(grid: &Grid, a: &[f64], b: &[f64]) -> (f64, f64) {
    let inf = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let l2 = (grid.spacing() * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).sqrt();
    (inf, l2)
}

pub fn cmd_compare(config: &RunConfig, levels: usize, schemes: &[SchemeKind]) -> Result<(), CliError> {
    if levels == 0 {
        return Err(CliError::Validation("--levels must be at least 1".into()));
    }
    let schemes: Vec<SchemeKind> = if schemes.is_empty() { SchemeKind::ALL.to_vec() } else { schemes.to_vec() };
    let grid = grid_for(config)?;
    let ic = config.scenario.generate(&grid)?;
    let u0 = &ic.velocity;
    let t_final = config.t_final;
    let m0 = epdiff_core::spectral::apply_helmholtz(&grid, u0)?;

    let reference = |dt: f64| -> Result<TrajectoryRecord, CliError> {
        let steps = ((t_final / dt).round() as usize).max(1);
        let opts = ReferenceOptions::new(dt, steps).with_stride(steps).with_dealias(config.reference.dealias);
        Ok(rk4_run(&grid, &m0, &opts)?)
    };

    let dts: Vec<f64> = (0..levels).map(|l| config.dt / f64::from(1u32 << l)).collect();
    let jobs: Vec<(SchemeKind, f64)> = schemes.iter().flat_map(|&s| dts.iter().map(move |&dt| (s, dt))).collect();

    // Reference solutions and all variational runs are independent.
    let (reference_runs, variational) = rayon::join(
        || -> Result<(TrajectoryRecord, TrajectoryRecord), CliError> {
            Ok((reference(config.reference.dt)?, reference(2.0 * config.reference.dt)?))
        },
        || {
            jobs.par_iter()
                .map(|&(scheme, dt)| {
                    let steps = ((t_final / dt).round() as usize).max(1);
                    let opts = RunOptions::new(dt, steps).with_stride(steps).with_solver(config.solver);
                    run(&grid, scheme, u0, &opts, &mut []).map_err(CliError::from)
                })
                .collect::<Vec<_>>()
        },
    );
    let (fine, coarse) = reference_runs?;
    let truth = fine.final_velocity().expect("reference keeps its final state");

    let mut rows = Vec::new();
    for (&(scheme, dt), result) in jobs.iter().zip(variational.iter()) {
        let record = match result {
            Ok(r) => r,
            Err(e) => return Err(CliError::Numerical(format!("{scheme} at dt = {dt}: {e}"))),
        };
        let (error_inf, error_l2, failure) = match &record.failure {
            Some(f) => (None, None, Some(format!("step failure at t = {}: {}", f.t, f.reason))),
            None => {
                let u = record.final_velocity().expect("runs keep their final state");
                let (a, b) = error_norms(&grid, &u, &truth);
                (Some(a), Some(b), None)
            }
        };
        let order = match rows.last() {
            Some(ErrorRow { scheme: s, error_inf: Some(prev), .. }) if s == scheme.name() => {
                error_inf.map(|e| (prev / e).log2())
            }
            _ => None,
        };
        rows.push(ErrorRow { scheme: scheme.name().into(), dt, error_inf, error_l2, order, failure });
    }
    let coarse_u = coarse.final_velocity().expect("reference keeps its final state");
    let (a, b) = error_norms(&grid, &coarse_u, &truth);
    rows.push(ErrorRow {
        scheme: "reference".into(),
        dt: 2.0 * config.reference.dt,
        error_inf: Some(a),
        error_l2: Some(b),
        order: None,
        failure: None,
    });

    let smooth = config.scenario.is_smooth();
    let report = CompareReport {
        t_final,
        n_points: grid.n_points(),
        reference_dt: config.reference.dt,
        smooth,
        note: (!smooth).then(|| "nonsmooth: order not asserted".to_string()),
        rows,
    };

    let dir = &config.output.directory;
    create_dir(dir)?;
    write_file(&dir.join("errors.csv"), |w| {
        writeln!(w, "scheme,dt,error_inf,error_l2,order")?;
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
        for r in &report.rows {
            writeln!(w, "{},{:.16e},{},{},{}", r.scheme, r.dt, fmt(r.error_inf), fmt(r.error_l2), fmt(r.order))?;
        }
        Ok(())
    })?;
    let text = serde_json::to_string_pretty(&report)?;
    write_file(&dir.join("compare.json"), |w| writeln!(w, "{text}"))?;

    // Energy traces of every scheme at the coarsest dt, on a shared time axis.
    let base: Vec<(SchemeKind, &TrajectoryRecord)> = jobs
        .iter()
        .zip(variational.iter())
        .filter(|((_, dt), _)| *dt == config.dt)
        .filter_map(|((s, _), r)| r.as_ref().ok().map(|r| (*s, r)))
        .collect();
    write_file(&dir.join("energy_combined.csv"), |w| {
        write!(w, "t")?;
        for (s, _) in &base {
            write!(w, ",{s}")?;
        }
        writeln!(w)?;
        let rows = base.iter().map(|(_, r)| r.energy.len()).max().unwrap_or(0);
        for k in 0..rows {
            write!(w, "{:.16e}", k as f64 * config.dt)?;
            for (_, r) in &base {
                match r.energy.get(k) {
                    Some(e) => write!(w, ",{:.16e}", e.energy)?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    })?;

    println!("{:<10} {:>10} {:>12} {:>12} {:>7}", "scheme", "dt", "err_inf", "err_l2", "order");
    let fmt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$e}"));
    for r in &report.rows {
        let order = r.order.map_or("-".to_string(), |o| format!("{o:.3}"));
        println!(
            "{:<10} {:>10.3e} {:>12} {:>12} {:>7}{}",
            r.scheme,
            r.dt,
            fmt(r.error_inf, 4),
            fmt(r.error_l2, 4),
            order,
            r.failure.as_deref().map_or(String::new(), |f| format!("  ({f})"))
        );
    }
    if let Some(note) = &report.note {
        println!("note: {note}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_verify(out: Option<&Path>, seed: u64) -> Result<(), CliError> {
    let report = epdiff_core::verify::run_suite(seed);
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    for c in &report.checks {
        eprintln!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        write_file(&dir.join("verify.json"), |w| writeln!(w, "{text}"))?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        Err(CliError::Numerical(format!("{failed} verification check(s) failed")))
    }
}
