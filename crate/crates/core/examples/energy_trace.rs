//! Prints energy diagnostics for the Gaussian scenario.
//!
//! cargo run --release -p epdiff-core --example energy_trace -- average 256 0.01 5

use std::time::Instant;

use epdiff_core::{make_grid, run, stats, RunOptions, ScenarioSpec, SchemeKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scheme: SchemeKind = args.first().map_or("average", String::as_str).parse()?;
    let n_modes: usize = args.get(1).map_or(Ok(256), |s| s.parse())?;
    let dt: f64 = args.get(2).map_or(Ok(0.01), |s| s.parse())?;
    let t_final: f64 = args.get(3).map_or(Ok(5.0), |s| s.parse())?;

    let grid = make_grid(n_modes, 1.0)?;
    let u0 = ScenarioSpec::default().generate(&grid)?.velocity;
    let steps = (t_final / dt).round() as usize;
    let start = Instant::now();
    let rec = run(&grid, scheme, &u0, &RunOptions::new(dt, steps).with_stride(steps), &mut [])?;
    let t = rec.times();
    let e = rec.energies();
    let ci = stats::bootstrap_slope(&t, &e, 50, 2000, 0.95, 1);
    let iters = rec.energy.iter().map(|s| s.iterations).max().unwrap_or(0);
    let res = rec.energy.iter().map(|s| s.residual).fold(0.0, f64::max);
    println!(
        "{scheme} P={} dt={dt} steps={} E0={:.6} E_end={:.6} excursion={:.3e} slope={:.3e} ci=[{:.3e}, {:.3e}] max_iter={iters} max_res={res:.2e} failure={:?} {:.1}s",
        grid.n_points(),
        rec.energy.len() - 1,
        e[0],
        e[e.len() - 1],
        stats::max_relative_excursion(&e),
        ci.slope,
        ci.lower,
        ci.upper,
        rec.failure.as_ref().map(|f| (f.t, f.reason.clone())),
        start.elapsed().as_secs_f64()
    );
    if std::env::var_os("TRACE").is_some() {
        for s in rec.energy.iter().step_by(25) {
            println!("{:.3} {:.6}", s.t, s.energy);
        }
    }
    Ok(())
}
