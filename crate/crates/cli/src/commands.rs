//! The experiment subcommands.

use std::io::Write;
use std::path::Path;

use helmprec_core::fileio::{read_field, write_field};
use helmprec_core::grid::make_grid;
use helmprec_core::helmholtz::grid_points_for;
use helmprec_core::medium::{sample_medium, Medium, MediumClassParams};
use helmprec_core::solver::{random_rhs, PreparedSolver, SolveReport};
use helmprec_core::verify::run_suites;

use crate::config::ExperimentConfig;

pub type CmdResult = Result<i32, String>;

fn io_err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Draw a medium and write its velocity field.
pub fn cmd_gen_medium(cfg: &ExperimentConfig, zero_amplitude: bool) -> CmdResult {
    let n = cfg.n.unwrap_or(128);
    let grid = make_grid(n, n, 1.0, 1.0).map_err(io_err)?;
    let params = if zero_amplitude {
        MediumClassParams::degenerate(cfg.seed)
    } else {
        MediumClassParams::new(cfg.seed)
    };
    let medium = sample_medium(&params, grid).map_err(io_err)?;
    std::fs::create_dir_all(&cfg.out).map_err(io_err)?;
    let path = cfg.out.join(format!("medium-{}.hfld", cfg.seed));
    write_field(&path, &medium.c, &grid).map_err(io_err)?;
    println!(
        "{{seed: {}, n: {}, c_min: {:.6}, c_max: {:.6}, c_mean: {:.6}, file: {:?}}}",
        cfg.seed, n, medium.c_min, medium.c_max, medium.c_mean, path
    );
    Ok(0)
}

fn load_medium(cfg: &ExperimentConfig) -> Result<Medium, String> {
    let path = cfg
        .medium
        .as_ref()
        .ok_or_else(|| "a medium file is required (--medium FILE)".to_string())?;
    let (grid, c) = read_field(path).map_err(io_err)?;
    let alpha = ndarray::Array2::from_elem(grid.shape(), cfg.alpha);
    Medium::new(grid, c, alpha, grid.lx).map_err(io_err)
}

fn write_residual_csv(path: &Path, report: &SolveReport) -> Result<(), String> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    writeln!(f, "iteration,residual").map_err(io_err)?;
    for (i, r) in report.residual_history.iter().enumerate() {
        writeln!(f, "{},{}", i + 1, r).map_err(io_err)?;
    }
    Ok(())
}

fn summary_line(tag: &str, omega: f64, report: &SolveReport) -> String {
    format!(
        "{{run: {tag:?}, omega: {omega:.6}, iterations: {}, converged: {}, prepare_s: {:.3}, execute_s: {:.3}}}",
        report.iterations, report.converged, report.prepare_seconds, report.execute_seconds
    )
}

/// Solve one problem from a medium file.
pub fn cmd_solve(cfg: &ExperimentConfig) -> CmdResult {
    let medium = load_medium(cfg)?;
    let omega = cfg
        .omega
        .ok_or_else(|| "a frequency is required (--omega W or --omega Xpi)".to_string())?;
    let solve_cfg = cfg.solve_config(omega, medium.l);
    let prepared = PreparedSolver::new(&medium, omega, solve_cfg).map_err(io_err)?;
    let rhs = random_rhs(medium.grid, cfg.seed);
    let (u, report) = prepared.execute(&rhs).map_err(io_err)?;
    std::fs::create_dir_all(&cfg.out).map_err(io_err)?;
    let re = u.mapv(|z| z.re);
    let im = u.mapv(|z| z.im);
    write_field(&cfg.out.join("solution_re.hfld"), &re, &medium.grid).map_err(io_err)?;
    write_field(&cfg.out.join("solution_im.hfld"), &im, &medium.grid).map_err(io_err)?;
    write_residual_csv(&cfg.out.join("residuals.csv"), &report)?;
    println!("{}", summary_line("solve", omega, &report));
    Ok(if report.converged { 0 } else { 2 })
}

/// Frequency sweep at fixed points per wavelength; the grid is rebuilt
/// per frequency and the medium redrawn from the same seed.
pub fn cmd_sweep_freq(cfg: &ExperimentConfig) -> CmdResult {
    if cfg.omegas.is_empty() {
        return Err("a frequency list is required (--omegas 10pi,20pi,40pi)".to_string());
    }
    if cfg.omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err("frequencies must be ascending".to_string());
    }
    std::fs::create_dir_all(&cfg.out).map_err(io_err)?;
    let csv_path = cfg.out.join("sweep.csv");
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&csv_path).map_err(io_err)?);
    writeln!(csv, "omega,iterations,prepare_s,execute_s").map_err(io_err)?;
    let mut all_converged = true;
    for &omega in &cfg.omegas {
        let (medium, _n) = medium_for(cfg, omega)?;
        let solve_cfg = cfg.solve_config(omega, medium.l);
        let prepared = PreparedSolver::new(&medium, omega, solve_cfg).map_err(io_err)?;
        let rhs = random_rhs(medium.grid, cfg.seed.wrapping_add(1000));
        let (_, report) = prepared.execute(&rhs).map_err(io_err)?;
        all_converged &= report.converged;
        writeln!(
            csv,
            "{omega},{},{:.3},{:.3}",
            report.iterations, report.prepare_seconds, report.execute_seconds
        )
        .map_err(io_err)?;
        println!("{}", summary_line("sweep", omega, &report));
    }
    println!("wrote {csv_path:?}");
    Ok(if all_converged { 0 } else { 2 })
}

fn medium_for(cfg: &ExperimentConfig, omega: f64) -> Result<(Medium, usize), String> {
    // Scout the velocity floor on a coarse grid, then size the real grid
    // by the points-per-wavelength rule against the minimum wavelength.
    let scout_grid = make_grid(64, 64, 1.0, 1.0).map_err(io_err)?;
    let params = MediumClassParams::new(cfg.seed);
    let scout = sample_medium(&params, scout_grid).map_err(io_err)?;
    let n = cfg
        .n
        .unwrap_or_else(|| grid_points_for(omega, cfg.nw, 1.0, scout.c_min).max(64));
    let grid = make_grid(n, n, 1.0, 1.0).map_err(io_err)?;
    let medium = sample_medium(&params, grid)
        .map_err(io_err)?
        .with_alpha(cfg.alpha)
        .map_err(io_err)?;
    Ok((medium, n))
}

/// Iteration-count histogram over media drawn from consecutive seeds.
pub fn cmd_histogram(cfg: &ExperimentConfig) -> CmdResult {
    if cfg.n_media == 0 {
        return Err("--n-media must be at least 1".to_string());
    }
    let omega = cfg.omega.unwrap_or(40.0 * std::f64::consts::PI);
    std::fs::create_dir_all(&cfg.out).map_err(io_err)?;
    let csv_path = cfg.out.join("histogram.csv");
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&csv_path).map_err(io_err)?);
    writeln!(csv, "seed,c_min,c_max,iterations,converged").map_err(io_err)?;
    let mut counts = Vec::new();
    let mut failures = 0usize;
    for k in 0..cfg.n_media {
        let seed = cfg.seed + k as u64;
        let sub = ExperimentConfig { seed, ..cfg.clone() };
        match run_one_histogram_case(&sub, omega) {
            Ok((medium, report)) => {
                writeln!(
                    csv,
                    "{seed},{:.6},{:.6},{},{}",
                    medium.c_min, medium.c_max, report.iterations, report.converged
                )
                .map_err(io_err)?;
                println!(
                    "medium {seed}: c in [{:.3}, {:.3}], iterations {}{}",
                    medium.c_min,
                    medium.c_max,
                    report.iterations,
                    if report.converged { "" } else { " (no convergence)" }
                );
                if report.converged {
                    counts.push(report.iterations);
                } else {
                    failures += 1;
                }
            }
            Err(e) => {
                failures += 1;
                writeln!(csv, "{seed},,,,{e:?}").map_err(io_err)?;
                eprintln!("medium {seed} failed: {e}");
            }
        }
    }
    counts.sort_unstable();
    if !counts.is_empty() {
        let median = counts[counts.len() / 2];
        println!(
            "{{media: {}, failures: {failures}, min: {}, median: {median}, max: {}}}",
            cfg.n_media,
            counts.first().unwrap(),
            counts.last().unwrap()
        );
    }
    println!("wrote {csv_path:?}");
    Ok(if failures == 0 { 0 } else { 2 })
}

fn run_one_histogram_case(
    cfg: &ExperimentConfig,
    omega: f64,
) -> Result<(Medium, SolveReport), String> {
    let (medium, _) = medium_for(cfg, omega)?;
    let solve_cfg = cfg.solve_config(omega, medium.l);
    let prepared = PreparedSolver::new(&medium, omega, solve_cfg).map_err(io_err)?;
    let rhs = random_rhs(medium.grid, cfg.seed.wrapping_add(1000));
    let (_, report) = prepared.execute(&rhs).map_err(io_err)?;
    Ok((medium, report))
}

/// Run the invariant suites; exit code counts failed suites.
pub fn cmd_verify(cfg: &ExperimentConfig) -> CmdResult {
    let failures = run_suites(cfg.suite.as_deref(), cfg.inject_weight_fault);
    Ok(failures.min(100) as i32)
}
