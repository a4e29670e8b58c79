//! `helmprec`: experiment driver for the frame-preconditioned Helmholtz
//! solver. Subcommands reproduce the experiment protocol: medium
//! generation, single solves, frequency sweeps, iteration histograms,
//! and the self-check suites.
//!
//! Exit codes: 0 success, 1 usage or I/O failure, 2 non-convergence.

mod commands;
mod config;

use config::{parse_flags, ExperimentConfig};

const USAGE: &str = "\
usage: helmprec <command> [--flag value ...]

commands:
  gen-medium   draw a random medium and write it as HFLD1
               (--seed N --n N --out DIR [--zero-amplitude])
  solve        solve one problem from a medium file
               (--medium FILE --omega W|Xpi [--alpha A --tol T --max-iter M
                --seed S --angles N --bands N|auto --out DIR])
  sweep-freq   iteration counts along a frequency sweep at fixed points
               per wavelength (--omegas 10pi,20pi,40pi --seed S [--nw N ...])
  histogram    iteration counts over media drawn from consecutive seeds
               (--n-media K --seed S0 [--omega W --nw N ...])
  verify       run the invariant suites (--suite NAME to filter)

Any flag can also come from a config file of `key = value` lines passed
with --config FILE; flags given on the command line win.";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = run(&args).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        1
    });
    std::process::exit(code);
}

fn run(args: &[String]) -> Result<i32, String> {
    let Some(command) = args.first() else {
        eprintln!("{USAGE}");
        return Ok(1);
    };
    if command == "--help" || command == "-h" || command == "help" {
        println!("{USAGE}");
        return Ok(0);
    }
    let flags = parse_flags(&args[1..])?;
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = flags.get("config") {
        cfg.load_file(std::path::Path::new(path))?;
    }
    let mut zero_amplitude = false;
    for (k, v) in &flags {
        match k.as_str() {
            "config" => {}
            "zero-amplitude" => zero_amplitude = true,
            "inject-weight-fault" => cfg.inject_weight_fault = true,
            _ => cfg.set(k, v)?,
        }
    }
    match command.as_str() {
        "gen-medium" => commands::cmd_gen_medium(&cfg, zero_amplitude),
        "solve" => commands::cmd_solve(&cfg),
        "sweep-freq" => commands::cmd_sweep_freq(&cfg),
        "histogram" => commands::cmd_histogram(&cfg),
        "verify" => commands::cmd_verify(&cfg),
        other => {
            eprintln!("unknown command {other:?}\n{USAGE}");
            Ok(1)
        }
    }
}
