//! Command-line interface: `run`, `point`, `polar` and `mesh` subcommands.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on solver
//! failures.

use super::config::{parse_polar_config, parse_sim_config};
use super::{run_point_job, run_polar_job, run_sim_job, write_mesh_vtk, RunError};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::PathBuf;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "anisofrac",
    about = "Anisotropic viscoelastic-viscoplastic phase-field fracture simulator for short fiber-reinforced polymers"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Job configuration file (an empty file runs the default benchmark).
    config: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the output directory of the job.
    #[arg(long)]
    output_dir: Option<String>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a finite-element fracture job.
    Run(CommonOpts),
    /// Material-point relaxation trace at a fixed load angle.
    Point(CommonOpts),
    /// Crack-driving-force sweep over load angles.
    Polar(CommonOpts),
    /// Write the undeformed mesh of a job to a VTK file.
    Mesh {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_config(path: &PathBuf) -> Result<String, u8> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_CONFIG
    })
}

fn solver_exit(e: RunError) -> u8 {
    eprintln!("error: {e}");
    match e {
        RunError::Mesh(_) | RunError::Orientation(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_run() -> u8 {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(opts) => {
            let text = match read_config(&opts.config) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let mut job = match parse_sim_config(&text) {
                Ok(j) => j,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            if let Some(t) = opts.threads {
                job.threads = t;
            }
            if let Some(dir) = opts.output_dir {
                job.output.directory = dir;
            }
            match run_sim_job(&job, opts.quiet) {
                Ok(out) => {
                    if !opts.quiet {
                        let peak = out
                            .report
                            .peak_force()
                            .map(|r| (r.force_n, r.displacement_mm));
                        if let Some((f, d)) = peak {
                            eprintln!("peak force {f:.3} N at {d:.6} mm");
                        }
                        eprintln!("wrote {}", out.force_csv_path.display());
                    }
                    EXIT_OK
                }
                Err(e) => solver_exit(e),
            }
        }
        Command::Point(opts) => {
            let text = match read_config(&opts.config) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let mut job = match parse_polar_config(&text) {
                Ok(j) => j,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            if let Some(t) = opts.threads {
                job.threads = t;
            }
            if let Some(dir) = opts.output_dir {
                job.output.directory = dir;
            }
            match run_point_job(&job) {
                Ok(path) => {
                    if !opts.quiet {
                        eprintln!("wrote {}", path.display());
                    }
                    EXIT_OK
                }
                Err(e) => solver_exit(e),
            }
        }
        Command::Polar(opts) => {
            let text = match read_config(&opts.config) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let mut job = match parse_polar_config(&text) {
                Ok(j) => j,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            if let Some(t) = opts.threads {
                job.threads = t;
            }
            if let Some(dir) = opts.output_dir {
                job.output.directory = dir;
            }
            match run_polar_job(&job) {
                Ok(path) => {
                    if !opts.quiet {
                        eprintln!("wrote {}", path.display());
                    }
                    EXIT_OK
                }
                Err(e) => solver_exit(e),
            }
        }
        Command::Mesh { config, out } => {
            let text = match read_config(&config) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let job = match parse_sim_config(&text) {
                Ok(j) => j,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            match write_mesh_vtk(&job, &out) {
                Ok(()) => EXIT_OK,
                Err(e) => solver_exit(e),
            }
        }
    }
}
