use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pvobs_cli::{
    cmd_certify, cmd_feasibility_map, cmd_simulate, parse_scenario, CliError, Overrides,
    EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK,
};

/// Traffic density estimation from probe vehicles.
#[derive(Debug, Parser)]
#[command(name = "pvobs", version)]
struct Cli {
    /// Directory for emitted files (default: the scenario's `output.dir`, else `out`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Seed of the measurement noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of solver cells.
    #[arg(long, global = true)]
    cells: Option<usize>,
    /// Simulated time, hours.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file and write truth, estimate, trajectories and error traces.
    Simulate { scenario: PathBuf },
    /// Search a stability certificate for one density interval and spacing.
    Certify {
        #[arg(long)]
        vf: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        rho_min: f64,
        #[arg(long)]
        rho_max: f64,
        #[arg(long)]
        dm: f64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Largest certifiable spacing over a grid of density intervals.
    FeasibilityMap {
        #[arg(long)]
        vf: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        n: usize,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::from(EXIT_OK)
            };
        }
    };
    match cli.command {
        Command::Simulate { scenario } => {
            let overrides = Overrides {
                seed: cli.seed,
                cells: cli.cells,
                horizon: cli.horizon,
                out_dir: cli.out_dir,
            };
            let s = match parse_scenario(&scenario).and_then(|s| s.with_overrides(&overrides)) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let dir = s.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            match cmd_simulate(&s, &dir) {
                Ok(summary) => {
                    println!(
                        "scenario {}: {} steps, dt = {} h",
                        summary.name, summary.steps, summary.dt
                    );
                    println!(
                        "initial error {}, final error {}",
                        summary.initial_error, summary.final_error
                    );
                    match summary.convergence_time {
                        Some(t) => println!("converged (5%) at t = {} h ({} min)", t, t * 60.0),
                        None => println!("did not reach 5% of the initial error"),
                    }
                    println!("max probe spacing {} km", summary.max_spacing);
                    for f in &summary.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::from(EXIT_OK)
                }
                Err(e) => fail(e),
            }
        }
        Command::Certify {
            vf,
            gamma,
            rho_min,
            rho_max,
            dm,
            json,
        } => match cmd_certify(vf, gamma, rho_min, rho_max, dm) {
            Ok(report) => {
                if json {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report).expect("report serializes")
                    );
                } else {
                    print!("{report}");
                }
                ExitCode::from(if report.feasible {
                    EXIT_OK
                } else {
                    EXIT_INFEASIBLE
                })
            }
            Err(e) => fail(e),
        },
        Command::FeasibilityMap { vf, gamma, n } => {
            let dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("out"));
            match cmd_feasibility_map(vf, gamma, n, &dir) {
                Ok(out) => {
                    println!("{} cells evaluated", out.map.cells.len());
                    for f in &out.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::from(EXIT_OK)
                }
                Err(e) => fail(e),
            }
        }
    }
}
