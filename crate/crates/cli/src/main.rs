//! `isp` command-line front end.

mod commands;
mod output;
mod summary;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status contract.
pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_DIVERGENCE: u8 = 2;
pub const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "isp",
    version,
    about = "Two-axis inertially stabilised platform simulator and control design toolkit",
    after_help = "Exit status: 0 success, 1 invalid configuration or input, 2 simulation diverged \
                  (partial telemetry is still written), 3 acceptance criteria failed.\n\
                  Bundled scenarios: step_yaw, step_pitch, bmi_worstcase, static_jitter, dynamic_jitter, moon_track."
)]
struct Cli {
    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

/// Output directory flag shared by every subcommand.
#[derive(Debug, clap::Args)]
struct OutArgs {
    /// Directory for every file the command writes; created if missing.
    /// Nothing is written outside it.
    #[arg(long, env = "ISP_OUT_DIR", default_value = "isp-out")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design the stabilization and tracking controllers for a scenario and
    /// write the scenario with its discretized coefficients plus a report.
    Design {
        /// Scenario TOML file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a scenario and write its telemetry CSV and metrics summary.
    Run {
        /// Scenario TOML file, or the name of a bundled scenario.
        #[arg(long, required_unless_present = "bundle", conflicts_with = "bundle")]
        scenario: Option<String>,
        /// Run every bundled scenario and write the performance table.
        #[arg(long)]
        bundle: bool,
        /// Override the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compute metrics from a telemetry CSV written by `isp run`.
    Metrics {
        /// Telemetry CSV file.
        #[arg(long)]
        telemetry: PathBuf,
        /// Base axis of the disturbance for isolation figures; by default
        /// the axis with the largest base rate.
        #[arg(long, value_parser = ["x", "y", "z"])]
        disturbance_axis: Option<String>,
        /// Also write the summary to this directory.
        #[arg(long, env = "ISP_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite and print one line per criterion.
    Verify {
        /// Directory of scenario files that replace bundled scenarios of the
        /// same name.
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
        /// Also write the report to this directory.
        #[arg(long, env = "ISP_OUT_DIR")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // clap's own usage-error status (2) would collide with divergence
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK });
        }
    };
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Design { scenario, out } => commands::design(&scenario, &out.out, quiet),
        Command::Run {
            scenario,
            bundle,
            seed,
            out,
        } => {
            if bundle {
                commands::run_bundle(seed, &out.out, quiet)
            } else {
                commands::run(scenario.as_deref().unwrap_or_default(), seed, &out.out, quiet)
            }
        }
        Command::Metrics {
            telemetry,
            disturbance_axis,
            out,
        } => commands::metrics(&telemetry, disturbance_axis.as_deref(), out.as_deref(), quiet),
        Command::Verify { scenario_dir, out } => commands::verify(scenario_dir.as_deref(), out.as_deref(), quiet),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
