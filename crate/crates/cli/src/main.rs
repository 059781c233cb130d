//! Command-line driver for the weak-form Bernstein-Galerkin SDOF library.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::{AnglesSpec, CliError};
use config::{load_config, RunConfig};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sdof", version, about = "Weak-form Bernstein-Galerkin SDOF driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a time-stepping simulation; emits trajectory CSV and a summary JSON.
    Simulate(SimulateArgs),
    /// Sampled projection-angle exponents over a (p, c, h/T) grid; JSON dictionary.
    StudyAngles(StudyAnglesArgs),
    /// Legendre coefficient-decay exponents s(p,m); CSV.
    StudyLegendre(StudyLegendreArgs),
    /// Check the p=3 closed-form leading error coefficients; pass/fail report.
    VerifyP3,
    /// Projection-error decay of the integrated-step target; CSV with fitted slope.
    ProjectError(ProjectErrorArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config file; the flags below override its fields.
    #[arg(long)]
    config: Option<String>,
    /// Basis size (polynomial degree + 1).
    #[arg(long)]
    p: Option<usize>,
    /// Step length (absolute).
    #[arg(long)]
    h: Option<f64>,
    /// Step length as a fraction of the natural period.
    #[arg(long)]
    h_over_t: Option<f64>,
    /// Number of steps.
    #[arg(long)]
    l: Option<usize>,
    /// Damping coefficient.
    #[arg(long)]
    c: Option<f64>,
    /// Stiffness.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    v0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectory CSV path ("-" for stdout); omitted = no CSV.
    #[arg(long)]
    csv: Option<String>,
    /// Summary JSON path; omitted = stdout.
    #[arg(long)]
    json: Option<String>,
    /// Dense samples per step in the CSV.
    #[arg(long)]
    dense: Option<usize>,
}

impl SimulateArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = load_config(self.config.as_deref()).map_err(CliError::Validation)?;
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(h) = self.h {
            cfg.h = Some(h);
            if self.h_over_t.is_none() {
                cfg.h_over_t = None;
            }
        }
        if let Some(f) = self.h_over_t {
            cfg.h_over_t = Some(f);
            if self.h.is_none() {
                cfg.h = None;
            }
        }
        if let Some(l) = self.l {
            cfg.l = l;
        }
        if let Some(c) = self.c {
            cfg.system.c = c;
        }
        if let Some(k) = self.k {
            cfg.system.k = k;
        }
        if let Some(x0) = self.x0 {
            cfg.x0 = x0;
        }
        if let Some(v0) = self.v0 {
            cfg.v0 = v0;
        }
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        if let Some(csv) = self.csv {
            cfg.csv_out = Some(csv);
        }
        if let Some(json) = self.json {
            cfg.json_out = Some(json);
        }
        if let Some(dense) = self.dense {
            cfg.dense_per_step = dense;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct StudyAnglesArgs {
    /// Basis sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "3")]
    p_list: Vec<usize>,
    /// Damping coefficients, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    c_list: Vec<f64>,
    /// Step fractions h/T, comma separated (1 = the reference step).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    h_over_t_list: Vec<f64>,
    /// Initial-condition samples per cell.
    #[arg(long, default_value_t = 10000)]
    samples: usize,
    /// RNG seed; required so runs are reproducible by construction.
    #[arg(long)]
    seed: u64,
    /// Output path; omitted = stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct StudyLegendreArgs {
    #[arg(long, default_value_t = 3)]
    p_min: usize,
    #[arg(long, default_value_t = 20)]
    p_max: usize,
    /// Output path; omitted = stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ProjectErrorArgs {
    /// Corner position of the integrated step, as a fraction of the interval.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    corner: f64,
    #[arg(long, default_value_t = 3)]
    p_min: usize,
    #[arg(long, default_value_t = 20)]
    p_max: usize,
    /// Interval length.
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Output path; omitted = stdout.
    #[arg(long)]
    out: Option<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.into_config()?;
            commands::cmd_simulate(&cfg)
        }
        Command::StudyAngles(args) => {
            let spec = AnglesSpec {
                p_list: args.p_list,
                c_list: args.c_list,
                h_over_t_list: args.h_over_t_list,
                samples: args.samples,
                seed: args.seed,
            };
            commands::cmd_study_angles(&spec, args.out.as_deref())
        }
        Command::StudyLegendre(args) => {
            commands::cmd_study_legendre(args.p_min, args.p_max, args.out.as_deref())
        }
        Command::VerifyP3 => commands::cmd_verify_p3(),
        Command::ProjectError(args) => commands::cmd_project_error(
            args.corner,
            args.p_min,
            args.p_max,
            args.h,
            args.out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; only genuine usage errors exit nonzero.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
