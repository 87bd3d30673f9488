//! Argument parsing and command dispatch for the `hball` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::{
    exit_code, output_dir, run, sweep, ScenarioConfig, EXIT_CHECKS_FAILED, EXIT_ERROR, EXIT_PASS,
};

/// Subharmonic balls, partial balayage and two-phase Schwarz functions on
/// planar grids.
#[derive(Parser)]
#[command(name = "hball", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a scenario, run its checks and write all artifacts.
    Compute(RunArgs),
    /// Recompute a scenario and run its checks; writes only summary.json.
    Verify(RunArgs),
    /// Run a scenario once per parameter value.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// alpha, h or x0_y
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config entry, e.g. `--set grid.h=0.01` or `--set x0.1=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_parser = ["analytic", "numeric"])]
    green: Option<String>,
    /// Print nothing on success; the exit code and summary.json still report.
    #[arg(long, short)]
    quiet: bool,
}

impl RunArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = self.set.clone();
        if let Some(g) = &self.green {
            o.push(format!("green={g}"));
        }
        o
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Compute(args) => {
            let cfg = ScenarioConfig::load(&args.config, &args.overrides())?;
            let dir = output_dir(&cfg, args.out.as_deref());
            let o = run(&cfg, Some(&dir), true)?;
            if !args.quiet {
                println!("{}", serde_json::to_string_pretty(&o.summary["checks"])?);
                eprintln!("wrote {}", dir.display());
            }
            Ok(o.pass)
        }
        Command::Verify(args) => {
            let cfg = ScenarioConfig::load(&args.config, &args.overrides())?;
            let dir = args.out.clone().or_else(|| cfg.out.clone());
            let o = run(&cfg, dir.as_deref(), false)?;
            if !args.quiet {
                println!("{}", serde_json::to_string_pretty(&o.summary)?);
            }
            Ok(o.pass)
        }
        Command::Sweep {
            run: args,
            param,
            values,
        } => {
            crate::sweep::parameter_path(&param)?;
            let text = std::fs::read_to_string(&args.config)?;
            let mut doc: serde_json::Value = serde_json::from_str(&text)?;
            for o in args.overrides() {
                crate::apply_override(&mut doc, &o)?;
            }
            let cfg = ScenarioConfig::from_value(doc.clone())?;
            let dir = output_dir(&cfg, args.out.as_deref());
            let o = sweep(&doc, &param, &values, &dir)?;
            if !args.quiet {
                print!("{}", o.table);
            }
            Ok(o.pass)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_PASS
            };
        }
    };
    match execute(cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECKS_FAILED,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
