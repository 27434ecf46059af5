use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vll_harness::checks::check_suite;
use vll_harness::error::{EXIT_CHECK, EXIT_OK};
use vll_harness::output::write_json;
use vll_harness::run::run_single;
use vll_harness::scaling::{layer_scaling, row_passes, write_scaling};
use vll_harness::sweep::sweep;
use vll_harness::{HarnessError, Result, RunConfig};

#[derive(Parser)]
#[command(name = "vll", version, about = "Vanishing-viscosity laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One viscous run with its reference and reports.
    Run(Common),
    /// Runs over a decreasing list of viscosities.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated viscosities, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        epsilon: Option<Vec<f64>>,
        /// Worker threads (capped by VLL_THREADS).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Identity, entropy and budget checks.
    Check(Common),
    /// Layer norm scalings against the viscosity.
    LayerScaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        epsilon: Option<Vec<f64>>,
    },
}

fn load(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(c) => {
            let cfg = load(c.config.as_deref())?;
            let o = run_single(&cfg, &c.out)?;
            for f in &o.flags {
                eprintln!("warning: {f}");
            }
            println!("E(T) = {:.6e}, metric = {:.6e}", o.report.energy.energy.last().unwrap_or(&0.0), o.report.metric.sup);
            Ok(if o.flags.is_empty() { EXIT_OK } else { EXIT_CHECK })
        }
        Command::Sweep { common, epsilon, jobs } => {
            let cfg = load(common.config.as_deref())?;
            let eps = epsilon.unwrap_or_else(|| cfg.sweep.epsilons.clone());
            let res = sweep(&cfg, &eps, jobs, Some(&common.out))?;
            for r in &res.rows {
                println!("eps {:.6e}  metric {:.6e}  E(T) {:.6e}  C {:.4}", r.epsilon, r.metric, r.et, r.gronwall_c);
            }
            if let Some(s) = res.summary.metric_slope {
                println!("metric slope {s:.4}");
            }
            let flagged = res.rows.iter().any(|r| !r.flags.is_empty());
            Ok(if flagged { EXIT_CHECK } else { EXIT_OK })
        }
        Command::Check(c) => {
            let cfg = load(c.config.as_deref())?;
            let rep = check_suite(&cfg)?;
            for i in &rep.items {
                println!(
                    "{} {:<32} {:.4e} (threshold {:.4e})  {}",
                    if i.passed { "PASS" } else { "FAIL" },
                    i.name,
                    i.value,
                    i.threshold,
                    i.detail
                );
            }
            std::fs::create_dir_all(&c.out).map_err(|e| HarnessError::io(&c.out, e))?;
            write_json(&c.out.join("check.json"), &rep)?;
            Ok(if rep.all_passed() { EXIT_OK } else { EXIT_CHECK })
        }
        Command::LayerScaling { common, epsilon } => {
            let cfg = load(common.config.as_deref())?;
            let eps = epsilon.unwrap_or_else(|| cfg.scaling.epsilons.clone());
            let rows = layer_scaling(&cfg, &eps)?;
            write_scaling(&common.out, &rows)?;
            let mut ok = true;
            for r in &rows {
                let pass = row_passes(r, cfg.tolerances.scaling_rel);
                ok &= pass;
                println!(
                    "{} {:<20} fitted {:+.4} expected {:+.4}",
                    if pass { "PASS" } else { "FAIL" },
                    r.norm_name,
                    r.fitted_exponent,
                    r.expected_exponent
                );
            }
            Ok(if ok { EXIT_OK } else { EXIT_CHECK })
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
