//! The `parafree` command-line harness.
//!
//! Subcommands: `run` (experiment + trace + report), `verify` (invariant
//! suite), `adversary` (lower-bound opponent run), `batch` (online-to-batch
//! conversion). Exit codes: 0 success / all checks pass, 1 verification
//! failure, 2 config error, 3 runtime contract violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use parafree_cli::checks::verify_invariants;
use parafree_cli::config::{
    AdversaryConfig, Algorithm, BatchConfig, ExperimentConfig, Overrides,
};
use parafree_cli::error::{HarnessError, HarnessResult};
use parafree_cli::experiment::{online_to_batch, run_adversary, run_experiment, to_json};

#[derive(Parser)]
#[command(
    name = "parafree",
    about = "Parameter-free online learning experiment harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct OverrideArgs {
    /// Override the sequence / batch seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of rounds.
    #[arg(long = "T")]
    rounds: Option<u64>,
    /// Override the algorithm (base, epigraph, unconstrained1d,
    /// unconstrained_nd, full_matrix).
    #[arg(long)]
    algo: Option<String>,
    /// Override the step-size exponent p.
    #[arg(long)]
    p: Option<f64>,
    /// Override the regularizer exponent q.
    #[arg(long)]
    q: Option<f64>,
    /// Override the regularization cap gamma.
    #[arg(long)]
    gamma: Option<f64>,
    /// Override the wealth scale epsilon.
    #[arg(long)]
    eps: Option<f64>,
    /// Override the initial hint h1.
    #[arg(long)]
    h1: Option<f64>,
}

impl OverrideArgs {
    fn to_overrides(&self) -> HarnessResult<Overrides> {
        let algo = match &self.algo {
            Some(name) => Some(Algorithm::parse(name)?),
            None => None,
        };
        Ok(Overrides {
            seed: self.seed,
            rounds: self.rounds,
            algo,
            p: self.p,
            q: self.q,
            gamma: self.gamma,
            eps: self.eps,
            h1: self.h1,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment: emit a CSV trace and a JSON regret report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run the invariant verification suite.
    Verify {
        /// Restrict to one module (base, epigraph, unconstrained,
        /// full_matrix, adversary, trace).
        #[arg(long)]
        module: Option<String>,
    },
    /// Run the lower-bound adversary against the 1-D unconstrained
    /// learner.
    Adversary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Online-to-batch conversion on the quadratic objective.
    Batch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> HarnessResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("cannot parse {}: {e}", path.display())))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> HarnessResult<PathBuf> {
    fs::create_dir_all(dir)
        .map_err(|e| HarnessError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| HarnessError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_run(config_path: &Path, out: &Path, overrides: &OverrideArgs) -> HarnessResult<i32> {
    let mut config: ExperimentConfig = load(config_path)?;
    overrides.to_overrides()?.apply_experiment(&mut config);
    config.validate()?;
    let result = run_experiment(&config)?;
    fs::create_dir_all(out)
        .map_err(|e| HarnessError::Config(format!("cannot create {}: {e}", out.display())))?;
    let trace_path = out.join("trace.csv");
    parafree::trace::write_trace(&result.rows, &trace_path)?;
    write_out(out, "report.json", &to_json(&result.report)?)?;
    if let Some(detail) = &result.detail {
        let mut text =
            String::from("t,x_raw,y_raw,x_proj,y_proj,delta_x,delta_y\n");
        for row in detail {
            use parafree::trace::fmt_f64 as f;
            text.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.t,
                f(row.raw.0),
                f(row.raw.1),
                f(row.projected.0),
                f(row.projected.1),
                f(row.delta.0),
                f(row.delta.1)
            ));
        }
        write_out(out, "epigraph_detail.csv", &text)?;
    }
    println!(
        "wrote {} rounds to {}; {} comparators, all_pass = {}",
        result.rows.len(),
        trace_path.display(),
        result.report.verdicts.len(),
        result.report.all_pass
    );
    Ok(if result.report.all_pass { 0 } else { 1 })
}

fn cmd_verify(module: Option<&str>) -> HarnessResult<i32> {
    let lines = verify_invariants(module)?;
    for line in &lines {
        println!("{}", line.render());
    }
    let failures = lines.iter().filter(|l| !l.pass).count();
    println!("{} checks, {} failures", lines.len(), failures);
    Ok(if failures == 0 { 0 } else { 1 })
}

fn cmd_adversary(config_path: &Path, out: &Path, overrides: &OverrideArgs) -> HarnessResult<i32> {
    let mut config: AdversaryConfig = load(config_path)?;
    overrides.to_overrides()?.apply_adversary(&mut config);
    config.validate()?;
    let (rows, report) = run_adversary(&config)?;
    fs::create_dir_all(out)
        .map_err(|e| HarnessError::Config(format!("cannot create {}: {e}", out.display())))?;
    parafree::trace::write_trace(&rows, &out.join("trace.csv"))?;
    write_out(out, "adversary.json", &to_json(&report)?)?;
    println!(
        "adversary run: triggered = {}, partial-sum margin {:.3e}",
        report.triggered, report.partial_sum_margin
    );
    Ok(if report.partial_sum_ok { 0 } else { 1 })
}

fn cmd_batch(config_path: &Path, out: &Path, overrides: &OverrideArgs) -> HarnessResult<i32> {
    let mut config: BatchConfig = load(config_path)?;
    overrides.to_overrides()?.apply_batch(&mut config);
    config.validate()?;
    let result = online_to_batch(&config)?;
    write_out(out, "batch.json", &to_json(&result)?)?;
    for cp in &result.checkpoints {
        println!("T = {:>10}  suboptimality = {:.6e}", cp.t, cp.suboptimality);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, out, overrides } => cmd_run(config, out, overrides),
        Command::Verify { module } => cmd_verify(module.as_deref()),
        Command::Adversary { config, out, overrides } => cmd_adversary(config, out, overrides),
        Command::Batch { config, out, overrides } => cmd_batch(config, out, overrides),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
