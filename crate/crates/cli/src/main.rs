use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcf_core::conventions::Conventions;
use pcf_core::error::Error;
use pcf_core::experiment::{self, describe_model, ExperimentConfig, ExperimentKind, RunStatus, Summary};
use pcf_core::homogeneous::ModelName;
use pcf_core::verify::{run_criterion, VerifyOptions, CRITERIA};

const EXIT_VALIDATION: u8 = 2;
const EXIT_SINGULARITY: u8 = 3;
const EXIT_CRITERION: u8 = 4;

#[derive(Parser)]
#[command(name = "pcflab", version, about = "Pluriclosed flow experiments and acceptance checks")]
struct Cli {
    /// Root directory for run outputs.
    #[arg(long, env = "PCFLAB_OUTPUT", default_value = "runs", global = true)]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run the acceptance criteria and print a pass/fail matrix.
    Verify {
        /// Criterion IDs to run; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Use the wrong d^c sign throughout (negative control).
        #[arg(long)]
        flip_dc_sign: bool,
    },
    /// Compute the formal existence time for a cone config.
    Cone { config: PathBuf },
    /// Print structure data for a homogeneous model.
    Describe { model: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(&config, &cli.output_root, None),
        Command::Cone { config } => run(&config, &cli.output_root, Some(ExperimentKind::Cone)),
        Command::Verify { only, flip_dc_sign } => verify(&only, flip_dc_sign, &cli.output_root),
        Command::Describe { model } => describe(&model),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Singularity { .. } | Error::Degenerate { .. } | Error::TypeChange { .. } => EXIT_SINGULARITY,
                Error::Config { .. } | Error::Parameter(_) | Error::UnsupportedModel(_) | Error::Precondition(_) | Error::Io(_) => EXIT_VALIDATION,
                _ => 1,
            })
        }
    }
}

fn run(config: &Path, root: &Path, expect: Option<ExperimentKind>) -> Result<u8, Error> {
    let cfg = ExperimentConfig::from_path(config).map_err(|e| match e {
        Error::Io(io) => Error::Config { path: String::new(), message: format!("cannot read {}: {io}", config.display()) },
        e => e,
    })?;
    if let Some(kind) = expect {
        if cfg.experiment != kind {
            return Err(Error::Config { path: "experiment".into(), message: format!("expected {kind:?}, got {:?}", cfg.experiment) });
        }
    }
    let name = cfg.output.clone().unwrap_or_else(|| config.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned()));
    let dir = root.join(name);
    let summary = experiment::run(&cfg, &dir)?;
    print_summary(&summary, &dir);
    Ok(match summary.status {
        RunStatus::Pass => 0,
        RunStatus::Singularity => EXIT_SINGULARITY,
        RunStatus::CriterionFailure => EXIT_CRITERION,
    })
}

fn print_summary(s: &Summary, dir: &Path) {
    println!("{:?}: {}", s.experiment, s.verdict);
    for c in &s.checks {
        println!("  {:<4} {:<22} {:.3e} (tol {:.1e})  {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.value, c.tolerance, c.anchor);
    }
    if let Some(v) = s.values.get("tau_star") {
        println!("  tau* = {v}");
    }
    println!("status {:?}; artifacts in {}", s.status, dir.display());
}

fn verify(only: &[u8], flip: bool, root: &Path) -> Result<u8, Error> {
    for &id in only {
        if !CRITERIA.iter().any(|c| c.0 == id) {
            return Err(Error::Config { path: "only".into(), message: format!("no criterion {id}") });
        }
    }
    let opts = VerifyOptions { conventions: if flip { Conventions::flipped() } else { Conventions::default() } };
    let mut reports = Vec::new();
    for (id, _, _) in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.0)) {
        let r = run_criterion(*id, &opts);
        println!("{:>2}  {:<28} {}  {:>7.1}s  {}", r.id, r.name, if r.passed { "PASS" } else { "FAIL" }, r.seconds, r.detail);
        reports.push(r);
    }
    std::fs::create_dir_all(root)?;
    let path = root.join("verify.json");
    std::fs::write(&path, serde_json::to_string_pretty(&reports)?)?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed; matrix written to {}", reports.len() - failed, reports.len(), path.display());
    Ok(if failed == 0 { 0 } else { EXIT_CRITERION })
}

fn describe(model: &str) -> Result<u8, Error> {
    let name: ModelName = model.parse()?;
    println!("{}", serde_json::to_string_pretty(&describe_model(name)?)?);
    Ok(0)
}
