use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use polinucb::epl::{verify_gepl, EplTrialConfig, GeplReport};
use polinucb::harness::{
    aggregate_by_policy, emit_outputs, fmt_sig, run_all, run_coverage, CoverageConfig, EnvConfig, ExperimentConfig,
    ReplayEnvConfig,
};
use polinucb::Error;

#[derive(Parser)]
#[command(name = "polinucb", version, about = "Bandits with post-serving contexts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; all cores by default.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    no_plot: bool,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (policy, seed) pair and write regret.csv / regret.svg.
    Run(RunArgs),
    /// Monte Carlo trials of the elliptical potential bound; CSV on stdout.
    EplVerify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Confidence-set coverage Monte Carlo.
    Coverage {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an experiment on a pre-featurized replay table.
    Replay {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

enum Failure {
    Setup(Error),
    Runtime(Error),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } | Error::Io { .. } | Error::InvalidParameter(_) | Error::Dimension { .. } => {
                Failure::Setup(e)
            }
            other => Failure::Runtime(other),
        }
    }
}

fn run_experiment(mut config: ExperimentConfig, args: &RunArgs) -> Result<(), Failure> {
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    config.output_dir = Some(out.clone());
    let records = run_all(&config, args.jobs)?;
    let curves = aggregate_by_policy(&records)?;
    emit_outputs(&records, &curves, &out, !args.no_plot)?;
    println!("policy,seeds,mean_final_regret,stderr");
    for c in &curves {
        println!("{},{},{},{}", c.policy, c.seeds, fmt_sig(c.final_mean()), fmt_sig(c.final_stderr()));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|source| {
        Failure::Setup(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EplInput {
    Many(Vec<EplTrialConfig>),
    One(EplTrialConfig),
}

fn epl_row(r: &GeplReport) -> String {
    let c = &r.config;
    [
        c.d.to_string(),
        c.horizon.to_string(),
        fmt_sig(c.p),
        fmt_sig(c.sigma_eps),
        fmt_sig(c.l_eps),
        fmt_sig(c.l_x),
        fmt_sig(c.delta),
        c.trials.to_string(),
        r.failures.to_string(),
        fmt_sig(r.bound_term1),
        fmt_sig(r.bound_term2),
    ]
    .join(",")
}

fn epl_verify(path: &Path) -> Result<(), Failure> {
    let text = read(path)?;
    let configs = match serde_json::from_str::<EplInput>(&text) {
        Ok(EplInput::Many(v)) => v,
        Ok(EplInput::One(c)) => vec![c],
        Err(e) => return Err(Failure::Setup(Error::Config(format!("{}: {e}", path.display())))),
    };
    for c in &configs {
        c.validate()?;
    }
    println!("d,T,p,sigma_eps,l_eps,l_x,delta,trials,failures,bound_term1,bound_term2");
    let mut failed = Vec::new();
    for c in &configs {
        let report = verify_gepl(c)?;
        println!("{}", epl_row(&report));
        if !report.passes() {
            failed.push(format!(
                "d={} T={} p={}: {} failures exceed {:.4}",
                c.d,
                c.horizon,
                c.p,
                report.failures,
                report.threshold()
            ));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(failed.join("; ")))
    }
}

fn coverage(path: &Path) -> Result<(), Failure> {
    let config = CoverageConfig::from_json(&read(path)?)?;
    let report = run_coverage(&config)?;
    println!(
        "failures {}/{} = {} (threshold {})",
        report.failures,
        report.runs,
        fmt_sig(report.failure_fraction()),
        fmt_sig(report.threshold)
    );
    if report.passes() {
        Ok(())
    } else {
        Err(Failure::Assertion("coverage failure fraction above threshold".into()))
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => run_experiment(ExperimentConfig::load(&args.config)?, &args),
        Command::EplVerify { config } => epl_verify(&config),
        Command::Coverage { config } => coverage(&config),
        Command::Replay { features, run } => {
            let mut config = ExperimentConfig::load(&run.config)?;
            let arms = match &config.env {
                EnvConfig::Replay(r) => r.arms,
                _ => None,
            };
            config.env = EnvConfig::Replay(ReplayEnvConfig {
                path: Some(features),
                arms,
            });
            run_experiment(config, &run)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Setup(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Assertion(m)) => {
            eprintln!("assertion failed: {m}");
            ExitCode::from(3)
        }
    }
}
