use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use privtopk::experiment::{
    run_experiment, write_csv, write_outputs, Algorithm, ExperimentConfig, FamilyDefaults, InstanceSource,
};
use privtopk::instances::InstanceFamilySpec;
use privtopk::verify::{run_suite, Suite};
use privtopk::NoiseKind;

#[derive(Parser)]
#[command(name = "privtopk", version, about = "Private top-k selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated trials and write one CSV row per trial.
    Run(RunArgs),
    /// Generate an instance and write it as histogram JSON.
    Gen(GenArgs),
    /// Run a verification suite and print PASS/FAIL per check.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Histogram JSON path, or `family[:key=val,...]` with keys m, n, k, s, seed.
    #[arg(long)]
    instance: String,
    /// Number of items, when not given in --instance.
    #[arg(long)]
    m: Option<usize>,
    /// Number of clients (score ceiling), when not given in --instance.
    #[arg(long)]
    n: Option<u64>,
    /// Zipf exponent.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_algorithm)]
    algo: Algorithm,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Noise for privta_eager and privta_lazy.
    #[arg(long, value_enum, default_value_t = NoiseArg::Gumbel)]
    noise: NoiseArg,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; the summary goes to `<stem>.summary.json`. Without
    /// it the CSV is written to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the wall_time_ns column (otherwise 0, keeping output reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Laplace,
    Gumbel,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Laplace => NoiseKind::Laplace,
            NoiseArg::Gumbel => NoiseKind::Gumbel,
        }
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: privtopk::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: privtopk::Error| e.to_string())
}

fn instance_source(args: &InstanceArgs, k: usize, seed: u64) -> privtopk::Result<InstanceSource> {
    let defaults = FamilyDefaults { m: args.m, n: args.n, k, s: args.s, seed };
    InstanceSource::parse(&args.instance, defaults)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let config = ExperimentConfig {
        algorithm: args.algo,
        noise: args.noise.into(),
        instance: instance_source(&args.instance, args.k, args.seed)?,
        k: args.k,
        epsilon: args.eps,
        trials: args.trials,
        seed: args.seed,
        timing: args.timing,
    };
    let result = run_experiment(&config)?;
    match args.out {
        Some(path) => {
            let sidecar = write_outputs(&result, &path).with_context(|| format!("writing {}", path.display()))?;
            eprintln!(
                "{} trials, mean access_cost_L1 {:.2}; summary in {}",
                result.records.len(),
                result.summary.mean_access_cost_l1,
                sidecar.display()
            );
        }
        None => write_csv(&result.records, std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let spec: InstanceFamilySpec = match instance_source(&args.instance, args.k, args.seed)? {
        InstanceSource::Family(spec) => spec,
        InstanceSource::File(path) => bail!("unknown instance family '{}'", path.display()),
    };
    let instance = spec.generate()?;
    let json = instance.histogram.to_json_string(instance.s_low.as_deref())?;
    match args.out {
        Some(path) => std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => writeln!(std::io::stdout().lock(), "{json}")?,
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<bool> {
    let reports = run_suite(args.suite, args.seed)?;
    for r in &reports {
        println!("{r}");
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args).map(|()| true),
        Command::Gen(args) => cmd_gen(args).map(|()| true),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
