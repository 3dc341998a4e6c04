//! Command-line front end: chain checks, seeded sweeps and single estimates.

mod config;
mod estimate;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use schur_radii::operator::SetInput;
use schur_radii::registry::{
    self, draw_trial, evaluate_chain, evaluate_inputs, run_ensemble, ChainReport, ChainSpec,
    EnsembleConfig, EnsembleKind, LevelKind, Params, Summary, TrialOutcome,
};
use schur_radii::spectral::SpaceTag;
use serde::{Deserialize, Serialize};

use config::{load_budgets, RunConfig, TEST_CHAINS_ENV};
use report::{emit, exit_code, to_json, write_csv, Envelope, Format};

#[derive(Parser, Debug)]
#[command(name = "schur-radii", version, about = "Spectral radii of Hadamard products: estimates, chain checks and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one chain on explicit or re-derived random inputs.
    Check(CheckArgs),
    /// Run seeded random trials over a part of the catalog.
    Sweep(SweepArgs),
    /// Estimate one quantity of a matrix, family or set.
    Estimate(EstimateArgs),
    /// Print the catalog as JSON.
    Catalog(CatalogArgs),
}

#[derive(clap::Args, Debug, Serialize)]
struct CheckArgs {
    /// Chain id such as F1 or E19.
    #[arg(long)]
    id: String,
    /// JSON file with `{"params": {...}, "sets": [[...], ...]}`.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    input: Option<PathBuf>,
    /// Draw parameters and inputs from the seeded ensemble instead.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trial index within the seeded stream.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, value_enum)]
    ensemble: Option<Ensemble>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum RegistrySel {
    Finite,
    Essential,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
enum Ensemble {
    DenseUniform,
    SparseBernoulli,
    ShiftFamily,
    DiagonalFamily,
    ShiftPlusRank,
    MixedFamilies,
}

impl From<Ensemble> for EnsembleKind {
    fn from(e: Ensemble) -> Self {
        match e {
            Ensemble::DenseUniform => EnsembleKind::DenseUniform,
            Ensemble::SparseBernoulli => EnsembleKind::SparseBernoulli,
            Ensemble::ShiftFamily => EnsembleKind::ShiftFamily,
            Ensemble::DiagonalFamily => EnsembleKind::DiagonalFamily,
            Ensemble::ShiftPlusRank => EnsembleKind::ShiftPlusRank,
            Ensemble::MixedFamilies => EnsembleKind::MixedFamilies,
        }
    }
}

#[derive(clap::Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long, value_enum, default_value_t = RegistrySel::All)]
    registry: RegistrySel,
    /// Comma-separated chain ids; overrides --registry.
    #[arg(long, value_delimiter = ',')]
    ids: Vec<String>,
    #[arg(long, default_value_t = 20)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ensemble for chains of the matching level; others use their default.
    #[arg(long, value_enum)]
    ensemble: Option<Ensemble>,
    #[arg(long, default_value_t = 4)]
    dim_min: usize,
    #[arg(long, default_value_t = 6)]
    dim_max: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Store the generated inputs of every trial in the JSON report.
    #[arg(long)]
    dump_inputs: bool,
}

#[derive(clap::Args, Debug, Serialize)]
struct EstimateArgs {
    #[arg(value_enum)]
    quantity: estimate::Quantity,
    /// JSON file with a matrix, a family, or a list of either.
    #[arg(long)]
    input: PathBuf,
    /// Target bracket width (absolute for jsr, relative for set rho).
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    /// Norm used for `norm` and `jsr`: l1, l2 or linf.
    #[arg(long, default_value = "l2")]
    space: String,
}

#[derive(clap::Args, Debug, Serialize)]
struct CatalogArgs {
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckInput {
    #[serde(default)]
    params: Params,
    sets: Vec<SetInput>,
}

fn lookup(id: &str) -> Result<&'static ChainSpec> {
    if let Ok(spec) = registry::find(id) {
        return Ok(spec);
    }
    if std::env::var(TEST_CHAINS_ENV).as_deref() == Ok("1") {
        if let Some(spec) = registry::testing::test_chains().iter().find(|c| c.id == id) {
            return Ok(spec);
        }
    }
    Err(schur_radii::Error::UnknownChain(id.to_string()).into())
}

fn run_config<T: Serialize>(command: &str, args: &T) -> Result<RunConfig> {
    Ok(RunConfig {
        command: command.to_string(),
        args: serde_json::to_value(args)?,
        budgets: load_budgets()?,
    })
}

fn ensemble_for(level: LevelKind, requested: Option<Ensemble>) -> EnsembleKind {
    match requested.map(EnsembleKind::from) {
        Some(kind) if kind.level() == level => kind,
        _ => EnsembleKind::default_for(level),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

#[derive(Serialize)]
struct CheckBody<'a> {
    report: &'a ChainReport,
}

fn cmd_check(args: CheckArgs) -> Result<u8> {
    let config = run_config("check", &args)?;
    let budgets = config.budgets.values.clone();
    let spec = lookup(&args.id)?;
    let report = if let Some(path) = &args.input {
        let text = read(path)?;
        let input: CheckInput = serde_json::from_str(&text)
            .with_context(|| format!("malformed input {}", path.display()))?;
        evaluate_chain(spec, input.params, input.sets, &budgets)?
    } else {
        let kind = ensemble_for(spec.level, args.ensemble);
        if args.ensemble.is_some_and(|e| EnsembleKind::from(e).level() != spec.level) {
            bail!("ensemble {:?} does not fit the {} chain {}", args.ensemble.unwrap(), spec.level, spec.id);
        }
        let cfg = EnsembleConfig::new(kind, 1, args.seed);
        let inputs = draw_trial(spec, &cfg, args.trial)?
            .ok_or_else(|| anyhow!("the drawn parameters violate the side conditions"))?;
        let mut r = evaluate_inputs(spec, &inputs, &budgets)?;
        r.trial = Some(args.trial);
        r
    };
    let code = exit_code([report.verdict]);
    let bytes = match args.format {
        Format::Json => to_json(&Envelope::new(config, CheckBody { report: &report }))?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, [&report])?;
            buf
        }
    };
    emit(args.output.as_deref(), &bytes)?;
    Ok(code)
}

#[derive(Serialize)]
struct ChainBlock {
    ensemble: EnsembleKind,
    summary: Summary,
    trials: Vec<TrialOutcome>,
}

#[derive(Serialize)]
struct SweepBody {
    totals: Totals,
    chains: Vec<ChainBlock>,
}

#[derive(Serialize, Default)]
struct Totals {
    chains: usize,
    trials: u64,
    pass: u64,
    fail: u64,
    inconclusive: u64,
    rejected: u64,
}

fn cmd_sweep(args: SweepArgs) -> Result<u8> {
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let config = run_config("sweep", &args)?;
    let budgets = config.budgets.values.clone();
    let specs: Vec<&ChainSpec> = if args.ids.is_empty() {
        registry::registry()
            .iter()
            .filter(|c| match args.registry {
                RegistrySel::Finite => c.level == LevelKind::Finite,
                RegistrySel::Essential => c.level == LevelKind::Essential,
                RegistrySel::All => true,
            })
            .collect()
    } else {
        args.ids.iter().map(|id| lookup(id)).collect::<Result<_>>()?
    };
    // Fail early on an unwritable destination.
    if let Some(p) = &args.output {
        std::fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?;
    }
    let mut totals = Totals::default();
    let mut chains = Vec::new();
    for spec in specs {
        let kind = ensemble_for(spec.level, args.ensemble);
        let cfg = EnsembleConfig {
            kind,
            dim_min: args.dim_min,
            dim_max: args.dim_max,
            trials: args.trials,
            seed: args.seed,
        };
        let (summary, trials) = run_ensemble(spec, &cfg, &budgets, args.dump_inputs)?;
        eprintln!(
            "{:<5} pass {:>4}  fail {:>3}  inconclusive {:>3}  rejected {:>3}  min slack {}",
            summary.chain_id,
            summary.pass,
            summary.fail,
            summary.inconclusive,
            summary.rejected,
            summary.min_slack.map_or("-".to_string(), |s| format!("{s:.3e}")),
        );
        totals.chains += 1;
        totals.trials += summary.trials;
        totals.pass += summary.pass;
        totals.fail += summary.fail;
        totals.inconclusive += summary.inconclusive;
        totals.rejected += summary.rejected;
        chains.push(ChainBlock { ensemble: kind, summary, trials });
    }
    let code = if totals.fail > 0 {
        1
    } else if totals.inconclusive > 0 {
        3
    } else {
        0
    };
    let bytes = match args.format {
        Format::Json => to_json(&Envelope::new(config, SweepBody { totals, chains }))?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, chains.iter().flat_map(|c| c.trials.iter().map(|t| &t.report)))?;
            buf
        }
    };
    emit(args.output.as_deref(), &bytes)?;
    Ok(code)
}

fn cmd_estimate(args: EstimateArgs) -> Result<u8> {
    let config = run_config("estimate", &args)?;
    let space: SpaceTag = args.space.parse()?;
    let input = estimate::parse_input(&read(&args.input)?)
        .with_context(|| format!("malformed input {}", args.input.display()))?;
    let est = estimate::estimate(args.quantity, &input, args.delta, space, &config.budgets.values)?;
    if let Some(w) = &est.warning {
        eprintln!("warning: {w}");
    }
    emit(None, &to_json(&Envelope::new(config, est))?)?;
    Ok(0)
}

fn cmd_catalog(args: CatalogArgs) -> Result<u8> {
    let value = registry::catalog_json()?;
    emit(args.output.as_deref(), &to_json(&value)?)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Catalog(a) => cmd_catalog(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
