//! Seeded random inputs and parallel sweeps over them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::operator::{FiniteMatrix, OperatorFamily, OperatorSet, WeightSequence};
use crate::registry::chain::{ChainInputs, ChainReport, LevelKind, Params, Verdict};
use crate::registry::{evaluate_essential, evaluate_finite, Budgets, ChainSpec};

/// Distribution of the random inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Entries uniform on `[0, 1]`.
    DenseUniform,
    /// Entries uniform on `[0, 1]` kept with probability 0.3.
    SparseBernoulli,
    /// Weighted forward shifts with weights `c + a/i`.
    ShiftFamily,
    /// Diagonal operators with weights `c + a/i`.
    DiagonalFamily,
    /// A weighted shift plus a 3x3 nonnegative corner.
    ShiftPlusRank,
    /// Each family drawn from one of the three family kinds.
    MixedFamilies,
}

impl EnsembleKind {
    pub fn level(self) -> LevelKind {
        match self {
            EnsembleKind::DenseUniform | EnsembleKind::SparseBernoulli => LevelKind::Finite,
            _ => LevelKind::Essential,
        }
    }

    pub fn default_for(level: LevelKind) -> Self {
        match level {
            LevelKind::Finite => EnsembleKind::DenseUniform,
            LevelKind::Essential => EnsembleKind::MixedFamilies,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub kind: EnsembleKind,
    pub dim_min: usize,
    pub dim_max: usize,
    pub trials: u64,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(kind: EnsembleKind, trials: u64, seed: u64) -> Self {
        EnsembleConfig {
            kind,
            dim_min: 4,
            dim_max: 6,
            trials,
            seed,
        }
    }
}

/// Inputs of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrialInputs {
    Finite(ChainInputs<FiniteMatrix>),
    Essential(ChainInputs<OperatorFamily>),
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub report: ChainReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<TrialInputs>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub chain_id: String,
    pub trials: u64,
    pub pass: u64,
    pub fail: u64,
    pub inconclusive: u64,
    /// Trials whose drawn parameters violated the side conditions.
    pub rejected: u64,
    pub min_slack: Option<f64>,
    pub argmin_trial: Option<u64>,
    pub argmin_digest: Option<String>,
}

/// Per-trial generator seeded from `sha256("{seed}:{chain}:{trial}")`.
pub fn trial_rng(seed: u64, chain_id: &str, trial: u64) -> ChaCha8Rng {
    let digest = Sha256::digest(format!("{seed}:{chain_id}:{trial}").as_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> FiniteMatrix {
    let entries = (0..rows * cols)
        .map(|_| if rng.gen_bool(density) { rng.gen_range(0.0..=1.0) } else { 0.0 })
        .collect();
    FiniteMatrix::new(rows, cols, entries).expect("entries are nonnegative")
}

fn harmonic(rng: &mut ChaCha8Rng) -> WeightSequence {
    let c = rng.gen_range(0.5..=2.0);
    let a = rng.gen_range(-0.4..=1.0);
    WeightSequence::harmonic(c, a).expect("weights stay positive")
}

fn random_family(rng: &mut ChaCha8Rng, kind: EnsembleKind) -> OperatorFamily {
    match kind {
        EnsembleKind::ShiftFamily => OperatorFamily::shift(1, harmonic(rng)),
        EnsembleKind::DiagonalFamily => OperatorFamily::diagonal(harmonic(rng)),
        EnsembleKind::ShiftPlusRank => {
            let corner = random_matrix(rng, 3, 3, 1.0);
            OperatorFamily::shift(1, harmonic(rng))
                .with_finite_rank(&corner)
                .expect("corner is nonnegative")
        }
        EnsembleKind::MixedFamilies => {
            let pick = match rng.gen_range(0..3) {
                0 => EnsembleKind::ShiftFamily,
                1 => EnsembleKind::DiagonalFamily,
                _ => EnsembleKind::ShiftPlusRank,
            };
            random_family(rng, pick)
        }
        EnsembleKind::DenseUniform | EnsembleKind::SparseBernoulli => {
            unreachable!("matrix ensembles do not produce families")
        }
    }
}

/// Draws input sets of the sizes the chain asks for.
pub fn generate_inputs(
    spec: &ChainSpec,
    params: &Params,
    config: &EnsembleConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrialInputs> {
    if config.kind.level() != spec.level {
        return Err(Error::InvalidArgument(format!(
            "ensemble {:?} does not fit the {} chain {}",
            config.kind, spec.level, spec.id
        )));
    }
    if config.dim_min == 0 || config.dim_min > config.dim_max {
        return Err(Error::InvalidArgument("dimension range is empty".into()));
    }
    let sizes = spec.input_sizes(params)?;
    match spec.level {
        LevelKind::Finite => {
            let n = rng.gen_range(config.dim_min..=config.dim_max);
            let cols = if spec.vectors { 1 } else { n };
            let density = match config.kind {
                EnsembleKind::SparseBernoulli => 0.3,
                _ => 1.0,
            };
            let sets = sizes
                .iter()
                .map(|&k| OperatorSet::new((0..k).map(|_| random_matrix(rng, n, cols, density)).collect()))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrialInputs::Finite(ChainInputs { params: params.clone(), sets }))
        }
        LevelKind::Essential => {
            let sets = sizes
                .iter()
                .map(|&k| OperatorSet::new((0..k).map(|_| random_family(rng, config.kind)).collect()))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrialInputs::Essential(ChainInputs { params: params.clone(), sets }))
        }
    }
}

/// Re-derives the parameters and inputs of one trial; `None` when the drawn
/// parameters violate the side conditions.
pub fn draw_trial(spec: &ChainSpec, config: &EnsembleConfig, trial: u64) -> Result<Option<TrialInputs>> {
    let mut rng = trial_rng(config.seed, spec.id, trial);
    let params = spec.sample_params(&mut rng);
    if spec.check_hypothesis(&params).is_err() {
        return Ok(None);
    }
    generate_inputs(spec, &params, config, &mut rng).map(Some)
}

/// Evaluates a chain on inputs of either level.
pub fn evaluate_inputs(spec: &ChainSpec, inputs: &TrialInputs, budgets: &Budgets) -> Result<ChainReport> {
    match inputs {
        TrialInputs::Finite(i) => evaluate_finite(spec, i, budgets),
        TrialInputs::Essential(i) => evaluate_essential(spec, i, budgets),
    }
}

fn run_trial(
    spec: &ChainSpec,
    config: &EnsembleConfig,
    budgets: &Budgets,
    trial: u64,
    keep_inputs: bool,
) -> Result<Option<TrialOutcome>> {
    let Some(inputs) = draw_trial(spec, config, trial)? else {
        return Ok(None);
    };
    let mut report = evaluate_inputs(spec, &inputs, budgets)?;
    report.trial = Some(trial);
    Ok(Some(TrialOutcome {
        trial,
        report,
        inputs: keep_inputs.then_some(inputs),
    }))
}

/// Runs `config.trials` seeded trials in parallel. Outcomes come back in
/// trial order, so results do not depend on the thread count.
pub fn run_ensemble(
    spec: &ChainSpec,
    config: &EnsembleConfig,
    budgets: &Budgets,
    keep_inputs: bool,
) -> Result<(Summary, Vec<TrialOutcome>)> {
    let results: Vec<Option<TrialOutcome>> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, config, budgets, t, keep_inputs))
        .collect::<Result<_>>()?;
    let mut summary = Summary {
        chain_id: spec.id.to_string(),
        trials: config.trials,
        pass: 0,
        fail: 0,
        inconclusive: 0,
        rejected: 0,
        min_slack: None,
        argmin_trial: None,
        argmin_digest: None,
    };
    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        let Some(o) = r else {
            summary.rejected += 1;
            continue;
        };
        match o.report.verdict {
            Verdict::Pass => summary.pass += 1,
            Verdict::Fail => summary.fail += 1,
            Verdict::Inconclusive => summary.inconclusive += 1,
        }
        if let Some(s) = o.report.min_slack() {
            if summary.min_slack.is_none_or(|m| s < m) {
                summary.min_slack = Some(s);
                summary.argmin_trial = Some(o.trial);
                summary.argmin_digest = Some(o.report.input_digest.clone());
            }
        }
        outcomes.push(o);
    }
    Ok((summary, outcomes))
}
