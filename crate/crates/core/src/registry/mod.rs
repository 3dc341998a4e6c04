//! Catalog of inequality chains, their evaluation and randomized sweeps.

mod catalog;
mod chain;
mod ensemble;
mod expr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use catalog::{find, registry, testing, CatalogEntry, ChainSpec, SegmentDoc};
pub use chain::{
    ChainInputs, ChainReport, EssentialLevel, Factor, FiniteLevel, Level, LevelKind, LinkReport,
    Params, Quantity, RadiusChoice, Relation, Segment, Term, TermReport, Verdict,
};
pub use ensemble::{
    draw_trial, evaluate_inputs, generate_inputs, run_ensemble, trial_rng, EnsembleConfig, EnsembleKind, Summary, TrialInputs,
    TrialOutcome,
};
pub use expr::SetExpr;

use crate::error::{Error, Result};
use crate::joint::{EssJointOptions, JointOptions};
use crate::operator::{FiniteMatrix, Operator, OperatorFamily, SetInput};
use crate::spectral::{EssOptions, FiniteOptions};

/// Numerical budgets and tolerances used by every evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub finite: FiniteOptions,
    pub joint: JointOptions,
    /// Relative target width of the finite set-radius brackets.
    pub gripenberg_rel_delta: f64,
    pub ess: EssOptions,
    pub ess_joint: EssJointOptions,
    pub tol_finite: f64,
    pub abs_tol_finite: f64,
    pub tol_essential: f64,
    pub abs_tol_essential: f64,
    /// Largest set a single term may expand to.
    pub max_set_size: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        let ess = EssOptions {
            tol: 1e-9,
            ..EssOptions::default()
        };
        Budgets {
            finite: FiniteOptions::default(),
            joint: JointOptions {
                m_max: 4,
                max_products: 4000,
                ..JointOptions::default()
            },
            gripenberg_rel_delta: 1e-10,
            ess,
            ess_joint: EssJointOptions {
                m_max: 3,
                ess,
                max_products: 2048,
            },
            tol_finite: 1e-9,
            abs_tol_finite: 1e-12,
            tol_essential: 1e-6,
            abs_tol_essential: 1e-8,
            max_set_size: 4096,
        }
    }
}

/// Hex SHA-256 of the chain id, parameters and input sets.
pub fn input_digest<T: Operator + Serialize>(chain_id: &str, inputs: &ChainInputs<T>) -> String {
    let payload = serde_json::json!({
        "chain": chain_id,
        "params": inputs.params,
        "sets": inputs.sets,
    });
    hex::encode(Sha256::digest(payload.to_string().as_bytes()))
}

fn check_arity(spec: &ChainSpec, params: &Params, given: usize) -> Result<()> {
    let want = spec.input_sizes(params)?.len();
    if want != given {
        return Err(Error::InvalidArgument(format!(
            "{} takes {want} input sets, got {given}",
            spec.id
        )));
    }
    Ok(())
}

fn run<L: Level>(level: &L, spec: &ChainSpec, inputs: &ChainInputs<L::Op>) -> Result<ChainReport> {
    if spec.level != L::KIND {
        return Err(Error::InvalidArgument(format!(
            "{} is a {} chain",
            spec.id, spec.level
        )));
    }
    check_arity(spec, &inputs.params, inputs.sets.len())?;
    let segments = spec.segments(&inputs.params)?;
    let digest = input_digest(spec.id, inputs);
    chain::evaluate_segments(level, spec.id, &segments, inputs, digest)
}

/// Evaluates a finite chain on concrete matrices.
pub fn evaluate_finite(
    spec: &ChainSpec,
    inputs: &ChainInputs<FiniteMatrix>,
    budgets: &Budgets,
) -> Result<ChainReport> {
    run(&FiniteLevel { budgets }, spec, inputs)
}

/// Evaluates an essential chain on concrete families.
pub fn evaluate_essential(
    spec: &ChainSpec,
    inputs: &ChainInputs<OperatorFamily>,
    budgets: &Budgets,
) -> Result<ChainReport> {
    run(&EssentialLevel { budgets }, spec, inputs)
}

/// Evaluates a chain on parsed input sets of either kind.
pub fn evaluate_chain(
    spec: &ChainSpec,
    params: Params,
    sets: Vec<SetInput>,
    budgets: &Budgets,
) -> Result<ChainReport> {
    match spec.level {
        LevelKind::Finite => {
            let sets = sets
                .into_iter()
                .map(|s| match s {
                    SetInput::Matrices(m) => Ok(m),
                    SetInput::Families(_) => Err(Error::InvalidArgument(format!(
                        "{} needs finite matrices",
                        spec.id
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            evaluate_finite(spec, &ChainInputs { params, sets }, budgets)
        }
        LevelKind::Essential => {
            let sets = sets
                .into_iter()
                .map(|s| match s {
                    SetInput::Families(f) => Ok(f),
                    SetInput::Matrices(_) => Err(Error::InvalidArgument(format!(
                        "{} needs operator families",
                        spec.id
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            evaluate_essential(spec, &ChainInputs { params, sets }, budgets)
        }
    }
}

/// JSON description of every catalog entry with example parameters.
pub fn catalog_json() -> Result<serde_json::Value> {
    let mut rng = trial_rng(0, "catalog", 0);
    let entries = registry()
        .iter()
        .map(|c| {
            let example = c.sample_params(&mut rng);
            c.describe(&example)
        })
        .collect::<Result<Vec<_>>>()?;
    serde_json::to_value(entries).map_err(|e| Error::Parse(e.to_string()))
}
