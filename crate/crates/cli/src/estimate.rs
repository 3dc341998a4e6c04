//! `estimate`: single quantities of one operator or set.

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use schur_radii::joint::{ess_set_radii, finite_set_bracket, gripenberg_bracket, JointOptions};
use schur_radii::operator::{FiniteMatrix, OperatorFamily, OperatorSet, SetInput};
use schur_radii::registry::Budgets;
use schur_radii::spectral::{
    essential_spectral_radius, hausdorff_mnc, operator_norm, spectral_radius, Bracket, SpaceTag,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    /// Spectral radius of a matrix, or the set radius of a set of matrices.
    Rho,
    /// Operator norm of a matrix, or the largest norm over a set.
    Norm,
    /// Hausdorff measure of noncompactness of a family.
    Gamma,
    /// Essential spectral radius of a family or of a set of families.
    Ess,
    /// Joint spectral radius of a set of matrices by branch and bound.
    Jsr,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Input {
    Matrix(FiniteMatrix),
    Family(OperatorFamily),
    Set(SetInput),
}

#[derive(Debug, Serialize)]
pub struct Estimate {
    pub quantity: Quantity,
    pub structure: &'static str,
    pub bracket: Bracket,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

fn unsupported(quantity: Quantity, structure: &'static str, why: &str) -> Estimate {
    Estimate {
        quantity,
        structure,
        bracket: Bracket::new(0.0, f64::INFINITY, "unsupported"),
        warning: Some(why.to_string()),
        details: None,
    }
}

fn max_bracket(items: impl IntoIterator<Item = schur_radii::Result<Bracket>>) -> schur_radii::Result<Bracket> {
    let mut out: Option<Bracket> = None;
    for b in items {
        let b = b?;
        out = Some(match out {
            None => b,
            Some(prev) => prev.max(&b),
        });
    }
    out.ok_or(schur_radii::Error::Empty)
}

pub fn parse_input(text: &str) -> Result<SetOrSingle> {
    let value: serde_json::Value = serde_json::from_str(text).context("input is not valid JSON")?;
    let input: Input = serde_json::from_value(value)
        .context("input is neither a matrix {rows, cols, entries}, a family {bands, diagonal, finite_rank}, nor a list of one kind")?;
    Ok(match input {
        Input::Matrix(m) => SetOrSingle::Matrix(m),
        Input::Family(f) => SetOrSingle::Family(f),
        Input::Set(SetInput::Matrices(s)) => SetOrSingle::Matrices(s),
        Input::Set(SetInput::Families(s)) => SetOrSingle::Families(s),
    })
}

pub enum SetOrSingle {
    Matrix(FiniteMatrix),
    Family(OperatorFamily),
    Matrices(OperatorSet<FiniteMatrix>),
    Families(OperatorSet<OperatorFamily>),
}

pub fn estimate(
    quantity: Quantity,
    input: &SetOrSingle,
    delta: f64,
    space: SpaceTag,
    budgets: &Budgets,
) -> Result<Estimate> {
    if delta.is_nan() || delta <= 0.0 {
        bail!("delta must be positive");
    }
    let joint = JointOptions { space, ..budgets.joint };
    let done = |structure, bracket: Bracket, details: Option<serde_json::Value>| Estimate {
        quantity,
        structure,
        bracket,
        warning: None,
        details,
    };
    use Quantity::*;
    use SetOrSingle::*;
    let out = match (quantity, input) {
        (Rho | Jsr, Matrix(a)) => done("matrix", spectral_radius(a, &budgets.finite)?, None),
        (Norm, Matrix(a)) => done("matrix", operator_norm(a, space, &budgets.finite)?, None),
        (Gamma | Ess, Matrix(_)) => done("matrix", Bracket::exact(0.0, "compact"), None),
        // The set bracket targets a width relative to the radius.
        (Rho, Matrices(s)) => done("matrix_set", finite_set_bracket(s, delta, &joint)?, None),
        (Jsr, Matrices(s)) => done("matrix_set", gripenberg_bracket(s, delta, &joint)?, None),
        (Norm, Matrices(s)) => done(
            "matrix_set",
            max_bracket(s.iter().map(|a| operator_norm(a, space, &budgets.finite)))?,
            None,
        ),
        (Gamma | Ess, Matrices(_)) => done("matrix_set", Bracket::exact(0.0, "compact"), None),
        (Gamma, Family(f)) => done("family", hausdorff_mnc(f, &budgets.ess)?, None),
        (Ess, Family(f)) => {
            let r = essential_spectral_radius(f, &budgets.ess)?;
            let details = serde_json::json!({ "per_power": r.per_power, "oracle": r.oracle });
            done("family", r.bracket, Some(details))
        }
        (Gamma, Families(s)) => done(
            "family_set",
            max_bracket(s.iter().map(|f| hausdorff_mnc(f, &budgets.ess)))?,
            None,
        ),
        (Ess, Families(s)) => {
            let est = ess_set_radii(s, &budgets.ess_joint)?;
            done("family_set", est.bracket(), Some(serde_json::to_value(&est)?))
        }
        (Rho | Jsr | Norm, Family(_)) => unsupported(
            quantity,
            "family",
            "only gamma and ess are computed for infinite families",
        ),
        (Rho | Jsr | Norm, Families(_)) => unsupported(
            quantity,
            "family_set",
            "only gamma and ess are computed for sets of infinite families",
        ),
    };
    Ok(out)
}
