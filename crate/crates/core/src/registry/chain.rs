//! Chains of inequalities, their terms, and the verdict logic.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{FiniteMatrix, Operator, OperatorFamily, OperatorSet};
use crate::registry::expr::{exponent_label, SetExpr};
use crate::registry::Budgets;
use crate::spectral::{
    essential_spectral_radius, hausdorff_mnc, operator_norm, Bracket, SpaceTag,
};

/// Whether a chain lives on finite matrices or on banded families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelKind {
    Finite,
    Essential,
}

impl fmt::Display for LevelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LevelKind::Finite => "finite",
            LevelKind::Essential => "essential",
        })
    }
}

/// Which set radius a chain's `r` stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusChoice {
    /// Generalized radius (`rho` or `rho_ess`).
    #[default]
    Generalized,
    /// Joint radius (`rho^` or `rho^_ess`).
    Joint,
}

/// Scalar quantity attached to a set expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// The chain's set radius `r`; for singletons the spectral radius
    /// (finite) or the essential spectral radius (families).
    Radius,
    /// `sup` of the `l2` operator norms over the set.
    Norm,
    /// `sup` of the Hausdorff measures of noncompactness over the set.
    Gamma,
    /// `sup` of all entries over the set.
    Sup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub quantity: Quantity,
    pub expr: SetExpr,
    pub exp: f64,
}

/// A product of powers of scalar quantities, optionally multiplying a matrix
/// expression for entrywise comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub factors: Vec<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<SetExpr>,
}

impl Term {
    fn single(quantity: Quantity, expr: SetExpr, exp: f64) -> Self {
        Term {
            factors: vec![Factor { quantity, expr, exp }],
            matrix: None,
        }
    }

    /// `r(expr)^exp`.
    pub fn r(expr: SetExpr, exp: f64) -> Self {
        Term::single(Quantity::Radius, expr, exp)
    }

    /// `gamma(expr)^exp`.
    pub fn gamma(expr: SetExpr, exp: f64) -> Self {
        Term::single(Quantity::Gamma, expr, exp)
    }

    /// `||expr||^exp`.
    pub fn norm(expr: SetExpr, exp: f64) -> Self {
        Term::single(Quantity::Norm, expr, exp)
    }

    /// `sup(expr)^exp`, the largest entry over the set.
    pub fn single_sup(expr: SetExpr, exp: f64) -> Self {
        Term::single(Quantity::Sup, expr, exp)
    }

    /// The matrix expression itself, for entrywise links.
    pub fn matrix(expr: SetExpr) -> Self {
        Term {
            factors: Vec::new(),
            matrix: Some(expr),
        }
    }

    /// Product of two terms.
    pub fn times(mut self, other: Term) -> Self {
        self.factors.extend(other.factors);
        if other.matrix.is_some() {
            self.matrix = other.matrix;
        }
        self
    }

    /// Product of several terms.
    pub fn product(terms: Vec<Term>) -> Self {
        terms
            .into_iter()
            .reduce(Term::times)
            .unwrap_or(Term { factors: Vec::new(), matrix: None })
    }

    /// Label with the radius spelled out for the given level.
    pub fn label(&self, level: LevelKind, radius: RadiusChoice) -> String {
        let r = match (level, radius) {
            (LevelKind::Finite, RadiusChoice::Generalized) => "rho",
            (LevelKind::Finite, RadiusChoice::Joint) => "rho^",
            (LevelKind::Essential, RadiusChoice::Generalized) => "rho_ess",
            (LevelKind::Essential, RadiusChoice::Joint) => "rho^_ess",
        };
        let mut parts: Vec<String> = self
            .factors
            .iter()
            .map(|f| {
                let base = match f.quantity {
                    Quantity::Radius => format!("{r}({})", f.expr),
                    Quantity::Norm => format!("||{}||", f.expr),
                    Quantity::Gamma => format!("gamma({})", f.expr),
                    Quantity::Sup => format!("||{}||_inf", f.expr),
                };
                if f.exp == 1.0 {
                    base
                } else {
                    format!("{base}^{}", exponent_label(f.exp))
                }
            })
            .collect();
        if let Some(m) = &self.matrix {
            parts.push(m.to_string());
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" * ")
        }
    }
}

/// How consecutive terms of a segment compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Scalar `<=`.
    Le,
    /// Scalar `=`.
    Eq,
    /// Entrywise `<=` between matrices.
    EntrywiseLe,
}

/// One displayed chain `t_0 R t_1 R ... R t_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub relation: Relation,
    pub terms: Vec<Term>,
}

impl Segment {
    pub fn new(name: impl Into<String>, relation: Relation, terms: Vec<Term>) -> Self {
        Segment {
            name: name.into(),
            relation,
            terms,
        }
    }

    pub fn le(name: impl Into<String>, terms: Vec<Term>) -> Self {
        Segment::new(name, Relation::Le, terms)
    }

    pub fn eq(name: impl Into<String>, terms: Vec<Term>) -> Self {
        Segment::new(name, Relation::Eq, terms)
    }
}

/// Parameters shared by all chains. Unused fields stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<usize>>,
    #[serde(default)]
    pub radius: RadiusChoice,
}

fn missing(name: &str) -> Error {
    Error::InvalidArgument(format!("parameter {name} is required"))
}

impl Params {
    pub fn m(&self) -> Result<usize> {
        self.m.ok_or_else(|| missing("m"))
    }
    pub fn k(&self) -> Result<usize> {
        self.k.ok_or_else(|| missing("k"))
    }
    pub fn n(&self) -> Result<usize> {
        self.n.ok_or_else(|| missing("n"))
    }
    pub fn t(&self) -> Result<f64> {
        self.t.ok_or_else(|| missing("t"))
    }
    pub fn alpha(&self) -> Result<f64> {
        self.alpha.ok_or_else(|| missing("alpha"))
    }
    pub fn alphas(&self) -> Result<&[f64]> {
        self.alphas.as_deref().ok_or_else(|| missing("alphas"))
    }
    pub fn beta(&self) -> Result<f64> {
        self.beta.ok_or_else(|| missing("beta"))
    }
    pub fn tau(&self) -> Result<&[usize]> {
        self.tau.as_deref().ok_or_else(|| missing("tau"))
    }
    pub fn nu(&self) -> Result<&[usize]> {
        self.nu.as_deref().ok_or_else(|| missing("nu"))
    }
}

/// Concrete inputs of a chain: the sets `Psi_1, ..., Psi_k` and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Operator + Deserialize<'de>"
))]
pub struct ChainInputs<T: Operator> {
    pub params: Params,
    pub sets: Vec<OperatorSet<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub segment: String,
    pub index: usize,
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub method: String,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub segment: String,
    /// Global term indices of the two sides.
    pub from: usize,
    pub to: usize,
    pub relation: Relation,
    /// `rhs.hi * (1 + tol) + abs_tol - lhs.lo`; negative exactly when the
    /// link fails. For equalities the smaller of both directions.
    pub slack: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain_id: String,
    pub level: LevelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<u64>,
    pub input_digest: String,
    pub params: Params,
    pub terms: Vec<TermReport>,
    pub links: Vec<LinkReport>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ChainReport {
    /// Smallest link slack, if there is any link.
    pub fn min_slack(&self) -> Option<f64> {
        self.links.iter().map(|l| l.slack).reduce(f64::min)
    }
}

/// Evaluation of the scalar quantities at one level.
pub trait Level: Sync {
    type Op: Operator + Serialize;
    const KIND: LevelKind;

    fn budgets(&self) -> &Budgets;
    fn radius(&self, s: &OperatorSet<Self::Op>) -> Result<Bracket>;
    fn norm(&self, s: &OperatorSet<Self::Op>) -> Result<Bracket>;
    fn gamma(&self, s: &OperatorSet<Self::Op>) -> Result<Bracket>;
    fn sup(&self, s: &OperatorSet<Self::Op>) -> Result<Bracket>;
    /// Entries of every element, for entrywise comparisons.
    fn entries(&self, s: &OperatorSet<Self::Op>) -> Result<Vec<Vec<f64>>>;
}

fn max_over<T: Operator, F>(s: &OperatorSet<T>, f: F) -> Result<Bracket>
where
    F: Fn(&T) -> Result<Bracket>,
{
    let mut out: Option<Bracket> = None;
    for a in s.iter() {
        let b = f(a)?;
        out = Some(match out {
            None => b,
            Some(prev) => prev.max(&b),
        });
    }
    out.ok_or(Error::Empty)
}

/// Finite matrices.
#[derive(Debug, Clone)]
pub struct FiniteLevel<'a> {
    pub budgets: &'a Budgets,
}

impl Level for FiniteLevel<'_> {
    type Op = FiniteMatrix;
    const KIND: LevelKind = LevelKind::Finite;

    fn budgets(&self) -> &Budgets {
        self.budgets
    }

    fn radius(&self, s: &OperatorSet<FiniteMatrix>) -> Result<Bracket> {
        crate::joint::finite_set_bracket(s, self.budgets.gripenberg_rel_delta, &self.budgets.joint)
    }

    fn norm(&self, s: &OperatorSet<FiniteMatrix>) -> Result<Bracket> {
        max_over(s, |a| operator_norm(a, SpaceTag::L2, &self.budgets.finite))
    }

    fn gamma(&self, s: &OperatorSet<FiniteMatrix>) -> Result<Bracket> {
        // Finite matrices are compact.
        let _ = s;
        Ok(Bracket::exact(0.0, "compact"))
    }

    fn sup(&self, s: &OperatorSet<FiniteMatrix>) -> Result<Bracket> {
        Ok(Bracket::exact(s.entrywise_sup(), "max_entry"))
    }

    fn entries(&self, s: &OperatorSet<FiniteMatrix>) -> Result<Vec<Vec<f64>>> {
        Ok(s.iter().map(|a| a.entries().to_vec()).collect())
    }
}

/// Banded families on `l2`.
#[derive(Debug, Clone)]
pub struct EssentialLevel<'a> {
    pub budgets: &'a Budgets,
}

impl Level for EssentialLevel<'_> {
    type Op = OperatorFamily;
    const KIND: LevelKind = LevelKind::Essential;

    fn budgets(&self) -> &Budgets {
        self.budgets
    }

    fn radius(&self, s: &OperatorSet<OperatorFamily>) -> Result<Bracket> {
        if s.len() == 1 {
            Ok(essential_spectral_radius(&s.elements()[0], &self.budgets.ess)?.bracket)
        } else {
            Ok(crate::joint::ess_set_radii(s, &self.budgets.ess_joint)?.bracket())
        }
    }

    fn norm(&self, _s: &OperatorSet<OperatorFamily>) -> Result<Bracket> {
        Err(Error::InvalidArgument(
            "operator norms of families are not part of any essential chain".into(),
        ))
    }

    fn gamma(&self, s: &OperatorSet<OperatorFamily>) -> Result<Bracket> {
        max_over(s, |a| hausdorff_mnc(a, &self.budgets.ess))
    }

    fn sup(&self, s: &OperatorSet<OperatorFamily>) -> Result<Bracket> {
        max_over(s, |a| {
            Ok(Bracket::new(a.entrywise_sup_lower(), a.entrywise_sup(), "entry_scan"))
        })
    }

    fn entries(&self, _s: &OperatorSet<OperatorFamily>) -> Result<Vec<Vec<f64>>> {
        Err(Error::InvalidArgument("entrywise links need finite matrices".into()))
    }
}

struct Evaluated {
    scalar: Bracket,
    matrix: Option<Vec<Vec<f64>>>,
}

struct Evaluator<'a, L: Level> {
    level: &'a L,
    inputs: &'a [OperatorSet<L::Op>],
    sets: HashMap<String, OperatorSet<L::Op>>,
    scalars: HashMap<(Quantity, String), Bracket>,
}

impl<'a, L: Level> Evaluator<'a, L> {
    fn set(&mut self, expr: &SetExpr) -> Result<OperatorSet<L::Op>> {
        let key = serde_json::to_string(expr).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(s) = self.sets.get(&key) {
            return Ok(s.clone());
        }
        let sizes: Vec<usize> = self.inputs.iter().map(|s| s.len()).collect();
        let card = expr.cardinality(&sizes);
        let cap = self.level.budgets().max_set_size;
        if card > cap {
            return Err(Error::BudgetExhausted(format!(
                "{expr} has {card} elements, more than the cap {cap}"
            )));
        }
        let s = expr.eval(self.inputs)?;
        self.sets.insert(key, s.clone());
        Ok(s)
    }

    fn scalar(&mut self, q: Quantity, expr: &SetExpr) -> Result<Bracket> {
        let key = (q, serde_json::to_string(expr).map_err(|e| Error::Parse(e.to_string()))?);
        if let Some(b) = self.scalars.get(&key) {
            return Ok(b.clone());
        }
        let s = self.set(expr)?;
        let b = match q {
            Quantity::Radius => self.level.radius(&s)?,
            Quantity::Norm => self.level.norm(&s)?,
            Quantity::Gamma => self.level.gamma(&s)?,
            Quantity::Sup => self.level.sup(&s)?,
        };
        self.scalars.insert(key, b.clone());
        Ok(b)
    }

    fn term(&mut self, t: &Term) -> Result<Evaluated> {
        let mut scalar = Bracket::exact(1.0, "");
        let mut methods = Vec::new();
        for f in &t.factors {
            let b = self.scalar(f.quantity, &f.expr)?;
            if !methods.contains(&b.method) {
                methods.push(b.method.clone());
            }
            scalar = scalar.mul(&b.powf(f.exp));
        }
        let matrix = match &t.matrix {
            Some(e) => {
                let s = self.set(e)?;
                methods.push("entries".into());
                Some(self.level.entries(&s)?)
            }
            None => None,
        };
        scalar.method = methods.join("+");
        Ok(Evaluated { scalar, matrix })
    }
}

/// Verdict and slack of `lhs <= rhs`.
fn le_link(lhs: &Bracket, rhs: &Bracket, tol: f64, abs_tol: f64) -> (f64, Verdict) {
    let slack = rhs.hi * (1.0 + tol) + abs_tol - lhs.lo;
    let verdict = if slack < 0.0 {
        Verdict::Fail
    } else if lhs.hi <= rhs.lo * (1.0 + tol) + abs_tol {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    (slack, verdict)
}

fn entrywise_link(lhs: &Evaluated, rhs: &Evaluated, tol: f64, abs_tol: f64) -> Result<(f64, Verdict)> {
    let (Some(l), Some(r)) = (&lhs.matrix, &rhs.matrix) else {
        return Err(Error::InvalidArgument("entrywise link between scalar terms".into()));
    };
    if l.len() != r.len() {
        return Err(Error::ShapeMismatch(format!(
            "entrywise link between sets of sizes {} and {}",
            l.len(),
            r.len()
        )));
    }
    let mut slack = f64::INFINITY;
    let mut verdict = Verdict::Pass;
    for (le, re) in l.iter().zip(r) {
        if le.len() != re.len() {
            return Err(Error::ShapeMismatch("entrywise link between different shapes".into()));
        }
        for (&x, &y) in le.iter().zip(re) {
            let lo = Bracket::new(lhs.scalar.lo * x, lhs.scalar.hi * x, "");
            let hi = Bracket::new(rhs.scalar.lo * y, rhs.scalar.hi * y, "");
            let (s, v) = le_link(&lo, &hi, tol, abs_tol);
            slack = slack.min(s);
            verdict = verdict.max(v);
        }
    }
    Ok((slack, verdict))
}

/// Evaluates every segment and link on the given inputs.
///
/// Budget and closure errors turn the report inconclusive with a note;
/// other errors propagate.
pub(crate) fn evaluate_segments<L: Level>(
    level: &L,
    chain_id: &str,
    segments: &[Segment],
    inputs: &ChainInputs<L::Op>,
    digest: String,
) -> Result<ChainReport> {
    let budgets = level.budgets();
    let (tol, abs_tol) = match L::KIND {
        LevelKind::Finite => (budgets.tol_finite, budgets.abs_tol_finite),
        LevelKind::Essential => (budgets.tol_essential, budgets.abs_tol_essential),
    };
    let mut ev = Evaluator {
        level,
        inputs: &inputs.sets,
        sets: HashMap::new(),
        scalars: HashMap::new(),
    };
    let mut report = ChainReport {
        chain_id: chain_id.to_string(),
        level: L::KIND,
        trial: None,
        input_digest: digest,
        params: inputs.params.clone(),
        terms: Vec::new(),
        links: Vec::new(),
        verdict: Verdict::Pass,
        note: None,
    };
    for seg in segments {
        let mut values: Vec<(usize, Evaluated)> = Vec::new();
        for t in &seg.terms {
            let e = match ev.term(t) {
                Ok(e) => e,
                Err(err @ (Error::BudgetExhausted(_) | Error::ClosureOverflow(_))) => {
                    report.verdict = Verdict::Inconclusive;
                    report.note = Some(err.to_string());
                    return Ok(report);
                }
                Err(err) => return Err(err),
            };
            let index = report.terms.len();
            let (lo, hi) = match &e.matrix {
                Some(m) => {
                    let sum = m.iter().map(|v| v.iter().sum::<f64>()).fold(0.0, f64::max);
                    (e.scalar.lo * sum, e.scalar.hi * sum)
                }
                None => (e.scalar.lo, e.scalar.hi),
            };
            report.terms.push(TermReport {
                segment: seg.name.clone(),
                index,
                label: t.label(L::KIND, inputs.params.radius),
                lo,
                hi,
                method: e.scalar.method.clone(),
                flagged: e.scalar.flagged,
            });
            values.push((index, e));
        }
        for (w, pair) in values.windows(2).enumerate() {
            let ((i, a), (j, b)) = (&pair[0], &pair[1]);
            // The same quantity on both sides holds exactly whatever its bracket.
            let same = seg.terms[w] == seg.terms[w + 1] && seg.relation != Relation::EntrywiseLe;
            let (slack, verdict) = match seg.relation {
                _ if same => (0.0, Verdict::Pass),
                Relation::Le => le_link(&a.scalar, &b.scalar, tol, abs_tol),
                Relation::Eq => {
                    let (s1, v1) = le_link(&a.scalar, &b.scalar, tol, abs_tol);
                    let (s2, v2) = le_link(&b.scalar, &a.scalar, tol, abs_tol);
                    (s1.min(s2), v1.max(v2))
                }
                Relation::EntrywiseLe => entrywise_link(a, b, tol, abs_tol)?,
            };
            report.verdict = report.verdict.max(verdict);
            report.links.push(LinkReport {
                segment: seg.name.clone(),
                from: *i,
                to: *j,
                relation: seg.relation,
                slack,
                verdict,
            });
        }
    }
    Ok(report)
}
