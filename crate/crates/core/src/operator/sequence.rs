//! Weight sequences `w(1), w(2), ...` carried by the bands of an
//! [`OperatorFamily`](super::OperatorFamily).
//!
//! Every sequence knows its limit exactly and can produce a certified
//! upper bound on `sup_{i >= n} w(i)` for any `n`. The base kinds are the
//! ones accepted from JSON; the composite kinds (`shift`, `product`, `sum`,
//! `power`) appear when families are multiplied, Hadamard-multiplied or
//! raised to Hadamard powers.
//!
//! Indices are 1-based. A shifted sequence evaluated before index 1 clamps
//! to index 1; those positions never describe real matrix entries and are
//! overwritten by the family's corner correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::matrix::entry_pow;

/// Number of explicit evaluations taken before falling back to the
/// symbolic tail bound in [`WeightSequence::tail_sup`].
const SCAN_WINDOW: u64 = 32;

/// Indices checked explicitly when validating nonnegativity.
const VALIDATION_SAMPLES: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Seq {
    Constant {
        c: f64,
    },
    EventuallyConstant {
        prefix: Vec<f64>,
        tail: f64,
    },
    /// `num(i) / den(i)`, coefficients in ascending powers of `i`.
    Rational {
        num: Vec<f64>,
        den: Vec<f64>,
    },
    /// Explicit prefix, then `limit + (last - limit) * rate^(i - len)`.
    PrefixLimit {
        prefix: Vec<f64>,
        limit: f64,
        rate: f64,
    },
    Shift {
        of: Box<Seq>,
        by: i64,
    },
    Product {
        factors: Vec<Seq>,
    },
    Sum {
        terms: Vec<Seq>,
    },
    Power {
        of: Box<Seq>,
        t: f64,
    },
}

/// Declared asymptotics of a weight sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitInfo {
    pub liminf: f64,
    pub limsup: f64,
}

impl LimitInfo {
    pub fn is_convergent(&self) -> bool {
        self.liminf == self.limsup
    }
}

/// Nonnegative sequence with a computable limit and tail envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Seq", into = "Seq")]
pub struct WeightSequence(Seq);

impl TryFrom<Seq> for WeightSequence {
    type Error = Error;

    fn try_from(seq: Seq) -> Result<Self> {
        let w = WeightSequence(seq);
        w.validate()?;
        Ok(w)
    }
}

impl From<WeightSequence> for Seq {
    fn from(w: WeightSequence) -> Seq {
        w.0
    }
}

impl WeightSequence {
    pub fn constant(c: f64) -> Result<Self> {
        WeightSequence::try_from(Seq::Constant { c })
    }

    pub fn eventually_constant(prefix: Vec<f64>, tail: f64) -> Result<Self> {
        WeightSequence::try_from(Seq::EventuallyConstant { prefix, tail })
    }

    /// `w(i) = num(i) / den(i)` with ascending coefficient lists.
    pub fn rational(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        WeightSequence::try_from(Seq::Rational { num, den })
    }

    /// `w(i) = c + a / i`.
    pub fn harmonic(c: f64, a: f64) -> Result<Self> {
        WeightSequence::rational(vec![a, c], vec![0.0, 1.0])
    }

    pub fn prefix_limit(prefix: Vec<f64>, limit: f64, rate: f64) -> Result<Self> {
        WeightSequence::try_from(Seq::PrefixLimit {
            prefix,
            limit,
            rate,
        })
    }

    /// Value at the 1-based index `i`.
    pub fn value(&self, i: u64) -> f64 {
        self.0.eval(i.max(1))
    }

    pub fn limit_info(&self) -> LimitInfo {
        let l = self.0.limit();
        LimitInfo {
            liminf: l,
            limsup: l,
        }
    }

    pub fn limit(&self) -> f64 {
        self.0.limit()
    }

    /// Certified upper bound on `sup_{i >= n} w(i)`.
    pub fn tail_sup(&self, n: u64) -> f64 {
        let n = n.max(1);
        let mut scanned = 0.0f64;
        let mut start = n;
        let mut window = SCAN_WINDOW;
        loop {
            for i in start..start + window {
                scanned = scanned.max(self.0.eval(i));
            }
            let next = start + window;
            let bound = self.0.sup_from(next);
            if bound.is_finite() {
                return scanned.max(bound);
            }
            if next > (1 << 40) {
                return f64::INFINITY;
            }
            start = next;
            window *= 2;
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self.0 {
            Seq::Constant { c } => Some(c),
            _ => None,
        }
    }

    pub(crate) fn shifted(&self, by: i64) -> Self {
        WeightSequence(self.0.clone().shift(by))
    }

    pub(crate) fn times(&self, other: &Self) -> Self {
        WeightSequence(Seq::product(vec![self.0.clone(), other.0.clone()]))
    }

    pub(crate) fn plus(&self, other: &Self) -> Self {
        WeightSequence(Seq::sum(vec![self.0.clone(), other.0.clone()]))
    }

    pub(crate) fn powered(&self, t: f64) -> Self {
        WeightSequence(self.0.clone().power(t))
    }

    pub(crate) fn scaled(&self, c: f64) -> Self {
        WeightSequence(Seq::product(vec![Seq::Constant { c }, self.0.clone()]))
    }

    /// Size of the expression tree; used to cap symbolic growth.
    pub(crate) fn complexity(&self) -> usize {
        self.0.complexity()
    }

    fn validate(&self) -> Result<()> {
        self.0.validate()?;
        for i in 1..=VALIDATION_SAMPLES {
            let v = self.0.eval(i);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeEntry {
                    location: format!("weight index {i}"),
                    value: v,
                });
            }
        }
        let lim = self.0.limit();
        if !(lim >= 0.0) || !lim.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "weight limit must be finite and >= 0, got {lim}"
            )));
        }
        if !self.tail_sup(1).is_finite() {
            return Err(Error::InvalidArgument(
                "weight sequence has no finite envelope".into(),
            ));
        }
        Ok(())
    }
}

fn check_finite_nonneg(vals: &[f64], what: &str) -> Result<()> {
    for &v in vals {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::NegativeEntry {
                location: what.to_string(),
                value: v,
            });
        }
    }
    Ok(())
}

fn trim(poly: &[f64]) -> &[f64] {
    let mut end = poly.len();
    while end > 0 && poly[end - 1] == 0.0 {
        end -= 1;
    }
    &poly[..end]
}

fn horner(poly: &[f64], x: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Checks `poly(i) > 0` for every integer `i >= 1` (or `>= 0` when
/// `allow_zero`), using the Cauchy root bound beyond which the sign equals
/// that of the leading coefficient.
fn positive_on_naturals(poly: &[f64], allow_zero: bool, what: &str) -> Result<()> {
    let p = trim(poly);
    let Some(&lead) = p.last() else {
        return if allow_zero {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{what} is identically zero")))
        };
    };
    if lead <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{what} must have a positive leading coefficient"
        )));
    }
    let cauchy = 1.0 + p.iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    if cauchy > 1e6 {
        return Err(Error::InvalidArgument(format!(
            "{what} has a root bound {cauchy:.3e} too large to certify"
        )));
    }
    for i in 1..=(cauchy.ceil() as u64 + 1) {
        let v = horner(p, i as f64);
        if v < 0.0 || (!allow_zero && v == 0.0) {
            return Err(Error::NegativeEntry {
                location: format!("{what} at i={i}"),
                value: v,
            });
        }
    }
    Ok(())
}

impl Seq {
    fn validate(&self) -> Result<()> {
        match self {
            Seq::Constant { c } => check_finite_nonneg(&[*c], "constant weight"),
            Seq::EventuallyConstant { prefix, tail } => {
                check_finite_nonneg(prefix, "weight prefix")?;
                check_finite_nonneg(&[*tail], "weight tail")
            }
            Seq::Rational { num, den } => {
                if num.iter().chain(den).any(|c| !c.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "rational coefficients must be finite".into(),
                    ));
                }
                let (p, q) = (trim(num), trim(den));
                if q.is_empty() {
                    return Err(Error::InvalidArgument("zero denominator".into()));
                }
                if p.len() > q.len() {
                    return Err(Error::InvalidArgument(
                        "rational weight is unbounded: deg num > deg den".into(),
                    ));
                }
                positive_on_naturals(q, false, "denominator")?;
                positive_on_naturals(p, true, "numerator")
            }
            Seq::PrefixLimit {
                prefix,
                limit,
                rate,
            } => {
                check_finite_nonneg(prefix, "weight prefix")?;
                check_finite_nonneg(&[*limit], "weight limit")?;
                if prefix.is_empty() {
                    return Err(Error::InvalidArgument("prefix_limit needs a prefix".into()));
                }
                if !(*rate >= 0.0 && *rate < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "prefix_limit rate must lie in [0, 1), got {rate}"
                    )));
                }
                Ok(())
            }
            Seq::Shift { of, .. } => of.validate(),
            Seq::Power { of, t } => {
                if !(*t > 0.0) || !t.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "power exponent must be > 0, got {t}"
                    )));
                }
                of.validate()
            }
            Seq::Product { factors } => factors.iter().try_for_each(Seq::validate),
            Seq::Sum { terms } => terms.iter().try_for_each(Seq::validate),
        }
    }

    fn eval(&self, i: u64) -> f64 {
        match self {
            Seq::Constant { c } => *c,
            Seq::EventuallyConstant { prefix, tail } => {
                prefix.get((i - 1) as usize).copied().unwrap_or(*tail)
            }
            Seq::Rational { num, den } => {
                let x = i as f64;
                horner(num, x) / horner(den, x)
            }
            Seq::PrefixLimit {
                prefix,
                limit,
                rate,
            } => {
                let len = prefix.len() as u64;
                if i <= len {
                    prefix[(i - 1) as usize]
                } else {
                    let last = prefix[prefix.len() - 1];
                    limit + (last - limit) * rate.powf((i - len) as f64)
                }
            }
            Seq::Shift { of, by } => {
                let j = i as i64 + by;
                of.eval(if j >= 1 { j as u64 } else { 1 })
            }
            Seq::Product { factors } => factors.iter().map(|f| f.eval(i)).product(),
            Seq::Sum { terms } => terms.iter().map(|f| f.eval(i)).sum(),
            Seq::Power { of, t } => entry_pow(of.eval(i), *t),
        }
    }

    fn limit(&self) -> f64 {
        match self {
            Seq::Constant { c } => *c,
            Seq::EventuallyConstant { tail, .. } => *tail,
            Seq::Rational { num, den } => {
                let (p, q) = (trim(num), trim(den));
                if p.len() == q.len() {
                    p[p.len() - 1] / q[q.len() - 1]
                } else {
                    0.0
                }
            }
            Seq::PrefixLimit { limit, .. } => *limit,
            Seq::Shift { of, .. } => of.limit(),
            Seq::Product { factors } => factors.iter().map(Seq::limit).product(),
            Seq::Sum { terms } => terms.iter().map(Seq::limit).sum(),
            Seq::Power { of, t } => entry_pow(of.limit(), *t),
        }
    }

    /// Upper bound on `sup_{i >= n} self(i)`, non-increasing in `n`.
    fn sup_from(&self, n: u64) -> f64 {
        let n = n.max(1);
        match self {
            Seq::Constant { c } => *c,
            Seq::EventuallyConstant { prefix, tail } => prefix
                .iter()
                .skip((n - 1) as usize)
                .copied()
                .fold(*tail, f64::max),
            Seq::Rational { num, den } => {
                let (p, q) = (trim(num), trim(den));
                let d = q.len() as i32 - 1;
                let x = n as f64;
                let mut upper = 0.0;
                for (k, &c) in p.iter().enumerate() {
                    let e = k as i32 - d;
                    if c > 0.0 {
                        upper += c * x.powi(e);
                    } else if e == 0 {
                        upper += c;
                    }
                }
                let mut lower = q[q.len() - 1];
                for (k, &c) in q.iter().enumerate().take(q.len() - 1) {
                    if c < 0.0 {
                        lower += c * x.powi(k as i32 - d);
                    }
                }
                if lower <= 0.0 {
                    f64::INFINITY
                } else {
                    upper.max(0.0) / lower
                }
            }
            Seq::PrefixLimit {
                prefix,
                limit,
                rate,
            } => {
                let len = prefix.len() as u64;
                let last = prefix[prefix.len() - 1];
                let mut best = if last > *limit {
                    let k = n.saturating_sub(len).max(1);
                    limit + (last - limit) * rate.powf(k as f64)
                } else {
                    *limit
                };
                for &v in prefix.iter().skip((n - 1) as usize) {
                    best = best.max(v);
                }
                best
            }
            Seq::Shift { of, by } => {
                let j = n as i64 + by;
                of.sup_from(if j >= 1 { j as u64 } else { 1 })
            }
            Seq::Product { factors } => factors.iter().map(|f| f.sup_from(n)).product(),
            Seq::Sum { terms } => terms.iter().map(|f| f.sup_from(n)).sum(),
            Seq::Power { of, t } => entry_pow(of.sup_from(n), *t),
        }
    }

    fn complexity(&self) -> usize {
        match self {
            Seq::Shift { of, .. } | Seq::Power { of, .. } => 1 + of.complexity(),
            Seq::Product { factors } => 1 + factors.iter().map(Seq::complexity).sum::<usize>(),
            Seq::Sum { terms } => 1 + terms.iter().map(Seq::complexity).sum::<usize>(),
            _ => 1,
        }
    }

    fn shift(self, by: i64) -> Seq {
        if by == 0 {
            return self;
        }
        match self {
            c @ Seq::Constant { .. } => c,
            Seq::Shift { of, by: inner } => of.shift(inner + by),
            Seq::Product { factors } => Seq::Product {
                factors: factors.into_iter().map(|f| f.shift(by)).collect(),
            },
            Seq::Sum { terms } => Seq::Sum {
                terms: terms.into_iter().map(|f| f.shift(by)).collect(),
            },
            Seq::Power { of, t } => Seq::Power {
                of: Box::new(of.shift(by)),
                t,
            },
            leaf => Seq::Shift {
                of: Box::new(leaf),
                by,
            },
        }
    }

    fn power(self, t: f64) -> Seq {
        if t == 1.0 {
            return self;
        }
        match self {
            Seq::Constant { c } => Seq::Constant { c: entry_pow(c, t) },
            Seq::Power { of, t: s } => of.power(s * t),
            Seq::Product { factors } => {
                Seq::product(factors.into_iter().map(|f| f.power(t)).collect())
            }
            Seq::Shift { of, by } => of.power(t).shift(by),
            other => Seq::Power {
                of: Box::new(other),
                t,
            },
        }
    }

    fn product(items: Vec<Seq>) -> Seq {
        let mut c = 1.0;
        let mut factors = Vec::new();
        for item in items {
            match item {
                Seq::Constant { c: k } => c *= k,
                Seq::Product { factors: inner } => {
                    for f in inner {
                        match f {
                            Seq::Constant { c: k } => c *= k,
                            f => factors.push(f),
                        }
                    }
                }
                f => factors.push(f),
            }
        }
        if c == 0.0 || factors.is_empty() {
            return Seq::Constant { c };
        }
        if c != 1.0 {
            factors.insert(0, Seq::Constant { c });
        }
        if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Seq::Product { factors }
        }
    }

    fn sum(items: Vec<Seq>) -> Seq {
        let mut c = 0.0;
        let mut terms = Vec::new();
        for item in items {
            match item {
                Seq::Constant { c: k } => c += k,
                Seq::Sum { terms: inner } => {
                    for f in inner {
                        match f {
                            Seq::Constant { c: k } => c += k,
                            f => terms.push(f),
                        }
                    }
                }
                f => terms.push(f),
            }
        }
        if terms.is_empty() {
            return Seq::Constant { c };
        }
        if c != 0.0 {
            terms.insert(0, Seq::Constant { c });
        }
        if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Seq::Sum { terms }
        }
    }
}
