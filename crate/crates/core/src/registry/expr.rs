//! A small expression language over input sets, used to describe every term
//! of an inequality chain.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{Operator, OperatorSet};

/// Expression over the input sets `Psi_1, ..., Psi_k` (indices are 0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetExpr {
    Input(usize),
    Adjoint(Box<SetExpr>),
    /// Ordered set product `X_1 X_2 ... X_n`.
    Product(Vec<SetExpr>),
    /// Set sum `X_1 + ... + X_n`.
    Sum(Vec<SetExpr>),
    /// Cross Hadamard product `X_1^(a_1) o ... o X_n^(a_n)`; a zero exponent
    /// drops the factor.
    Hadamard(Vec<(SetExpr, f64)>),
    /// Set power `X^n`.
    Power(Box<SetExpr>, usize),
    /// Elementwise Hadamard power `X^(t)`.
    HPow(Box<SetExpr>, f64),
}

impl SetExpr {
    pub fn input(i: usize) -> Self {
        SetExpr::Input(i)
    }

    pub fn star(self) -> Self {
        SetExpr::Adjoint(Box::new(self))
    }

    pub fn pow(self, n: usize) -> Self {
        if n == 1 {
            self
        } else {
            SetExpr::Power(Box::new(self), n)
        }
    }

    pub fn hpow(self, t: f64) -> Self {
        if t == 1.0 {
            self
        } else {
            SetExpr::HPow(Box::new(self), t)
        }
    }

    /// Product of the given factors; a single factor is returned unchanged.
    pub fn prod(mut factors: Vec<SetExpr>) -> Self {
        if factors.len() == 1 {
            factors.pop().expect("one factor")
        } else {
            SetExpr::Product(factors)
        }
    }

    pub fn sum(mut terms: Vec<SetExpr>) -> Self {
        if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            SetExpr::Sum(terms)
        }
    }

    /// `X_1^(a) o ... o X_n^(a)` with a common exponent.
    pub fn hmean(factors: Vec<SetExpr>, a: f64) -> Self {
        SetExpr::hadamard(factors.into_iter().map(|f| (f, a)).collect())
    }

    pub fn hadamard(mut factors: Vec<(SetExpr, f64)>) -> Self {
        if factors.len() == 1 {
            let (f, a) = factors.pop().expect("one factor");
            f.hpow(a)
        } else {
            SetExpr::Hadamard(factors)
        }
    }

    /// Evaluates the expression on concrete input sets.
    pub fn eval<T: Operator>(&self, inputs: &[OperatorSet<T>]) -> Result<OperatorSet<T>> {
        match self {
            SetExpr::Input(i) => inputs.get(*i).cloned().ok_or_else(|| {
                Error::InvalidArgument(format!("expression uses input {} of {}", i + 1, inputs.len()))
            }),
            SetExpr::Adjoint(x) => Ok(x.eval(inputs)?.adjoint()),
            SetExpr::Product(xs) => {
                let mut it = xs.iter();
                let mut acc = it.next().ok_or(Error::Empty)?.eval(inputs)?;
                for x in it {
                    acc = acc.product(&x.eval(inputs)?)?;
                }
                Ok(acc)
            }
            SetExpr::Sum(xs) => {
                let mut it = xs.iter();
                let mut acc = it.next().ok_or(Error::Empty)?.eval(inputs)?;
                for x in it {
                    acc = acc.sum(&x.eval(inputs)?)?;
                }
                Ok(acc)
            }
            SetExpr::Hadamard(xs) => {
                let mut acc: Option<Vec<T>> = None;
                for (x, a) in xs {
                    if *a == 0.0 {
                        continue;
                    }
                    let s = x.eval(inputs)?;
                    let powered = if *a == 1.0 { s } else { s.hadamard_power(*a)? };
                    acc = Some(match acc {
                        None => powered.elements().to_vec(),
                        Some(prev) => {
                            let mut next = Vec::with_capacity(prev.len() * powered.len());
                            for p in &prev {
                                for q in powered.iter() {
                                    p.check_compatible(q)?;
                                    next.push(p.hadamard(q)?);
                                }
                            }
                            next
                        }
                    });
                }
                OperatorSet::new(acc.ok_or(Error::Empty)?)
            }
            SetExpr::Power(x, n) => x.eval(inputs)?.power(*n),
            SetExpr::HPow(x, t) => x.eval(inputs)?.hadamard_power(*t),
        }
    }

    /// Number of elements the expression produces for inputs of the given sizes.
    pub fn cardinality(&self, sizes: &[usize]) -> usize {
        match self {
            SetExpr::Input(i) => sizes.get(*i).copied().unwrap_or(0),
            SetExpr::Adjoint(x) | SetExpr::HPow(x, _) => x.cardinality(sizes),
            SetExpr::Product(xs) | SetExpr::Sum(xs) => {
                xs.iter().map(|x| x.cardinality(sizes)).product()
            }
            SetExpr::Hadamard(xs) => xs
                .iter()
                .filter(|(_, a)| *a != 0.0)
                .map(|(x, _)| x.cardinality(sizes))
                .product(),
            SetExpr::Power(x, n) => x.cardinality(sizes).pow(*n as u32),
        }
    }
}

fn fmt_exp(a: f64) -> String {
    for d in 1..=12u32 {
        let n = a * d as f64;
        if (n - n.round()).abs() < 1e-12 {
            let n = n.round() as i64;
            return if d == 1 { n.to_string() } else { format!("{n}/{d}") };
        }
    }
    format!("{a:.4}")
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atomic = |x: &SetExpr| matches!(x, SetExpr::Input(_) | SetExpr::Adjoint(_));
        let wrap = |x: &SetExpr| {
            if atomic(x) {
                x.to_string()
            } else {
                format!("({x})")
            }
        };
        match self {
            SetExpr::Input(i) => write!(f, "P{}", i + 1),
            SetExpr::Adjoint(x) => write!(f, "{}*", wrap(x)),
            SetExpr::Product(xs) => {
                let parts: Vec<String> = xs
                    .iter()
                    .map(|x| if matches!(x, SetExpr::Power(..)) { x.to_string() } else { wrap(x) })
                    .collect();
                write!(f, "{}", parts.join(""))
            }
            SetExpr::Sum(xs) => {
                let parts: Vec<String> = xs.iter().map(wrap).collect();
                write!(f, "{}", parts.join(" + "))
            }
            SetExpr::Hadamard(xs) => {
                let parts: Vec<String> = xs
                    .iter()
                    .map(|(x, a)| {
                        if *a == 1.0 {
                            wrap(x)
                        } else {
                            format!("{}^({})", wrap(x), fmt_exp(*a))
                        }
                    })
                    .collect();
                write!(f, "{}", parts.join(" o "))
            }
            SetExpr::Power(x, n) => write!(f, "{}^{n}", wrap(x)),
            SetExpr::HPow(x, t) => write!(f, "{}^({})", wrap(x), fmt_exp(*t)),
        }
    }
}

/// Formats an exponent as a short fraction when possible.
pub(crate) fn exponent_label(a: f64) -> String {
    fmt_exp(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::FiniteMatrix;

    fn m(rows: &[&[f64]]) -> FiniteMatrix {
        FiniteMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn evaluates_and_formats() {
        let a = m(&[&[1.0, 4.0], &[0.0, 9.0]]);
        let b = m(&[&[1.0, 0.0], &[2.0, 1.0]]);
        let inputs = vec![OperatorSet::singleton(a.clone()), OperatorSet::singleton(b.clone())];
        let e = SetExpr::hmean(vec![SetExpr::input(0), SetExpr::input(1).star()], 0.5);
        assert_eq!(e.to_string(), "P1^(1/2) o P2*^(1/2)");
        let v = e.eval(&inputs).unwrap();
        let expect = a.hadamard_power(0.5).unwrap().hadamard(&b.transpose().hadamard_power(0.5).unwrap()).unwrap();
        assert_eq!(v.elements(), &[expect]);
        let p = SetExpr::prod(vec![SetExpr::input(0), SetExpr::input(1)]).pow(2);
        assert_eq!(p.to_string(), "(P1P2)^2");
        assert_eq!(p.eval(&inputs).unwrap().len(), 1);
        assert_eq!(p.cardinality(&[2, 3]), 36);
        assert!(SetExpr::input(5).eval(&inputs).is_err());
    }

    #[test]
    fn zero_exponent_drops_factor() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let inputs = vec![OperatorSet::singleton(a.clone())];
        let e = SetExpr::hadamard(vec![(SetExpr::input(0), 0.0), (SetExpr::input(0), 1.0)]);
        assert_eq!(e.eval(&inputs).unwrap().elements(), &[a]);
    }
}
