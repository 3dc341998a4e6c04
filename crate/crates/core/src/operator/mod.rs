//! Nonnegative matrices, banded infinite families and their set algebra.

pub mod family;
pub mod matrix;
pub mod sequence;
pub mod set;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use family::OperatorFamily;
pub use matrix::FiniteMatrix;
pub use sequence::{LimitInfo, WeightSequence};
pub use set::{OperatorSet, SetInput};

/// Common algebra of [`FiniteMatrix`] and [`OperatorFamily`].
pub trait Operator: Clone + Send + Sync + std::fmt::Debug {
    fn hadamard(&self, other: &Self) -> Result<Self>;
    fn hadamard_power(&self, t: f64) -> Result<Self>;
    fn matmul(&self, other: &Self) -> Result<Self>;
    fn add(&self, other: &Self) -> Result<Self>;
    fn scale(&self, c: f64) -> Result<Self>;
    fn adjoint(&self) -> Self;
    /// `sup_{i,j} a(i, j)` (an upper bound for infinite families).
    fn entrywise_sup(&self) -> f64;
    /// Checks that two operands can be combined entrywise.
    fn check_compatible(&self, other: &Self) -> Result<()>;
}

impl Operator for FiniteMatrix {
    fn hadamard(&self, other: &Self) -> Result<Self> {
        FiniteMatrix::hadamard(self, other)
    }
    fn hadamard_power(&self, t: f64) -> Result<Self> {
        FiniteMatrix::hadamard_power(self, t)
    }
    fn matmul(&self, other: &Self) -> Result<Self> {
        FiniteMatrix::matmul(self, other)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        FiniteMatrix::add(self, other)
    }
    fn scale(&self, c: f64) -> Result<Self> {
        FiniteMatrix::scale(self, c)
    }
    fn adjoint(&self) -> Self {
        self.transpose()
    }
    fn entrywise_sup(&self) -> f64 {
        self.max_entry()
    }
    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }
}

impl Operator for OperatorFamily {
    fn hadamard(&self, other: &Self) -> Result<Self> {
        OperatorFamily::hadamard(self, other)
    }
    fn hadamard_power(&self, t: f64) -> Result<Self> {
        OperatorFamily::hadamard_power(self, t)
    }
    fn matmul(&self, other: &Self) -> Result<Self> {
        OperatorFamily::matmul(self, other)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        OperatorFamily::add(self, other)
    }
    fn scale(&self, c: f64) -> Result<Self> {
        OperatorFamily::scale(self, c)
    }
    fn adjoint(&self) -> Self {
        OperatorFamily::adjoint(self)
    }
    fn entrywise_sup(&self) -> f64 {
        OperatorFamily::entrywise_sup(self)
    }
    fn check_compatible(&self, _other: &Self) -> Result<()> {
        Ok(())
    }
}

/// Whether the exponents of a [`WeightVector`] sum to one or to at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SumEqOne,
    SumGeOne,
}

/// Tolerance used to accept `sum = 1`.
pub const SUM_EQ_ONE_TOL: f64 = 1e-12;

/// Positive exponents `alpha_1..alpha_m` with a recorded regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct WeightVector {
    weights: Vec<f64>,
    regime: Regime,
}

#[derive(Deserialize)]
struct RawWeights {
    weights: Vec<f64>,
    regime: Regime,
}

impl TryFrom<RawWeights> for WeightVector {
    type Error = Error;
    fn try_from(raw: RawWeights) -> Result<Self> {
        WeightVector::new(raw.weights, raw.regime)
    }
}

impl WeightVector {
    pub fn new(weights: Vec<f64>, regime: Regime) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(a) = weights.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weights must be positive and finite, got {a}"
            )));
        }
        let s: f64 = weights.iter().sum();
        match regime {
            Regime::SumEqOne if (s - 1.0).abs() > SUM_EQ_ONE_TOL => Err(Error::InvalidArgument(
                format!("weights sum to {s}, expected 1"),
            )),
            Regime::SumGeOne if s < 1.0 - SUM_EQ_ONE_TOL => Err(Error::InvalidArgument(format!(
                "weights sum to {s}, expected >= 1"
            ))),
            _ => Ok(WeightVector { weights, regime }),
        }
    }

    /// `m` equal weights `1/m`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Empty);
        }
        WeightVector::new(vec![1.0 / m as f64; m], Regime::SumEqOne)
    }

    /// Picks the regime from the sum.
    pub fn infer(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        let regime = if (s - 1.0).abs() <= SUM_EQ_ONE_TOL {
            Regime::SumEqOne
        } else {
            Regime::SumGeOne
        };
        WeightVector::new(weights, regime)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Hadamard weighted geometric mean `A_1^(a_1) o ... o A_m^(a_m)`.
pub fn weighted_geometric_mean<T: Operator>(ops: &[T], w: &WeightVector) -> Result<T> {
    let first = ops.first().ok_or(Error::Empty)?;
    if ops.len() != w.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} operands but {} weights",
            ops.len(),
            w.len()
        )));
    }
    for op in &ops[1..] {
        first.check_compatible(op)?;
    }
    let mut acc = first.hadamard_power(w.weights()[0])?;
    for (op, &a) in ops[1..].iter().zip(&w.weights()[1..]) {
        acc = acc.hadamard(&op.hadamard_power(a)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_vector_regimes() {
        assert!(WeightVector::new(vec![0.5, 0.5], Regime::SumEqOne).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6], Regime::SumEqOne).is_err());
        assert!(WeightVector::new(vec![0.5, 0.6], Regime::SumGeOne).is_ok());
        assert!(WeightVector::new(vec![0.2, 0.3], Regime::SumGeOne).is_err());
        assert!(WeightVector::new(vec![1.0, 0.0], Regime::SumGeOne).is_err());
        assert!(WeightVector::new(vec![], Regime::SumGeOne).is_err());
        assert_eq!(WeightVector::infer(vec![1.0, 1.0]).unwrap().regime(), Regime::SumGeOne);
        assert_eq!(WeightVector::uniform(3).unwrap().regime(), Regime::SumEqOne);
    }

    #[test]
    fn geometric_mean_examples() {
        let a = FiniteMatrix::from_rows(&[vec![1.0, 4.0], vec![1.0, 1.0]]).unwrap();
        let b = FiniteMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let half = WeightVector::uniform(2).unwrap();
        let m = weighted_geometric_mean(&[a.clone(), b], &half).unwrap();
        assert_eq!(m.to_rows(), vec![vec![2.0, 2.0], vec![1.0, 1.0]]);
        let idem = weighted_geometric_mean(&[a.clone(), a.clone()], &half).unwrap();
        for (x, y) in idem.entries().iter().zip(a.entries()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(
            weighted_geometric_mean::<FiniteMatrix>(&[], &half),
            Err(Error::Empty)
        );
        let c = FiniteMatrix::ones(3, 3);
        assert!(matches!(
            weighted_geometric_mean(&[a, c], &half),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn geometric_mean_of_families() {
        let w = WeightSequence::harmonic(1.0, 1.0).unwrap();
        let v = WeightSequence::constant(4.0).unwrap();
        let a = OperatorFamily::diagonal(w.clone());
        let b = OperatorFamily::diagonal(v);
        let m = weighted_geometric_mean(&[a, b], &WeightVector::uniform(2).unwrap()).unwrap();
        for i in 1..10u64 {
            assert!((m.entry(i, i) - (w.value(i) * 4.0).sqrt()).abs() < 1e-14);
        }
    }
}
