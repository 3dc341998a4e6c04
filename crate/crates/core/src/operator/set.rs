//! Finite sets of operators and the set algebra built on them.
//!
//! Sets are ordered lists: duplicates are kept so that the cardinality of
//! every derived set is predictable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{FiniteMatrix, Operator, OperatorFamily, WeightVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<T>",
    into = "Vec<T>",
    bound(
        serialize = "T: Operator + Serialize",
        deserialize = "T: Operator + Deserialize<'de>"
    )
)]
pub struct OperatorSet<T: Operator> {
    elements: Vec<T>,
}

impl<T: Operator> TryFrom<Vec<T>> for OperatorSet<T> {
    type Error = Error;
    fn try_from(v: Vec<T>) -> Result<Self> {
        OperatorSet::new(v)
    }
}

impl<T: Operator> From<OperatorSet<T>> for Vec<T> {
    fn from(s: OperatorSet<T>) -> Self {
        s.elements
    }
}

impl<T: Operator> OperatorSet<T> {
    /// Nonempty list of mutually compatible elements.
    pub fn new(elements: Vec<T>) -> Result<Self> {
        let first = elements.first().ok_or(Error::Empty)?;
        for e in &elements[1..] {
            first.check_compatible(e)?;
        }
        Ok(OperatorSet { elements })
    }

    pub fn singleton(a: T) -> Self {
        OperatorSet { elements: vec![a] }
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.elements.iter()
    }

    fn map(&self, f: impl Fn(&T) -> Result<T>) -> Result<Self> {
        Ok(OperatorSet {
            elements: self.elements.iter().map(f).collect::<Result<_>>()?,
        })
    }

    /// `{A B : A in self, B in other}` in row-major order.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.elements {
            for b in &other.elements {
                out.push(a.matmul(b)?);
            }
        }
        Ok(OperatorSet { elements: out })
    }

    /// All `|S|^m` ordered products of length `m`.
    pub fn power(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("set power needs m >= 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..m {
            acc = acc.product(self)?;
        }
        Ok(acc)
    }

    /// `{A + B : A in self, B in other}`.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.elements {
            for b in &other.elements {
                a.check_compatible(b)?;
                out.push(a.add(b)?);
            }
        }
        Ok(OperatorSet { elements: out })
    }

    pub fn adjoint(&self) -> Self {
        OperatorSet {
            elements: self.elements.iter().map(Operator::adjoint).collect(),
        }
    }

    pub fn hadamard_power(&self, t: f64) -> Result<Self> {
        self.map(|a| a.hadamard_power(t))
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|a| a.scale(c))
    }

    /// Largest entry over all elements.
    pub fn entrywise_sup(&self) -> f64 {
        self.elements
            .iter()
            .map(Operator::entrywise_sup)
            .fold(0.0, f64::max)
    }

    /// Cyclic rotation of the element list starting at index `k`.
    pub fn rotated(&self, k: usize) -> Self {
        let mut elements = self.elements.clone();
        elements.rotate_left(k % self.len());
        OperatorSet { elements }
    }
}

/// `{A_1^(a_1) o ... o A_m^(a_m) : A_j in S_j}`, enumerated with the last
/// set varying fastest.
pub fn set_hadamard_mean<T: Operator>(
    sets: &[OperatorSet<T>],
    w: &WeightVector,
) -> Result<OperatorSet<T>> {
    if sets.is_empty() {
        return Err(Error::Empty);
    }
    if sets.len() != w.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} sets but {} weights",
            sets.len(),
            w.len()
        )));
    }
    let mut acc: Vec<T> = sets[0].hadamard_power(w.weights()[0])?.elements;
    for (s, &a) in sets[1..].iter().zip(&w.weights()[1..]) {
        let powered = s.hadamard_power(a)?;
        let mut next = Vec::with_capacity(acc.len() * powered.len());
        for x in &acc {
            for y in powered.iter() {
                x.check_compatible(y)?;
                next.push(x.hadamard(y)?);
            }
        }
        acc = next;
    }
    Ok(OperatorSet { elements: acc })
}

/// Weighted geometric symmetrization `{A^(a) o (B*)^(b) : A, B in S}` with
/// `A` and `B` ranging independently. A zero exponent drops that factor.
pub fn symmetrization<T: Operator>(s: &OperatorSet<T>, alpha: f64, beta: f64) -> Result<OperatorSet<T>> {
    if !(alpha >= 0.0 && beta >= 0.0) || alpha + beta < 1.0 - crate::operator::SUM_EQ_ONE_TOL {
        return Err(Error::InvalidArgument(format!(
            "symmetrization needs alpha, beta >= 0 and alpha + beta >= 1, got ({alpha}, {beta})"
        )));
    }
    let left: Vec<Option<T>> = s
        .iter()
        .map(|a| (alpha > 0.0).then(|| a.hadamard_power(alpha)).transpose())
        .collect::<Result<_>>()?;
    let right: Vec<Option<T>> = s
        .iter()
        .map(|b| (beta > 0.0).then(|| b.adjoint().hadamard_power(beta)).transpose())
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(s.len() * s.len());
    for l in &left {
        for r in &right {
            out.push(match (l, r) {
                (Some(x), Some(y)) => {
                    x.check_compatible(y)?;
                    x.hadamard(y)?
                }
                (Some(x), None) => x.clone(),
                (None, Some(y)) => y.clone(),
                (None, None) => unreachable!("alpha + beta >= 1"),
            });
        }
    }
    Ok(OperatorSet { elements: out })
}

/// A set read from JSON: either all finite matrices or all families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetInput {
    Matrices(OperatorSet<FiniteMatrix>),
    Families(OperatorSet<OperatorFamily>),
}

impl SetInput {
    pub fn len(&self) -> usize {
        match self {
            SetInput::Matrices(s) => s.len(),
            SetInput::Families(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::WeightSequence;

    fn m(rows: &[&[f64]]) -> FiniteMatrix {
        FiniteMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn powers_and_products_enumerate_words() {
        let a = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let b = m(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let c = m(&[&[0.0, 2.0], &[1.0, 0.0]]);
        let s = OperatorSet::new(vec![a.clone(), b.clone()]).unwrap();
        let s2 = s.power(2).unwrap();
        let expect = [
            a.matmul(&a).unwrap(),
            a.matmul(&b).unwrap(),
            b.matmul(&a).unwrap(),
            b.matmul(&b).unwrap(),
        ];
        assert_eq!(s2.elements(), &expect);
        assert_eq!(s.power(5).unwrap().len(), 32);
        let single = OperatorSet::singleton(a.clone()).power(3).unwrap();
        assert_eq!(single.elements(), &[a.matmul(&a).unwrap().matmul(&a).unwrap()]);
        let p = OperatorSet::singleton(a.clone())
            .product(&OperatorSet::new(vec![b.clone(), c.clone()]).unwrap())
            .unwrap();
        assert_eq!(p.elements(), &[a.matmul(&b).unwrap(), a.matmul(&c).unwrap()]);
        assert!(s.power(0).is_err());
    }

    #[test]
    fn means_sums_and_symmetrization() {
        let a = m(&[&[1.0, 4.0], &[9.0, 1.0]]);
        let b = m(&[&[4.0, 1.0], &[1.0, 0.0]]);
        let half = WeightVector::uniform(2).unwrap();
        let sa = OperatorSet::singleton(a.clone());
        let sb = OperatorSet::singleton(b.clone());
        let mean = set_hadamard_mean(&[sa.clone(), sb.clone()], &half).unwrap();
        assert_eq!(mean.elements(), &[m(&[&[2.0, 2.0], &[3.0, 0.0]])]);
        let two = OperatorSet::new(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(set_hadamard_mean(&[two.clone(), sb.clone()], &half).unwrap().len(), 2);
        assert_eq!(sa.sum(&sb).unwrap().elements(), &[a.add(&b).unwrap()]);

        let sym = m(&[&[1.0, 2.0], &[2.0, 3.0]]);
        let ss = symmetrization(&OperatorSet::singleton(sym.clone()), 0.5, 0.5).unwrap();
        for (x, y) in ss.elements()[0].entries().iter().zip(sym.entries()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(symmetrization(&sa, 1.0, 0.0).unwrap().elements(), std::slice::from_ref(&a));
        assert_eq!(symmetrization(&two, 0.5, 0.5).unwrap().len(), 4);
        assert!(symmetrization(&two, 0.3, 0.3).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = FiniteMatrix::ones(2, 2);
        let b = FiniteMatrix::ones(3, 3);
        assert!(matches!(OperatorSet::new(vec![a, b]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(OperatorSet::<FiniteMatrix>::new(vec![]), Err(Error::Empty)));
    }

    #[test]
    fn set_json_kinds() {
        let s: SetInput =
            serde_json::from_str(r#"[{"rows":1,"cols":1,"entries":[2.0]}]"#).unwrap();
        assert!(matches!(s, SetInput::Matrices(_)));
        let f: SetInput = serde_json::from_str(
            r#"[{"bands":[{"offset":0,"weights":{"kind":"constant","c":1.0}}]}]"#,
        )
        .unwrap();
        assert!(matches!(f, SetInput::Families(_)));
        assert!(serde_json::from_str::<SetInput>("[]").is_err());
        let fam = OperatorSet::singleton(OperatorFamily::shift(1, WeightSequence::constant(1.0).unwrap()));
        let back: OperatorSet<OperatorFamily> =
            serde_json::from_str(&serde_json::to_string(&fam).unwrap()).unwrap();
        assert_eq!(back, fam);
    }
}
