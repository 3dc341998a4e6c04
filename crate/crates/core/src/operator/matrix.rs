use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense nonnegative matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct FiniteMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl TryFrom<RawMatrix> for FiniteMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        FiniteMatrix::new(raw.rows, raw.cols, raw.entries)
    }
}

impl From<FiniteMatrix> for RawMatrix {
    fn from(m: FiniteMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            entries: m.entries,
        }
    }
}

impl fmt::Debug for FiniteMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteMatrix{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl FiniteMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        for (k, &v) in entries.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeEntry {
                    location: format!("({}, {})", k / cols, k % cols),
                    value: v,
                });
            }
        }
        Ok(FiniteMatrix {
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix from nested rows; panics are avoided, ragged input is an error.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        FiniteMatrix::new(r, c, rows.concat())
    }

    pub(crate) fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        FiniteMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FiniteMatrix::from_fn(rows, cols, |_, _| 0.0)
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        FiniteMatrix::from_fn(rows, cols, |_, _| 1.0)
    }

    pub fn identity(n: usize) -> Self {
        FiniteMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        let n = d.len();
        let mut entries = vec![0.0; n * n];
        for (i, &v) in d.iter().enumerate() {
            entries[i * n + i] = v;
        }
        FiniteMatrix::new(n, n, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    fn check_same_shape(&self, other: &Self, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        FiniteMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        FiniteMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "hadamard product")?;
        Ok(self.zip(other, |a, b| a * b))
    }

    /// Entrywise power with `0^t = 0`.
    pub fn hadamard_power(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "hadamard power needs t > 0, got {t}"
            )));
        }
        Ok(self.map(|v| entry_pow(v, t)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "product: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for l in 0..k {
                let a = self.entries[i * k + l];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.entries[l * m..(l + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(FiniteMatrix {
            rows: n,
            cols: m,
            entries: out,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sum")?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be finite and >= 0, got {c}"
            )));
        }
        Ok(self.map(|v| v * c))
    }

    /// Transpose; the adjoint of a real matrix.
    pub fn transpose(&self) -> Self {
        FiniteMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_col_sum(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// `A x` for a square or rectangular matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Entrywise `self <= other * (1 + rel) + abs`.
    pub fn dominated_by(&self, other: &Self, rel: f64, abs: f64) -> bool {
        self.shape() == other.shape()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(&a, &b)| a <= b * (1.0 + rel) + abs)
    }
}

/// `v^t` with the convention `0^t = 0` for every `t > 0`.
#[inline]
pub fn entry_pow(v: f64, t: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else if t == 1.0 {
        v
    } else {
        v.powf(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> FiniteMatrix {
        FiniteMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn hadamard_product_entrywise() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[2.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(a.hadamard(&b).unwrap(), m(&[&[2.0, 0.0], &[3.0, 4.0]]));
        assert_eq!(a.hadamard(&FiniteMatrix::ones(2, 2)).unwrap(), a);
    }

    #[test]
    fn hadamard_power_roots_and_zero() {
        let a = m(&[&[4.0, 9.0], &[0.0, 1.0]]);
        assert_eq!(a.hadamard_power(0.5).unwrap(), m(&[&[2.0, 3.0], &[0.0, 1.0]]));
        assert_eq!(a.hadamard_power(1.0).unwrap(), a);
        let d = FiniteMatrix::diagonal(&[2.0, 3.0]).unwrap();
        assert_eq!(
            d.hadamard_power(2.0).unwrap(),
            FiniteMatrix::diagonal(&[4.0, 9.0]).unwrap()
        );
        assert!(a.hadamard_power(0.0).is_err());
        assert!(a.hadamard_power(-1.0).is_err());
    }

    #[test]
    fn product_sum_transpose() {
        let a = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let b = m(&[&[1.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(a.matmul(&b).unwrap(), m(&[&[2.0, 1.0], &[1.0, 1.0]]));
        assert_eq!(a.add(&FiniteMatrix::zeros(2, 2)).unwrap(), a);
        assert_eq!(a.transpose(), b);
        assert!(a.matmul(&FiniteMatrix::zeros(3, 3)).is_err());
        assert!(a.hadamard(&FiniteMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FiniteMatrix::new(0, 1, vec![]).is_err());
        assert!(FiniteMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            FiniteMatrix::new(1, 2, vec![1.0, -0.5]),
            Err(Error::NegativeEntry { .. })
        ));
        assert!(FiniteMatrix::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        let a: FiniteMatrix =
            serde_json::from_str(r#"{"rows":2,"cols":2,"entries":[1,2,3,4]}"#).unwrap();
        assert_eq!(a, m(&[&[1.0, 2.0], &[3.0, 4.0]]));
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"rows":2,"cols":2,"entries":[1.0,2.0,3.0,4.0]}"#);
        assert!(serde_json::from_str::<FiniteMatrix>(r#"{"rows":1,"cols":1,"entries":[-1]}"#)
            .is_err());
    }
}
