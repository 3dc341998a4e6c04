//! Infinite nonnegative matrices on `l2` described by finitely many bands
//! plus a finite top-left correction.
//!
//! Entry `(i, i + d)` (1-based) of band `d` equals `w_d(i)`. The corner
//! correction `C` is an `R x R` block added on top of the bands. Outside the
//! corner (`max(i, j) > R`) every entry is exactly the band value; all
//! boundary effects produced by products, adjoints and Hadamard operations
//! are folded into `C`, which is why `C` may hold negative numbers even
//! though every entry of the induced matrix is nonnegative.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::matrix::{entry_pow, FiniteMatrix};
use crate::operator::sequence::WeightSequence;

/// Largest corner block a symbolic operation may produce.
pub const MAX_CORNER: usize = 384;

/// Largest expression tree allowed in a single band.
pub const MAX_BAND_COMPLEXITY: usize = 20_000;

const NEGATIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFamily {
    bands: BTreeMap<i64, WeightSequence>,
    corner_size: usize,
    corner: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBand {
    offset: i64,
    weights: WeightSequence,
}

#[derive(Serialize, Deserialize)]
struct RawCorner {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    #[serde(default)]
    bands: Vec<RawBand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagonal: Option<WeightSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    finite_rank: Option<RawCorner>,
}

impl Serialize for OperatorFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawFamily {
            bands: self
                .bands
                .iter()
                .map(|(&offset, w)| RawBand {
                    offset,
                    weights: w.clone(),
                })
                .collect(),
            diagonal: None,
            finite_rank: (self.corner_size > 0).then(|| RawCorner {
                rows: self.corner_size,
                cols: self.corner_size,
                entries: self.corner.clone(),
            }),
        };
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawFamily::deserialize(d)?;
        OperatorFamily::from_raw(raw).map_err(serde::de::Error::custom)
    }
}

impl OperatorFamily {
    fn from_raw(raw: RawFamily) -> Result<Self> {
        let mut bands = BTreeMap::new();
        for b in raw.bands {
            if bands.insert(b.offset, b.weights).is_some() {
                return Err(Error::Parse(format!("duplicate band offset {}", b.offset)));
            }
        }
        if let Some(d) = raw.diagonal {
            if bands.insert(0, d).is_some() {
                return Err(Error::Parse(
                    "diagonal given both as band 0 and as `diagonal`".into(),
                ));
            }
        }
        let (size, corner) = match raw.finite_rank {
            None => (0, Vec::new()),
            Some(c) => {
                if c.entries.len() != c.rows * c.cols || c.entries.iter().any(|v| !v.is_finite())
                {
                    return Err(Error::ShapeMismatch(format!(
                        "finite_rank {}x{} has {} entries",
                        c.rows,
                        c.cols,
                        c.entries.len()
                    )));
                }
                let n = c.rows.max(c.cols);
                let mut m = vec![0.0; n * n];
                for i in 0..c.rows {
                    for j in 0..c.cols {
                        m[i * n + j] = c.entries[i * c.cols + j];
                    }
                }
                (n, m)
            }
        };
        let fam = OperatorFamily {
            bands,
            corner_size: size,
            corner,
        };
        fam.check_corner_nonnegative()?;
        Ok(fam.pruned())
    }

    /// Bands, optional diagonal and an optional nonnegative finite-rank
    /// block embedded in the top-left corner.
    pub fn new(
        bands: Vec<(i64, WeightSequence)>,
        diagonal: Option<WeightSequence>,
        finite_rank: Option<&FiniteMatrix>,
    ) -> Result<Self> {
        OperatorFamily::from_raw(RawFamily {
            bands: bands
                .into_iter()
                .map(|(offset, weights)| RawBand { offset, weights })
                .collect(),
            diagonal,
            finite_rank: finite_rank.map(|m| RawCorner {
                rows: m.rows(),
                cols: m.cols(),
                entries: m.entries().to_vec(),
            }),
        })
    }

    /// Single band at `offset`.
    pub fn shift(offset: i64, weights: WeightSequence) -> Self {
        OperatorFamily::new(vec![(offset, weights)], None, None).expect("single band is valid")
    }

    pub fn diagonal(weights: WeightSequence) -> Self {
        OperatorFamily::shift(0, weights)
    }

    pub fn identity() -> Self {
        OperatorFamily::diagonal(WeightSequence::constant(1.0).expect("1 is a valid weight"))
    }

    pub fn finite_rank(block: &FiniteMatrix) -> Self {
        OperatorFamily::new(vec![], None, Some(block)).expect("nonnegative block is valid")
    }

    /// Adds a nonnegative finite-rank block to the corner.
    pub fn with_finite_rank(&self, block: &FiniteMatrix) -> Result<Self> {
        self.add(&OperatorFamily::finite_rank(block))
    }

    pub fn bands(&self) -> impl Iterator<Item = (i64, &WeightSequence)> {
        self.bands.iter().map(|(&d, w)| (d, w))
    }

    pub fn band(&self, offset: i64) -> Option<&WeightSequence> {
        self.bands.get(&offset)
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn corner_size(&self) -> usize {
        self.corner_size
    }

    /// The corner correction as rows (may contain negative numbers for
    /// derived families).
    pub fn corner_correction(&self) -> Vec<Vec<f64>> {
        let n = self.corner_size;
        (0..n).map(|i| self.corner[i * n..(i + 1) * n].to_vec()).collect()
    }

    pub fn max_offset(&self) -> u64 {
        self.bands.keys().map(|d| d.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_single_band(&self) -> bool {
        self.bands.len() == 1
    }

    /// Band part of entry `(i, j)`, 1-based.
    pub fn band_entry(&self, i: u64, j: u64) -> f64 {
        if i == 0 || j == 0 {
            return 0.0;
        }
        self.bands
            .get(&(j as i64 - i as i64))
            .map_or(0.0, |w| w.value(i))
    }

    fn corner_at(&self, i: u64, j: u64) -> f64 {
        let n = self.corner_size as u64;
        if i >= 1 && j >= 1 && i <= n && j <= n {
            self.corner[((i - 1) * n + (j - 1)) as usize]
        } else {
            0.0
        }
    }

    /// Entry `(i, j)` of the induced matrix, 1-based.
    pub fn entry(&self, i: u64, j: u64) -> f64 {
        (self.band_entry(i, j) + self.corner_at(i, j)).max(0.0)
    }

    /// Nonzero candidates of row `i` as `(column, value)` pairs.
    fn row_entries(&self, i: u64) -> Vec<(u64, f64)> {
        let mut out: BTreeMap<u64, f64> = BTreeMap::new();
        for (&d, w) in &self.bands {
            let j = i as i64 + d;
            if j >= 1 {
                *out.entry(j as u64).or_insert(0.0) += w.value(i);
            }
        }
        if i as usize <= self.corner_size {
            for j in 1..=self.corner_size as u64 {
                let c = self.corner_at(i, j);
                if c != 0.0 {
                    *out.entry(j).or_insert(0.0) += c;
                }
            }
        }
        out.into_iter()
            .map(|(j, v)| (j, v.max(0.0)))
            .filter(|&(_, v)| v != 0.0)
            .collect()
    }

    /// Top-left `n x n` block `P_n A P_n`.
    pub fn truncate(&self, n: usize) -> Result<FiniteMatrix> {
        if n == 0 {
            return Err(Error::InvalidArgument("truncation size must be >= 1".into()));
        }
        Ok(FiniteMatrix::from_fn(n, n, |i, j| {
            self.entry(i as u64 + 1, j as u64 + 1)
        }))
    }

    /// Certified upper bound on `||A - P_n A P_n||` on `l2`.
    pub fn tail_bound(&self, n: usize) -> f64 {
        let n = n as u64;
        let bands: f64 = self
            .bands
            .iter()
            .map(|(&d, w)| w.tail_sup(n.saturating_sub(d.max(0) as u64).max(1)))
            .sum();
        bands + self.corner_frobenius_outside(n)
    }

    /// Frobenius norm of the corner correction restricted to rows `> n`.
    pub(crate) fn corner_frobenius_below(&self, n: u64) -> f64 {
        let size = self.corner_size as u64;
        let mut acc = 0.0;
        for i in (n + 1)..=size {
            for j in 1..=size {
                acc += self.corner_at(i, j).powi(2);
            }
        }
        acc.sqrt()
    }

    fn corner_frobenius_outside(&self, n: u64) -> f64 {
        let size = self.corner_size as u64;
        let mut acc = 0.0;
        for i in 1..=size {
            for j in 1..=size {
                if i > n || j > n {
                    acc += self.corner_at(i, j).powi(2);
                }
            }
        }
        acc.sqrt()
    }

    /// Lower bound on `sup_{i,j} a(i, j)` from explicitly evaluated entries:
    /// the corner block, the first rows past it, and rows `2^k` for `k <= 40`.
    pub fn entrywise_sup_lower(&self) -> f64 {
        let r = self.corner_size as u64;
        let mut best = 0.0f64;
        for i in 1..=r {
            for j in 1..=r {
                best = best.max(self.entry(i, j));
            }
        }
        let rows = (1..=r + 64).chain((0..=40).map(|k| 1u64 << k));
        for i in rows {
            for &d in self.bands.keys() {
                let j = i as i64 + d;
                if j >= 1 {
                    best = best.max(self.entry(i, j as u64));
                }
            }
        }
        best
    }

    /// Upper bound on `sup_{i,j} a(i, j)`, exact on the corner block.
    pub fn entrywise_sup(&self) -> f64 {
        let r = self.corner_size as u64;
        let mut best = 0.0f64;
        for i in 1..=r {
            for j in 1..=r {
                best = best.max(self.entry(i, j));
            }
        }
        for (&d, w) in &self.bands {
            let from = (r + 1).saturating_sub(d.max(0) as u64).max(1);
            best = best.max(w.tail_sup(from));
        }
        best
    }

    fn check_corner_nonnegative(&self) -> Result<()> {
        let n = self.corner_size as u64;
        for i in 1..=n {
            for j in 1..=n {
                let v = self.band_entry(i, j) + self.corner_at(i, j);
                let scale = 1.0 + self.band_entry(i, j).abs() + self.corner_at(i, j).abs();
                if v < -NEGATIVE_SLACK * scale {
                    return Err(Error::NegativeEntry {
                        location: format!("family entry ({i}, {j})"),
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    fn pruned(mut self) -> Self {
        self.bands.retain(|_, w| w.is_constant() != Some(0.0));
        if self.corner.iter().all(|&v| v == 0.0) {
            self.corner_size = 0;
            self.corner.clear();
        }
        self
    }

    /// Assembles a family from symbolic bands and the exact entries of the
    /// corner region `1..=size`.
    fn assemble(
        bands: BTreeMap<i64, WeightSequence>,
        size: usize,
        exact: impl Fn(u64, u64) -> f64,
    ) -> Result<Self> {
        if size > MAX_CORNER {
            return Err(Error::ClosureOverflow(format!(
                "corner block {size} exceeds {MAX_CORNER}"
            )));
        }
        if let Some((d, w)) = bands
            .iter()
            .find(|(_, w)| w.complexity() > MAX_BAND_COMPLEXITY)
        {
            return Err(Error::ClosureOverflow(format!(
                "band {d} expression has {} nodes",
                w.complexity()
            )));
        }
        let mut fam = OperatorFamily {
            bands,
            corner_size: 0,
            corner: Vec::new(),
        };
        let mut corner = vec![0.0; size * size];
        for i in 1..=size as u64 {
            for j in 1..=size as u64 {
                corner[((i - 1) * size as u64 + (j - 1)) as usize] =
                    exact(i, j) - fam.band_entry(i, j);
            }
        }
        fam.corner_size = size;
        fam.corner = corner;
        Ok(fam.pruned())
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        let mut bands = BTreeMap::new();
        for (&d, w) in &self.bands {
            if let Some(v) = other.bands.get(&d) {
                bands.insert(d, w.times(v));
            }
        }
        let size = self.corner_size.max(other.corner_size);
        OperatorFamily::assemble(bands, size, |i, j| self.entry(i, j) * other.entry(i, j))
    }

    pub fn hadamard_power(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "hadamard power needs t > 0, got {t}"
            )));
        }
        let bands = self
            .bands
            .iter()
            .map(|(&d, w)| (d, w.powered(t)))
            .collect();
        OperatorFamily::assemble(bands, self.corner_size, |i, j| {
            entry_pow(self.entry(i, j), t)
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let mut bands: BTreeMap<i64, WeightSequence> = BTreeMap::new();
        for (&d1, w) in &self.bands {
            for (&d2, v) in &other.bands {
                let term = w.times(&v.shifted(d1));
                let merged = match bands.remove(&(d1 + d2)) {
                    Some(prev) => prev.plus(&term),
                    None => term,
                };
                bands.insert(d1 + d2, merged);
            }
        }
        let size = if self.corner_size == 0 && other.corner_size == 0 && bands.is_empty() {
            0
        } else {
            self.corner_size.max(other.corner_size)
                + (self.max_offset() + other.max_offset()) as usize
                + 1
        };
        if size > MAX_CORNER {
            return Err(Error::ClosureOverflow(format!(
                "product corner {size} exceeds {MAX_CORNER}"
            )));
        }
        let rows: Vec<Vec<f64>> = (1..=size as u64)
            .map(|i| {
                let mut row = vec![0.0; size];
                for (j, a) in self.row_entries(i) {
                    for (k, b) in other.row_entries(j) {
                        if (k as usize) <= size {
                            row[k as usize - 1] += a * b;
                        }
                    }
                }
                row
            })
            .collect();
        OperatorFamily::assemble(bands, size, |i, j| rows[i as usize - 1][j as usize - 1])
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut bands = self.bands.clone();
        for (&d, v) in &other.bands {
            let merged = match bands.remove(&d) {
                Some(w) => w.plus(v),
                None => v.clone(),
            };
            bands.insert(d, merged);
        }
        let size = self.corner_size.max(other.corner_size);
        OperatorFamily::assemble(bands, size, |i, j| self.entry(i, j) + other.entry(i, j))
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be finite and >= 0, got {c}"
            )));
        }
        let bands = self.bands.iter().map(|(&d, w)| (d, w.scaled(c))).collect();
        OperatorFamily::assemble(bands, self.corner_size, |i, j| c * self.entry(i, j))
    }

    /// Transpose: band `d` becomes band `-d` with re-indexed weights.
    pub fn adjoint(&self) -> Self {
        let bands = self
            .bands
            .iter()
            .map(|(&d, w)| (-d, w.shifted(-d)))
            .collect();
        OperatorFamily::assemble(bands, self.corner_size, |i, j| self.entry(j, i))
            .expect("adjoint preserves corner size and band complexity")
    }
}
