//! Spectral radius and operator norms of finite nonnegative matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::FiniteMatrix;
use crate::spectral::{Bracket, SpaceTag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FiniteOptions {
    /// Target width relative to `max(1, hi)`.
    pub rel_tol: f64,
    /// Number of repeated squarings in the Gelfand sequence.
    pub max_squarings: usize,
    /// Power iteration steps for the Collatz-Wielandt bounds.
    pub max_power_steps: usize,
}

impl Default for FiniteOptions {
    fn default() -> Self {
        FiniteOptions {
            rel_tol: 1e-10,
            max_squarings: 60,
            max_power_steps: 20_000,
        }
    }
}

fn rounding_margin(n: usize) -> f64 {
    64.0 * n as f64 * f64::EPSILON
}

/// Bracket for `rho(A)`.
///
/// Upper side: `min(||A^(2^k)||^(2^-k), max_i (Ax)_i / x_i)` with `x > 0`
/// a shifted power iterate. Lower side: the largest of
/// `min_{x_i > 0} (Ax)_i / x_i`, `(max_i (A^(2^k))_ii)^(2^-k)` and
/// `(min_i rowsum(A^(2^k)))^(2^-k)`. Every candidate is a valid bound for a
/// nonnegative matrix, so the bracket is certified up to a rounding margin.
pub fn spectral_radius(a: &FiniteMatrix, opts: &FiniteOptions) -> Result<Bracket> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "spectral radius needs a square matrix, got {:?}",
            a.shape()
        )));
    }
    let n = a.rows();
    if n == 1 {
        return Ok(Bracket::exact(a.get(0, 0), "exact"));
    }
    let margin = rounding_margin(n);
    let target = |lo: f64, hi: f64| hi - lo <= opts.rel_tol * hi.max(1.0);

    let (mut lo, mut hi) = gelfand(a, opts.max_squarings);
    if hi == 0.0 {
        return Ok(Bracket::exact(0.0, "gelfand"));
    }
    let mut method = "gelfand";
    if !target(lo * (1.0 - margin), hi * (1.0 + margin)) {
        let (cw_lo, cw_hi) = collatz_wielandt(a, opts, lo, hi);
        if cw_lo > lo || cw_hi < hi {
            method = "gelfand+collatz_wielandt";
        }
        lo = lo.max(cw_lo);
        hi = hi.min(cw_hi);
    }
    let (lo, hi) = (lo * (1.0 - margin), hi * (1.0 + margin));
    let done = target(lo, hi);
    Ok(Bracket::new(lo, hi, method).with_flag(!done))
}

/// Repeated squaring with normalization. Returns `(lo, hi)` before the
/// rounding margin is applied.
fn gelfand(a: &FiniteMatrix, squarings: usize) -> (f64, f64) {
    let norm = a.max_row_sum();
    if norm == 0.0 {
        return (0.0, 0.0);
    }
    let mut b = a.scale(1.0 / norm).expect("positive scale");
    // A^(2^k) = exp(s) * B with ||B||_inf = 1.
    let mut s = norm.ln();
    let mut hi = norm;
    let mut lo = diag_and_row_lower(&b, s, 1.0);
    let mut p = 1.0f64;
    for _ in 0..squarings {
        let sq = b.matmul(&b).expect("square");
        let nrm = sq.max_row_sum();
        if nrm == 0.0 {
            return (0.0, 0.0);
        }
        b = sq.scale(1.0 / nrm).expect("positive scale");
        s = 2.0 * s + nrm.ln();
        p *= 2.0;
        hi = hi.min((s / p).exp());
        lo = lo.max(diag_and_row_lower(&b, s, p));
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    (lo, hi)
}

fn diag_and_row_lower(b: &FiniteMatrix, s: f64, p: f64) -> f64 {
    let n = b.rows();
    let diag = (0..n).map(|i| b.get(i, i)).fold(0.0, f64::max);
    let min_row = (0..n)
        .map(|i| b.row(i).iter().sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let best = diag.max(min_row);
    if best > 0.0 {
        ((s + best.ln()) / p).exp()
    } else {
        0.0
    }
}

/// Shifted power iteration with Collatz-Wielandt bounds evaluated on `A`.
fn collatz_wielandt(a: &FiniteMatrix, opts: &FiniteOptions, lo0: f64, hi0: f64) -> (f64, f64) {
    let n = a.rows();
    let shift = 0.1 * hi0.max(f64::MIN_POSITIVE);
    let mut x = vec![1.0; n];
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..opts.max_power_steps {
        let ax = a.apply(&x);
        let mut rmin = f64::INFINITY;
        let mut rmax = 0.0f64;
        for i in 0..n {
            let r = ax[i] / x[i];
            rmin = rmin.min(r);
            rmax = rmax.max(r);
        }
        lo = lo.max(rmin);
        hi = hi.min(rmax);
        if hi - lo <= 0.25 * opts.rel_tol * hi.max(1.0) {
            break;
        }
        let mut next: Vec<f64> = ax.iter().zip(&x).map(|(v, xi)| v + shift * xi).collect();
        let scale = next.iter().cloned().fold(0.0, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            break;
        }
        next.iter_mut().for_each(|v| *v /= scale);
        if next.iter().any(|&v| v < 1e-280) {
            // Underflow would break strict positivity of the iterate.
            break;
        }
        x = next;
    }
    (lo, hi)
}

/// Operator norm of `A` on `l1`, `l2` or `l^inf`.
pub fn operator_norm(a: &FiniteMatrix, space: SpaceTag, opts: &FiniteOptions) -> Result<Bracket> {
    Ok(match space {
        SpaceTag::L1 => Bracket::exact(a.max_col_sum(), "max_col_sum"),
        SpaceTag::Linf => Bracket::exact(a.max_row_sum(), "max_row_sum"),
        SpaceTag::L2 => {
            let gram = a.transpose().matmul(a)?;
            let r = spectral_radius(&gram, opts)?;
            Bracket {
                lo: r.lo.sqrt(),
                hi: r.hi.sqrt(),
                method: format!("sqrt_rho_gram/{}", r.method),
                flagged: r.flagged,
            }
        }
    })
}
