//! `gamma` (Hausdorff measure of noncompactness) and `rho_ess` of banded
//! families on `l2`.
//!
//! Every [`OperatorFamily`] has finitely many bands with convergent weights
//! plus a finite corner, so it differs from the banded Toeplitz operator
//! `T(L)` with entries `L_d = lim_i w_d(i)` by a compact operator. For
//! nonnegative `L_d` the symbol `sum_d L_d e^{i d theta}` attains its largest
//! modulus at `theta = 0`, which gives
//! `gamma(A) = ||T(L)||_ess = rho_ess(A) = sum_d L_d`. The estimators below
//! never rely on that identity for their upper sides: those come from
//! explicit tail norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::OperatorFamily;
use crate::spectral::Bracket;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EssOptions {
    /// Target bracket width.
    pub tol: f64,
    /// Largest `k` in the truncation schedule `n = 2^k`.
    pub max_k: u32,
    /// Largest power `j` used in `min_j gamma(A^j)^(1/j)`.
    pub j_max: usize,
}

impl Default for EssOptions {
    fn default() -> Self {
        EssOptions {
            tol: 1e-6,
            max_k: 40,
            j_max: 6,
        }
    }
}

/// Relative deflation applied to lower sides computed from band limits.
const LIMIT_DEFLATION: f64 = 1e-12;

/// Upper bounds on `||Q_n A||` for `n = 2^0, 2^1, ..., 2^max_k`.
///
/// `Q_n A` keeps the rows with index `> n`. Each band contributes at most
/// the supremum of its weights on those rows (Schur test), and the corner
/// correction contributes its Frobenius norm below row `n`. The returned
/// values are running minima, hence non-increasing.
pub fn tail_norm_bounds(a: &OperatorFamily, max_k: u32) -> Vec<(u64, f64)> {
    let mut best = f64::INFINITY;
    (0..=max_k)
        .map(|k| {
            let n = 1u64 << k;
            let raw: f64 = a.bands().map(|(_, w)| w.tail_sup(n + 1)).sum::<f64>()
                + a.corner_frobenius_below(n);
            best = best.min(raw);
            (n, best)
        })
        .collect()
}

/// `sum_d lim_i w_d(i)`, the value of the limiting symbol at `theta = 0`.
pub fn symbol_radius(a: &OperatorFamily) -> f64 {
    a.bands().map(|(_, w)| w.limit()).sum()
}

/// Bracket for `gamma(A)` on `l2`.
pub fn hausdorff_mnc(a: &OperatorFamily, opts: &EssOptions) -> Result<Bracket> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let lo = symbol_radius(a) * (1.0 - LIMIT_DEFLATION);
    let mut hi = f64::INFINITY;
    for (_, bound) in tail_norm_bounds(a, opts.max_k) {
        hi = bound;
        if hi - lo <= opts.tol {
            return Ok(Bracket::new(lo, hi, "tail_norm"));
        }
    }
    Ok(Bracket::new(lo, hi, "tail_norm").with_flag(true))
}

/// Exact `rho_ess` for diagonal, single-band or finite-rank families.
///
/// Compact corrections are ignored. Returns `None` for families with two or
/// more bands.
pub fn oracle_ess_radius(a: &OperatorFamily) -> Option<f64> {
    match a.band_count() {
        0 => Some(0.0),
        1 => a.bands().next().map(|(_, w)| w.limit()),
        _ => None,
    }
}

/// `rho_ess` bracket together with the per-power diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssReport {
    pub bracket: Bracket,
    /// `(j, gamma(A^j).hi^(1/j))` for each power that was computed.
    pub per_power: Vec<(usize, f64)>,
    pub oracle: Option<f64>,
}

/// Bracket for `rho_ess(A) = inf_j gamma(A^j)^(1/j)`.
pub fn essential_spectral_radius(a: &OperatorFamily, opts: &EssOptions) -> Result<EssReport> {
    if opts.j_max == 0 {
        return Err(Error::InvalidArgument("j_max must be >= 1".into()));
    }
    let oracle = oracle_ess_radius(a);
    let lo = oracle.unwrap_or_else(|| symbol_radius(a)) * (1.0 - LIMIT_DEFLATION);
    let mut per_power = Vec::new();
    let mut hi = f64::INFINITY;
    let mut flagged = false;
    let mut power = a.clone();
    for j in 1..=opts.j_max {
        if j > 1 {
            match power.matmul(a) {
                Ok(p) => power = p,
                Err(Error::ClosureOverflow(_)) if !per_power.is_empty() => break,
                Err(e) => return Err(e),
            }
        }
        let g = hausdorff_mnc(&power, opts)?;
        let root = g.hi.powf(1.0 / j as f64);
        per_power.push((j, root));
        hi = hi.min(root);
        flagged = g.flagged;
        if hi - lo <= opts.tol {
            flagged = false;
            break;
        }
    }
    let method = if oracle.is_some() { "gamma_powers+oracle" } else { "gamma_powers+symbol" };
    Ok(EssReport {
        bracket: Bracket::new(lo, hi, method).with_flag(flagged && hi - lo > opts.tol),
        per_power,
        oracle,
    })
}

/// `gamma(A) = rho_ess(A* A)^(1/2)`, an independent route to `gamma`.
pub fn gamma_via_star(a: &OperatorFamily, opts: &EssOptions) -> Result<Bracket> {
    let gram = a.adjoint().matmul(a)?;
    let r = essential_spectral_radius(&gram, opts)?.bracket;
    Ok(Bracket {
        lo: r.lo.sqrt(),
        hi: r.hi.sqrt(),
        method: format!("sqrt_ess_gram/{}", r.method),
        flagged: r.flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{FiniteMatrix, WeightSequence};

    fn opts() -> EssOptions {
        EssOptions::default()
    }

    #[test]
    fn gamma_examples() {
        let rank = OperatorFamily::finite_rank(&FiniteMatrix::ones(3, 3));
        let g = hausdorff_mnc(&rank, &opts()).unwrap();
        assert_eq!((g.lo, g.hi), (0.0, 0.0));
        let id = hausdorff_mnc(&OperatorFamily::identity(), &opts()).unwrap();
        assert!(id.contains(1.0, 1e-12) && id.width() <= 1e-6);
        let inv = OperatorFamily::diagonal(WeightSequence::rational(vec![1.0], vec![0.0, 1.0]).unwrap());
        let g = hausdorff_mnc(&inv, &opts()).unwrap();
        assert!(g.contains(0.0, 0.0) && g.hi <= 1e-6 && !g.flagged);
    }

    #[test]
    fn tail_norms_are_monotone() {
        let a = OperatorFamily::new(
            vec![(1, WeightSequence::harmonic(1.0, 0.7).unwrap())],
            Some(WeightSequence::harmonic(0.5, -0.3).unwrap()),
            Some(&FiniteMatrix::ones(3, 3)),
        )
        .unwrap();
        let t = tail_norm_bounds(&a, 30);
        assert!(t.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn ess_radius_examples() {
        let rank = OperatorFamily::finite_rank(&FiniteMatrix::ones(2, 2));
        assert_eq!(essential_spectral_radius(&rank, &opts()).unwrap().bracket.hi, 0.0);
        let d = OperatorFamily::diagonal(WeightSequence::harmonic(1.0, 1.0).unwrap());
        assert!(essential_spectral_radius(&d, &opts()).unwrap().bracket.contains(1.0, 1e-9));
        let s = OperatorFamily::shift(1, WeightSequence::harmonic(1.5, 0.8).unwrap());
        let r = essential_spectral_radius(&s, &opts()).unwrap();
        assert!(r.bracket.contains(1.5, 1e-9) && r.bracket.width() <= 1e-6, "{r:?}");
        assert_eq!(r.oracle, Some(1.5));
    }

    #[test]
    fn oracle_examples() {
        let c = |v| WeightSequence::constant(v).unwrap();
        let d3 = OperatorFamily::diagonal(WeightSequence::eventually_constant(vec![9.0, 0.0], 3.0).unwrap());
        assert_eq!(oracle_ess_radius(&d3), Some(3.0));
        let sr = OperatorFamily::shift(1, c(0.7)).with_finite_rank(&FiniteMatrix::ones(2, 2)).unwrap();
        assert_eq!(oracle_ess_radius(&sr), Some(0.7));
        let inv = OperatorFamily::diagonal(WeightSequence::rational(vec![1.0], vec![0.0, 1.0]).unwrap());
        assert_eq!(oracle_ess_radius(&inv), Some(0.0));
        let two = OperatorFamily::new(vec![(1, c(1.0)), (-1, c(1.0))], None, None).unwrap();
        assert_eq!(oracle_ess_radius(&two), None);
    }

    #[test]
    fn gamma_via_star_examples() {
        let c = WeightSequence::constant(0.8).unwrap();
        for (fam, expect) in [
            (OperatorFamily::finite_rank(&FiniteMatrix::ones(2, 2)), 0.0),
            (OperatorFamily::identity(), 1.0),
            (OperatorFamily::shift(1, c), 0.8),
        ] {
            let b = gamma_via_star(&fam, &opts()).unwrap();
            assert!(b.contains(expect, 1e-9), "{b:?}");
        }
    }
}
