//! Certified brackets for spectral radii, norms, `gamma` and `rho_ess`.

pub mod essential;
pub mod finite;

use serde::{Deserialize, Serialize};

pub use essential::{
    essential_spectral_radius, gamma_via_star, hausdorff_mnc, oracle_ess_radius, symbol_radius,
    tail_norm_bounds, EssOptions, EssReport,
};
pub use finite::{operator_norm, spectral_radius, FiniteOptions};

/// Closed interval `[lo, hi]` known to contain a quantity.
///
/// `flagged` marks brackets that stopped on a budget before reaching their
/// width target; they are still valid, just wider than requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub method: String,
    #[serde(default)]
    pub flagged: bool,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, method: impl Into<String>) -> Self {
        let lo = lo.max(0.0);
        Bracket {
            lo: lo.min(hi.max(0.0)),
            hi: hi.max(lo),
            method: method.into(),
            flagged: false,
        }
    }

    pub fn exact(v: f64, method: impl Into<String>) -> Self {
        Bracket::new(v, v, method)
    }

    pub fn with_flag(mut self, flagged: bool) -> Self {
        self.flagged |= flagged;
        self
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lo - tol <= x && x <= self.hi + tol
    }

    pub fn overlaps(&self, other: &Bracket, tol: f64) -> bool {
        self.lo <= other.hi + tol && other.lo <= self.hi + tol
    }

    /// `[lo^e, hi^e]` for `e > 0`.
    pub fn powf(&self, e: f64) -> Bracket {
        Bracket {
            lo: self.lo.powf(e),
            hi: self.hi.powf(e),
            method: self.method.clone(),
            flagged: self.flagged,
        }
    }

    /// Interval product of two nonnegative brackets.
    pub fn mul(&self, other: &Bracket) -> Bracket {
        Bracket {
            lo: self.lo * other.lo,
            hi: self.hi * other.hi,
            method: if self.method == other.method {
                self.method.clone()
            } else {
                format!("{}*{}", self.method, other.method)
            },
            flagged: self.flagged || other.flagged,
        }
    }

    /// Bracket of `max(x, y)` given brackets for `x` and `y`.
    pub fn max(&self, other: &Bracket) -> Bracket {
        Bracket {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
            method: self.method.clone(),
            flagged: self.flagged || other.flagged,
        }
    }
}

/// Which `l^p` norm an operator norm refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceTag {
    L1,
    #[default]
    L2,
    Linf,
}

impl std::str::FromStr for SpaceTag {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "l1" => Ok(SpaceTag::L1),
            "l2" => Ok(SpaceTag::L2),
            "linf" => Ok(SpaceTag::Linf),
            other => Err(crate::Error::Parse(format!("unknown space {other:?}"))),
        }
    }
}
