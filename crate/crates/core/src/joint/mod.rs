//! Generalized and joint spectral radii of finite sets, and their essential
//! counterparts for sets of banded families.

mod words;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{FiniteMatrix, OperatorFamily, OperatorSet};
use crate::spectral::{
    essential_spectral_radius, hausdorff_mnc, operator_norm, spectral_radius, Bracket, EssOptions,
    FiniteOptions, SpaceTag,
};

pub use words::{necklaces, words};

/// The four set radii.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusKind {
    GenRho,
    JointRho,
    GenRhoEss,
    JointRhoEss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JointOptions {
    /// Longest word length used by the enumerators.
    pub m_max: usize,
    /// Norm used for the upper bounds.
    pub space: SpaceTag,
    /// Cap on the number of products formed by one call.
    pub max_products: usize,
    pub finite: FiniteOptions,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            m_max: 6,
            space: SpaceTag::L2,
            max_products: 1 << 18,
            finite: FiniteOptions::default(),
        }
    }
}

/// One-sided radius estimate; `flagged` means the budget cut enumeration short.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub value: f64,
    pub flagged: bool,
    /// Number of products whose radius or norm was evaluated.
    pub evaluated: usize,
}

fn word_product(s: &OperatorSet<FiniteMatrix>, word: &[usize]) -> Result<FiniteMatrix> {
    let el = s.elements();
    let mut p = el[word[0]].clone();
    for &i in &word[1..] {
        p = p.matmul(&el[i])?;
    }
    Ok(p)
}

fn check_square(s: &OperatorSet<FiniteMatrix>) -> Result<()> {
    let a = &s.elements()[0];
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "set radii need square matrices, got {:?}",
            a.shape()
        )))
    }
}

/// `max_{|w| = m} rho(A_w).lo^(1/m)` over necklace representatives.
pub fn gen_radius_lb_at(
    s: &OperatorSet<FiniteMatrix>,
    m: usize,
    opts: &JointOptions,
) -> Result<RadiusEstimate> {
    check_square(s)?;
    if m == 0 {
        return Err(Error::InvalidArgument("word length must be >= 1".into()));
    }
    let reps = necklaces(s.len(), m, opts.max_products);
    let flagged = reps.truncated;
    let values = reps
        .words
        .par_iter()
        .map(|w| {
            let p = word_product(s, w)?;
            Ok(spectral_radius(&p, &opts.finite)?.lo.powf(1.0 / m as f64))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RadiusEstimate {
        value: values.iter().cloned().fold(0.0, f64::max),
        flagged,
        evaluated: values.len(),
    })
}

/// Lower bound for the generalized spectral radius from words of length
/// `1..=m_max`.
pub fn gen_radius_lb(
    s: &OperatorSet<FiniteMatrix>,
    m_max: usize,
    opts: &JointOptions,
) -> Result<RadiusEstimate> {
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be >= 1".into()));
    }
    let mut out = RadiusEstimate {
        value: 0.0,
        flagged: false,
        evaluated: 0,
    };
    for m in 1..=m_max {
        if out.evaluated >= opts.max_products {
            out.flagged = true;
            break;
        }
        let r = gen_radius_lb_at(s, m, opts)?;
        out.value = out.value.max(r.value);
        out.flagged |= r.flagged;
        out.evaluated += r.evaluated;
    }
    Ok(out)
}

/// Upper bound `min_m (max_{|w| = m} ||A_w||)^(1/m)` for the joint spectral
/// radius.
pub fn joint_radius_ub(
    s: &OperatorSet<FiniteMatrix>,
    m_max: usize,
    opts: &JointOptions,
) -> Result<RadiusEstimate> {
    check_square(s)?;
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be >= 1".into()));
    }
    let mut level: Vec<FiniteMatrix> = s.elements().to_vec();
    let mut best = f64::INFINITY;
    let mut evaluated = 0;
    let mut flagged = false;
    for m in 1..=m_max {
        if m > 1 {
            if level.len() * s.len() + evaluated > opts.max_products {
                flagged = true;
                break;
            }
            level = level
                .par_iter()
                .flat_map_iter(|p| s.iter().map(move |a| p.matmul(a)))
                .collect::<Result<_>>()?;
        }
        let norms = level
            .par_iter()
            .map(|p| Ok(operator_norm(p, opts.space, &opts.finite)?.hi))
            .collect::<Result<Vec<f64>>>()?;
        evaluated += norms.len();
        let worst = norms.iter().cloned().fold(0.0, f64::max);
        best = best.min(worst.powf(1.0 / m as f64));
    }
    Ok(RadiusEstimate {
        value: best,
        flagged,
        evaluated,
    })
}

/// Bracket for both the generalized and the joint spectral radius.
///
/// Branch and bound over the product tree. A word `w` of length `l` carries
/// `q(w) = min_{j <= l} ||prefix_j(w)||^(1/j)`; the maximum of `q` over a
/// complete layer bounds the joint radius from above, and `q` can only
/// decrease along a branch. Branches with `q <= lb + delta` are closed.
/// Spectral radii of every visited word feed the lower bound.
pub fn gripenberg_bracket(
    s: &OperatorSet<FiniteMatrix>,
    delta: f64,
    opts: &JointOptions,
) -> Result<Bracket> {
    let space = opts.space;
    let finite = opts.finite;
    gripenberg_with_norm(s, delta, opts, move |p: &FiniteMatrix| {
        Ok(operator_norm(p, space, &finite)?.hi)
    })
}

/// Gripenberg branch and bound with a caller-supplied operator norm.
///
/// `norm` must be submultiplicative and return an upper bound of the exact
/// norm; any such norm yields a valid upper bound for the joint radius.
pub fn gripenberg_with_norm<N>(
    s: &OperatorSet<FiniteMatrix>,
    delta: f64,
    opts: &JointOptions,
    norm: N,
) -> Result<Bracket>
where
    N: Fn(&FiniteMatrix) -> Result<f64> + Sync,
{
    check_square(s)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
    }
    if s.len() == 1 {
        // The joint radius of a singleton is its spectral radius.
        let r = spectral_radius(&s.elements()[0], &opts.finite)?;
        return Ok(Bracket::new(r.lo, r.hi, "gripenberg/singleton").with_flag(r.flagged));
    }
    struct Node {
        product: FiniteMatrix,
        q: f64,
    }
    let eval = |p: FiniteMatrix, len: usize, parent_q: f64| -> Result<(Node, f64)> {
        let root = 1.0 / len as f64;
        let nrm = norm(&p)?.powf(root);
        let rho = spectral_radius(&p, &opts.finite)?.lo.powf(root);
        Ok((
            Node {
                product: p,
                q: parent_q.min(nrm),
            },
            rho,
        ))
    };
    let first = s
        .elements()
        .par_iter()
        .map(|a| eval(a.clone(), 1, f64::INFINITY))
        .collect::<Result<Vec<_>>>()?;
    let mut lb = first.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let mut active: Vec<Node> = first.into_iter().map(|(n, _)| n).collect();
    let mut closed_max = 0.0f64;
    let mut evaluated = active.len();
    let mut depth = 1;
    loop {
        let (keep, closed): (Vec<Node>, Vec<Node>) =
            active.into_iter().partition(|n| n.q > lb + delta);
        closed_max = closed.iter().map(|n| n.q).fold(closed_max, f64::max);
        active = keep;
        if active.is_empty() {
            return Ok(Bracket::new(lb, closed_max.max(lb), "gripenberg"));
        }
        let open_max = active.iter().map(|n| n.q).fold(0.0, f64::max);
        if depth >= opts.m_max.max(1) * 4
            || evaluated + active.len() * s.len() > opts.max_products
        {
            return Ok(Bracket::new(lb, closed_max.max(open_max), "gripenberg").with_flag(true));
        }
        depth += 1;
        let children = active
            .par_iter()
            .flat_map_iter(|n| {
                s.iter().map(move |a| {
                    let p = n.product.matmul(a)?;
                    eval(p, depth, n.q)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        evaluated += children.len();
        lb = children.iter().map(|(_, r)| *r).fold(lb, f64::max);
        active = children.into_iter().map(|(n, _)| n).collect();
    }
}

/// Positive vector close to the Perron vector of `a`.
fn perron_weights(a: &FiniteMatrix) -> Vec<f64> {
    let n = a.rows();
    let shift = 0.1 * a.max_row_sum().max(f64::MIN_POSITIVE);
    let mut x = vec![1.0; n];
    for _ in 0..500 {
        let ax = a.apply(&x);
        let mut next: Vec<f64> = ax.iter().zip(&x).map(|(v, xi)| v + shift * xi).collect();
        let scale = next.iter().cloned().fold(0.0, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            break;
        }
        next.iter_mut().for_each(|v| *v /= scale);
        let change = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if change < 1e-14 {
            break;
        }
    }
    x.iter().map(|v| v.max(1e-12)).collect()
}

/// Operator norm induced by the weighted sup norm `max_i |x_i| / v_i`,
/// inflated to cover rounding.
fn weighted_norm(p: &FiniteMatrix, v: &[f64]) -> f64 {
    let pv = p.apply(v);
    let raw = pv.iter().zip(v).map(|(a, b)| a / b).fold(0.0, f64::max);
    raw * (1.0 + 4.0 * (p.rows() as f64 + 2.0) * f64::EPSILON)
}

/// Tries to certify `rho^(S) <= lambda` with `lambda = lb (1 + eta)` by
/// closing a finite set of nonnegative vectors under `x -> A x / lambda`.
///
/// The down-set `K = {x >= 0 : x <= u for some kept u}` then satisfies
/// `A K` inside `lambda K` for every element, because each element is
/// monotone on the nonnegative cone. A strictly positive seed makes `K`
/// absorbing, so products grow at most like `lambda^k`.
fn invariant_downset(
    s: &OperatorSet<FiniteMatrix>,
    seed: &[f64],
    lambda: f64,
    max_vertices: usize,
) -> bool {
    let n = seed.len();
    // Covers rounding in the matrix-vector product and the division.
    let inflate = 1.0 + (8.0 * n as f64 + 16.0) * f64::EPSILON;
    let scale = seed.iter().cloned().fold(0.0, f64::max);
    if !(lambda > 0.0) || !(scale > 0.0) {
        return false;
    }
    let mut kept: Vec<Vec<f64>> = vec![seed.iter().map(|x| x / scale).collect()];
    let mut next = 0;
    while next < kept.len() {
        let u = kept[next].clone();
        next += 1;
        for a in s.iter() {
            let w: Vec<f64> = a.apply(&u).into_iter().map(|x| x * inflate / lambda).collect();
            let covered = kept
                .iter()
                .any(|k| w.iter().zip(k).all(|(wi, ki)| wi <= ki));
            if covered {
                continue;
            }
            if kept.len() >= max_vertices {
                return false;
            }
            kept.push(w);
        }
    }
    true
}

/// Bracket valid for both the generalized and the joint spectral radius of a
/// finite set, aiming for relative width `rel_delta`.
///
/// The search first locates a product of maximal averaged radius among short
/// words, then runs branch and bound in the weighted sup norm built from that
/// product's Perron vector, and falls back to the caller's norm when the
/// first pass stays wide. The two certified brackets are intersected.
pub fn finite_set_bracket(
    s: &OperatorSet<FiniteMatrix>,
    rel_delta: f64,
    opts: &JointOptions,
) -> Result<Bracket> {
    check_square(s)?;
    if s.len() == 1 {
        return spectral_radius(&s.elements()[0], &opts.finite);
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut budget = opts.max_products / 4;
    for m in 1..=opts.m_max.min(4) {
        let reps = necklaces(s.len(), m, budget);
        budget = budget.saturating_sub(reps.words.len());
        let scored = reps
            .words
            .par_iter()
            .map(|w| {
                let p = word_product(s, w)?;
                Ok((spectral_radius(&p, &opts.finite)?.lo.powf(1.0 / m as f64), w.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        for (r, w) in scored {
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, w));
            }
        }
        if budget == 0 {
            break;
        }
    }
    let (lb, word) = best.ok_or(Error::Empty)?;
    let delta = rel_delta * lb.max(f64::MIN_POSITIVE);
    let v = perron_weights(&word_product(s, &word)?);
    if lb > 0.0 {
        let max_vertices = (opts.max_products / 2).max(16);
        for eta in [rel_delta, 1e-8, 1e-6] {
            let lambda = lb * (1.0 + eta);
            if invariant_downset(s, &v, lambda, max_vertices) {
                let out = Bracket::new(lb, lambda, "invariant_set");
                if eta == rel_delta {
                    return Ok(out);
                }
                return gripenberg_refine(s, delta, opts, &v, lb, out);
            }
        }
    }
    let fallback = Bracket::new(lb, f64::INFINITY, "words");
    gripenberg_refine(s, delta, opts, &v, lb, fallback)
}

/// Intersects `start` with weighted and plain branch-and-bound brackets.
fn gripenberg_refine(
    s: &OperatorSet<FiniteMatrix>,
    delta: f64,
    opts: &JointOptions,
    v: &[f64],
    lb: f64,
    start: Bracket,
) -> Result<Bracket> {
    let half = JointOptions {
        max_products: opts.max_products / 2,
        ..*opts
    };
    let weighted = gripenberg_with_norm(s, delta, &half, |p| Ok(weighted_norm(p, v)))?;
    let mut out = Bracket::new(weighted.lo.max(lb), weighted.hi.min(start.hi), "gripenberg/weighted");
    if out.width() <= delta {
        return Ok(out);
    }
    let plain = gripenberg_with_norm(s, delta, &half, |p| {
        Ok(operator_norm(p, opts.space, &opts.finite)?.hi)
    })?;
    out = Bracket::new(out.lo.max(plain.lo), out.hi.min(plain.hi), "gripenberg/weighted+space");
    let wide = out.width() > delta;
    Ok(out.with_flag(wide))
}

/// Options for the essential set radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EssJointOptions {
    pub m_max: usize,
    pub ess: EssOptions,
    pub max_products: usize,
}

impl Default for EssJointOptions {
    fn default() -> Self {
        EssJointOptions {
            m_max: 3,
            ess: EssOptions::default(),
            max_products: 4096,
        }
    }
}

/// Per-length statistics of the essential set radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssSetEstimate {
    /// `max_m max_P rho_ess(P).lo^(1/m)`; a certified lower bound for both
    /// essential set radii.
    pub max_of_lo: f64,
    /// `max_m max_P rho_ess(P).hi^(1/m)`; an observed value, not a bound.
    pub max_of_hi: f64,
    /// `min_m (max_P gamma(P).hi)^(1/m)`; a certified upper bound for both.
    pub joint_ub: f64,
    pub flagged: bool,
}

impl EssSetEstimate {
    /// Certified bracket valid for both `rho_ess(S)` and `rho_ess^(S)`.
    pub fn bracket(&self) -> Bracket {
        Bracket::new(self.max_of_lo, self.joint_ub, "ess_words").with_flag(self.flagged)
    }
}

/// Enumerates products of lengths `1..=m_max` once and evaluates both
/// essential set radii on them.
pub fn ess_set_radii(
    s: &OperatorSet<OperatorFamily>,
    opts: &EssJointOptions,
) -> Result<EssSetEstimate> {
    if opts.m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be >= 1".into()));
    }
    let mut level: Vec<OperatorFamily> = s.elements().to_vec();
    let mut est = EssSetEstimate {
        max_of_lo: 0.0,
        max_of_hi: 0.0,
        joint_ub: f64::INFINITY,
        flagged: false,
    };
    let mut evaluated = 0;
    for m in 1..=opts.m_max {
        if m > 1 {
            if evaluated + level.len() * s.len() > opts.max_products {
                est.flagged = true;
                break;
            }
            match level
                .par_iter()
                .flat_map_iter(|p| s.iter().map(move |a| p.matmul(a)))
                .collect::<Result<Vec<_>>>()
            {
                Ok(next) => level = next,
                Err(Error::ClosureOverflow(_)) => {
                    est.flagged = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let root = 1.0 / m as f64;
        let stats = level
            .par_iter()
            .map(|p| {
                let ess = essential_spectral_radius(p, &opts.ess)?.bracket;
                let g = hausdorff_mnc(p, &opts.ess)?;
                Ok((ess.lo, ess.hi, g.hi))
            })
            .collect::<Result<Vec<_>>>()?;
        evaluated += stats.len();
        for (lo, hi, _) in &stats {
            est.max_of_lo = est.max_of_lo.max(lo.powf(root));
            est.max_of_hi = est.max_of_hi.max(hi.powf(root));
        }
        let g_max = stats.iter().map(|t| t.2).fold(0.0, f64::max);
        est.joint_ub = est.joint_ub.min(g_max.powf(root));
        if est.joint_ub - est.max_of_lo <= opts.ess.tol {
            break;
        }
    }
    Ok(est)
}

/// Observed `max_m (max_P rho_ess(P).hi)^(1/m)` for the generalized
/// essential radius, with the matching lower bound.
pub fn ess_gen_radius_ub(
    s: &OperatorSet<OperatorFamily>,
    opts: &EssJointOptions,
) -> Result<EssSetEstimate> {
    ess_set_radii(s, opts)
}

/// Certified upper bound for the joint essential spectral radius.
pub fn ess_joint_radius_ub(s: &OperatorSet<OperatorFamily>, opts: &EssJointOptions) -> Result<f64> {
    Ok(ess_set_radii(s, opts)?.joint_ub)
}
