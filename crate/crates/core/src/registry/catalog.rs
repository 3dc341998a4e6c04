//! The catalog of inequality chains.
//!
//! Input sets are numbered from 0 in the expressions and displayed as
//! `P1, P2, ...`. Each entry states how many input sets it takes and how
//! large they are, validates its side conditions, builds its segments from
//! the parameters, and can draw random parameters for ensemble sweeps.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::registry::chain::{LevelKind, Params, Relation, Segment, Term};
use crate::registry::expr::SetExpr;

type Check = fn(&Params) -> std::result::Result<(), String>;

/// One catalog entry.
pub struct ChainSpec {
    pub id: &'static str,
    pub level: LevelKind,
    pub title: &'static str,
    /// Names of the displayed inequalities this entry checks.
    pub anchors: &'static [&'static str],
    /// Side conditions in words.
    pub hypothesis: &'static str,
    /// Inputs are column vectors rather than square matrices.
    pub vectors: bool,
    sizes: fn(&Params) -> Result<Vec<usize>>,
    check: Check,
    build: fn(&Params) -> Result<Vec<Segment>>,
    sample: fn(&mut ChaCha8Rng) -> Params,
}

impl std::fmt::Debug for ChainSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChainSpec")
            .field("id", &self.id)
            .field("level", &self.level)
            .finish()
    }
}

impl ChainSpec {
    /// Rejects parameters that violate the entry's side conditions.
    pub fn check_hypothesis(&self, q: &Params) -> Result<()> {
        (self.check)(q).map_err(|reason| Error::Hypothesis {
            chain: self.id.to_string(),
            reason,
        })
    }

    /// Cardinality of each input set.
    pub fn input_sizes(&self, q: &Params) -> Result<Vec<usize>> {
        self.check_hypothesis(q)?;
        (self.sizes)(q)
    }

    pub fn segments(&self, q: &Params) -> Result<Vec<Segment>> {
        self.check_hypothesis(q)?;
        (self.build)(q)
    }

    /// Random parameters satisfying the side conditions.
    pub fn sample_params(&self, rng: &mut ChaCha8Rng) -> Params {
        (self.sample)(rng)
    }

    /// Documentation record for the JSON export.
    pub fn describe(&self, example: &Params) -> Result<CatalogEntry> {
        let segments = self.segments(example)?;
        let arity = self.input_sizes(example)?;
        Ok(CatalogEntry {
            id: self.id,
            level: self.level,
            title: self.title,
            anchors: self.anchors,
            hypothesis: self.hypothesis,
            inputs: if self.vectors { "column vectors" } else { "square operators" },
            example_params: example.clone(),
            example_arity: arity,
            example_segments: segments
                .iter()
                .map(|s| SegmentDoc {
                    name: s.name.clone(),
                    relation: s.relation,
                    terms: s
                        .terms
                        .iter()
                        .map(|t| t.label(self.level, example.radius))
                        .collect(),
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentDoc {
    pub name: String,
    pub relation: Relation,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub level: LevelKind,
    pub title: &'static str,
    pub anchors: &'static [&'static str],
    pub hypothesis: &'static str,
    pub inputs: &'static str,
    pub example_params: Params,
    pub example_arity: Vec<usize>,
    pub example_segments: Vec<SegmentDoc>,
}

// ---------------------------------------------------------------------------
// Expression helpers

fn p(i: usize) -> SetExpr {
    SetExpr::input(i)
}

fn had(xs: Vec<SetExpr>) -> SetExpr {
    SetExpr::hmean(xs, 1.0)
}

fn prod_of(idx: &[usize]) -> SetExpr {
    SetExpr::prod(idx.iter().map(|&i| p(i)).collect())
}

/// Product of inputs with optional adjoints, `(index, starred)`.
fn word(items: &[(usize, bool)]) -> SetExpr {
    SetExpr::prod(
        items
            .iter()
            .map(|&(i, s)| if s { p(i).star() } else { p(i) })
            .collect(),
    )
}

/// All cyclic rotations of `items`, starting with the identity rotation.
fn rotations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    (0..items.len())
        .map(|j| items[j..].iter().chain(&items[..j]).cloned().collect())
        .collect()
}

fn weighted(xs: Vec<SetExpr>, ws: &[f64]) -> SetExpr {
    SetExpr::hadamard(xs.into_iter().zip(ws.iter().copied()).collect())
}

fn r(e: SetExpr) -> Term {
    Term::r(e, 1.0)
}

fn rp(e: SetExpr, exp: f64) -> Term {
    Term::r(e, exp)
}

fn g(e: SetExpr) -> Term {
    Term::gamma(e, 1.0)
}

fn le(name: &str, terms: Vec<Term>) -> Segment {
    Segment::le(name, terms)
}

// ---------------------------------------------------------------------------
// Parameter helpers

fn ok() -> std::result::Result<(), String> {
    Ok(())
}

fn req<T>(v: Result<T>) -> std::result::Result<T, String> {
    v.map_err(|e| e.to_string())
}

fn need_range(name: &str, v: usize, lo: usize, hi: usize) -> std::result::Result<(), String> {
    if v < lo || v > hi {
        Err(format!("{name} = {v} must lie in {lo}..={hi}"))
    } else {
        Ok(())
    }
}

fn need_alphas(q: &Params, m: usize, allow_ge: bool) -> std::result::Result<(), String> {
    let a = req(q.alphas())?;
    if a.len() != m {
        return Err(format!("expected {m} weights, got {}", a.len()));
    }
    if a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err("weights must be positive".into());
    }
    let s: f64 = a.iter().sum();
    let tol = crate::operator::SUM_EQ_ONE_TOL;
    if allow_ge {
        if s < 1.0 - tol {
            return Err(format!("weights sum to {s}, need >= 1"));
        }
    } else if (s - 1.0).abs() > tol {
        return Err(format!("weights sum to {s}, need exactly 1"));
    }
    Ok(())
}

fn need_t_ge_1(q: &Params) -> std::result::Result<f64, String> {
    let t = req(q.t())?;
    if !(t >= 1.0) || !t.is_finite() {
        return Err(format!("t = {t} must satisfy t >= 1"));
    }
    Ok(t)
}

fn need_alpha_ge(q: &Params, lo: f64, what: &str) -> std::result::Result<f64, String> {
    let a = req(q.alpha())?;
    if !(a >= lo - 1e-12) || !a.is_finite() {
        return Err(format!("alpha = {a} must satisfy alpha >= {what}"));
    }
    Ok(a)
}

fn need_perm(v: &[usize], m: usize, name: &str) -> std::result::Result<(), String> {
    let mut seen = vec![false; m];
    if v.len() != m {
        return Err(format!("{name} must be a permutation of 1..={m}"));
    }
    for &x in v {
        if x == 0 || x > m || seen[x - 1] {
            return Err(format!("{name} must be a permutation of 1..={m}"));
        }
        seen[x - 1] = true;
    }
    Ok(())
}

fn need_beta(q: &Params, interior: bool) -> std::result::Result<f64, String> {
    let b = req(q.beta())?;
    let bad = if interior {
        !(b > 0.0 && b < 1.0)
    } else {
        !(0.0..=1.0).contains(&b)
    };
    if bad {
        let set = if interior { "(0, 1)" } else { "[0, 1]" };
        return Err(format!("beta = {b} must lie in {set}"));
    }
    Ok(b)
}

fn need_even(m: usize) -> std::result::Result<(), String> {
    if m.is_multiple_of(2) {
        Ok(())
    } else {
        Err(format!("m = {m} must be even"))
    }
}

fn need_odd(m: usize) -> std::result::Result<(), String> {
    if m % 2 == 1 {
        Ok(())
    } else {
        Err(format!("m = {m} must be odd"))
    }
}

fn rand_alphas(rng: &mut ChaCha8Rng, m: usize, allow_ge: bool) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let scale = if allow_ge && rng.gen_bool(0.5) { rng.gen_range(1.0..2.0) } else { 1.0 };
    let mut a: Vec<f64> = raw.iter().map(|x| x / s * scale).collect();
    if scale == 1.0 {
        // Put the rounding residue on the last weight so the sum is 1.
        let head: f64 = a[..m - 1].iter().sum();
        a[m - 1] = 1.0 - head;
    }
    a
}

fn rand_perm(rng: &mut ChaCha8Rng, m: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=m).collect();
    v.shuffle(rng);
    v
}

const BETA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn rand_radius(rng: &mut ChaCha8Rng) -> crate::registry::RadiusChoice {
    if rng.gen_bool(0.5) {
        crate::registry::RadiusChoice::Generalized
    } else {
        crate::registry::RadiusChoice::Joint
    }
}

fn base(rng: &mut ChaCha8Rng) -> Params {
    Params {
        radius: rand_radius(rng),
        ..Params::default()
    }
}

fn singletons(n: usize) -> Vec<usize> {
    vec![1; n]
}

// ---------------------------------------------------------------------------
// Shared chain bodies

/// `r(A o B) <= r((A o A)(B o B))^(1/2) <= ... <= r(AB)` with the four
/// variants selected by `kind`.
fn pair_chain(kind: u8, beta: f64, a: usize, b: usize) -> Segment {
    let ab = prod_of(&[a, b]);
    let ba = prod_of(&[b, a]);
    let lhs = r(had(vec![p(a), p(b)]));
    let sq = rp(SetExpr::prod(vec![had(vec![p(a), p(a)]), had(vec![p(b), p(b)])]), 0.5);
    let sq_pow = rp(SetExpr::prod(vec![p(a).hpow(2.0), p(b).hpow(2.0)]), 0.5);
    let mixed = rp(had(vec![ab.clone(), ba.clone()]), 0.5);
    let abab = |e: f64| rp(had(vec![ab.clone(), ab.clone()]), e);
    let baba = |e: f64| rp(had(vec![ba.clone(), ba.clone()]), e);
    let top = r(ab.clone());
    match kind {
        // Huang pair inequality.
        1 => le("qu", vec![lhs, top]),
        2 => le("Aud", vec![lhs, sq, top]),
        3 => le("HZ", vec![lhs, mixed, top]),
        5 => le("Sproved", vec![lhs, sq, abab(0.5), top]),
        6 => le(
            "P1",
            vec![lhs, sq, abab(beta / 2.0).times(baba((1.0 - beta) / 2.0)), top],
        ),
        7 => le("P2", vec![lhs, mixed, abab(0.25).times(baba(0.25)), top]),
        // Set form with Hadamard squares of single sets.
        16 => le(
            "P1_ess_j",
            vec![lhs, sq_pow, sq, abab(beta / 2.0).times(baba((1.0 - beta) / 2.0)), top],
        ),
        17 => le(
            "P2_ess_j",
            vec![
                lhs,
                mixed,
                rp(ab.clone().hpow(2.0), 0.25).times(rp(ba.clone().hpow(2.0), 0.25)),
                abab(0.25).times(baba(0.25)),
                top,
            ],
        ),
        // Variant with Hadamard powers 1/beta and 1/(1-beta).
        18 => le(
            "P3_ess_j",
            vec![
                lhs,
                mixed,
                rp(ab.clone().hpow(1.0 / beta), beta / 2.0)
                    .times(rp(ba.clone().hpow(1.0 / (1.0 - beta)), (1.0 - beta) / 2.0)),
                top,
            ],
        ),
        _ => unreachable!("unknown pair chain"),
    }
}

/// `(P_{11}^(a_1) o ... o P_{1m}^(a_m)) ... (P_{k1}^(a_1) o ...)`, grid index
/// `(i, j) -> i * m + j`.
fn grid_lhs(k: usize, m: usize, a: &[f64]) -> SetExpr {
    SetExpr::prod(
        (0..k)
            .map(|i| weighted((0..m).map(|j| p(i * m + j)).collect(), a))
            .collect(),
    )
}

/// Column product `P_{1j} ... P_{kj}`.
fn grid_col(k: usize, m: usize, j: usize) -> SetExpr {
    SetExpr::prod((0..k).map(|i| p(i * m + j)).collect())
}

fn grid_sum_col(k: usize, m: usize, j: usize) -> SetExpr {
    SetExpr::sum((0..k).map(|i| p(i * m + j)).collect())
}

fn grid_rhs(k: usize, m: usize, a: &[f64], n: usize) -> SetExpr {
    weighted((0..m).map(|j| grid_col(k, m, j).pow(n)).collect(), a)
}

fn prod_powers(terms: Vec<(SetExpr, f64)>, quantity: fn(SetExpr, f64) -> Term) -> Term {
    Term::product(terms.into_iter().map(|(e, a)| quantity(e, a)).collect())
}

/// The alternating word of length `len` over inputs `0..m` starting at
/// input `start`, with adjoints on every other factor beginning with the
/// first when `star_first` holds.
fn alternating(m: usize, start: usize, len: usize, star_first: bool) -> Vec<(usize, bool)> {
    (0..len)
        .map(|q| ((start + q) % m, (q % 2 == 0) == star_first))
        .collect()
}

/// `gamma(P_1^(a) o ... o P_m^(a))`.
fn gamma_mean(m: usize, alpha: f64) -> Term {
    g(SetExpr::hmean((0..m).map(p).collect(), alpha))
}

/// Chains that bound `gamma` of a Hadamard mean through alternating words.
fn alternating_chain(name: &str, m: usize, alpha: f64) -> Vec<Segment> {
    if m.is_multiple_of(2) {
        let rots: Vec<SetExpr> = (0..m).map(|j| word(&alternating(m, j, m, true))).collect();
        let x = word(&alternating(m, 0, m, true));
        let y = word(&alternating(m, 0, m, false));
        let y_rev: Vec<(usize, bool)> = alternating(m, 0, m, false)
            .into_iter()
            .rev()
            .map(|(i, s)| (i, !s))
            .collect();
        let y_rev = word(&y_rev);
        vec![
            le(
                name,
                vec![
                    gamma_mean(m, alpha),
                    rp(SetExpr::hmean(rots, alpha), 1.0 / m as f64),
                    rp(x.clone(), alpha / 2.0).times(rp(y.clone(), alpha / 2.0)),
                ],
            ),
            Segment::eq(format!("{name}/adjoint"), vec![r(y), r(y_rev)]),
        ]
    } else {
        let rots: Vec<SetExpr> = (0..m).map(|j| word(&alternating(m, j, 2 * m, true))).collect();
        let plain = word(&alternating(m, 0, 2 * m, false));
        let starred = word(&alternating(m, 0, 2 * m, true));
        vec![
            le(
                name,
                vec![
                    gamma_mean(m, alpha),
                    rp(SetExpr::hmean(rots, alpha), 1.0 / (2 * m) as f64),
                    rp(plain.clone(), alpha / 2.0),
                ],
            ),
            Segment::eq(format!("{name}/rotation"), vec![r(plain), r(starred)]),
        ]
    }
}

/// `gamma(mean) <= r(o pairs^(a))^(1/2) <= r(o Omega_j^(a))^(1/(2m)) <=
/// r(pair_1 ... pair_m)^(a/2)` for pairs of the form `P_x* P_y` or
/// `P_x P_y*`.
fn pair_rotation_chain(name: &str, m: usize, alpha: f64, pairs: &[Vec<(usize, bool)>]) -> Segment {
    let pair_exprs: Vec<SetExpr> = pairs.iter().map(|w| word(w)).collect();
    let omegas: Vec<SetExpr> = rotations(pairs)
        .into_iter()
        .map(|rot| word(&rot.concat()))
        .collect();
    let full = word(&pairs.concat());
    le(
        name,
        vec![
            gamma_mean(m, alpha),
            rp(SetExpr::hmean(pair_exprs, alpha), 0.5),
            rp(SetExpr::hmean(omegas, alpha), 1.0 / (2 * m) as f64),
            rp(full, alpha / 2.0),
        ],
    )
}

/// Pairs `P_{tau(j)}* P_{nu(j)}` (1-based permutations).
fn tau_nu_pairs(tau: &[usize], nu: &[usize]) -> Vec<Vec<(usize, bool)>> {
    tau.iter()
        .zip(nu)
        .map(|(&t, &n)| vec![(t - 1, true), (n - 1, false)])
        .collect()
}

/// The consecutive pairs of the word `P_1 P_2 P_3 ... P_m P_1 ... P_m` of
/// length `2m` (for odd `m`), starred on the first or second member.
fn odd_pairs(m: usize, star_first: bool) -> Vec<Vec<(usize, bool)>> {
    (0..m)
        .map(|j| {
            let a = (2 * j) % m;
            let b = (2 * j + 1) % m;
            vec![(a, star_first), (b, !star_first)]
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Finite level

fn f_pair_sizes(_: &Params) -> Result<Vec<usize>> {
    Ok(singletons(2))
}

fn f_pair_sample(rng: &mut ChaCha8Rng) -> Params {
    base(rng)
}

fn f_beta_sample(rng: &mut ChaCha8Rng) -> Params {
    Params {
        beta: Some(*BETA_GRID.choose(rng).expect("grid")),
        ..base(rng)
    }
}

fn f1_build(_: &Params) -> Result<Vec<Segment>> {
    Ok(vec![pair_chain(1, 0.0, 0, 1)])
}

fn f2_build(_: &Params) -> Result<Vec<Segment>> {
    Ok(vec![pair_chain(2, 0.0, 0, 1)])
}

fn f3_build(_: &Params) -> Result<Vec<Segment>> {
    Ok(vec![pair_chain(3, 0.0, 0, 1)])
}

fn f4_check(q: &Params) -> std::result::Result<(), String> {
    need_range("m", req(q.m())?, 1, 8)
}

fn f4_sizes(q: &Params) -> Result<Vec<usize>> {
    Ok(singletons(q.m()?))
}

fn f4_build(q: &Params) -> Result<Vec<Segment>> {
    let m = q.m()?;
    let idx: Vec<usize> = (0..m).collect();
    Ok(vec![le("Hu", vec![r(had(idx.iter().map(|&i| SetExpr::input(i)).collect())), r(prod_of(&idx))])])
}

fn f4_sample(rng: &mut ChaCha8Rng) -> Params {
    Params {
        m: Some(rng.gen_range(1..=4)),
        ..base(rng)
    }
}

fn f5_build(_: &Params) -> Result<Vec<Segment>> {
    Ok(vec![pair_chain(5, 0.0, 0, 1)])
}

fn beta_check(q: &Params) -> std::result::Result<(), String> {
    need_beta(q, false).map(|_| ())
}

fn beta_interior_check(q: &Params) -> std::result::Result<(), String> {
    need_beta(q, true).map(|_| ())
}

fn f6_build(q: &Params) -> Result<Vec<Segment>> {
    Ok(vec![pair_chain(6, q.beta()?, 0, 1)])
}

fn f7_build(_: &Params) -> Result<Vec<Segment>> {
    Ok(vec![pair_chain(7, 0.0, 0, 1)])
}

fn grid_check(q: &Params) -> std::result::Result<(), String> {
    let k = req(q.k())?;
    let m = req(q.m())?;
    need_range("k", k, 1, 4)?;
    need_range("m", m, 1, 4)?;
    need_alphas(q, m, true)
}

fn grid_sizes(q: &Params) -> Result<Vec<usize>> {
    Ok(singletons(q.k()? * q.m()?))
}

fn grid_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=3);
    let allow_ge = rng.gen_bool(0.5);
    Params {
        k: Some(rng.gen_range(1..=3)),
        m: Some(m),
        alphas: Some(rand_alphas(rng, m, allow_ge)),
        ..base(rng)
    }
}

fn f8_build(q: &Params) -> Result<Vec<Segment>> {
    let (k, m, a) = (q.k()?, q.m()?, q.alphas()?);
    let lhs = grid_lhs(k, m, a);
    let rhs = grid_rhs(k, m, a, 1);
    let cols: Vec<(SetExpr, f64)> = (0..m).map(|j| (grid_col(k, m, j), a[j])).collect();
    Ok(vec![
        Segment::new("norm2", Relation::EntrywiseLe, vec![Term::matrix(lhs.clone()), Term::matrix(rhs.clone())]),
        le(
            "spectral2",
            vec![
                Term::norm(lhs.clone(), 1.0),
                Term::norm(rhs.clone(), 1.0),
                prod_powers(cols.clone(), Term::norm),
            ],
        ),
        le("tri", vec![r(lhs), r(rhs), prod_powers(cols, Term::r)]),
    ])
}

fn mean_check(q: &Params) -> std::result::Result<(), String> {
    let m = req(q.m())?;
    need_range("m", m, 1, 6)?;
    need_alphas(q, m, true)?;
    need_t_ge_1(q).map(|_| ())
}

fn mean_sizes(q: &Params) -> Result<Vec<usize>> {
    Ok(singletons(q.m()?))
}

fn mean_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=3);
    let allow_ge = rng.gen_bool(0.5);
    Params {
        m: Some(m),
        alphas: Some(rand_alphas(rng, m, allow_ge)),
        t: Some(rng.gen_range(1.0..3.0)),
        ..base(rng)
    }
}

fn f9_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, a, t) = (q.m()?, q.alphas()?, q.t()?);
    let mean = weighted((0..m).map(p_of).collect(), a);
    let each: Vec<(SetExpr, f64)> = (0..m).map(|j| (p(j), a[j])).collect();
    let powered = SetExpr::prod((0..m).map(|j| p(j).hpow(t)).collect());
    let plain = prod_of(&(0..m).collect::<Vec<_>>());
    Ok(vec![
        le("gl1nrm", vec![Term::norm(mean.clone(), 1.0), prod_powers(each.clone(), Term::norm)]),
        le("gl1vecr", vec![r(mean), prod_powers(each, Term::r)]),
        Segment::new(
            "gl1t",
            Relation::EntrywiseLe,
            vec![Term::matrix(powered.clone()), Term::matrix(plain.clone().hpow(t))],
        ),
        le("gl1nt", vec![r(powered.clone()), rp(plain.clone(), t)]),
        le("gl1vecrt", vec![Term::norm(powered, 1.0), Term::norm(plain, t)]),
    ])
}

fn p_of(i: usize) -> SetExpr {
    p(i)
}

fn t_check(q: &Params) -> std::result::Result<(), String> {
    need_t_ge_1(q).map(|_| ())
}

fn t_sample(rng: &mut ChaCha8Rng) -> Params {
    Params {
        t: Some(rng.gen_range(1.0..3.0)),
        ..base(rng)
    }
}

fn one_input(_: &Params) -> Result<Vec<usize>> {
    Ok(singletons(1))
}

fn f10_build(q: &Params) -> Result<Vec<Segment>> {
    let t = q.t()?;
    let s = Term::single_sup(p_of(0), t - 1.0);
    Ok(vec![
        Segment::new(
            "norm_imp_t",
            Relation::EntrywiseLe,
            vec![Term::matrix(p(0).hpow(t)), s.clone().times(Term::matrix(p(0)))],
        ),
        le("dobra_t/norm", vec![Term::norm(p(0).hpow(t), 1.0), s.clone().times(Term::norm(p(0), 1.0))]),
        le("dobra_t", vec![r(p(0).hpow(t)), s.times(r(p(0)))]),
    ])
}

fn powers_check(q: &Params) -> std::result::Result<(), String> {
    let m = req(q.m())?;
    need_range("m", m, 1, 4)?;
    need_range("n", req(q.n())?, 1, 4)?;
    need_alphas(q, m, true)?;
    need_t_ge_1(q).map(|_| ())
}

fn powers_sizes(q: &Params) -> Result<Vec<usize>> {
    Ok(vec![2; q.m()?])
}

fn powers_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=2);
    let allow_ge = rng.gen_bool(0.5);
    Params {
        m: Some(m),
        n: Some(rng.gen_range(1..=2)),
        alphas: Some(rand_alphas(rng, m, allow_ge)),
        t: Some(rng.gen_range(1.0..2.5)),
        ..base(rng)
    }
}

/// Hadamard power mean of set powers with its product bound.
fn gsh_ref_segments(q: &Params, name: &str, hu_name: &str) -> Result<Vec<Segment>> {
    let (m, n, a, t) = (q.m()?, q.n()?, q.alphas()?, q.t()?);
    let mean = weighted((0..m).map(p_of).collect(), a);
    let mean_n = weighted((0..m).map(|j| p(j).pow(n)).collect(), a);
    let each: Vec<(SetExpr, f64)> = (0..m).map(|j| (p(j), a[j])).collect();
    let hu = SetExpr::hmean((0..m).map(p_of).collect(), 1.0 / m as f64);
    Ok(vec![
        le(name, vec![r(mean), rp(mean_n, 1.0 / n as f64), prod_powers(each, Term::r)]),
        le(hu_name, vec![r(hu), rp(prod_of(&(0..m).collect::<Vec<_>>()), 1.0 / m as f64)]),
        le(
            "folge",
            vec![r(p(0).hpow(t)), rp(p(0).pow(n).hpow(t), 1.0 / n as f64), rp(p(0), t)],
        ),
    ])
}

fn f11_build(q: &Params) -> Result<Vec<Segment>> {
    gsh_ref_segments(q, "gsh_ref", "Hu_ess")
}

fn f12_build(q: &Params) -> Result<Vec<Segment>> {
    let (k, m, a) = (q.k()?, q.m()?, q.alphas()?);
    let lhs = SetExpr::sum((0..k).map(|i| weighted((0..m).map(|j| p(i * m + j)).collect(), a)).collect());
    let rhs = weighted((0..m).map(|j| grid_sum_col(k, m, j)).collect(), a);
    Ok(vec![Segment::new("mitr2", Relation::EntrywiseLe, vec![Term::matrix(lhs), Term::matrix(rhs)])])
}

fn set_sizes_1x2(_: &Params) -> Result<Vec<usize>> {
    Ok(vec![2])
}

fn f13_build(_: &Params) -> Result<Vec<Segment>> {
    let s = p(0);
    let ss = SetExpr::prod(vec![s.clone().star(), s.clone()]);
    let ss2 = SetExpr::prod(vec![s.clone(), s.clone().star()]);
    Ok(vec![Segment::eq("tool", vec![Term::norm(s, 1.0), rp(ss, 0.5), rp(ss2, 0.5)])])
}

fn set_sizes_2x2(_: &Params) -> Result<Vec<usize>> {
    Ok(vec![2, 2])
}

fn interior_beta_sample(rng: &mut ChaCha8Rng) -> Params {
    Params {
        beta: Some(*[0.25, 0.5, 0.75].choose(rng).expect("grid")),
        ..base(rng)
    }
}

fn f14_build(q: &Params) -> Result<Vec<Segment>> {
    Ok(vec![pair_chain(18, q.beta()?, 0, 1)])
}

fn f15_build(q: &Params) -> Result<Vec<Segment>> {
    let m = q.m()?;
    let idx: Vec<usize> = (0..m).collect();
    let cyc: Vec<SetExpr> = rotations(&idx).iter().map(|w| prod_of(w)).collect();
    let inv = 1.0 / m as f64;
    let mut segs = vec![le(
        "genHuBfsP",
        vec![
            r(SetExpr::hmean(idx.iter().map(|&i| p(i)).collect(), inv)),
            rp(SetExpr::hmean(cyc, inv), inv),
            rp(prod_of(&idx), inv),
        ],
    )];
    if m >= 2 {
        segs.push(le(
            "Schep",
            vec![r(SetExpr::hmean(vec![p(0), p(1)], 0.5)), rp(prod_of(&[0, 1]), 0.5)],
        ));
    }
    Ok(segs)
}

fn f15_check(q: &Params) -> std::result::Result<(), String> {
    need_range("m", req(q.m())?, 1, 6)
}

fn f15_sample(rng: &mut ChaCha8Rng) -> Params {
    Params {
        m: Some(rng.gen_range(2..=4)),
        ..base(rng)
    }
}

fn f16_build(_: &Params) -> Result<Vec<Segment>> {
    let (a, b) = (p(0), p(1));
    let asb = SetExpr::prod(vec![a.clone().star(), b.clone()]);
    let bsa = SetExpr::prod(vec![b.clone().star(), a.clone()]);
    let abs = SetExpr::prod(vec![a.clone(), b.clone().star()]);
    Ok(vec![
        le(
            "Pep19",
            vec![
                Term::norm(SetExpr::hmean(vec![a, b], 0.5), 1.0),
                rp(SetExpr::hmean(vec![asb.clone(), bsa], 0.5), 0.5),
                rp(asb.clone(), 0.5),
            ],
        ),
        Segment::eq("Pep19/adjoint", vec![r(asb), r(abs)]),
    ])
}

// ---------------------------------------------------------------------------
// Essential level

fn e1_check(q: &Params) -> std::result::Result<(), String> {
    need_range("m", req(q.m())?, 1, 6)?;
    need_t_ge_1(q).map(|_| ())
}

fn e1_sizes(q: &Params) -> Result<Vec<usize>> {
    Ok(singletons(q.m()? + 1))
}

fn e1_sample(rng: &mut ChaCha8Rng) -> Params {
    Params {
        m: Some(rng.gen_range(1..=3)),
        t: Some(rng.gen_range(1.0..3.0)),
        ..base(rng)
    }
}

fn e1_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, t) = (q.m()?, q.t()?);
    let a = p(0);
    let idx: Vec<usize> = (1..=m).collect();
    let powered = SetExpr::prod(idx.iter().map(|&i| p(i).hpow(t)).collect());
    let plain = prod_of(&idx);
    let s = Term::single_sup(a.clone(), t - 1.0);
    Ok(vec![
        le("newH", vec![g(a.clone().hpow(t)), Term::gamma(a.clone(), t)]),
        le("new_ess", vec![r(a.clone().hpow(t)), rp(a.clone(), t)]),
        le("newH2", vec![g(powered.clone()), Term::gamma(plain.clone(), t)]),
        le("new_ess2", vec![r(powered), rp(plain, t)]),
        le("dobra_gamma", vec![g(a.clone().hpow(t)), s.clone().times(g(a.clone()))]),
        le("dobra_r_ess", vec![r(a.clone().hpow(t)), s.times(r(a))]),
    ])
}

fn e2_check(q: &Params) -> std::result::Result<(), String> {
    let m = req(q.m())?;
    need_range("m", m, 1, 6)?;
    need_alphas(q, m, true)
}

fn e2_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=3);
    let allow_ge = rng.gen_bool(0.5);
    Params {
        m: Some(m),
        alphas: Some(rand_alphas(rng, m, allow_ge)),
        ..base(rng)
    }
}

fn e2_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, a) = (q.m()?, q.alphas()?);
    let mean = weighted((0..m).map(p_of).collect(), a);
    let each: Vec<(SetExpr, f64)> = (0..m).map(|j| (p(j), a[j])).collect();
    Ok(vec![
        le("gl1meas_nonc", vec![g(mean.clone()), prod_powers(each.clone(), Term::gamma)]),
        le("gl1vecress", vec![r(mean), prod_powers(each, Term::r)]),
    ])
}

fn e3_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=3);
    let allow_ge = rng.gen_bool(0.5);
    Params {
        k: Some(rng.gen_range(1..=2)),
        m: Some(m),
        alphas: Some(rand_alphas(rng, m, allow_ge)),
        ..base(rng)
    }
}

fn e3_build(q: &Params) -> Result<Vec<Segment>> {
    let (k, m, a) = (q.k()?, q.m()?, q.alphas()?);
    let lhs = grid_lhs(k, m, a);
    let rhs = grid_rhs(k, m, a, 1);
    let cols: Vec<(SetExpr, f64)> = (0..m).map(|j| (grid_col(k, m, j), a[j])).collect();
    Ok(vec![
        le("meas_noncomp", vec![g(lhs.clone()), g(rhs.clone()), prod_powers(cols.clone(), Term::gamma)]),
        le("ess_spectral", vec![r(lhs), r(rhs), prod_powers(cols, Term::r)]),
    ])
}

fn e4_check(q: &Params) -> std::result::Result<(), String> {
    need_range("k", req(q.k())?, 1, 3)?;
    need_range("n", req(q.n())?, 1, 3)?;
    grid_check(q)?;
    need_t_ge_1(q).map(|_| ())
}

fn e4_sizes(q: &Params) -> Result<Vec<usize>> {
    Ok(vec![2; q.k()? * q.m()?])
}

fn e4_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=2);
    let allow_ge = rng.gen_bool(0.5);
    Params {
        k: Some(rng.gen_range(1..=2)),
        m: Some(m),
        n: Some(rng.gen_range(1..=2)),
        alphas: Some(rand_alphas(rng, m, allow_ge)),
        t: Some(rng.gen_range(1.0..2.5)),
        ..base(rng)
    }
}

fn e4_build(q: &Params) -> Result<Vec<Segment>> {
    let (k, m, n, a, t) = (q.k()?, q.m()?, q.n()?, q.alphas()?, q.t()?);
    let first_row = Params { m: Some(m), ..q.clone() };
    let mut segs = gsh_ref_segments(&first_row, "gsh_ref_ess", "Hu_ess")?;
    // The power chain in that group is replaced by the product form below.
    segs.pop();
    let cols: Vec<(SetExpr, f64)> = (0..m).map(|j| (grid_col(k, m, j), a[j])).collect();
    segs.push(le(
        "lepa_ess",
        vec![
            r(grid_lhs(k, m, a)),
            r(grid_rhs(k, m, a, 1)),
            rp(grid_rhs(k, m, a, n), 1.0 / n as f64),
            prod_powers(cols, Term::r),
        ],
    ));
    let col0 = grid_col(k, m, 0);
    segs.push(le(
        "with_t_ess",
        vec![
            r(SetExpr::prod((0..k).map(|i| p(i * m).hpow(t)).collect())),
            r(col0.clone().hpow(t)),
            rp(col0.clone().pow(n).hpow(t), 1.0 / n as f64),
            rp(col0, t),
        ],
    ));
    Ok(segs)
}

fn e5_check(q: &Params) -> std::result::Result<(), String> {
    need_range("n", req(q.n())?, 1, 3)?;
    grid_check(q)
}

fn e5_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=2);
    let allow_ge = rng.gen_bool(0.5);
    Params {
        k: Some(rng.gen_range(1..=2)),
        m: Some(m),
        n: Some(rng.gen_range(1..=2)),
        alphas: Some(rand_alphas(rng, m, allow_ge)),
        ..base(rng)
    }
}

fn e5_build(q: &Params) -> Result<Vec<Segment>> {
    let (k, m, n, a) = (q.k()?, q.m()?, q.n()?, q.alphas()?);
    let lhs = SetExpr::sum((0..k).map(|i| weighted((0..m).map(|j| p(i * m + j)).collect(), a)).collect());
    let mid = weighted((0..m).map(|j| grid_sum_col(k, m, j)).collect(), a);
    let mid_n = weighted((0..m).map(|j| grid_sum_col(k, m, j).pow(n)).collect(), a);
    let cols: Vec<(SetExpr, f64)> = (0..m).map(|j| (grid_sum_col(k, m, j), a[j])).collect();
    Ok(vec![le(
        "lepa2_ess",
        vec![r(lhs), r(mid), rp(mid_n, 1.0 / n as f64), prod_powers(cols, Term::r)],
    )])
}

fn e6_check(q: &Params) -> std::result::Result<(), String> {
    let a = req(q.alpha())?;
    let b = req(q.beta())?;
    if !(a >= 0.0 && b >= 0.0 && a + b >= 1.0 - 1e-12) {
        return Err(format!("need alpha, beta >= 0 and alpha + beta >= 1, got {a}, {b}"));
    }
    need_range("m", req(q.m())?, 1, 2)?;
    need_range("n", req(q.n())?, 1, 2)
}

fn e6_sizes(_: &Params) -> Result<Vec<usize>> {
    Ok(vec![2, 2, 2])
}

fn e6_sample(rng: &mut ChaCha8Rng) -> Params {
    let alpha = if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.0..1.5) };
    let lo = (1.0_f64 - alpha).max(0.0);
    let beta = if lo == 0.0 && rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(lo..lo + 1.0) };
    Params {
        alpha: Some(alpha),
        beta: Some(beta),
        m: Some(rng.gen_range(1..=2)),
        n: Some(rng.gen_range(1..=2)),
        ..base(rng)
    }
}

/// `S_{a,b}(X) = X^(a) o (X*)^(b)`.
fn sym(x: SetExpr, a: f64, b: f64) -> SetExpr {
    SetExpr::hadamard(vec![(x.clone(), a), (x.star(), b)])
}

fn e6_build(q: &Params) -> Result<Vec<Segment>> {
    let (a, b, m, n) = (q.alpha()?, q.beta()?, q.m()?, q.n()?);
    let inv_n = 1.0 / n as f64;
    // Input 0 is Psi; inputs 1 and 2 are Psi_1 and Psi_2.
    let idx: Vec<usize> = (1..=m).collect();
    let fwd = prod_of(&idx);
    let rev = prod_of(&idx.iter().rev().copied().collect::<Vec<_>>());
    let s_prod = SetExpr::prod(idx.iter().map(|&i| sym(p(i), a, b)).collect());
    let mix = |e: usize| {
        SetExpr::hadamard(vec![(fwd.clone().pow(e), a), (rev.clone().star().pow(e), b)])
    };
    let sum = SetExpr::sum(vec![p(1), p(2)]);
    let f12 = prod_of(&[1, 2]);
    let f21 = prod_of(&[2, 1]);
    let mix2 = |e: usize| {
        SetExpr::hadamard(vec![(f12.clone().pow(e), a), (f21.clone().star().pow(e), b)])
    };
    let mut finish = Vec::new();
    for q in 0..=n {
        let e = 1usize << q;
        finish.push(rp(sym(p(0).pow(e), a, b), 1.0 / e as f64));
    }
    finish.push(rp(p(0), a + b));
    Ok(vec![
        le(
            "geom_sym_prva",
            vec![r(s_prod), r(mix(1)), rp(mix(n), inv_n), rp(fwd.clone(), a).times(rp(rev, b))],
        ),
        le(
            "geom_sym_druga",
            vec![r(sym(p(0), a, b)), rp(sym(p(0).pow(n), a, b), inv_n), rp(p(0), a + b)],
        ),
        le(
            "geom_sym_treca",
            vec![
                r(SetExpr::sum(vec![sym(p(1), a, b), sym(p(2), a, b)])),
                r(sym(sum.clone(), a, b)),
                rp(sym(sum.clone().pow(n), a, b), inv_n),
                rp(sum, a + b),
            ],
        ),
        le(
            "geom_sym_cetvrta",
            vec![
                r(SetExpr::prod(vec![sym(p(1), a, b), sym(p(2), a, b)])),
                r(mix2(1)),
                rp(mix2(n), inv_n),
                rp(f12, a + b),
            ],
        ),
        le("finish", finish),
    ])
}

fn e7_check(q: &Params) -> std::result::Result<(), String> {
    need_range("m", req(q.m())?, 1, 4)?;
    need_range("n", req(q.n())?, 1, 3)?;
    need_alpha_ge(q, 1.0, "1").map(|_| ())
}

fn e7_sample(rng: &mut ChaCha8Rng) -> Params {
    Params {
        m: Some(rng.gen_range(2..=3)),
        n: Some(rng.gen_range(1..=2)),
        alpha: Some(rng.gen_range(1.0..3.0)),
        ..base(rng)
    }
}

fn e7_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, n, a) = (q.m()?, q.n()?, q.alpha()?);
    let inv_n = 1.0 / n as f64;
    let copies = |x: SetExpr| had(vec![x; m]);
    Ok(vec![
        le(
            "tre",
            vec![
                r(p(0).hpow(m as f64)),
                r(copies(p(0))),
                rp(copies(p(0).pow(n)), inv_n),
                rp(p(0), m as f64),
            ],
        ),
        le(
            "tre1",
            vec![
                r(p(0).hpow(a)),
                r(SetExpr::hadamard(vec![(p(0), a - 1.0), (p(0), 1.0)])),
                rp(SetExpr::hadamard(vec![(p(0).pow(n), a - 1.0), (p(0).pow(n), 1.0)]), inv_n),
                rp(p(0), a),
            ],
        ),
    ])
}

fn e8_check(q: &Params) -> std::result::Result<(), String> {
    let m = req(q.m())?;
    need_range("m", m, 1, 4)?;
    need_range("n", req(q.n())?, 1, 3)?;
    need_alpha_ge(q, 1.0 / m as f64, "1/m").map(|_| ())
}

fn e8_sizes(q: &Params) -> Result<Vec<usize>> {
    let m = q.m()?;
    Ok(vec![if m <= 2 { 2 } else { 1 }; m])
}

fn e8_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=3);
    let alpha = if m == 1 || rng.gen_bool(0.5) {
        rng.gen_range(1.0..2.0)
    } else {
        rng.gen_range(1.0 / m as f64..1.0)
    };
    Params {
        m: Some(m),
        n: Some(if m == 3 { 1 } else { rng.gen_range(1..=2) }),
        alpha: Some(alpha),
        ..base(rng)
    }
}

fn e8_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, n, a) = (q.m()?, q.n()?, q.alpha()?);
    let mf = m as f64;
    let idx: Vec<usize> = (0..m).collect();
    let phis: Vec<SetExpr> = rotations(&idx).iter().map(|w| prod_of(w)).collect();
    let phis_n: Vec<SetExpr> = phis.iter().map(|x| x.clone().pow(n)).collect();
    let top = prod_of(&idx);
    let lhs = r(SetExpr::hmean(idx.iter().map(|&i| p(i)).collect(), a));
    let phi_mean = rp(SetExpr::hmean(phis.clone(), a), 1.0 / mf);
    let phi_mean_n = rp(SetExpr::hmean(phis_n.clone(), a), 1.0 / (mf * n as f64));
    let prod_am = SetExpr::prod(idx.iter().map(|&i| p(i).hpow(a * mf)).collect());
    let mut segs = vec![
        le("ineqx", vec![lhs.clone(), phi_mean.clone(), phi_mean_n.clone(), rp(top.clone(), a)]),
        le(
            "ineqx2",
            vec![
                lhs.clone(),
                rp(prod_am.clone(), 1.0 / mf),
                rp(top.clone().hpow(a * mf), 1.0 / mf),
                rp(top.clone().pow(n).hpow(a * mf), 1.0 / (n as f64 * mf)),
                rp(top.clone(), a),
            ],
        ),
    ];
    if a >= 1.0 {
        let sigmas: Vec<SetExpr> = rotations(&idx)
            .iter()
            .map(|w| SetExpr::prod(w.iter().map(|&i| p(i).hpow(a * mf)).collect()))
            .collect();
        segs.push(le(
            "xyz",
            vec![
                lhs.clone(),
                phi_mean,
                phi_mean_n,
                Term::product(
                    phis_n
                        .iter()
                        .map(|x| rp(x.clone().hpow(mf), a / (mf * mf * n as f64)))
                        .collect(),
                ),
                rp(top.clone(), a),
            ],
        ));
        segs.push(le(
            "kraj",
            vec![
                lhs,
                rp(SetExpr::hmean(sigmas.clone(), 1.0 / mf), 1.0 / mf),
                rp(
                    SetExpr::hmean(sigmas.iter().map(|x| x.clone().pow(n)).collect(), 1.0 / mf),
                    1.0 / (mf * n as f64),
                ),
                rp(prod_am, 1.0 / mf),
                rp(top.clone().hpow(a * mf), 1.0 / mf),
                rp(top.clone().pow(n).hpow(a * mf), 1.0 / (n as f64 * mf)),
                rp(top, a),
            ],
        ));
    }
    Ok(segs)
}

fn e9_build(q: &Params) -> Result<Vec<Segment>> {
    let beta = q.beta()?;
    let interior = if beta > 0.0 && beta < 1.0 { beta } else { 0.5 };
    Ok(vec![pair_chain(16, beta, 0, 1), pair_chain(17, 0.0, 0, 1), pair_chain(18, interior, 0, 1)])
}

fn e10_build(q: &Params) -> Result<Vec<Segment>> {
    let beta = q.beta()?;
    let interior = if beta > 0.0 && beta < 1.0 { beta } else { 0.5 };
    let mut p1 = pair_chain(6, beta, 0, 1);
    p1.name = "P1_ess".into();
    let mut p2 = pair_chain(18, interior, 0, 1);
    p2.name = "P2_ess".into();
    Ok(vec![p1, p2])
}

fn e11_check(q: &Params) -> std::result::Result<(), String> {
    need_alpha_ge(q, 0.5, "1/2").map(|_| ())
}

fn e11_sizes(_: &Params) -> Result<Vec<usize>> {
    Ok(vec![2, 1])
}

fn half_alpha_sample(rng: &mut ChaCha8Rng) -> Params {
    Params {
        alpha: Some(rng.gen_range(0.5..2.0)),
        ..base(rng)
    }
}

fn e11_build(q: &Params) -> Result<Vec<Segment>> {
    let a = q.alpha()?;
    let hund = |x: SetExpr, name: &str| {
        le(
            name,
            vec![
                r(SetExpr::hmean(vec![x.clone(), x.clone().star()], a)),
                r(SetExpr::hmean(vec![x.clone(), x.clone()], a)),
                rp(x, 2.0 * a),
            ],
        )
    };
    Ok(vec![hund(p(0), "hund"), hund(p(1), "hund_cor")])
}

fn e12_build(_: &Params) -> Result<Vec<Segment>> {
    let t = p(0);
    let tst = SetExpr::prod(vec![t.clone().star(), t.clone()]);
    let tts = SetExpr::prod(vec![t.clone(), t.clone().star()]);
    let s = p(1);
    let sss = SetExpr::prod(vec![s.clone().star(), s.clone()]);
    let sss2 = SetExpr::prod(vec![s.clone(), s.clone().star()]);
    Ok(vec![
        Segment::eq(
            "Hilbert",
            vec![r(tst.clone()), r(tts.clone()), g(tst.clone()), g(tts), Term::gamma(t.clone(), 2.0)],
        ),
        Segment::eq("hyponormal", vec![r(tst.clone()), g(tst)]),
        Segment::eq(
            "tool_ess",
            vec![g(s.clone()), rp(sss, 0.5), rp(sss2, 0.5), g(s.star())],
        ),
    ])
}

fn alt_check(q: &Params) -> std::result::Result<(), String> {
    let m = req(q.m())?;
    need_range("m", m, 1, 6)?;
    need_alpha_ge(q, 1.0 / m as f64, "1/m").map(|_| ())
}

fn alt_sizes(q: &Params) -> Result<Vec<usize>> {
    let m = q.m()?;
    Ok(vec![if m <= 2 { 2 } else { 1 }; m])
}

fn e13_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=4);
    Params {
        m: Some(m),
        alpha: Some(1.0 / m as f64),
        ..base(rng)
    }
}

fn e13_check(q: &Params) -> std::result::Result<(), String> {
    let m = req(q.m())?;
    need_range("m", m, 1, 6)?;
    let a = req(q.alpha())?;
    if (a - 1.0 / m as f64).abs() > 1e-12 {
        return Err(format!("alpha = {a} must equal 1/m"));
    }
    Ok(())
}

fn e13_build(q: &Params) -> Result<Vec<Segment>> {
    let m = q.m()?;
    Ok(alternating_chain(if m % 2 == 0 { "ess_ineq1" } else { "ess_ineq2" }, m, 1.0 / m as f64))
}

fn e14_sizes(_: &Params) -> Result<Vec<usize>> {
    Ok(vec![1, 1, 2, 2])
}

/// `gamma(X^(a) o Y^(a)) <= r((X*Y)^(a) o (Y*X)^(a))^(1/2) <= r(X*Y)^a = r(XY*)^a`.
fn star_pair(name: &str, x: SetExpr, y: SetExpr, a: f64, with_same: bool) -> Vec<Segment> {
    let xsy = SetExpr::prod(vec![x.clone().star(), y.clone()]);
    let ysx = SetExpr::prod(vec![y.clone().star(), x.clone()]);
    let xys = SetExpr::prod(vec![x.clone(), y.clone().star()]);
    let mut terms = vec![
        g(SetExpr::hmean(vec![x, y], a)),
        rp(SetExpr::hmean(vec![xsy.clone(), ysx], a), 0.5),
    ];
    if with_same {
        terms.push(rp(SetExpr::hmean(vec![xsy.clone(), xsy.clone()], a), 0.5));
    }
    terms.push(rp(xsy.clone(), a));
    vec![le(name, terms), Segment::eq(format!("{name}/adjoint"), vec![r(xsy), r(xys)])]
}

fn e14_build(_: &Params) -> Result<Vec<Segment>> {
    let mut segs = star_pair("ess_star", p(0), p(1), 0.5, false);
    segs.extend(star_pair("ess_star/sets", p(2), p(3), 0.5, false));
    Ok(segs)
}

fn e15_sizes(q: &Params) -> Result<Vec<usize>> {
    let mut v = alt_sizes(q)?;
    v.extend([2, 2]);
    Ok(v)
}

fn e15_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = rng.gen_range(1..=4);
    Params {
        m: Some(m),
        alpha: Some(rng.gen_range(1.0 / m as f64..1.5)),
        ..base(rng)
    }
}

fn e15_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, a) = (q.m()?, q.alpha()?);
    let mut segs = alternating_chain(if m % 2 == 0 { "alpha1_ess" } else { "alpha2_ess" }, m, a);
    if a >= 0.5 {
        segs.extend(star_pair("dobra_ess10", p(m), p(m + 1), a, false));
        segs.extend(star_pair("matrix", p(m), p(m + 1), a, true));
    }
    Ok(segs)
}

fn odd_check(q: &Params) -> std::result::Result<(), String> {
    let m = req(q.m())?;
    need_odd(m)?;
    alt_check(q)
}

fn odd_sample(rng: &mut ChaCha8Rng) -> Params {
    let m = *[1usize, 3, 3, 5].choose(rng).expect("choices");
    Params {
        m: Some(m),
        alpha: Some(1.0 / m as f64),
        ..base(rng)
    }
}

fn odd_alpha_sample(rng: &mut ChaCha8Rng) -> Params {
    let mut q = odd_sample(rng);
    let m = q.m.expect("m set");
    q.alpha = Some(rng.gen_range(1.0 / m as f64..1.5));
    q
}

fn odd_sizes(q: &Params) -> Result<Vec<usize>> {
    Ok(singletons(q.m()?))
}

fn e16_build(q: &Params) -> Result<Vec<Segment>> {
    let m = q.m()?;
    Ok(vec![pair_rotation_chain("laufen_ess", m, 1.0 / m as f64, &odd_pairs(m, false))])
}

fn e16_check(q: &Params) -> std::result::Result<(), String> {
    odd_check(q)?;
    e13_check(q)
}

fn e17_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, a) = (q.m()?, q.alpha()?);
    Ok(vec![pair_rotation_chain("urlaub_ess", m, a, &odd_pairs(m, false))])
}

fn e18_check(q: &Params) -> std::result::Result<(), String> {
    need_alpha_ge(q, 1.0 / 3.0, "1/3").map(|_| ())
}

fn e18_sample(rng: &mut ChaCha8Rng) -> Params {
    Params {
        alpha: Some(rng.gen_range(1.0 / 3.0..1.5)),
        ..base(rng)
    }
}

fn e18_build(q: &Params) -> Result<Vec<Segment>> {
    let chain = |name: &str, a: f64| {
        let (x, y) = (p(0), p(1));
        let w = |items: &[(usize, bool)]| word(items);
        le(
            name,
            vec![
                g(SetExpr::hmean(vec![x.clone(), y.clone().star(), x.clone()], a)),
                rp(
                    SetExpr::hmean(
                        vec![w(&[(0, true), (1, true)]), w(&[(0, true), (0, false)]), w(&[(1, false), (0, false)])],
                        a,
                    ),
                    0.5,
                ),
                rp(
                    SetExpr::hmean(
                        vec![
                            w(&[(0, true), (1, true), (0, true), (0, false), (1, false), (0, false)]),
                            w(&[(0, true), (0, false), (1, false), (0, false), (0, true), (1, true)]),
                            w(&[(1, false), (0, false), (0, true), (1, true), (0, true), (0, false)]),
                        ],
                        a,
                    ),
                    1.0 / 6.0,
                ),
                Term::gamma(w(&[(0, false), (1, false), (0, false)]), a),
            ],
        )
    };
    Ok(vec![chain("henne_ess", 1.0 / 3.0), chain("huhn_ess", q.alpha()?)])
}

fn perm_check(q: &Params, even: bool, need_nu: bool, alpha_lo: f64) -> std::result::Result<(), String> {
    let m = req(q.m())?;
    need_range("m", m, 1, 8)?;
    if even {
        need_even(m)?;
    }
    need_perm(req(q.tau())?, m, "tau")?;
    if need_nu {
        need_perm(req(q.nu())?, m, "nu")?;
    }
    need_alpha_ge(q, alpha_lo / m as f64, if alpha_lo == 2.0 { "2/m" } else { "1/m" }).map(|_| ())
}

fn e19_check(q: &Params) -> std::result::Result<(), String> {
    perm_check(q, true, true, 1.0)
}

fn e20_check(q: &Params) -> std::result::Result<(), String> {
    perm_check(q, true, false, 2.0)
}

fn e21_check(q: &Params) -> std::result::Result<(), String> {
    perm_check(q, false, true, 1.0)
}

fn perm_sample(rng: &mut ChaCha8Rng, even: bool, alpha_lo: f64) -> Params {
    let m = if even { *[2usize, 4].choose(rng).expect("choices") } else { rng.gen_range(1..=5) };
    let lo = alpha_lo / m as f64;
    Params {
        m: Some(m),
        alpha: Some(if rng.gen_bool(0.3) { lo } else { rng.gen_range(lo..lo + 1.0) }),
        tau: Some(rand_perm(rng, m)),
        nu: Some(rand_perm(rng, m)),
        ..base(rng)
    }
}

fn e19_sample(rng: &mut ChaCha8Rng) -> Params {
    perm_sample(rng, true, 1.0)
}

fn e20_sample(rng: &mut ChaCha8Rng) -> Params {
    let mut q = perm_sample(rng, true, 2.0);
    q.nu = None;
    q
}

fn e21_sample(rng: &mut ChaCha8Rng) -> Params {
    perm_sample(rng, false, 1.0)
}

/// `Sigma_j = P_{tau(2j-1)}* P_{tau(2j)}` followed by their adjoints.
fn tau_sigmas(tau: &[usize]) -> Vec<Vec<(usize, bool)>> {
    let half: Vec<Vec<(usize, bool)>> = tau
        .chunks(2)
        .map(|c| vec![(c[0] - 1, true), (c[1] - 1, false)])
        .collect();
    let adj: Vec<Vec<(usize, bool)>> = tau
        .chunks(2)
        .map(|c| vec![(c[1] - 1, true), (c[0] - 1, false)])
        .collect();
    half.into_iter().chain(adj).collect()
}

fn e19_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, tau, nu) = (q.m()?, q.tau()?, q.nu()?);
    let sigmas = tau_sigmas(tau);
    let ordered: Vec<Vec<(usize, bool)>> = nu.iter().map(|&v| sigmas[v - 1].clone()).collect();
    let sig_exprs: Vec<SetExpr> = sigmas.iter().map(|w| word(w)).collect();
    let chain = |name: &str, a: f64| {
        let omegas: Vec<SetExpr> = rotations(&ordered).into_iter().map(|r| word(&r.concat())).collect();
        le(
            name,
            vec![
                gamma_mean(m, a),
                rp(SetExpr::hmean(sig_exprs.clone(), a), 0.5),
                rp(SetExpr::hmean(omegas, a), 1.0 / (2 * m) as f64),
                rp(word(&ordered.concat()), a / 2.0),
            ],
        )
    };
    Ok(vec![chain("ziv1", 1.0 / m as f64), chain("ziv2", q.alpha()?)])
}

fn e20_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, tau, a) = (q.m()?, q.tau()?, q.alpha()?);
    let sigmas = tau_sigmas(tau);
    let half = &sigmas[..m / 2];
    let thetas: Vec<SetExpr> = rotations(half).into_iter().map(|r| word(&r.concat())).collect();
    Ok(vec![le(
        "zivalska_ess2",
        vec![
            gamma_mean(m, a),
            rp(SetExpr::hmean(sigmas.iter().map(|w| word(w)).collect(), a), 0.5),
            r(SetExpr::hmean(half.iter().map(|w| word(w)).collect(), a)),
            rp(SetExpr::hmean(thetas, a), 2.0 / m as f64),
            rp(word(&half.concat()), a),
        ],
    )])
}

fn e21_build(q: &Params) -> Result<Vec<Segment>> {
    let (m, tau, nu, a) = (q.m()?, q.tau()?, q.nu()?, q.alpha()?);
    let pairs = tau_nu_pairs(tau, nu);
    let mut segs = vec![
        pair_rotation_chain("ziv3", m, 1.0 / m as f64, &pairs),
        pair_rotation_chain("ziv4", m, a, &pairs),
    ];
    if m % 2 == 1 {
        let odd = odd_pairs(m, true);
        let flipped = word(&odd_pairs(m, false).concat());
        for (name, alpha) in [("sonce", 1.0 / m as f64), ("veter", a)] {
            let mut s = pair_rotation_chain(name, m, alpha, &odd);
            s.terms.push(rp(flipped.clone(), alpha / 2.0));
            segs.push(Segment::le(name, s.terms[..s.terms.len() - 1].to_vec()));
            let n = s.terms.len();
            segs.push(Segment::eq(format!("{name}/rotation"), s.terms[n - 2..].to_vec()));
        }
    }
    Ok(segs)
}

// ---------------------------------------------------------------------------

macro_rules! entry {
    ($id:expr, $level:ident, $title:expr, [$($a:expr),*], $hyp:expr, $sizes:expr, $check:expr, $build:expr, $sample:expr) => {
        ChainSpec {
            id: $id,
            level: LevelKind::$level,
            title: $title,
            anchors: &[$($a),*],
            hypothesis: $hyp,
            vectors: false,
            sizes: $sizes,
            check: $check,
            build: $build,
            sample: $sample,
        }
    };
}

fn no_check(_: &Params) -> std::result::Result<(), String> {
    ok()
}

static CATALOG: [ChainSpec; 37] = [
    entry!("F1", Finite, "Hadamard product versus ordinary product", ["qu"], "none", f_pair_sizes, no_check, f1_build, f_pair_sample),
    entry!("F2", Finite, "Hadamard squares bound", ["Aud"], "none", f_pair_sizes, no_check, f2_build, f_pair_sample),
    entry!("F3", Finite, "Mixed products bound", ["HZ"], "none", f_pair_sizes, no_check, f3_build, f_pair_sample),
    entry!("F4", Finite, "Hadamard product of m matrices", ["Hu"], "m >= 1", f4_sizes, f4_check, f4_build, f4_sample),
    entry!("F5", Finite, "Four-term pair chain", ["Sproved"], "none", f_pair_sizes, no_check, f5_build, f_pair_sample),
    entry!("F6", Finite, "Pair chain with weight beta", ["P1"], "beta in [0, 1]", f_pair_sizes, beta_check, f6_build, f_beta_sample),
    entry!("F7", Finite, "Pair chain through AB o BA", ["P2"], "none", f_pair_sizes, no_check, f7_build, f_pair_sample),
    entry!("F8", Finite, "Grid of weighted Hadamard products", ["norm2", "spectral2", "tri"], "weights positive with sum 1, or sum >= 1 for matrices", grid_sizes, grid_check, f8_build, grid_sample),
    entry!("F9", Finite, "Weighted Hadamard means and Hadamard powers", ["gl1nrm", "gl1vecr", "gl1t", "gl1nt", "gl1vecrt"], "weights positive with sum >= 1; t >= 1", mean_sizes, mean_check, f9_build, mean_sample),
    entry!("F10", Finite, "Hadamard powers versus the largest entry", ["norm_imp_t", "dobra_t"], "t >= 1", one_input, t_check, f10_build, t_sample),
    entry!("F11", Finite, "Set radii of Hadamard means and set powers", ["gsh_ref", "Hu_ess", "folge"], "weights positive with sum >= 1; t >= 1; n >= 1", powers_sizes, powers_check, f11_build, powers_sample),
    ChainSpec {
        vectors: true,
        ..entry!("F12", Finite, "Sums of weighted products of nonnegative vectors", ["mitr2"], "weights positive with sum >= 1", grid_sizes, grid_check, f12_build, grid_sample)
    },
    entry!("F13", Finite, "Norm of a set through its Gram sets", ["tool"], "none", set_sizes_1x2, no_check, f13_build, f_pair_sample),
    entry!("F14", Finite, "Pair chain with Hadamard powers 1/beta and 1/(1-beta)", ["P3_ess_j"], "beta in (0, 1)", set_sizes_2x2, beta_interior_check, f14_build, interior_beta_sample),
    entry!("F15", Finite, "Cyclic products bound for Hadamard geometric means", ["genHuBfsP", "Schep"], "m >= 1", f4_sizes, f15_check, f15_build, f15_sample),
    entry!("F16", Finite, "Norm of a Hadamard geometric mean on l2", ["Pep19"], "none", f_pair_sizes, no_check, f16_build, f_pair_sample),
    entry!("E1", Essential, "gamma and rho_ess of Hadamard powers", ["newH", "new_ess", "newH2", "new_ess2", "dobra_gamma", "dobra_r_ess"], "t >= 1", e1_sizes, e1_check, e1_build, e1_sample),
    entry!("E2", Essential, "Weighted Hadamard means of single operators", ["gl1meas_nonc", "gl1vecress"], "weights positive with sum >= 1", mean_sizes, e2_check, e2_build, e2_sample),
    entry!("E3", Essential, "Grid of weighted Hadamard products", ["meas_noncomp", "ess_spectral"], "weights positive with sum >= 1", grid_sizes, grid_check, e3_build, e3_sample),
    entry!("E4", Essential, "Set radii of Hadamard means, products and powers", ["gsh_ref_ess", "Hu_ess", "lepa_ess", "with_t_ess"], "weights positive with sum >= 1; t >= 1; n >= 1", e4_sizes, e4_check, e4_build, e4_sample),
    entry!("E5", Essential, "Sums of weighted Hadamard products of sets", ["lepa2_ess"], "weights positive with sum >= 1; n >= 1", e4_sizes, e5_check, e5_build, e5_sample),
    entry!("E6", Essential, "Weighted geometric symmetrizations", ["geom_sym_prva", "geom_sym_druga", "geom_sym_treca", "geom_sym_cetvrta", "finish"], "alpha, beta >= 0 with alpha + beta >= 1", e6_sizes, e6_check, e6_build, e6_sample),
    entry!("E7", Essential, "Integer and real Hadamard powers of a set", ["tre", "tre1"], "m >= 1; alpha >= 1", set_sizes_1x2, e7_check, e7_build, e7_sample),
    entry!("E8", Essential, "Cyclic products with Hadamard weight alpha", ["ineqx", "ineqx2", "xyz", "kraj"], "alpha >= 1/m; the last two chains need alpha >= 1", e8_sizes, e8_check, e8_build, e8_sample),
    entry!("E9", Essential, "Pair chains for sets", ["P1_ess_j", "P2_ess_j", "P3_ess_j"], "beta in [0, 1]", set_sizes_2x2, beta_check, e9_build, f_beta_sample),
    entry!("E10", Essential, "Pair chains for single operators", ["P1_ess", "P2_ess"], "beta in [0, 1]", f_pair_sizes, beta_check, e10_build, f_beta_sample),
    entry!("E11", Essential, "Hadamard mean of a set with its adjoint", ["hund", "hund_cor"], "alpha >= 1/2", e11_sizes, e11_check, e11_build, half_alpha_sample),
    entry!("E12", Essential, "Hilbert space identities for gamma", ["Hilbert", "tool_ess"], "none", set_sizes_12, no_check, e12_build, f_pair_sample),
    entry!("E13", Essential, "gamma of Hadamard geometric means through alternating words", ["ess_ineq1", "ess_ineq2"], "alpha = 1/m", alt_sizes, e13_check, e13_build, e13_sample),
    entry!("E14", Essential, "gamma of a Hadamard geometric mean of two", ["ess_star"], "none", e14_sizes, no_check, e14_build, f_pair_sample),
    entry!("E15", Essential, "Alternating words with Hadamard weight alpha", ["alpha1_ess", "alpha2_ess", "dobra_ess10", "matrix"], "alpha >= 1/m; the pair chains need alpha >= 1/2", e15_sizes, alt_check, e15_build, e15_sample),
    entry!("E16", Essential, "Odd number of factors, rotated pairs", ["laufen_ess"], "m odd; alpha = 1/m", odd_sizes, e16_check, e16_build, odd_sample),
    entry!("E17", Essential, "Odd number of factors, rotated pairs, weight alpha", ["urlaub_ess"], "m odd; alpha >= 1/m", odd_sizes, odd_check, e17_build, odd_alpha_sample),
    entry!("E18", Essential, "Three-factor Hadamard products with an adjoint", ["henne_ess", "huhn_ess"], "alpha >= 1/3", f_pair_sizes, e18_check, e18_build, e18_sample),
    entry!("E19", Essential, "Permuted pairs, even m", ["ziv1", "ziv2"], "m even; tau, nu permutations of 1..m; alpha >= 1/m", odd_sizes, e19_check, e19_build, e19_sample),
    entry!("E20", Essential, "Permuted pairs, even m, half products", ["zivalska_ess2"], "m even; tau a permutation of 1..m; alpha >= 2/m", odd_sizes, e20_check, e20_build, e20_sample),
    entry!("E21", Essential, "Permuted pairs, any m", ["ziv3", "ziv4", "sonce", "veter"], "tau, nu permutations of 1..m; alpha >= 1/m", odd_sizes, e21_check, e21_build, e21_sample),
];

fn set_sizes_12(_: &Params) -> Result<Vec<usize>> {
    Ok(vec![1, 2])
}

/// The full catalog.
pub fn registry() -> &'static [ChainSpec] {
    &CATALOG
}

/// Looks up an entry by id.
pub fn find(id: &str) -> Result<&'static ChainSpec> {
    CATALOG
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::UnknownChain(id.to_string()))
}

/// Entries that exist only to exercise failure handling.
pub mod testing {
    use super::*;

    fn broken_build(_: &Params) -> Result<Vec<Segment>> {
        // Deliberately reversed pair inequality.
        Ok(vec![le("reversed", vec![r(prod_of(&[0, 1])), r(had(vec![p(0), p(1)]))])])
    }

    static BROKEN: [ChainSpec; 1] = [entry!(
        "test/broken",
        Finite,
        "Reversed pair inequality (fails on generic inputs)",
        [],
        "none",
        f_pair_sizes,
        no_check,
        broken_build,
        f_pair_sample
    )];

    pub fn test_chains() -> &'static [ChainSpec] {
        &BROKEN
    }
}
