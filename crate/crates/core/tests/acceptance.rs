//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p schur-radii --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schur_radii::joint::{gen_radius_lb_at, gripenberg_bracket, JointOptions};
use schur_radii::operator::{FiniteMatrix, OperatorFamily, OperatorSet, WeightSequence};
use schur_radii::registry::{registry, run_ensemble, Budgets, EnsembleConfig, EnsembleKind, LevelKind};
use schur_radii::spectral::essential::{
    essential_spectral_radius, gamma_via_star, hausdorff_mnc, oracle_ess_radius, EssOptions,
};
use schur_radii::spectral::{spectral_radius, Bracket, FiniteOptions};

const SWEEP_SEED: u64 = 42;
const FINITE_TRIALS: u64 = 200;
const FINITE_BUDGET: Duration = Duration::from_secs(300);
const ESSENTIAL_TRIALS: u64 = 50;
const MAX_INCONCLUSIVE_FRACTION: f64 = 0.10;
const GOLDEN_DELTA: f64 = 1e-6;
const GOLDEN_TIME: Duration = Duration::from_secs(1);
const GAMMA_TOL: f64 = 1e-6;
const PERRON_TOL: f64 = 1e-10;
/// Two evaluations of the same radius over the same word set may differ
/// only by the bracket width and the association order of the products.
const IDENTITY_REL_TOL: f64 = 1e-9;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(label: &str) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    for (i, b) in label.bytes().enumerate() {
        seed[i % 32] ^= b;
    }
    ChaCha8Rng::from_seed(seed)
}

// ---------------------------------------------------------------- sweeps

struct SweepTotals {
    trials: u64,
    pass: u64,
    fail: u64,
    inconclusive: u64,
    rejected: u64,
    worst_inconclusive: (String, f64),
    failing: Vec<String>,
}

fn sweep(level: LevelKind, kind: EnsembleKind, trials: u64) -> SweepTotals {
    let budgets = Budgets::default();
    let mut t = SweepTotals {
        trials: 0,
        pass: 0,
        fail: 0,
        inconclusive: 0,
        rejected: 0,
        worst_inconclusive: (String::new(), 0.0),
        failing: Vec::new(),
    };
    for spec in registry().iter().filter(|s| s.level == level) {
        let config = EnsembleConfig::new(kind, trials, SWEEP_SEED);
        let (s, _) = run_ensemble(spec, &config, &budgets, false).expect("sweep runs");
        t.trials += s.trials;
        t.pass += s.pass;
        t.fail += s.fail;
        t.inconclusive += s.inconclusive;
        t.rejected += s.rejected;
        let evaluated = (s.trials - s.rejected).max(1) as f64;
        let frac = s.inconclusive as f64 / evaluated;
        if frac > t.worst_inconclusive.1 {
            t.worst_inconclusive = (s.chain_id.clone(), frac);
        }
        if s.fail > 0 {
            t.failing.push(format!("{} ({} fails)", s.chain_id, s.fail));
        }
    }
    t
}

fn finite_sweep() -> Outcome {
    let start = Instant::now();
    let t = sweep(LevelKind::Finite, EnsembleKind::DenseUniform, FINITE_TRIALS);
    let elapsed = start.elapsed();
    let pass = t.fail == 0 && elapsed <= FINITE_BUDGET && t.trials == 16 * FINITE_TRIALS;
    outcome(
        pass,
        format!(
            "{} trials, {} pass, {} fail, {} inconclusive, {} rejected, {:.1}s (limit {}s){}",
            t.trials,
            t.pass,
            t.fail,
            t.inconclusive,
            t.rejected,
            elapsed.as_secs_f64(),
            FINITE_BUDGET.as_secs(),
            failing_suffix(&t.failing)
        ),
    )
}

fn essential_sweep() -> Outcome {
    let t = sweep(LevelKind::Essential, EnsembleKind::MixedFamilies, ESSENTIAL_TRIALS);
    let evaluated = (t.trials - t.rejected).max(1) as f64;
    let frac = t.inconclusive as f64 / evaluated;
    let pass = t.fail == 0 && frac <= MAX_INCONCLUSIVE_FRACTION && t.trials == 21 * ESSENTIAL_TRIALS;
    outcome(
        pass,
        format!(
            "{} trials, {} pass, {} fail, {} inconclusive ({:.1}%, worst chain {} at {:.1}%), {} rejected{}",
            t.trials,
            t.pass,
            t.fail,
            t.inconclusive,
            100.0 * frac,
            t.worst_inconclusive.0,
            100.0 * t.worst_inconclusive.1,
            t.rejected,
            failing_suffix(&t.failing)
        ),
    )
}

fn failing_suffix(failing: &[String]) -> String {
    if failing.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", failing.join(", "))
    }
}

// ------------------------------------------------------------ golden ratio

fn golden_ratio() -> Outcome {
    let a = FiniteMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
    let b = FiniteMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
    // AB = [[2, 1], [1, 1]] has characteristic polynomial x^2 - 3x + 1, whose
    // larger root (3 + sqrt5)/2 is phi^2.
    let ab = a.matmul(&b).unwrap();
    let (tr, det) = (ab.trace(), ab.get(0, 0) * ab.get(1, 1) - ab.get(0, 1) * ab.get(1, 0));
    let phi = ((tr + (tr * tr - 4.0 * det).sqrt()) / 2.0).sqrt();
    let set = OperatorSet::new(vec![a, b]).unwrap();
    let start = Instant::now();
    let br = gripenberg_bracket(&set, GOLDEN_DELTA, &JointOptions::default());
    let elapsed = start.elapsed();
    match br {
        Ok(br) => outcome(
            br.contains(phi, 0.0) && br.width() <= GOLDEN_DELTA && elapsed <= GOLDEN_TIME,
            format!(
                "[{:.15}, {:.15}] vs phi {:.15}, width {:.2e}, {:.3}s",
                br.lo,
                br.hi,
                phi,
                br.width(),
                elapsed.as_secs_f64()
            ),
        ),
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

// ------------------------------------------------------------------ gamma

/// A random convergent weight sequence with its limit computed from the
/// closed form of each kind.
fn random_sequence(rng: &mut ChaCha8Rng) -> (WeightSequence, f64) {
    match rng.gen_range(0..4) {
        0 => {
            let c = rng.gen_range(0.0..3.0);
            (WeightSequence::constant(c).unwrap(), c)
        }
        1 => {
            let len = rng.gen_range(1..8);
            let prefix: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..5.0)).collect();
            let tail = rng.gen_range(0.0..3.0);
            (WeightSequence::eventually_constant(prefix, tail).unwrap(), tail)
        }
        2 => {
            let c = rng.gen_range(0.1..3.0);
            let a = rng.gen_range(-0.09..2.0);
            (WeightSequence::harmonic(c, a).unwrap(), c)
        }
        _ => {
            let num = vec![rng.gen_range(0.0..2.0), rng.gen_range(0.1..2.0)];
            let den = vec![rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)];
            let limit = num[1] / den[1];
            (WeightSequence::rational(num, den).unwrap(), limit)
        }
    }
}

fn distance(b: &Bracket, x: f64) -> f64 {
    (b.lo - x).abs().max((b.hi - x).abs())
}

fn gamma_oracles() -> Outcome {
    let opts = EssOptions::default();
    let mut r = rng("gamma-oracle");
    let mut worst_diag = 0.0_f64;
    let mut worst_band = 0.0_f64;
    for _ in 0..30 {
        let (w, limit) = random_sequence(&mut r);
        let fam = OperatorFamily::diagonal(w);
        match hausdorff_mnc(&fam, &opts) {
            Ok(b) => worst_diag = worst_diag.max(distance(&b, limit)),
            Err(_) => worst_diag = f64::INFINITY,
        }
    }
    for _ in 0..30 {
        let (w, limit) = random_sequence(&mut r);
        let offset = [-2, -1, 1, 2, 3][r.gen_range(0..5)];
        let fam = OperatorFamily::shift(offset, w);
        let oracle = oracle_ess_radius(&fam);
        match (essential_spectral_radius(&fam, &opts), oracle) {
            (Ok(rep), Some(o)) if (o - limit).abs() <= GAMMA_TOL => {
                worst_band = worst_band.max(distance(&rep.bracket, o));
            }
            _ => worst_band = f64::INFINITY,
        }
    }
    outcome(
        worst_diag <= GAMMA_TOL && worst_band <= GAMMA_TOL,
        format!(
            "diagonal max |gamma - limsup| = {worst_diag:.2e}, single-band max |rho_ess - oracle| = {worst_band:.2e} (tol {GAMMA_TOL:.0e})"
        ),
    )
}

// ------------------------------------------------------ families for 5, 6

fn random_family(r: &mut ChaCha8Rng) -> OperatorFamily {
    let bands = r.gen_range(1..=3);
    let mut offsets: Vec<i64> = vec![-2, -1, 1, 2];
    let mut list = Vec::new();
    for _ in 0..bands.min(offsets.len()) {
        let off = offsets.remove(r.gen_range(0..offsets.len()));
        list.push((off, random_sequence(r).0));
    }
    let diagonal = r.gen_bool(0.5).then(|| random_sequence(r).0);
    let corner = r.gen_bool(0.5).then(|| random_block(r, 3));
    OperatorFamily::new(list, diagonal, corner.as_ref()).unwrap()
}

fn random_block(r: &mut ChaCha8Rng, n: usize) -> FiniteMatrix {
    FiniteMatrix::new(n, n, (0..n * n).map(|_| r.gen_range(0.0..1.0)).collect()).unwrap()
}

fn star_cross_check() -> Outcome {
    let opts = EssOptions::default();
    let mut r = rng("star-cross-check");
    let mut misses = Vec::new();
    for case in 0..30 {
        let fam = random_family(&mut r);
        let ok = match (hausdorff_mnc(&fam, &opts), gamma_via_star(&fam, &opts)) {
            (Ok(a), Ok(b)) => a.overlaps(&b, 0.0),
            _ => false,
        };
        if !ok {
            misses.push(case);
        }
    }
    outcome(misses.is_empty(), format!("30 mixed families, non-overlapping: {misses:?}"))
}

fn compact_perturbation() -> Outcome {
    let opts = EssOptions::default();
    let mut r = rng("compact-perturbation");
    let mut misses = Vec::new();
    for case in 0..20 {
        let fam = random_family(&mut r);
        let n = r.gen_range(1..=5);
        let scale = r.gen_range(0.5..10.0);
        let block = random_block(&mut r, n).scale(scale).unwrap();
        let perturbed = fam.with_finite_rank(&block).unwrap();
        let ok = match (
            essential_spectral_radius(&fam, &opts),
            essential_spectral_radius(&perturbed, &opts),
        ) {
            (Ok(a), Ok(b)) => a.bracket.overlaps(&b.bracket, 0.0),
            _ => false,
        };
        if !ok {
            misses.push(case);
        }
    }
    outcome(misses.is_empty(), format!("20 pairs, non-overlapping: {misses:?}"))
}

// --------------------------------------------------- Perron root oracle

#[derive(Clone, Copy, Debug)]
struct C(f64, f64);

impl C {
    fn add(self, o: C) -> C {
        C(self.0 + o.0, self.1 + o.1)
    }
    fn sub(self, o: C) -> C {
        C(self.0 - o.0, self.1 - o.1)
    }
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn div(self, o: C) -> C {
        let d = o.0 * o.0 + o.1 * o.1;
        C((self.0 * o.0 + self.1 * o.1) / d, (self.1 * o.0 - self.0 * o.1) / d)
    }
    fn abs(self) -> f64 {
        self.0.hypot(self.1)
    }
}

/// Monic characteristic polynomial coefficients `[c_0, ..., c_{n-1}, 1]`
/// by the Faddeev-LeVerrier recursion.
fn char_poly(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).map(|l| a[i][l] * m[l][j]).sum::<f64>();
            }
            next[i][i] += c[n - k + 1];
        }
        m = next;
        let tr: f64 = (0..n).map(|i| (0..n).map(|l| a[i][l] * m[l][i]).sum::<f64>()).sum();
        c[n - k] = -tr / k as f64;
    }
    c
}

fn eval(c: &[f64], z: C) -> C {
    c.iter().rev().fold(C(0.0, 0.0), |acc, &k| acc.mul(z).add(C(k, 0.0)))
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
fn durand_kerner(c: &[f64]) -> Vec<C> {
    let n = c.len() - 1;
    let seed = C(0.4, 0.9);
    let mut z: Vec<C> = (0..n)
        .map(|k| (0..k).fold(C(1.0, 0.0), |acc, _| acc.mul(seed)))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let mut den = C(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    den = den.mul(z[i].sub(z[j]));
                }
            }
            let step = eval(c, z[i]).div(den);
            z[i] = z[i].sub(step);
            moved = moved.max(step.abs());
        }
        if moved < 1e-16 {
            break;
        }
    }
    z
}

/// Largest real root, polished by Newton steps on the real polynomial.
fn perron_root(a: &[Vec<f64>]) -> f64 {
    let c = char_poly(a);
    let mut x = durand_kerner(&c)
        .into_iter()
        .filter(|z| z.1.abs() < 1e-6)
        .map(|z| z.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let deriv: Vec<f64> = (1..c.len()).map(|k| k as f64 * c[k]).collect();
    for _ in 0..8 {
        let d = eval(&deriv, C(x, 0.0)).0;
        if d.abs() < 1e-300 {
            break;
        }
        x -= eval(&c, C(x, 0.0)).0 / d;
    }
    x
}

/// 50 matrices: hand-picked structured cases, then random ones. Every case
/// has a simple Perron root so the polynomial oracle stays well conditioned.
fn perron_fixture() -> Vec<Vec<Vec<f64>>> {
    let mut cases: Vec<Vec<Vec<f64>>> = vec![
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![vec![2.0, 1.0], vec![1.0, 1.0]],
        vec![vec![1.0, 5.0], vec![0.0, 3.0]],
        vec![vec![0.0, 4.0], vec![0.25, 0.0]],
        vec![vec![1e-3, 1.0], vec![1e3, 2.0]],
        vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]],
        vec![vec![1.0, 7.0, 2.0], vec![0.0, 4.0, 9.0], vec![0.0, 0.0, 2.5]],
        vec![vec![0.0, 2.0, 0.0], vec![0.5, 0.0, 3.0], vec![0.0, 1.0 / 3.0, 0.0]],
        vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 2.0]],
    ];
    let mut r = rng("perron-fixture");
    while cases.len() < 50 {
        let n = if cases.len().is_multiple_of(2) { 2 } else { 3 };
        let sparse = cases.len().is_multiple_of(5);
        let m: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        if sparse && r.gen_bool(0.4) {
                            0.0
                        } else {
                            r.gen_range(0.0..10.0)
                        }
                    })
                    .collect()
            })
            .collect();
        // Keep only irreducible-with-positive-diagonal cases, which have
        // a simple dominant root.
        let positive_diag = (0..n).all(|i| m[i][i] > 0.0);
        let connected = (0..n).all(|i| (0..n).any(|j| j != i && m[i][j] > 0.0 && m[j][i] > 0.0));
        if positive_diag && connected {
            cases.push(m);
        }
    }
    cases
}

fn perron_oracle() -> Outcome {
    let opts = FiniteOptions::default();
    let cases = perron_fixture();
    let mut worst = 0.0_f64;
    let mut misses = Vec::new();
    for (k, rows) in cases.iter().enumerate() {
        let root = perron_root(rows);
        let a = FiniteMatrix::from_rows(rows).unwrap();
        match spectral_radius(&a, &opts) {
            Ok(b) => {
                let tol = PERRON_TOL * root.max(1.0);
                let miss = (b.lo - root).max(root - b.hi).max(0.0);
                worst = worst.max(miss / root.max(1.0));
                if !b.contains(root, tol) {
                    misses.push(k);
                }
            }
            Err(_) => misses.push(k),
        }
    }
    outcome(
        misses.is_empty() && cases.len() == 50,
        format!(
            "{} cases, largest relative miss {worst:.1e}, outside tolerance: {misses:?}",
            cases.len()
        ),
    )
}

// ------------------------------------------------------------- identities

fn rho2(m: &FiniteMatrix) -> f64 {
    let (tr, det) = (m.trace(), m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0));
    let disc = (tr * tr - 4.0 * det).max(0.0);
    (tr + disc.sqrt()) / 2.0
}

/// `max_{|w| = len} rho(A_w)` over every word, from the closed form for 2x2.
fn brute_force_max(s: &[FiniteMatrix], len: usize) -> f64 {
    let k = s.len();
    let mut best = 0.0_f64;
    for code in 0..k.pow(len as u32) {
        let mut c = code;
        let mut p = FiniteMatrix::identity(2);
        for _ in 0..len {
            p = p.matmul(&s[c % k]).unwrap();
            c /= k;
        }
        best = best.max(rho2(&p));
    }
    best
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= IDENTITY_REL_TOL * a.abs().max(b.abs()).max(1e-300)
}

fn identities() -> Outcome {
    let opts = JointOptions::default();
    let fin = FiniteOptions::default();
    let mut r = rng("identities");
    let mut checks = 0;
    let mut misses = Vec::new();
    for case in 0..20 {
        let elems = vec![random_block(&mut r, 2), random_block(&mut r, 2)];
        let set = OperatorSet::new(elems.clone()).unwrap();
        for k in 1..=3usize {
            let power = set.power(k).unwrap();
            for m in 1..=4usize {
                // Length-m words over the k-th power set are exactly the
                // length-km words over the set.
                let lhs = gen_radius_lb_at(&power, m, &opts).unwrap().value;
                let rhs = gen_radius_lb_at(&set, k * m, &opts).unwrap().value.powi(k as i32);
                let oracle = brute_force_max(&elems, k * m).powf(1.0 / m as f64);
                checks += 1;
                if !close(lhs, rhs) || !close(lhs, oracle) {
                    misses.push(format!("case {case} k={k} m={m}: {lhs} {rhs} {oracle}"));
                }
            }
        }
        for m in 1..=4usize {
            for code in 0..(1usize << m) {
                let word: Vec<usize> = (0..m).map(|i| (code >> i) & 1).collect();
                let mut first: Option<Bracket> = None;
                for shift in 0..m {
                    let mut p = FiniteMatrix::identity(2);
                    for i in 0..m {
                        p = p.matmul(&elems[word[(i + shift) % m]]).unwrap();
                    }
                    let b = spectral_radius(&p, &fin).unwrap();
                    checks += 1;
                    match &first {
                        None => first = Some(b),
                        Some(f) if !close(f.mid(), b.mid()) => {
                            misses.push(format!("case {case} word {word:?} rotation {shift}"));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
    }
    let shown: Vec<&String> = misses.iter().take(3).collect();
    outcome(
        misses.is_empty(),
        format!("{checks} comparisons over 20 sets, {} mismatches {shown:?}", misses.len()),
    )
}

// ------------------------------------------------------------ determinism

fn determinism() -> Outcome {
    let budgets = Budgets::default();
    let render = || -> String {
        let mut out = String::new();
        for spec in registry() {
            let kind = EnsembleKind::default_for(spec.level);
            let config = EnsembleConfig::new(kind, 10, 7);
            let report = run_ensemble(spec, &config, &budgets, true).expect("sweep runs");
            out.push_str(&serde_json::to_string(&report).expect("report serializes"));
            out.push('\n');
        }
        out
    };
    let first = render();
    let second = render();
    outcome(
        first == second,
        format!("two sweeps of all 37 chains x 10 trials, {} bytes each, identical: {}", first.len(), first == second),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("finite soundness sweep", finite_sweep),
        ("essential soundness sweep", essential_sweep),
        ("golden-ratio joint radius", golden_ratio),
        ("gamma oracle equivalence", gamma_oracles),
        ("gamma via the Gram operator", star_cross_check),
        ("compact-perturbation invariance", compact_perturbation),
        ("Perron root oracle", perron_oracle),
        ("power and cyclic identities", identities),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} [{}] {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
