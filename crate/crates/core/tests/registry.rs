//! Catalog contents, hand-computed chain values, hypothesis handling and
//! permutation coverage of the registry.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use schur_radii::operator::{FiniteMatrix, OperatorFamily, OperatorSet, WeightSequence};
use schur_radii::registry::{
    catalog_json, evaluate_essential, evaluate_finite, find, generate_inputs, registry, run_ensemble,
    trial_rng, Budgets, ChainInputs, ChainReport, EnsembleConfig, EnsembleKind, LevelKind, Params,
    TrialInputs, Verdict,
};
use schur_radii::Error;

fn singletons<T: schur_radii::operator::Operator>(ops: Vec<T>) -> Vec<OperatorSet<T>> {
    ops.into_iter().map(OperatorSet::singleton).collect()
}

fn shift(c: f64) -> OperatorFamily {
    OperatorFamily::shift(1, WeightSequence::constant(c).unwrap())
}

/// A link fails exactly when its slack is negative.
fn check_links(report: &ChainReport) {
    for link in &report.links {
        assert_eq!(link.verdict == Verdict::Fail, link.slack < 0.0, "{}: {link:?}", report.chain_id);
    }
}

#[test]
fn catalog_has_every_entry_once() {
    let ids: BTreeSet<&str> = registry().iter().map(|s| s.id).collect();
    assert_eq!(registry().len(), 37);
    assert_eq!(ids.len(), 37);
    let finite = registry().iter().filter(|s| s.level == LevelKind::Finite).count();
    assert_eq!(finite, 16);
    for i in 1..=16 {
        assert_eq!(find(&format!("F{i}")).unwrap().level, LevelKind::Finite);
    }
    for i in 1..=21 {
        assert_eq!(find(&format!("E{i}")).unwrap().level, LevelKind::Essential);
    }
    assert!(matches!(find("F99"), Err(Error::UnknownChain(_))));
}

#[test]
fn sampled_parameters_satisfy_the_side_conditions() {
    for spec in registry() {
        for trial in 0..50 {
            let params = spec.sample_params(&mut trial_rng(3, spec.id, trial));
            let sizes = spec.input_sizes(&params).unwrap();
            assert!(!sizes.is_empty(), "{}", spec.id);
            if let Err(e) = spec.check_hypothesis(&params) {
                panic!("{} trial {trial}: {e}", spec.id);
            }
        }
    }
}

#[test]
fn catalog_json_lists_all_entries() {
    let v = catalog_json().unwrap();
    let text = serde_json::to_string(&v).unwrap();
    for spec in registry() {
        assert!(text.contains(&format!("\"{}\"", spec.id)), "{}", spec.id);
    }
}

#[test]
fn all_ones_pair_gives_known_values() {
    let j = FiniteMatrix::ones(2, 2);
    let inputs = ChainInputs { params: Params::default(), sets: singletons(vec![j.clone(), j]) };
    let report = evaluate_finite(find("F2").unwrap(), &inputs, &Budgets::default()).unwrap();
    let mids: Vec<f64> = report.terms.iter().map(|t| (t.lo + t.hi) / 2.0).collect();
    assert_eq!(mids.len(), 3);
    for (got, want) in mids.iter().zip([2.0, 2.0, 4.0]) {
        assert!((got - want).abs() < 1e-9, "{mids:?}");
    }
    assert_eq!(report.verdict, Verdict::Pass);
}

#[test]
fn weighted_shift_pair_chain_is_flat() {
    let c = 1.7;
    let inputs = ChainInputs {
        params: Params { beta: Some(0.3), ..Params::default() },
        sets: singletons(vec![shift(c), shift(c)]),
    };
    let report = evaluate_essential(find("E10").unwrap(), &inputs, &Budgets::default()).unwrap();
    for t in &report.terms {
        assert!(t.lo - 1e-6 <= c * c && c * c <= t.hi + 1e-6, "{}: [{}, {}]", t.label, t.lo, t.hi);
    }
    assert_eq!(report.verdict, Verdict::Pass);
    check_links(&report);
}

#[test]
fn single_factor_product_is_an_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = find("F4").unwrap();
    let params = Params { m: Some(1), ..Params::default() };
    let config = EnsembleConfig::new(EnsembleKind::DenseUniform, 1, 0);
    let Ok(TrialInputs::Finite(inputs)) = generate_inputs(spec, &params, &config, &mut rng) else {
        panic!("finite inputs expected");
    };
    let report = evaluate_finite(spec, &inputs, &Budgets::default()).unwrap();
    let (a, b) = (&report.terms[0], &report.terms[1]);
    assert!(a.lo <= b.hi && b.lo <= a.hi, "{a:?} vs {b:?}");
    assert_eq!(report.verdict, Verdict::Pass);
}

#[test]
fn first_finite_chain_passes_a_seeded_ensemble() {
    let config = EnsembleConfig::new(EnsembleKind::DenseUniform, 100, 7);
    let (summary, outcomes) = run_ensemble(find("F1").unwrap(), &config, &Budgets::default(), false).unwrap();
    assert_eq!(summary.pass, 100, "{summary:?}");
    for o in outcomes {
        check_links(&o.report);
    }
}

#[test]
fn hadamard_power_chain_passes_on_shifts() {
    let spec = find("E1").unwrap();
    let budgets = Budgets::default();
    for k in 0..20 {
        let c = 0.2 + 0.15 * k as f64;
        let params = Params { m: Some(2), t: Some(2.0), ..Params::default() };
        let sets = singletons(vec![shift(c), shift(c + 0.1), shift(1.0 / (c + 0.5))]);
        let report = evaluate_essential(spec, &ChainInputs { params, sets }, &budgets).unwrap();
        assert_eq!(report.verdict, Verdict::Pass, "c = {c}: {report:#?}");
        check_links(&report);
    }
}

#[test]
fn powers_below_one_are_refused() {
    let budgets = Budgets::default();
    let a = FiniteMatrix::ones(2, 2);
    let params = Params { t: Some(0.5), ..Params::default() };
    let inputs = ChainInputs { params, sets: singletons(vec![a]) };
    let err = evaluate_finite(find("F10").unwrap(), &inputs, &budgets).unwrap_err();
    assert!(matches!(err, Error::Hypothesis { .. }), "{err}");

    let params = Params { m: Some(1), t: Some(0.9), ..Params::default() };
    let inputs = ChainInputs { params, sets: singletons(vec![shift(1.0), shift(2.0)]) };
    let err = evaluate_essential(find("E1").unwrap(), &inputs, &budgets).unwrap_err();
    assert!(matches!(err, Error::Hypothesis { .. }), "{err}");
}

#[test]
fn odd_length_is_refused_for_even_chains() {
    let params = Params {
        m: Some(3),
        alpha: Some(1.0),
        tau: Some(vec![1, 2, 3]),
        nu: Some(vec![1, 2, 3]),
        ..Params::default()
    };
    let inputs = ChainInputs { params, sets: singletons(vec![shift(1.0); 3]) };
    let err = evaluate_essential(find("E19").unwrap(), &inputs, &Budgets::default()).unwrap_err();
    assert!(err.to_string().contains("even"), "{err}");
}

#[test]
fn finite_ensemble_reports_have_consistent_links() {
    let budgets = Budgets::default();
    for spec in registry().iter().filter(|s| s.level == LevelKind::Finite) {
        let config = EnsembleConfig::new(EnsembleKind::SparseBernoulli, 10, 5);
        let (summary, outcomes) = run_ensemble(spec, &config, &budgets, false).unwrap();
        assert_eq!(summary.fail, 0, "{summary:?}");
        for o in outcomes {
            check_links(&o.report);
        }
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m);
            out.push(q);
        }
    }
    out
}

fn run_permuted(id: &str, m: usize, pairs: &[(Vec<usize>, Option<Vec<usize>>)]) {
    let spec = find(id).unwrap();
    let budgets = Budgets::default();
    let config = EnsembleConfig::new(EnsembleKind::MixedFamilies, 1, 0);
    let alpha = if id == "E20" { 2.0 / m as f64 } else { 1.0 / m as f64 };
    let identity: Vec<usize> = (1..=m).collect();
    let base = Params {
        m: Some(m),
        alpha: Some(alpha),
        tau: Some(identity.clone()),
        nu: (id != "E20").then_some(identity),
        ..Params::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
    let generated = generate_inputs(spec, &base, &config, &mut rng).unwrap();
    let TrialInputs::Essential(inputs) = generated else {
        panic!("essential inputs expected");
    };
    let mut inconclusive = 0;
    for (tau, nu) in pairs {
        let params = Params { tau: Some(tau.clone()), nu: nu.clone(), ..base.clone() };
        let trial = ChainInputs { params, sets: inputs.sets.clone() };
        let report = evaluate_essential(spec, &trial, &budgets).unwrap();
        assert_ne!(report.verdict, Verdict::Fail, "{id} m={m} tau={tau:?} nu={nu:?}");
        if report.verdict == Verdict::Inconclusive {
            inconclusive += 1;
        }
    }
    assert!(inconclusive * 10 <= pairs.len(), "{id} m={m}: {inconclusive} inconclusive");
}

fn pairs_for(id: &str, m: usize, sample: Option<usize>) -> Vec<(Vec<usize>, Option<Vec<usize>>)> {
    let perms = permutations(m);
    let chosen: Vec<Vec<usize>> = match sample {
        None => perms,
        Some(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + m as u64);
            perms.choose_multiple(&mut rng, k).cloned().collect()
        }
    };
    if id == "E20" {
        return chosen.into_iter().map(|t| (t, None)).collect();
    }
    match sample {
        // Exhaustive over tau; nu runs over all permutations as well.
        None => chosen
            .iter()
            .flat_map(|t| chosen.iter().map(move |n| (t.clone(), Some(n.clone()))))
            .collect(),
        Some(_) => chosen.iter().zip(chosen.iter().rev()).map(|(t, n)| (t.clone(), Some(n.clone()))).collect(),
    }
}

#[test]
fn permuted_chains_exhaustive_for_short_words() {
    for id in ["E19", "E20"] {
        for m in [2, 4] {
            run_permuted(id, m, &pairs_for(id, m, None));
        }
    }
    for m in 1..=4 {
        run_permuted("E21", m, &pairs_for("E21", m, None));
    }
}

#[test]
fn permuted_chains_sampled_for_longer_words() {
    for (id, ms) in [("E19", vec![6]), ("E20", vec![6]), ("E21", vec![5, 6])] {
        for m in ms {
            run_permuted(id, m, &pairs_for(id, m, Some(8)));
        }
    }
}
