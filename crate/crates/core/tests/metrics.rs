mod common;

use common::{auc_pairwise, brute_force_rates, has_negative_pair, random_setup, rng};
use proptest::prelude::*;
use qim_core::{
    auc_roc, cosine_similarity, identification_rates, robustify, similarity_threshold,
    threshold_search, Cosine, IdentificationSetup, LabeledScores, Similarity,
};
use rand::Rng;

fn labeled(scores: Vec<f64>, labels: Vec<bool>) -> LabeledScores<f64> {
    LabeledScores::new(scores, labels).unwrap()
}

#[test]
fn auc_matches_pairwise_enumeration_exhaustively() {
    // every labeling of every small score vector drawn from a tie-heavy range
    let mut r = rng(1);
    for n in 2..=12 {
        for _ in 0..4 {
            let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..4u8))).collect();
            let labelings: Box<dyn Iterator<Item = u32>> = if n <= 9 {
                Box::new(0..1u32 << n)
            } else {
                Box::new((0..300).map(|_| r.random_range(0..1u32 << n)))
            };
            for mask in labelings {
                let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
                    continue;
                }
                let got = auc_roc(&labeled(scores.clone(), labels.clone())).unwrap();
                assert_eq!(got, auc_pairwise(&scores, &labels), "{scores:?} {labels:?}");
            }
        }
    }
}

proptest! {
    #[test]
    fn auc_is_rank_based(scores in prop::collection::vec(-5.0f64..5.0, 2..30), seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut labels: Vec<bool> = scores.iter().map(|_| r.random()).collect();
        labels[0] = true;
        labels[1] = false;
        let base = auc_roc(&labeled(scores.clone(), labels.clone())).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
        prop_assert_eq!(auc_roc(&labeled(squashed, labels.clone())).unwrap(), base);
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        let mirrored = auc_roc(&labeled(flipped, labels)).unwrap();
        prop_assert!((mirrored - (1.0 - base)).abs() < 1e-12);
    }

    #[test]
    fn threshold_respects_target_and_is_tightest(
        pairs in prop::collection::vec((-3i8..3, any::<bool>()), 1..40),
        fpr in 0.0f64..=1.0,
    ) {
        let mut pairs: Vec<(f64, bool)> = pairs.into_iter().map(|(s, l)| (f64::from(s), l)).collect();
        pairs[0].1 = false;
        let t = similarity_threshold(&pairs, fpr).unwrap();
        let negatives: Vec<f64> = pairs.iter().filter(|p| !p.1).map(|p| p.0).collect();
        let rate = |accept: &dyn Fn(f64) -> bool| {
            negatives.iter().filter(|&&s| accept(s)).count() as f64 / negatives.len() as f64
        };
        prop_assert!(rate(&|s| t.accepts(s)) <= fpr);
        // any observed score below the threshold would break the target
        for &(s, _) in &pairs {
            if !t.accepts(s) {
                prop_assert!(rate(&|x| x >= s) > fpr);
            }
        }
    }
}

#[test]
fn identification_rates_match_brute_force() {
    let mut checked = 0;
    for seed in 0..600 {
        let setup = random_setup(seed, 12, 4);
        if !has_negative_pair(&setup) {
            continue;
        }
        let report = identification_rates(&setup, &Cosine).unwrap();
        let (ir, full) = brute_force_rates(
            &setup.gallery,
            &setup.identities,
            &setup.distractors,
            setup.fpr,
            &Cosine,
        );
        assert_eq!(report.ir, ir, "seed {seed}");
        assert_eq!(report.full_ir, full, "seed {seed}");
        checked += 1;
    }
    assert!(checked > 400);
}

#[test]
fn robustified_rates_match_brute_force() {
    let scorer = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>().sqrt();
    for seed in 0..200 {
        let setup = random_setup(seed, 12, 4);
        if !has_negative_pair(&setup) {
            continue;
        }
        let sim = robustify(Cosine, scorer, 1.5);
        let report = identification_rates(&setup, &sim).unwrap();
        let (ir, full) =
            brute_force_rates(&setup.gallery, &setup.identities, &setup.distractors, setup.fpr, &sim);
        assert_eq!((report.ir, report.full_ir), (ir, full), "seed {seed}");
    }
}

#[test]
fn full_ir_never_exceeds_ir() {
    for seed in 1000..1100 {
        let setup = random_setup(seed, 30, 10);
        if !has_negative_pair(&setup) {
            continue;
        }
        let report = identification_rates(&setup, &Cosine).unwrap();
        assert!(report.full_ir <= report.ir);
    }
}

#[test]
fn threshold_search_never_loses_to_an_infinite_threshold() {
    let scorer = |p: &[f64]| p.iter().map(|x| x.abs()).sum::<f64>();
    for seed in 0..50 {
        let setup = random_setup(seed, 16, 6);
        if !has_negative_pair(&setup) {
            continue;
        }
        let grid = [0.5, 1.0, 2.0, f64::INFINITY];
        let choice = threshold_search(&setup, &Cosine, &scorer, &grid).unwrap();
        assert!(!choice.fallback);
        assert!(choice.ir >= choice.baseline_ir);
        let check = identification_rates(&setup, &robustify(Cosine, scorer, choice.threshold)).unwrap();
        assert_eq!(check.ir, choice.ir);
    }
}

#[test]
fn threshold_search_falls_back_to_percentile() {
    // a grid that truncates everything collapses IR; the fallback keeps 99%
    let setup = IdentificationSetup {
        gallery: vec![vec![1.0, 0.1], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.1, 1.0]],
        identities: vec![0, 0, 1, 1],
        distractors: vec![],
        fpr: 0.0,
    };
    let scorer = |p: &[f64]| p[0];
    let choice = threshold_search(&setup, &Cosine, &scorer, &[-1.0]).unwrap();
    assert!(choice.fallback);
    let expected = qim_core::percentile(&[1.0, 1.0, 0.0, 0.1], 99.0).unwrap();
    assert_eq!(choice.threshold, expected);
}

#[test]
fn robustified_similarity_truncates_outliers() {
    let scorer = |p: &[f64]| p[0];
    let sim = robustify(Cosine, scorer, 0.5);
    let a = [0.1, 1.0];
    assert_eq!(sim.similarity(&a, &[0.6, 1.0]).unwrap(), 0.0);
    assert_eq!(sim.similarity(&a, &[0.2, 1.0]).unwrap(), cosine_similarity(&a, &[0.2, 1.0]).unwrap());
}
