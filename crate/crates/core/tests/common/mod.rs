//! Random instances and brute-force reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use qim_core::{
    grad_loss, loss, Cloud, IdentificationSetup, LossVariant, Model, Quadric, Similarity,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gauss_vec<R: Rng>(n: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| scale * gauss(rng)).collect()
}

/// Quadric with i.i.d. standard Gaussian coefficients.
pub fn random_quadric<R: Rng>(d: usize, rng: &mut R) -> Quadric {
    let coeffs = gauss_vec(qim_core::coefficient_len(d), 1.0, rng);
    Quadric::from_coefficients(&coeffs).unwrap()
}

pub fn random_model<R: Rng>(d: usize, m: usize, rng: &mut R) -> Model {
    Model::new((0..m).map(|_| random_quadric(d, rng)).collect()).unwrap()
}

pub fn random_cloud<R: Rng>(n: usize, d: usize, scale: f64, rng: &mut R) -> Cloud {
    Cloud::new(d, gauss_vec(n * d, scale, rng)).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// `P(outlier > inlier) + ½ P(tie)` by enumerating every outlier/inlier pair.
pub fn auc_pairwise(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Identification rates by direct enumeration.
///
/// The accepted pairs are those at or above the smallest probe threshold whose
/// false positive rate does not exceed `fpr`, where the probes are every
/// observed pair similarity, the midpoints between consecutive distinct
/// similarities, and one value beyond each end. Every genuine pair is then
/// checked against every distractor.
pub fn brute_force_rates<S: Similarity<f64>>(
    gallery: &[Vec<f64>],
    identities: &[usize],
    distractors: &[Vec<f64>],
    fpr: f64,
    sim: &S,
) -> (f64, f64) {
    let n = gallery.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i < j {
                let s = sim.similarity(&gallery[i], &gallery[j]).unwrap();
                pairs.push((i, j, s));
            }
        }
    }
    let mut values: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut probes = vec![values[0] - 1.0];
    for w in values.windows(2) {
        probes.push((w[0] + w[1]) / 2.0);
    }
    probes.extend(&values);
    probes.push(values[values.len() - 1] + 1.0);
    probes.sort_by(f64::total_cmp);

    let negatives = pairs.iter().filter(|p| identities[p.0] != identities[p.1]).count();
    let rate_at = |a: f64| {
        pairs
            .iter()
            .filter(|p| identities[p.0] != identities[p.1] && p.2 >= a)
            .count() as f64
            / negatives as f64
    };
    let threshold = probes.into_iter().find(|&a| rate_at(a) <= fpr).unwrap();

    let positives: Vec<_> = pairs.iter().filter(|p| identities[p.0] == identities[p.1]).collect();
    let mut hits = 0;
    let mut full = 0;
    for &&(i, j, s) in &positives {
        if s >= threshold {
            hits += 1;
            let beaten = distractors.iter().any(|y| {
                s <= sim.similarity(&gallery[i], y).unwrap() || s <= sim.similarity(&gallery[j], y).unwrap()
            });
            if !beaten {
                full += 1;
            }
        }
    }
    let total = positives.len() as f64;
    (hits as f64 / total, full as f64 / total)
}

/// Small labeled gallery with Gaussian clusters per identity and Gaussian
/// distractors. At least one identity repeats.
pub fn random_setup(seed: u64, max_gallery: usize, max_distractors: usize) -> IdentificationSetup<f64> {
    let mut r = rng(seed);
    let n = r.random_range(2..=max_gallery);
    let d = r.random_range(2..=4);
    let classes = r.random_range(2.min(n - 1)..=n.div_ceil(2).max(2));
    let centers: Vec<Vec<f64>> = (0..classes).map(|_| gauss_vec(d, 1.0, &mut r)).collect();
    let mut identities: Vec<usize> = (0..n).map(|i| i % classes).collect();
    identities[1] = identities[0];
    let gallery = identities
        .iter()
        .map(|&c| centers[c].iter().map(|x| x + 0.6 * gauss(&mut r)).collect())
        .collect();
    let ny = r.random_range(0..=max_distractors);
    let distractors = (0..ny).map(|_| gauss_vec(d, 1.0, &mut r)).collect();
    let fpr = [0.0, 0.05, 0.1, 0.25, 0.5, 1.0][r.random_range(0..6)];
    IdentificationSetup {
        gallery,
        identities,
        distractors,
        fpr,
    }
}

pub fn has_negative_pair(setup: &IdentificationSetup<f64>) -> bool {
    let ids = &setup.identities;
    (0..ids.len()).any(|i| (i + 1..ids.len()).any(|j| ids[i] != ids[j]))
}

fn unflatten(params: &[f64], d: usize) -> Model {
    let width = qim_core::coefficient_len(d);
    Model::new(
        params
            .chunks(width)
            .map(|c| Quadric::from_coefficients(c).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Compares `grad_loss` with central differences (step 1e-5) on `cases`
/// random instances with d ≤ 4, m ≤ 3 and at most 8 points, for both loss
/// variants. Returns a description of every coefficient whose error exceeds
/// `1e-5 · max(|fd|, 1)`.
pub fn gradient_mismatches(cases: usize, seed: u64) -> Vec<String> {
    let mut r = rng(seed);
    let mut bad = Vec::new();
    for case in 0..cases {
        let d = 1 + case % 4;
        let m = (1 + case % 3).min(qim_core::packed_len(d));
        let model = random_model(d, m, &mut r);
        let batch = random_cloud(1 + case % 8, d, 1.0, &mut r);
        let lambda = 0.7;
        for variant in [LossVariant::QFull, LossVariant::QBase] {
            let analytic = grad_loss(variant, &model, &batch).unwrap().combined(1.0, lambda);
            let params = model.coefficient_columns().concat();
            let h = 1e-5;
            for i in 0..params.len() {
                let mut plus = params.clone();
                let mut minus = params.clone();
                plus[i] += h;
                minus[i] -= h;
                let lp = loss(variant, &unflatten(&plus, d), &batch, lambda).unwrap().total;
                let lm = loss(variant, &unflatten(&minus, d), &batch, lambda).unwrap().total;
                let fd = (lp - lm) / (2.0 * h);
                if (analytic[i] - fd).abs() > 1e-5 * fd.abs().max(1.0) {
                    bad.push(format!("case {case} {variant:?} coeff {i}: {} vs {fd}", analytic[i]));
                }
            }
        }
    }
    bad
}
