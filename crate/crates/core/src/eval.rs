//! Evaluation metrics: AUC-ROC, identification rates with distractors, and
//! outlier-aware similarity robustification.

use std::cmp::Ordering;

use crate::error::{check_dim, Error, Result};
use crate::model::OutlierScorer;
use crate::scalar::{dot, Real};

/// Outlier scores with binary labels (`true` = outlier).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores<T> {
    scores: Vec<T>,
    labels: Vec<bool>,
}

impl<T: Real> LabeledScores<T> {
    pub fn new(scores: Vec<T>, labels: Vec<bool>) -> Result<Self> {
        check_dim(scores.len(), labels.len())?;
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::NonFinite("scores"));
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l).count();
        (pos, self.labels.len() - pos)
    }
}

/// Area under the ROC curve, computed as the Mann–Whitney statistic
/// `P(outlier score > inlier score) + ½ P(tie)` via midranks.
pub fn auc_roc<T: Real>(data: &LabeledScores<T>) -> Result<f64> {
    let (n_pos, n_neg) = data.class_counts();
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..data.scores.len()).collect();
    order.sort_by(|&a, &b| data.scores[a].partial_cmp(&data.scores[b]).unwrap_or(Ordering::Equal));

    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && data.scores[order[j + 1]] == data.scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| data.labels[k]).count();
        rank_sum += mid * pos_in_group as f64;
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// ROC points `(fpr, tpr)` for thresholds from `+∞` down to the minimum score,
/// one point per distinct score.
pub fn roc_curve<T: Real>(data: &LabeledScores<T>) -> Result<Vec<(f64, f64)>> {
    let (n_pos, n_neg) = data.class_counts();
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..data.scores.len()).collect();
    order.sort_by(|&a, &b| data.scores[b].partial_cmp(&data.scores[a]).unwrap_or(Ordering::Equal));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = data.scores[order[i]];
        while i < order.len() && data.scores[order[i]] == s {
            if data.labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Ok(points)
}

/// `⟨x, y⟩ / (‖x‖ ‖y‖)`.
pub fn cosine_similarity<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    check_dim(x.len(), y.len())?;
    let nx = dot(x, x).sqrt();
    let ny = dot(y, y).sqrt();
    if nx == T::zero() || ny == T::zero() {
        return Err(Error::InvalidArgument("cosine similarity of a zero vector".into()));
    }
    Ok((dot(x, y) / (nx * ny)).max(-T::one()).min(T::one()))
}

/// A similarity function on embeddings; larger means more alike.
pub trait Similarity<T> {
    fn similarity(&self, x: &[T], y: &[T]) -> Result<T>;
}

impl<T, F> Similarity<T> for F
where
    F: Fn(&[T], &[T]) -> Result<T>,
{
    fn similarity(&self, x: &[T], y: &[T]) -> Result<T> {
        self(x, y)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Cosine;

impl<T: Real> Similarity<T> for Cosine {
    fn similarity(&self, x: &[T], y: &[T]) -> Result<T> {
        cosine_similarity(x, y)
    }
}

/// `s_h(x, y) = s(x, y)` if `max(o(x), o(y)) < t`, else `0`.
#[derive(Debug, Clone)]
pub struct Robustified<S, O, T> {
    pub base: S,
    pub scorer: O,
    pub threshold: T,
}

pub fn robustify<T: Real, S: Similarity<T>, O: OutlierScorer<T>>(
    base: S,
    scorer: O,
    threshold: T,
) -> Robustified<S, O, T> {
    Robustified {
        base,
        scorer,
        threshold,
    }
}

impl<T: Real, S: Similarity<T>, O: OutlierScorer<T>> Similarity<T> for Robustified<S, O, T> {
    fn similarity(&self, x: &[T], y: &[T]) -> Result<T> {
        let worst = self.scorer.score(x)?.max(self.scorer.score(y)?);
        if worst < self.threshold {
            self.base.similarity(x, y)
        } else {
            Ok(T::zero())
        }
    }
}

#[inline]
fn truncate<T: Real>(s: T, ox: T, oy: T, t: T) -> T {
    if ox.max(oy) < t {
        s
    } else {
        T::zero()
    }
}

/// Decision threshold of the pair classifier: a pair is positive when its
/// similarity is `>= value`, or `> value` when `strict`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityThreshold<T> {
    pub value: T,
    pub strict: bool,
}

impl<T: Real> SimilarityThreshold<T> {
    #[inline]
    pub fn accepts(&self, s: T) -> bool {
        if self.strict {
            s > self.value
        } else {
            s >= self.value
        }
    }
}

/// Smallest threshold whose false positive rate does not exceed `fpr`.
///
/// Candidates are `-∞`, every observed score, and "just above the largest
/// excluded negative" (returned as a strict threshold). Among thresholds with
/// `fpr <= target` this maximizes the true positive rate.
pub fn similarity_threshold<T: Real>(pairs: &[(T, bool)], fpr: f64) -> Result<SimilarityThreshold<T>> {
    if !(0.0..=1.0).contains(&fpr) {
        return Err(Error::InvalidArgument(format!("target fpr {fpr} outside [0, 1]")));
    }
    let mut negatives: Vec<T> = pairs.iter().filter(|p| !p.1).map(|p| p.0).collect();
    if negatives.is_empty() {
        return Err(Error::InvalidArgument("no negative pairs".into()));
    }
    let n = negatives.len();
    // largest number of false positives allowed
    let allowed = (0..=n).rev().find(|&k| k as f64 / n as f64 <= fpr).unwrap_or(0);
    if allowed == n {
        return Ok(SimilarityThreshold {
            value: T::neg_infinity(),
            strict: false,
        });
    }
    negatives.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    // every threshold must reject this negative and all below it
    let excluded = negatives[allowed];
    let next_observed = pairs
        .iter()
        .map(|p| p.0)
        .filter(|&s| s > excluded)
        .fold(None, |acc: Option<T>, s| Some(acc.map_or(s, |a| a.min(s))));
    Ok(match next_observed {
        Some(value) => SimilarityThreshold {
            value,
            strict: false,
        },
        None => SimilarityThreshold {
            value: excluded,
            strict: true,
        },
    })
}

/// Gallery of labeled embeddings with an optional distractor set.
#[derive(Debug, Clone)]
pub struct IdentificationSetup<T> {
    pub gallery: Vec<Vec<T>>,
    pub identities: Vec<usize>,
    pub distractors: Vec<Vec<T>>,
    /// Target false positive rate.
    pub fpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentificationReport<T> {
    pub ir: f64,
    pub full_ir: f64,
    pub threshold: SimilarityThreshold<T>,
    pub positive_pairs: usize,
    pub negative_pairs: usize,
}

/// Pairwise similarities precomputed for a setup.
#[derive(Debug, Clone)]
struct PairTables<T> {
    n: usize,
    /// `n × n`, only `i < j` used.
    gallery: Vec<T>,
    /// `n × |Y|`.
    distractor: Vec<T>,
    n_distractors: usize,
}

impl<T: Real> PairTables<T> {
    fn build<S: Similarity<T>>(setup: &IdentificationSetup<T>, sim: &S) -> Result<Self> {
        let n = setup.gallery.len();
        let mut gallery = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                gallery[i * n + j] = sim.similarity(&setup.gallery[i], &setup.gallery[j])?;
            }
        }
        let ny = setup.distractors.len();
        let mut distractor = vec![T::zero(); n * ny];
        for i in 0..n {
            for (k, y) in setup.distractors.iter().enumerate() {
                distractor[i * ny + k] = sim.similarity(&setup.gallery[i], y)?;
            }
        }
        Ok(Self {
            n,
            gallery,
            distractor,
            n_distractors: ny,
        })
    }

    fn robustified(&self, gallery_scores: &[T], distractor_scores: &[T], t: T) -> Self {
        let (n, ny) = (self.n, self.n_distractors);
        let mut out = self.clone();
        for i in 0..n {
            for j in i + 1..n {
                out.gallery[i * n + j] =
                    truncate(self.gallery[i * n + j], gallery_scores[i], gallery_scores[j], t);
            }
            for (k, &score) in distractor_scores.iter().enumerate() {
                out.distractor[i * ny + k] =
                    truncate(self.distractor[i * ny + k], gallery_scores[i], score, t);
            }
        }
        out
    }

    fn rates(&self, identities: &[usize], fpr: f64) -> Result<IdentificationReport<T>> {
        let (n, ny) = (self.n, self.n_distractors);
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((self.gallery[i * n + j], identities[i] == identities[j]));
            }
        }
        let positives = pairs.iter().filter(|p| p.1).count();
        if positives == 0 {
            return Err(Error::InvalidArgument("no same-identity pairs in the gallery".into()));
        }
        let threshold = similarity_threshold(&pairs, fpr)?;

        // strongest distractor similarity per gallery element
        let best_distractor: Vec<T> = (0..n)
            .map(|i| {
                self.distractor[i * ny..(i + 1) * ny]
                    .iter()
                    .fold(T::neg_infinity(), |a, &b| a.max(b))
            })
            .collect();

        let (mut hits, mut full_hits) = (0usize, 0usize);
        for i in 0..n {
            for j in i + 1..n {
                if identities[i] != identities[j] {
                    continue;
                }
                let s = self.gallery[i * n + j];
                if threshold.accepts(s) {
                    hits += 1;
                    if s > best_distractor[i].max(best_distractor[j]) {
                        full_hits += 1;
                    }
                }
            }
        }
        Ok(IdentificationReport {
            ir: hits as f64 / positives as f64,
            full_ir: full_hits as f64 / positives as f64,
            threshold,
            positive_pairs: positives,
            negative_pairs: pairs.len() - positives,
        })
    }
}

fn check_setup<T: Real>(setup: &IdentificationSetup<T>) -> Result<()> {
    check_dim(setup.gallery.len(), setup.identities.len())
}

/// Identification rate (true positive rate at the similarity threshold for the
/// target fpr) and full identification rate (additionally requiring every
/// accepted genuine pair to beat all distractors). Self-pairs are excluded.
pub fn identification_rates<T: Real, S: Similarity<T>>(
    setup: &IdentificationSetup<T>,
    sim: &S,
) -> Result<IdentificationReport<T>> {
    check_setup(setup)?;
    PairTables::build(setup, sim)?.rates(&setup.identities, setup.fpr)
}

pub fn identification_rate<T: Real, S: Similarity<T>>(
    setup: &IdentificationSetup<T>,
    sim: &S,
) -> Result<f64> {
    Ok(identification_rates(setup, sim)?.ir)
}

pub fn full_identification_rate<T: Real, S: Similarity<T>>(
    setup: &IdentificationSetup<T>,
    sim: &S,
) -> Result<f64> {
    Ok(identification_rates(setup, sim)?.full_ir)
}

/// Linearly interpolated percentile, `q` in `[0, 100]`.
pub fn percentile<T: Real>(values: &[T], q: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty("percentile input"));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("percentile {q} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice<T> {
    pub threshold: T,
    /// IR of the robustified similarity at `threshold` on the validation set.
    pub ir: f64,
    /// IR without robustification.
    pub baseline_ir: f64,
    /// True when no grid point matched the baseline and the one-percent rule
    /// was applied.
    pub fallback: bool,
}

/// Grid search for the robustification threshold maximizing IR on a
/// validation setup. Ties go to the earliest grid point. If every grid point
/// lowers IR below the unrobustified baseline, returns the 99th percentile of
/// the validation outlier scores so that about one percent is truncated.
pub fn threshold_search<T: Real, S: Similarity<T>, O: OutlierScorer<T>>(
    setup: &IdentificationSetup<T>,
    sim: &S,
    scorer: &O,
    grid: &[T],
) -> Result<ThresholdChoice<T>> {
    if grid.is_empty() {
        return Err(Error::Empty("threshold grid"));
    }
    check_setup(setup)?;
    let tables = PairTables::build(setup, sim)?;
    let baseline_ir = tables.rates(&setup.identities, setup.fpr)?.ir;
    let gallery_scores = setup
        .gallery
        .iter()
        .map(|x| scorer.score(x))
        .collect::<Result<Vec<T>>>()?;
    let distractor_scores = setup
        .distractors
        .iter()
        .map(|y| scorer.score(y))
        .collect::<Result<Vec<T>>>()?;

    let mut best: Option<(T, f64)> = None;
    for &t in grid {
        let ir = tables
            .robustified(&gallery_scores, &distractor_scores, t)
            .rates(&setup.identities, setup.fpr)?
            .ir;
        if best.is_none_or(|(_, b)| ir > b) {
            best = Some((t, ir));
        }
    }
    let (t, ir) = best.expect("grid is non-empty");
    if ir < baseline_ir {
        let all: Vec<T> = gallery_scores.iter().chain(&distractor_scores).copied().collect();
        let t = percentile(&all, 99.0)?;
        let ir = tables
            .robustified(&gallery_scores, &distractor_scores, t)
            .rates(&setup.identities, setup.fpr)?
            .ir;
        return Ok(ThresholdChoice {
            threshold: t,
            ir,
            baseline_ir,
            fallback: true,
        });
    }
    Ok(ThresholdChoice {
        threshold: t,
        ir,
        baseline_ir,
        fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(scores: &[f64], labels: &[u8]) -> LabeledScores<f64> {
        LabeledScores::new(scores.to_vec(), labels.iter().map(|&l| l == 1).collect()).unwrap()
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_roc(&labeled(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1])).unwrap(), 0.75);
        assert_eq!(auc_roc(&labeled(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1])).unwrap(), 1.0);
        assert_eq!(auc_roc(&labeled(&[0.5; 4], &[0, 1, 0, 1])).unwrap(), 0.5);
        assert_eq!(
            auc_roc(&labeled(&[0.1, 0.2], &[0, 0])).unwrap_err(),
            Error::SingleClass
        );
        assert!(LabeledScores::new(vec![0.1], vec![true, false]).is_err());
    }

    #[test]
    fn roc_endpoints() {
        let pts = roc_curve(&labeled(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1])).unwrap();
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&[1.0f64, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn robustify_cases() {
        let scorer = |p: &[f64]| p[0];
        let base = |x: &[f64], y: &[f64]| -> Result<f64> { cosine_similarity(x, y) };
        let r = robustify(base, scorer, 0.5);
        let a = [0.1, 1.0];
        let b = [0.2, 1.0];
        assert_eq!(r.similarity(&a, &b).unwrap(), cosine_similarity(&a, &b).unwrap());
        // boundary: o = t truncates
        assert_eq!(r.similarity(&a, &[0.5, 1.0]).unwrap(), 0.0);
        let never = robustify(base, scorer, f64::INFINITY);
        let far = [1e9, 1.0];
        assert_eq!(never.similarity(&a, &far).unwrap(), cosine_similarity(&a, &far).unwrap());
    }

    #[test]
    fn threshold_examples() {
        let pairs = [(0.1, false), (0.9, false)];
        let t = similarity_threshold(&pairs, 0.5).unwrap();
        assert_eq!(t, SimilarityThreshold { value: 0.9, strict: false });

        let t0 = similarity_threshold(&pairs, 0.0).unwrap();
        assert_eq!(t0, SimilarityThreshold { value: 0.9, strict: true });
        assert!(!t0.accepts(0.9));
        assert!(t0.accepts(0.9 + 1e-12));

        let t1 = similarity_threshold(&pairs, 1.0).unwrap();
        assert_eq!(t1.value, f64::NEG_INFINITY);

        assert!(similarity_threshold(&pairs, -0.1).is_err());
        assert!(similarity_threshold(&pairs, 1.1).is_err());
        assert!(similarity_threshold(&[(0.3, true)], 0.5).is_err());
    }

    fn two_by_three() -> IdentificationSetup<f64> {
        IdentificationSetup {
            gallery: vec![
                vec![1.0, 0.0],
                vec![0.9, 0.1],
                vec![0.0, 1.0],
                vec![0.1, 0.9],
                vec![-1.0, 0.2],
                vec![-0.9, 0.0],
            ],
            identities: vec![0, 0, 1, 1, 2, 2],
            distractors: vec![],
            fpr: 0.0,
        }
    }

    #[test]
    fn no_distractors_full_ir_equals_ir() {
        let r = identification_rates(&two_by_three(), &Cosine).unwrap();
        assert_eq!(r.ir, r.full_ir);
        assert_eq!(r.ir, 1.0);
        assert_eq!(r.positive_pairs, 3);
        assert_eq!(r.negative_pairs, 12);
    }

    #[test]
    fn overwhelming_distractor() {
        let mut setup = two_by_three();
        // a copy of every gallery element beats every genuine pair
        setup.distractors = setup.gallery.clone();
        let r = identification_rates(&setup, &Cosine).unwrap();
        assert_eq!(r.full_ir, 0.0);
        assert_eq!(r.ir, 1.0);
    }

    #[test]
    fn no_positive_pairs() {
        let setup = IdentificationSetup {
            gallery: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            identities: vec![0, 1],
            distractors: vec![],
            fpr: 0.1,
        };
        assert!(identification_rates(&setup, &Cosine).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 99.0).unwrap(), 99.0);
        assert_eq!(percentile(&[1.0, 2.0], 50.0).unwrap(), 1.5);
        assert!(percentile::<f64>(&[], 50.0).is_err());
    }

    #[test]
    fn empty_grid() {
        let scorer = |_: &[f64]| 0.0;
        assert!(threshold_search(&two_by_three(), &Cosine, &scorer, &[]).is_err());
    }

    #[test]
    fn infinite_grid_point_never_loses() {
        let scorer = |p: &[f64]| p[0].abs();
        let c = threshold_search(&two_by_three(), &Cosine, &scorer, &[0.5, f64::INFINITY]).unwrap();
        assert!(c.ir >= c.baseline_ir);
        assert!(!c.fallback);
    }
}
