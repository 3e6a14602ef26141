//! Linear and kernel baselines: PCA subspaces, the degree-2 feature maps, the
//! exact solution of the squared-algebraic-distance problem, and the
//! embedding-norm score.
//!
//! The decompositions run in `f64` through `nalgebra` regardless of `T`.

use nalgebra::DMatrix;

use crate::cloud::PointCloud;
use crate::error::{check_dim, Error, Result};
use crate::model::{OutlierScorer, QuadricIntersection};
use crate::polynomial::{coefficient_len, packed_len, pairs, QuadraticPolynomial};
use crate::scalar::{dot, norm, Real};

/// Right singular vectors sorted by decreasing singular value, as columns of
/// a `cols × cols` matrix, plus the singular values (zero-padded to `cols`).
fn right_singular_basis(rows: usize, cols: usize, data: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    // Zero rows leave singular values and right vectors unchanged, and make
    // the thin SVD return a full basis.
    let padded_rows = rows.max(cols);
    let mut m = DMatrix::<f64>::zeros(padded_rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = data[r * cols + c];
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..cols).map(|c| v_t[(i, c)]).collect())
        .collect();
    (values, vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<T> {
    dim: usize,
    /// Orthonormal basis vectors `v_1 .. v_k` of the fitted subspace.
    basis: Vec<Vec<T>>,
    centered: bool,
    mean: Vec<T>,
    /// All `d` singular values of the (centered) data, decreasing.
    singular_values: Vec<T>,
}

/// Fits the `k`-dimensional principal subspace.
///
/// With `centered = false` the subspace passes through the origin, which is
/// the variant equivalent to the kernel formulation.
pub fn pca_fit<T: Real>(cloud: &PointCloud<T>, k: usize, centered: bool) -> Result<PcaModel<T>> {
    let d = cloud.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("k={k} must lie in 1..={d}")));
    }
    let n = cloud.len();
    let mut mean = vec![0.0; d];
    if centered {
        for p in cloud.points() {
            for (m, &x) in mean.iter_mut().zip(p) {
                *m += x.as_f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
    }
    let data: Vec<f64> = cloud
        .points()
        .flat_map(|p| p.iter().zip(&mean).map(|(&x, &m)| x.as_f64() - m).collect::<Vec<_>>())
        .collect();
    let (values, vectors) = right_singular_basis(n, d, &data);
    let to_t = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
    Ok(PcaModel {
        dim: d,
        basis: vectors[..k].iter().map(|v| to_t(v)).collect(),
        centered,
        mean: to_t(&mean),
        singular_values: to_t(&values),
    })
}

impl<T: Real> PcaModel<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    pub fn centered(&self) -> bool {
        self.centered
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    /// Coordinates `⟨p - mean, v_j⟩` in the subspace.
    pub fn project(&self, p: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, p.len())?;
        let x: Vec<T> = p.iter().zip(&self.mean).map(|(&a, &m)| a - m).collect();
        Ok(self.basis.iter().map(|v| dot(&x, v)).collect())
    }

    /// Distance from `p` to the fitted affine subspace, `‖x - proj(x)‖` with
    /// `x = p - mean`.
    pub fn distance(&self, p: &[T]) -> Result<T> {
        let coords = self.project(p)?;
        let mut r: Vec<T> = p.iter().zip(&self.mean).map(|(&a, &m)| a - m).collect();
        for (c, v) in coords.iter().zip(&self.basis) {
            for (ri, &vi) in r.iter_mut().zip(v) {
                *ri -= *c * vi;
            }
        }
        Ok(norm(&r))
    }
}

impl<T: Real> OutlierScorer<T> for PcaModel<T> {
    fn score(&self, p: &[T]) -> Result<T> {
        self.distance(p)
    }
}

/// `φ(p)`: pairwise products, coordinates, then `1`; `⟨φ(p), v(f)⟩ = f(p)`.
pub fn feature_map<T: Real>(p: &[T]) -> Vec<T> {
    let d = p.len();
    let mut out = Vec::with_capacity(coefficient_len(d));
    out.extend(pairs(d).map(|(i, j)| p[i] * p[j]));
    out.extend_from_slice(p);
    out.push(T::one());
    out
}

/// `φ̃(p)`: the monomials of [`feature_map`] in the same order, with the
/// cross products `p_i p_j (i < j)` and the coordinates scaled by `√2`, so
/// that `⟨φ̃(x), φ̃(y)⟩ = (⟨x, y⟩ + 1)²`.
pub fn feature_map_tilde<T: Real>(p: &[T]) -> Vec<T> {
    let d = p.len();
    let sqrt2 = T::two().sqrt();
    let mut out = feature_map(p);
    for (slot, (i, j)) in out.iter_mut().zip(pairs(d)) {
        if i != j {
            *slot *= sqrt2;
        }
    }
    let np = packed_len(d);
    out[np..np + d].iter_mut().for_each(|x| *x *= sqrt2);
    out
}

/// Row `j` is `φ(p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn from_cloud(cloud: &PointCloud<T>) -> Self {
        let cols = coefficient_len(cloud.dim());
        let data = cloud.points().flat_map(feature_map).collect();
        Self {
            rows: cloud.len(),
            cols,
            data,
        }
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }
}

#[derive(Debug, Clone)]
pub struct QBaseSolution<T> {
    /// Quadrics with Euclidean-orthonormal coefficient vectors.
    pub model: QuadricIntersection<T>,
    /// `Σ_j Σ_k f_k(p_j)²` at the optimum: the sum of the `m` smallest squared
    /// singular values of the feature matrix.
    pub objective: T,
    /// All `D` singular values of the feature matrix, decreasing.
    pub singular_values: Vec<T>,
}

/// Exact minimizer of `Σ_j Σ_k f_k(p_j)²` over Euclidean-orthonormal
/// coefficient vectors: the `m` right singular vectors of the feature matrix
/// with the smallest singular values (non-centered PCA in feature space).
///
/// Dense SVD of an `n × D` matrix with `D = O(d²)`; intended for small `d`.
pub fn qbase_exact<T: Real>(cloud: &PointCloud<T>, m: usize) -> Result<QBaseSolution<T>> {
    let big_d = coefficient_len(cloud.dim());
    if m == 0 || m > big_d {
        return Err(Error::InvalidArgument(format!("m={m} must lie in 1..={big_d}")));
    }
    let features = FeatureMatrix::from_cloud(cloud);
    let data: Vec<f64> = features.data.iter().map(|x| x.as_f64()).collect();
    let (values, vectors) = right_singular_basis(features.rows, big_d, &data);

    let quadrics = vectors[big_d - m..]
        .iter()
        .rev()
        .map(|v| {
            let coeffs: Vec<T> = v.iter().map(|&x| T::lit(x)).collect();
            QuadraticPolynomial::from_coefficients(&coeffs)
        })
        .collect::<Result<Vec<_>>>()?;
    let objective = values[big_d - m..].iter().map(|s| s * s).sum::<f64>();
    Ok(QBaseSolution {
        model: QuadricIntersection::new(quadrics)?,
        objective: T::lit(objective),
        singular_values: values.into_iter().map(T::lit).collect(),
    })
}

/// Sign convention of the norm score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormSign {
    /// `score = -‖p‖`: low-norm embeddings are outliers.
    #[default]
    LowNormOutlier,
    /// `score = ‖p‖`.
    HighNormOutlier,
}

/// Embedding-norm outlier score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NormScore {
    pub sign: NormSign,
}

impl NormScore {
    pub fn new(sign: NormSign) -> Self {
        Self { sign }
    }
}

pub fn norm_score<T: Real>(p: &[T], sign: NormSign) -> T {
    let n = norm(p);
    match sign {
        NormSign::LowNormOutlier => -n,
        NormSign::HighNormOutlier => n,
    }
}

impl<T: Real> OutlierScorer<T> for NormScore {
    fn score(&self, p: &[T]) -> Result<T> {
        Ok(norm_score(p, self.sign))
    }
}
