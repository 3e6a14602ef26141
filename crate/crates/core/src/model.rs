//! The quadric intersection model and its outlier score.

use crate::cloud::PointCloud;
use crate::distance::dist_2;
use crate::error::{check_dim, Error, Result};
use crate::isometry::Isometry;
use crate::polynomial::QuadraticPolynomial;
use crate::scalar::{dot, Real};

/// Anything that assigns an outlier score to a point; larger means more
/// outlying.
pub trait OutlierScorer<T> {
    fn score(&self, p: &[T]) -> Result<T>;

    fn score_all(&self, cloud: &PointCloud<T>) -> Result<Vec<T>>
    where
        T: Real,
    {
        cloud.points().map(|p| self.score(p)).collect()
    }
}

impl<T, F> OutlierScorer<T> for F
where
    F: Fn(&[T]) -> T,
{
    fn score(&self, p: &[T]) -> Result<T> {
        Ok(self(p))
    }
}

/// An ordered collection of `m >= 1` quadrics over a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadricIntersection<T> {
    dim: usize,
    quadrics: Vec<QuadraticPolynomial<T>>,
}

impl<T: Real> QuadricIntersection<T> {
    pub fn new(quadrics: Vec<QuadraticPolynomial<T>>) -> Result<Self> {
        let dim = quadrics.first().ok_or(Error::Empty("quadric list"))?.dim();
        for q in &quadrics {
            check_dim(dim, q.dim())?;
        }
        Ok(Self { dim, quadrics })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of quadrics `m`.
    #[inline]
    pub fn len(&self) -> usize {
        self.quadrics.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.quadrics.is_empty()
    }

    #[inline]
    pub fn quadrics(&self) -> &[QuadraticPolynomial<T>] {
        &self.quadrics
    }

    pub fn into_quadrics(self) -> Vec<QuadraticPolynomial<T>> {
        self.quadrics
    }

    /// Mean order-2 distance from `p` to the individual quadrics.
    pub fn outlier_score(&self, p: &[T]) -> Result<T> {
        check_dim(self.dim, p.len())?;
        let mut acc = T::zero();
        for f in &self.quadrics {
            acc += dist_2(f, p)?;
        }
        Ok(acc / T::from_usize(self.quadrics.len()).expect("count fits"))
    }

    /// Outlier score of every point, in input order.
    pub fn score_batch(&self, cloud: &PointCloud<T>) -> Result<Vec<T>> {
        check_dim(self.dim, cloud.dim())?;
        cloud.points().map(|p| self.outlier_score(p)).collect()
    }

    /// Columns `ṽ(f_k)` of the weighted coefficient matrix.
    pub fn weighted_columns(&self) -> Vec<Vec<T>> {
        self.quadrics.iter().map(|f| f.to_weighted().into_inner()).collect()
    }

    /// Full coefficient vectors `v(f_k)`.
    pub fn coefficient_columns(&self) -> Vec<Vec<T>> {
        self.quadrics.iter().map(|f| f.to_coefficients().into_inner()).collect()
    }

    /// Soft orthogonality penalty `‖ṼᵀṼ - I‖²` over the weighted columns.
    pub fn ortho_penalty(&self) -> T {
        gram_penalty(&self.weighted_columns())
    }

    /// Applies `f ↦ f∘θ` to every quadric.
    pub fn compose(&self, theta: &Isometry<T>) -> Result<Self> {
        let quadrics = self
            .quadrics
            .iter()
            .map(|f| f.compose(theta))
            .collect::<Result<Vec<_>>>()?;
        Self::new(quadrics)
    }
}

impl<T: Real> OutlierScorer<T> for QuadricIntersection<T> {
    fn score(&self, p: &[T]) -> Result<T> {
        self.outlier_score(p)
    }

    fn score_all(&self, cloud: &PointCloud<T>) -> Result<Vec<T>> {
        self.score_batch(cloud)
    }
}

/// `‖GᵀG - I‖²_F` for the matrix whose columns are `cols`.
pub(crate) fn gram_penalty<T: Real>(cols: &[Vec<T>]) -> T {
    let mut acc = T::zero();
    for (k, ck) in cols.iter().enumerate() {
        for (l, cl) in cols.iter().enumerate() {
            let target = if k == l { T::one() } else { T::zero() };
            let r = dot(ck, cl) - target;
            acc += r * r;
        }
    }
    acc
}
