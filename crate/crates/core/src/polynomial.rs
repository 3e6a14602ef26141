//! Quadratic polynomials `f(x) = xᵀAx + b·x + c` and their coefficient
//! representations.
//!
//! Monomials are ordered canonically: the pairwise products `x_i x_j` for
//! `i <= j` in lexicographic order, then the coordinates `x_1 .. x_d`, then the
//! constant. The packed upper triangle of `A` uses the same pair order, so the
//! `k`-th packed entry corresponds to the `k`-th pairwise monomial.

use std::ops::Deref;

use crate::error::{check_dim, Error, Result};
use crate::isometry::Isometry;
use crate::scalar::{dot, Real};

/// Number of pairs `(i, j)` with `i <= j < d`.
#[inline]
pub fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Number of monomials of degree at most two in `d` variables.
#[inline]
pub fn coefficient_len(d: usize) -> usize {
    (d * d + 3 * d) / 2 + 1
}

/// Position of the pair `(i, j)`, `i <= j`, in the lexicographic pair order.
#[inline]
pub fn packed_index(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < d);
    i * d - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Iterates the lexicographic pairs `(i, j)` with `i <= j < d`.
pub fn pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |i| (i..d).map(move |j| (i, j)))
}

/// A quadratic polynomial in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPolynomial<T> {
    dim: usize,
    quad: Vec<T>,
    lin: Vec<T>,
    constant: T,
}

/// Coefficient vector `v(f)` in canonical monomial order.
///
/// Off-diagonal entries are the monomial coefficients `α_ij = 2 A_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<T>(Vec<T>);

/// Quadratic-part coefficients with off-diagonal entries divided by `√2`.
///
/// The Euclidean inner product of two of these equals the Hilbert–Schmidt
/// inner product of the source polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuadVector<T>(Vec<T>);

macro_rules! vec_newtype {
    ($name:ident) => {
        impl<T> $name<T> {
            pub fn into_inner(self) -> Vec<T> {
                self.0
            }
        }

        impl<T> Deref for $name<T> {
            type Target = [T];
            fn deref(&self) -> &[T] {
                &self.0
            }
        }

        impl<T> From<$name<T>> for Vec<T> {
            fn from(v: $name<T>) -> Vec<T> {
                v.0
            }
        }
    };
}

vec_newtype!(CoefficientVector);
vec_newtype!(WeightedQuadVector);

impl<T: Real> CoefficientVector<T> {
    pub fn new(entries: Vec<T>) -> Self {
        Self(entries)
    }

    /// Recovers `d` from the length `D = (d² + 3d)/2 + 1`.
    pub fn dim(&self) -> Result<usize> {
        dim_from_coefficient_len(self.0.len())
    }
}

impl<T: Real> WeightedQuadVector<T> {
    pub fn new(entries: Vec<T>) -> Self {
        Self(entries)
    }
}

pub(crate) fn dim_from_coefficient_len(len: usize) -> Result<usize> {
    let mut d = 0;
    while coefficient_len(d) < len {
        d += 1;
    }
    if d == 0 || coefficient_len(d) != len {
        return Err(Error::InvalidArgument(format!(
            "{len} is not a valid coefficient vector length"
        )));
    }
    Ok(d)
}

fn check_finite<T: Real>(xs: &[T], what: &'static str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl<T: Real> QuadraticPolynomial<T> {
    /// Builds a polynomial from the packed upper triangle of `A`.
    pub fn new(dim: usize, quad: Vec<T>, lin: Vec<T>, constant: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        check_dim(packed_len(dim), quad.len())?;
        check_dim(dim, lin.len())?;
        check_finite(&quad, "quadratic part")?;
        check_finite(&lin, "linear part")?;
        check_finite(&[constant], "constant")?;
        Ok(Self {
            dim,
            quad,
            lin,
            constant,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            quad: vec![T::zero(); packed_len(dim)],
            lin: vec![T::zero(); dim],
            constant: T::zero(),
        }
    }

    /// Builds a polynomial from a dense row-major `A`, which must be exactly
    /// symmetric.
    pub fn from_dense(dim: usize, a: &[T], lin: Vec<T>, constant: T) -> Result<Self> {
        check_dim(dim * dim, a.len())?;
        let mut quad = Vec::with_capacity(packed_len(dim));
        for (i, j) in pairs(dim) {
            if a[i * dim + j] != a[j * dim + i] {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
            quad.push(a[i * dim + j]);
        }
        Self::new(dim, quad, lin, constant)
    }

    /// Builds a polynomial from its coefficient vector `v(f)`.
    pub fn from_coefficients(coeffs: &[T]) -> Result<Self> {
        let dim = dim_from_coefficient_len(coeffs.len())?;
        let p = packed_len(dim);
        let two = T::two();
        let quad = pairs(dim)
            .zip(&coeffs[..p])
            .map(|((i, j), &c)| if i == j { c } else { c / two })
            .collect();
        Self::new(dim, quad, coeffs[p..p + dim].to_vec(), coeffs[p + dim])
    }

    /// Builds the polynomial with the given weighted quadratic part and the
    /// given linear and constant parts.
    pub fn from_weighted(dim: usize, weighted: &[T], lin: Vec<T>, constant: T) -> Result<Self> {
        check_dim(packed_len(dim), weighted.len())?;
        let sqrt2 = T::two().sqrt();
        let quad = pairs(dim)
            .zip(weighted)
            .map(|((i, j), &w)| if i == j { w } else { w / sqrt2 })
            .collect();
        Self::new(dim, quad, lin, constant)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Symmetric accessor: `a(i, j) == a(j, i)`.
    #[inline]
    pub fn a(&self, i: usize, j: usize) -> T {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.quad[packed_index(self.dim, i, j)]
    }

    /// Packed upper triangle of `A` in lexicographic pair order.
    #[inline]
    pub fn quad_packed(&self) -> &[T] {
        &self.quad
    }

    #[inline]
    pub fn lin(&self) -> &[T] {
        &self.lin
    }

    #[inline]
    pub fn constant(&self) -> T {
        self.constant
    }

    /// Dense row-major copy of `A`.
    pub fn dense_quad(&self) -> Vec<T> {
        let d = self.dim;
        let mut a = vec![T::zero(); d * d];
        for ((i, j), &q) in pairs(d).zip(&self.quad) {
            a[i * d + j] = q;
            a[j * d + i] = q;
        }
        a
    }

    pub fn to_coefficients(&self) -> CoefficientVector<T> {
        let two = T::two();
        let mut v = Vec::with_capacity(coefficient_len(self.dim));
        v.extend(
            pairs(self.dim)
                .zip(&self.quad)
                .map(|((i, j), &q)| if i == j { q } else { two * q }),
        );
        v.extend_from_slice(&self.lin);
        v.push(self.constant);
        CoefficientVector(v)
    }

    pub fn to_weighted(&self) -> WeightedQuadVector<T> {
        let sqrt2 = T::two().sqrt();
        WeightedQuadVector(
            pairs(self.dim)
                .zip(&self.quad)
                .map(|((i, j), &q)| if i == j { q } else { sqrt2 * q })
                .collect(),
        )
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            dim: self.dim,
            quad: self.quad.iter().map(|&q| q * k).collect(),
            lin: self.lin.iter().map(|&b| b * k).collect(),
            constant: self.constant * k,
        }
    }

    /// `Ap` for the symmetric matrix `A`.
    pub(crate) fn quad_apply(&self, p: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut out = vec![T::zero(); d];
        for ((i, j), &q) in pairs(d).zip(&self.quad) {
            out[i] += q * p[j];
            if i != j {
                out[j] += q * p[i];
            }
        }
        out
    }

    /// `f(p) = pᵀAp + b·p + c`.
    pub fn evaluate(&self, p: &[T]) -> Result<T> {
        check_dim(self.dim, p.len())?;
        Ok(self.eval_unchecked(p))
    }

    pub(crate) fn eval_unchecked(&self, p: &[T]) -> T {
        let two = T::two();
        let mut acc = T::zero();
        for ((i, j), &q) in pairs(self.dim).zip(&self.quad) {
            let term = q * p[i] * p[j];
            acc += if i == j { term } else { two * term };
        }
        acc + dot(&self.lin, p) + self.constant
    }

    /// `∇f(p) = 2Ap + b`.
    pub fn gradient(&self, p: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, p.len())?;
        Ok(self.grad_unchecked(p))
    }

    pub(crate) fn grad_unchecked(&self, p: &[T]) -> Vec<T> {
        let two = T::two();
        self.quad_apply(p)
            .into_iter()
            .zip(&self.lin)
            .map(|(ap, &b)| two * ap + b)
            .collect()
    }

    /// Hilbert–Schmidt inner product `Σ_ij A_ij B_ij` of the quadratic parts.
    pub fn hs_inner(&self, other: &Self) -> Result<T> {
        check_dim(self.dim, other.dim)?;
        let two = T::two();
        let mut acc = T::zero();
        for ((i, j), (&a, &b)) in pairs(self.dim).zip(self.quad.iter().zip(&other.quad)) {
            acc += if i == j { a * b } else { two * (a * b) };
        }
        Ok(acc)
    }

    /// Hilbert–Schmidt seminorm; zero for affine polynomials.
    pub fn hs_norm(&self) -> T {
        self.hs_inner(self).expect("same dimension").sqrt()
    }

    /// The composition `f∘θ`, whose matrix is `QᵀAQ`.
    pub fn compose(&self, theta: &Isometry<T>) -> Result<Self> {
        check_dim(self.dim, theta.dim())?;
        let d = self.dim;
        let q = theta.rotation();
        let v = theta.translation_vector();
        let a = self.dense_quad();

        // AQ, then Qᵀ(AQ); only the upper triangle is kept.
        let mut aq = vec![T::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let aik = a[i * d + k];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..d {
                    aq[i * d + j] += aik * q[k * d + j];
                }
            }
        }
        let quad = pairs(d)
            .map(|(i, j)| (0..d).fold(T::zero(), |acc, k| acc + q[k * d + i] * aq[k * d + j]))
            .collect();

        // (2Av + b)ᵀ Q
        let two = T::two();
        let av = self.quad_apply(v);
        let w: Vec<T> = av.iter().zip(&self.lin).map(|(&x, &b)| two * x + b).collect();
        let lin = (0..d)
            .map(|j| (0..d).fold(T::zero(), |acc, i| acc + w[i] * q[i * d + j]))
            .collect();

        Self::new(d, quad, lin, self.eval_unchecked(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn circle() -> QuadraticPolynomial<f64> {
        QuadraticPolynomial::new(2, vec![1.0, 0.0, 1.0], vec![0.0, 0.0], -1.0).unwrap()
    }

    fn square_of_sum() -> QuadraticPolynomial<f64> {
        // x² + 2xy + y²
        QuadraticPolynomial::from_coefficients(&[1.0, 2.0, 1.0, 0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn packed_index_matches_pair_order() {
        for d in 1..7 {
            for (k, (i, j)) in pairs(d).enumerate() {
                assert_eq!(packed_index(d, i, j), k);
            }
            assert_eq!(pairs(d).count(), packed_len(d));
        }
    }

    #[test]
    fn lengths() {
        assert_eq!(coefficient_len(2), 6);
        assert_eq!(coefficient_len(3), 10);
        assert_eq!(dim_from_coefficient_len(10).unwrap(), 3);
        assert!(dim_from_coefficient_len(7).is_err());
        assert!(dim_from_coefficient_len(1).is_err());
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(circle().evaluate(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(circle().evaluate(&[2.0, 0.0]).unwrap(), 3.0);
        // (1 + 1)² by direct expansion
        assert_eq!(square_of_sum().evaluate(&[1.0, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(circle().gradient(&[2.0, 0.0]).unwrap(), vec![4.0, 0.0]);
        assert_eq!(circle().gradient(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        // ∂/∂x (x+y)² = 2(x+y), same for y
        assert_eq!(square_of_sum().gradient(&[1.0, 0.0]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = circle().evaluate(&[1.0, 2.0, 3.0]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 3 });
        assert!(circle().gradient(&[1.0]).is_err());
    }

    #[test]
    fn hs_examples() {
        let f = QuadraticPolynomial::new(2, vec![1.0, 0.0, 1.0], vec![0.0; 2], 0.0).unwrap();
        let g = QuadraticPolynomial::new(2, vec![1.0, 0.0, -1.0], vec![0.0; 2], 0.0).unwrap();
        assert_eq!(f.hs_inner(&g).unwrap(), 0.0);
        assert_eq!(square_of_sum().hs_norm(), 2.0);
        let affine = QuadraticPolynomial::new(2, vec![0.0; 3], vec![3.0, -1.0], 5.0).unwrap();
        assert_eq!(affine.hs_norm(), 0.0);
    }

    #[test]
    fn symmetric_accessor() {
        let f = QuadraticPolynomial::from_dense(2, &[1.0, 0.5, 0.5, 3.0], vec![0.0; 2], 0.0).unwrap();
        assert_eq!(f.a(0, 1), 0.5);
        assert_eq!(f.a(1, 0), 0.5);
        assert!(QuadraticPolynomial::from_dense(2, &[1.0, 0.5, 0.4, 3.0], vec![0.0; 2], 0.0).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            QuadraticPolynomial::new(1, vec![f64::NAN], vec![0.0], 0.0).unwrap_err(),
            Error::NonFinite("quadratic part")
        );
        assert!(QuadraticPolynomial::new(1, vec![0.0], vec![0.0], f64::INFINITY).is_err());
    }

    #[test]
    fn coefficient_layout() {
        // x² + 2xy + y² has α_xy = 2, stored as A_xy = 1.
        let f = square_of_sum();
        assert_eq!(f.a(0, 1), 1.0);
        assert_eq!(&*f.to_coefficients(), &[1.0, 2.0, 1.0, 0.0, 0.0, 0.0]);
        let w = f.to_weighted();
        assert!((w[1] - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn compose_identity_is_noop() {
        let f = circle();
        let id = Isometry::identity(2);
        assert_eq!(f.compose(&id).unwrap(), f);
    }

    #[test]
    fn compose_translation() {
        let f = circle();
        let shift = Isometry::translation(vec![10.0, 0.0]);
        let g = f.compose(&shift).unwrap();
        // (x + 10)² + y² - 1 = x² + y² + 20x + 99
        assert_eq!(&*g.to_coefficients(), &[1.0, 0.0, 1.0, 20.0, 0.0, 99.0]);
        assert_eq!(g.hs_norm(), f.hs_norm());
    }

    #[test]
    fn compose_rotation() {
        let f = QuadraticPolynomial::new(2, vec![1.0, 0.0, -1.0], vec![0.0; 2], 0.0).unwrap();
        let rot = Isometry::new(vec![0.0, -1.0, 1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let g = f.compose(&rot).unwrap();
        assert_eq!(&*g.to_coefficients(), &[-1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.hs_inner(&g).unwrap(), -2.0);
    }
}
