//! Point-to-quadric distance approximations.
//!
//! The order-`k` distance is the unique nonnegative root of
//! `c_0 + c_1 t + ... + c_k t^k`, where `c_0 = |f(p)|` and
//! `c_l = -(Σ_{|I|=l} C_I² / b(I))^{1/2}` with `C_I` the Taylor coefficients of
//! `f` at `p` and `b(I) = |I|!/I!`. For quadratics `c_1 = -‖∇f(p)‖`,
//! `c_2 = -‖f‖_HS` and `c_l = 0` for `l >= 3`, so every order `k >= 2` gives the
//! same value.

use crate::error::{check_dim, Error, Result};
use crate::polynomial::{pairs, QuadraticPolynomial};
use crate::scalar::{norm, Real};

/// Threshold below which `‖f‖_HS`, `‖∇f(p)‖` and `|f(p)|` count as zero.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// `|f(p)|`.
pub fn dist_alg<T: Real>(f: &QuadraticPolynomial<T>, p: &[T]) -> Result<T> {
    Ok(f.evaluate(p)?.abs())
}

/// `|f(p)| / ‖∇f(p)‖`; `+∞` when the gradient vanishes and `f(p) != 0`.
pub fn dist_1<T: Real>(f: &QuadraticPolynomial<T>, p: &[T]) -> Result<T> {
    check_dim(f.dim(), p.len())?;
    let a = f.eval_unchecked(p).abs();
    let gn = norm(&f.grad_unchecked(p));
    Ok(linear_root(a, gn))
}

/// Order-2 (Taylor) distance
/// `(√(h² + |f(p)|·‖f‖_HS) - h) / ‖f‖_HS` with `h = ‖∇f(p)‖/2`.
///
/// Evaluated as `|f(p)| / (√(h² + |f(p)|·‖f‖_HS) + h)`, which avoids the
/// cancellation. Falls back to [`dist_1`] when `‖f‖_HS <= 1e-12`.
pub fn dist_2<T: Real>(f: &QuadraticPolynomial<T>, p: &[T]) -> Result<T> {
    check_dim(f.dim(), p.len())?;
    let a = f.eval_unchecked(p).abs();
    let gn = norm(&f.grad_unchecked(p));
    Ok(quadratic_root(a, gn, f.hs_norm()))
}

/// Order-`k` distance for `k >= 1`, computed from the Taylor coefficients.
pub fn dist_k<T: Real>(f: &QuadraticPolynomial<T>, p: &[T], k: usize) -> Result<T> {
    let c = distance_polynomial(f, p, k)?;
    Ok(if k == 1 {
        linear_root(c[0], -c[1])
    } else {
        quadratic_root(c[0], -c[1], -c[2])
    })
}

/// Coefficients `c_0 ..= c_k` of the order-`k` distance polynomial.
pub fn distance_polynomial<T: Real>(
    f: &QuadraticPolynomial<T>,
    p: &[T],
    k: usize,
) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("distance order must be at least 1".into()));
    }
    check_dim(f.dim(), p.len())?;
    let d = f.dim();
    let mut c = vec![T::zero(); k + 1];
    c[0] = f.eval_unchecked(p).abs();

    // |I| = 1: C_I = ∂f/∂x_i, b(I) = 1.
    let grad = f.grad_unchecked(p);
    c[1] = -grad.iter().fold(T::zero(), |acc, &g| acc + g * g).sqrt();

    if k >= 2 {
        // |I| = 2 with I = e_i + e_j: the second partial is 2A_ij,
        // I! = 2 on the diagonal and 1 otherwise, b(I) = 2!/I!.
        let two = T::two();
        let mut acc = T::zero();
        for (i, j) in pairs(d) {
            let i_fact = if i == j { two } else { T::one() };
            let coeff = two * f.a(i, j) / i_fact;
            let b = two / i_fact;
            acc += coeff * coeff / b;
        }
        c[2] = -acc.sqrt();
    }
    // Taylor coefficients of order >= 3 vanish for quadratics.
    Ok(c)
}

/// Nonnegative root of `a - g t`.
fn linear_root<T: Real>(a: T, g: T) -> T {
    if a == T::zero() {
        T::zero()
    } else if g == T::zero() {
        T::infinity()
    } else {
        a / g
    }
}

/// Nonnegative root of `a - g t - s t²` for `a, g, s >= 0`.
fn quadratic_root<T: Real>(a: T, g: T, s: T) -> T {
    let tol = T::lit(DEGENERACY_TOL);
    if a == T::zero() {
        return T::zero();
    }
    if s <= tol {
        if g <= tol && a > tol {
            return T::infinity();
        }
        return linear_root(a, g);
    }
    let h = g / T::two();
    a / ((h * h + a * s).sqrt() + h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> QuadraticPolynomial<f64> {
        QuadraticPolynomial::new(2, vec![1.0, 0.0, 1.0], vec![0.0, 0.0], -1.0).unwrap()
    }

    #[test]
    fn algebraic() {
        assert_eq!(dist_alg(&circle(), &[2.0, 0.0]).unwrap(), 3.0);
        assert_eq!(dist_alg(&circle(), &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(dist_alg(&circle(), &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn order_one() {
        assert_eq!(dist_1(&circle(), &[2.0, 0.0]).unwrap(), 0.75);
        assert_eq!(dist_1(&circle(), &[0.0, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(dist_1(&circle(), &[0.6, 0.8]).unwrap(), 0.0);
    }

    #[test]
    fn order_two() {
        let s2 = 2f64.sqrt();
        let expected = ((4.0 + 3.0 * s2).sqrt() - 2.0) / s2;
        let got = dist_2(&circle(), &[2.0, 0.0]).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.6159).abs() < 1e-4);
        assert!(got <= 1.0);

        assert_eq!(dist_2(&circle(), &[1.0, 0.0]).unwrap(), 0.0);

        let centre = dist_2(&circle(), &[0.0, 0.0]).unwrap();
        assert!((centre - (1.0 / s2).sqrt()).abs() < 1e-15);
        assert!((centre - 0.8409).abs() < 1e-4);
    }

    #[test]
    fn order_two_degenerate_fallbacks() {
        // affine: falls back to order 1
        let line = QuadraticPolynomial::new(2, vec![0.0; 3], vec![3.0, 4.0], -5.0).unwrap();
        assert_eq!(dist_2(&line, &[0.0, 0.0]).unwrap(), 1.0);
        // nonzero constant
        let constant = QuadraticPolynomial::new(2, vec![0.0; 3], vec![0.0; 2], 2.0).unwrap();
        assert_eq!(dist_2(&constant, &[1.0, 1.0]).unwrap(), f64::INFINITY);
        let zero = QuadraticPolynomial::<f64>::zero(2);
        assert_eq!(dist_2(&zero, &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn order_k() {
        let f = circle();
        let p = [0.3, -1.7];
        assert_eq!(dist_k(&f, &p, 1).unwrap(), dist_1(&f, &p).unwrap());
        for k in 2..6 {
            assert_eq!(dist_k(&f, &p, k).unwrap(), dist_2(&f, &p).unwrap());
        }
        assert!(dist_k(&f, &p, 0).is_err());
    }

    #[test]
    fn second_coefficient_is_hs_norm() {
        // x² + y²: C_(2,0) = C_(0,2) = 1, C_(1,1) = 0, so c_2 = -√2.
        let f = QuadraticPolynomial::new(2, vec![1.0, 0.0, 1.0], vec![0.0; 2], 0.0).unwrap();
        let c = distance_polynomial(&f, &[0.4, 2.0], 2).unwrap();
        assert_eq!(-c[2], 2f64.sqrt());
        assert_eq!(-c[2], f.hs_norm());
        let c4 = distance_polynomial(&f, &[0.4, 2.0], 4).unwrap();
        assert_eq!(&c4[3..], &[0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(dist_2(&circle(), &[1.0]).is_err());
        assert!(dist_1(&circle(), &[1.0]).is_err());
        assert!(dist_k(&circle(), &[1.0], 2).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let f = QuadraticPolynomial::<f32>::new(2, vec![1.0, 0.0, 1.0], vec![0.0; 2], -1.0).unwrap();
        let d = dist_2(&f, &[2.0, 0.0]).unwrap();
        assert!((d - 0.6159).abs() < 1e-4);
    }
}
