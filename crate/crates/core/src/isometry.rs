//! Euclidean isometries `θ(x) = Qx + v`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::scalar::Real;

/// Maximum entrywise deviation of `QᵀQ` from the identity accepted for `f64`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Isometry<T> {
    dim: usize,
    /// Row-major `d × d`.
    rotation: Vec<T>,
    translation: Vec<T>,
}

fn orthogonality_tol<T: Real>() -> T {
    T::lit(ORTHOGONALITY_TOL).max(T::lit(64.0) * T::epsilon())
}

/// `max |QᵀQ - I|` for a row-major square matrix.
pub fn orthogonality_defect<T: Real>(d: usize, q: &[T]) -> T {
    let mut worst = T::zero();
    for i in 0..d {
        for j in 0..d {
            let g = (0..d).fold(T::zero(), |acc, k| acc + q[k * d + i] * q[k * d + j]);
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

impl<T: Real> Isometry<T> {
    /// `rotation` is row-major and must be orthogonal.
    pub fn new(rotation: Vec<T>, translation: Vec<T>) -> Result<Self> {
        let dim = translation.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        check_dim(dim * dim, rotation.len())?;
        if rotation.iter().chain(&translation).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("isometry"));
        }
        let defect = orthogonality_defect(dim, &rotation);
        if defect > orthogonality_tol::<T>() {
            return Err(Error::NotOrthogonal(defect.as_f64()));
        }
        Ok(Self {
            dim,
            rotation,
            translation,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut rotation = vec![T::zero(); dim * dim];
        for i in 0..dim {
            rotation[i * dim + i] = T::one();
        }
        Self {
            dim,
            rotation,
            translation: vec![T::zero(); dim],
        }
    }

    pub fn translation(v: Vec<T>) -> Self {
        let mut iso = Self::identity(v.len());
        iso.translation = v;
        iso
    }

    /// Random isometry: `Q` from Gram–Schmidt QR of a Gaussian matrix,
    /// translation Gaussian with standard deviation `shift_scale`.
    pub fn random<R: Rng + ?Sized>(dim: usize, shift_scale: f64, rng: &mut R) -> Self {
        loop {
            let g: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
            if let Some(q) = orthonormalize_columns(dim, dim, &g) {
                let rotation = q.into_iter().map(T::lit).collect();
                let translation = (0..dim)
                    .map(|_| T::lit(shift_scale * rng.sample::<f64, _>(StandardNormal)))
                    .collect();
                return Self {
                    dim,
                    rotation,
                    translation,
                };
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn rotation(&self) -> &[T] {
        &self.rotation
    }

    #[inline]
    pub fn translation_vector(&self) -> &[T] {
        &self.translation
    }

    /// `θ(p) = Qp + v`.
    pub fn apply(&self, p: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, p.len())?;
        let d = self.dim;
        Ok((0..d)
            .map(|i| {
                (0..d).fold(self.translation[i], |acc, k| acc + self.rotation[i * d + k] * p[k])
            })
            .collect())
    }

    /// `θ⁻¹(y) = Qᵀy - Qᵀv`.
    pub fn inverse(&self) -> Self {
        let d = self.dim;
        let mut qt = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                qt[i * d + j] = self.rotation[j * d + i];
            }
        }
        let translation = (0..d)
            .map(|i| -(0..d).fold(T::zero(), |acc, k| acc + qt[i * d + k] * self.translation[k]))
            .collect();
        Self {
            dim: d,
            rotation: qt,
            translation,
        }
    }
}

/// Modified Gram–Schmidt on the columns of a row-major `rows × cols` matrix.
/// Returns `None` when the columns are numerically dependent.
pub(crate) fn orthonormalize_columns(rows: usize, cols: usize, m: &[f64]) -> Option<Vec<f64>> {
    let mut cols_v: Vec<Vec<f64>> = (0..cols)
        .map(|c| (0..rows).map(|r| m[r * cols + c]).collect())
        .collect();
    for c in 0..cols {
        for prev in 0..c {
            let (head, tail) = cols_v.split_at_mut(c);
            let proj: f64 = head[prev].iter().zip(&tail[0]).map(|(a, b)| a * b).sum();
            for (x, p) in tail[0].iter_mut().zip(&head[prev]) {
                *x -= proj * p;
            }
        }
        let n: f64 = cols_v[c].iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-10 {
            return None;
        }
        cols_v[c].iter_mut().for_each(|x| *x /= n);
    }
    let mut out = vec![0.0; rows * cols];
    for (c, col) in cols_v.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            out[r * cols + c] = x;
        }
    }
    Some(out)
}
