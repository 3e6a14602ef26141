use crate::error::{check_dim, Error, Result};
use crate::isometry::Isometry;
use crate::scalar::{norm, Real};

/// `n` points in `R^d`, stored row-major. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::Empty("point cloud"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form rows of length {dim}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("point cloud"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("point cloud"))?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            check_dim(dim, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        Self::new(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false; kept for API symmetry with collections.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Self::new(self.dim, data)
    }

    /// Appends the rows of `other`.
    pub fn extend(&mut self, other: &Self) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        self.data.extend_from_slice(&other.data);
        Ok(())
    }

    pub fn transformed(&self, theta: &Isometry<T>) -> Result<Self> {
        check_dim(self.dim, theta.dim())?;
        let mut data = Vec::with_capacity(self.data.len());
        for p in self.points() {
            data.extend(theta.apply(p)?);
        }
        Self::new(self.dim, data)
    }

    /// Projects every point onto the unit sphere. Zero rows are left as is.
    pub fn normalized(&self) -> Self {
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.dim) {
            let n = norm(row);
            if n > T::zero() {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
        Self {
            dim: self.dim,
            data,
        }
    }

    pub fn norms(&self) -> Vec<T> {
        self.points().map(norm).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_ragged() {
        assert_eq!(
            PointCloud::<f64>::new(2, vec![]).unwrap_err(),
            Error::Empty("point cloud")
        );
        assert!(PointCloud::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointCloud::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(PointCloud::new(1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn normalization() {
        let c = PointCloud::from_rows(&[[3.0, 4.0], [0.0, 0.0]]).unwrap().normalized();
        assert_eq!(c.point(0), &[0.6, 0.8]);
        assert_eq!(c.point(1), &[0.0, 0.0]);
    }
}
