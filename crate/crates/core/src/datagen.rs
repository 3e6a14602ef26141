//! Synthetic fixtures: the tennis-ball seam curve, points on simple quadrics,
//! norm-scaled outliers, and a numeric geometric-distance oracle.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cloud::PointCloud;
use crate::error::{check_dim, Error, Result};
use crate::polynomial::QuadraticPolynomial;
use crate::scalar::Real;

/// Parameters of a noisy sample from the tennis-ball seam curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for CurveSpec {
    fn default() -> Self {
        Self {
            a: 0.8,
            b: 0.2,
            n: 99,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

/// `(a cos t + b cos 3t, a sin t − b sin 3t, 2√(ab) sin 2t)`. Lies on the
/// sphere of radius `a + b`.
pub fn tennis_point<T: Real>(t: T, a: T, b: T) -> Result<[T; 3]> {
    if !(a > T::zero() && b > T::zero()) {
        return Err(Error::InvalidArgument("curve parameters a and b must be positive".into()));
    }
    let three = T::lit(3.0);
    Ok([
        a * t.cos() + b * (three * t).cos(),
        a * t.sin() - b * (three * t).sin(),
        T::two() * (a * b).sqrt() * (T::two() * t).sin(),
    ])
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn uniform_angle<R: Rng>(rng: &mut R, turns: f64) -> f64 {
    rng.random::<f64>() * turns * std::f64::consts::TAU
}

fn cloud_from<T: Real>(dim: usize, data: Vec<f64>) -> Result<PointCloud<T>> {
    PointCloud::new(dim, data.into_iter().map(T::lit).collect())
}

fn add_noise<R: Rng>(point: &mut [f64], sigma: f64, rng: &mut R) {
    if sigma > 0.0 {
        for x in point {
            *x += sigma * gauss(rng);
        }
    }
}

fn check_sampling(n: usize, sigma: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sigma {sigma} must be finite and nonnegative")));
    }
    Ok(())
}

/// `spec.n` points at uniform parameters on `[0, 2π)` with isotropic Gaussian
/// noise.
pub fn sample_curve<T: Real>(spec: &CurveSpec) -> Result<PointCloud<T>> {
    check_sampling(spec.n, spec.noise_sigma)?;
    tennis_point(0.0, spec.a, spec.b)?;
    let mut rng = rng(spec.seed);
    let mut data = Vec::with_capacity(spec.n * 3);
    for _ in 0..spec.n {
        let t = uniform_angle(&mut rng, 1.0);
        let mut p = tennis_point(t, spec.a, spec.b)?;
        add_noise(&mut p, spec.noise_sigma, &mut rng);
        data.extend_from_slice(&p);
    }
    cloud_from(3, data)
}

/// Circle of the given radius in the plane.
pub fn sample_circle<T: Real>(n: usize, radius: f64, noise_sigma: f64, seed: u64) -> Result<PointCloud<T>> {
    check_sampling(n, noise_sigma)?;
    let mut rng = rng(seed);
    let mut data = Vec::with_capacity(n * 2);
    for _ in 0..n {
        let t = uniform_angle(&mut rng, 1.0);
        let mut p = [radius * t.cos(), radius * t.sin()];
        add_noise(&mut p, noise_sigma, &mut rng);
        data.extend_from_slice(&p);
    }
    cloud_from(2, data)
}

fn random_direction<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gauss(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform points on the unit sphere in `R^dim`.
pub fn sample_sphere<T: Real>(n: usize, dim: usize, noise_sigma: f64, seed: u64) -> Result<PointCloud<T>> {
    check_sampling(n, noise_sigma)?;
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut rng = rng(seed);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let mut p = random_direction(dim, &mut rng);
        add_noise(&mut p, noise_sigma, &mut rng);
        data.extend_from_slice(&p);
    }
    cloud_from(dim, data)
}

/// The intersection of the unit sphere with the cylinder `x² + y² − x = 0`,
/// parametrized as `((1 + cos s)/2, sin s / 2, sin(s/2))` for `s ∈ [0, 4π)`.
pub fn sample_sphere_cylinder<T: Real>(n: usize, noise_sigma: f64, seed: u64) -> Result<PointCloud<T>> {
    check_sampling(n, noise_sigma)?;
    let mut rng = rng(seed);
    let mut data = Vec::with_capacity(n * 3);
    for _ in 0..n {
        let s = uniform_angle(&mut rng, 2.0);
        let mut p = [(1.0 + s.cos()) / 2.0, s.sin() / 2.0, (s / 2.0).sin()];
        add_noise(&mut p, noise_sigma, &mut rng);
        data.extend_from_slice(&p);
    }
    cloud_from(3, data)
}

/// Uniform points in the ball of the given radius.
pub fn sample_ball<T: Real>(n: usize, dim: usize, radius: f64, seed: u64) -> Result<PointCloud<T>> {
    check_sampling(n, 0.0)?;
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut rng = rng(seed);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        data.extend(random_direction(dim, &mut rng).into_iter().map(|x| r * x));
    }
    cloud_from(dim, data)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Appends `count` points in uniformly random directions whose norm is
/// `norm_factor` times the median norm of `cloud`. Returns the new cloud and
/// the indices of the appended rows.
pub fn inject_outliers<T: Real>(
    cloud: &PointCloud<T>,
    count: usize,
    norm_factor: f64,
    seed: u64,
) -> Result<(PointCloud<T>, Vec<usize>)> {
    let mut out = cloud.clone();
    if count == 0 {
        return Ok((out, Vec::new()));
    }
    let radius = norm_factor * median(cloud.norms().into_iter().map(|x| x.as_f64()).collect());
    let mut rng = rng(seed);
    let dim = cloud.dim();
    let mut data = Vec::with_capacity(count * dim);
    for _ in 0..count {
        data.extend(random_direction(dim, &mut rng).into_iter().map(|x| radius * x));
    }
    out.extend(&cloud_from(dim, data)?)?;
    Ok((out, (cloud.len()..cloud.len() + count).collect()))
}

/// `true` at the given indices, `false` elsewhere.
pub fn labels_from_indices(len: usize, indices: &[usize]) -> Vec<bool> {
    let mut labels = vec![false; len];
    for &i in indices {
        if i < len {
            labels[i] = true;
        }
    }
    labels
}

/// Numeric upper bound on the Euclidean distance from a point to the zero set
/// of a quadric.
///
/// Candidates come from two independent searches. The first solves the
/// stationarity conditions `x − p + λ∇f(x) = 0`, `f(x) = 0` exactly: with
/// `x(λ) = (I + 2λA)⁻¹(p − λb)`, clearing denominators in `f(x(λ)) = 0` leaves
/// a polynomial of degree at most `2d` whose real roots are found from its
/// companion matrix. The second runs restarts that minimize
/// `‖x − p‖² + μ f(x)²` by damped Newton steps for `μ = 1, 10, …, 10⁸`.
/// Every candidate is projected onto `f = 0` with Newton steps along the
/// gradient, and the result is the smallest `‖x − p‖` among candidates that
/// ended on the zero set (`|f(x)| < 1e-8`). Since those points are feasible
/// it never undershoots the true distance by more than the polish tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometricOracle {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for GeometricOracle {
    fn default() -> Self {
        Self {
            restarts: 8,
            steps: 60,
            seed: 0,
        }
    }
}

const FEASIBLE_TOL: f64 = 1e-8;

struct Quadric64 {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
}

impl Quadric64 {
    fn new<T: Real>(f: &QuadraticPolynomial<T>) -> Self {
        let d = f.dim();
        let a = DMatrix::from_fn(d, d, |i, j| f.a(i, j).as_f64());
        let b = DVector::from_iterator(d, f.lin().iter().map(|x| x.as_f64()));
        Self {
            a,
            b,
            c: f.constant().as_f64(),
        }
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.a * x)) + self.b.dot(x) + self.c
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.a * x) + &self.b
    }
}

impl GeometricOracle {
    pub fn distance<T: Real>(&self, f: &QuadraticPolynomial<T>, p: &[T]) -> Result<T> {
        check_dim(f.dim(), p.len())?;
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("oracle needs at least one restart".into()));
        }
        let q = Quadric64::new(f);
        let d = f.dim();
        let p = DVector::from_iterator(d, p.iter().map(|x| x.as_f64()));
        if q.value(&p) == 0.0 {
            return Ok(T::zero());
        }
        let scale = p.norm().max(1.0);
        let mut rng = rng(self.seed);
        let mut best: Option<f64> = None;
        for x in stationary_candidates(&q, &p) {
            if let Some(x) = project(&q, x) {
                let dist = (&x - &p).norm();
                best = Some(best.map_or(dist, |b| b.min(dist)));
            }
        }
        for r in 0..self.restarts {
            let start = if r == 0 {
                p.clone()
            } else {
                &p + DVector::from_iterator(d, (0..d).map(|_| scale * gauss(&mut rng)))
            };
            if let Some(x) = self.descend(&q, &p, start) {
                let dist = (&x - &p).norm();
                best = Some(best.map_or(dist, |b| b.min(dist)));
            }
        }
        best.map(T::lit).ok_or(Error::NoFeasiblePoint)
    }

    fn descend(&self, q: &Quadric64, p: &DVector<f64>, mut x: DVector<f64>) -> Option<DVector<f64>> {
        let d = x.len();
        let objective = |x: &DVector<f64>, mu: f64| {
            let fx = q.value(x);
            (x - p).norm_squared() + mu * fx * fx
        };
        let mut mu = 1.0;
        while mu <= 1e8 {
            let mut damping = 1e-3;
            for _ in 0..self.steps {
                let fx = q.value(&x);
                let g = q.gradient(&x);
                let grad = 2.0 * (&x - p) + 2.0 * mu * fx * &g;
                if grad.norm() < 1e-14 * (1.0 + mu) {
                    break;
                }
                let hess = DMatrix::<f64>::identity(d, d) * 2.0
                    + 2.0 * mu * (&g * g.transpose() + 2.0 * fx * &q.a);
                let current = objective(&x, mu);
                let mut moved = false;
                for _ in 0..40 {
                    let damped = &hess + DMatrix::<f64>::identity(d, d) * (damping * (1.0 + mu));
                    if let Some(step) = damped.lu().solve(&(-&grad)) {
                        let candidate = &x + step;
                        if objective(&candidate, mu) < current {
                            x = candidate;
                            damping = (damping / 3.0).max(1e-12);
                            moved = true;
                            break;
                        }
                    }
                    damping *= 4.0;
                }
                if !moved {
                    break;
                }
            }
            mu *= 10.0;
        }
        project(q, x)
    }
}

/// Newton steps along the gradient onto `f = 0`.
fn project(q: &Quadric64, mut x: DVector<f64>) -> Option<DVector<f64>> {
    for _ in 0..50 {
        let fx = q.value(&x);
        if fx.abs() < 1e-15 {
            break;
        }
        let g = q.gradient(&x);
        let gg = g.norm_squared();
        if gg < 1e-300 {
            return None;
        }
        x -= (fx / gg) * g;
    }
    (q.value(&x).abs() < FEASIBLE_TOL && x.iter().all(|v| v.is_finite())).then_some(x)
}

/// Polynomials as coefficient vectors, lowest degree first.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(acc: &mut Vec<f64>, p: &[f64]) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (a, x) in acc.iter_mut().zip(p) {
        *a += x;
    }
}

/// Real roots from the eigenvalues of the companion matrix.
fn real_roots(poly: &[f64]) -> Vec<f64> {
    let scale = poly.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut poly = poly.to_vec();
    while poly.len() > 1 && poly[poly.len() - 1].abs() <= 1e-14 * scale {
        poly.pop();
    }
    let n = poly.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = poly[n];
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -poly[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

/// Points `x(λ)` for every real root `λ` of the cleared stationarity
/// polynomial, in original coordinates.
fn stationary_candidates(q: &Quadric64, p: &DVector<f64>) -> Vec<DVector<f64>> {
    let eig = q.a.clone().symmetric_eigen();
    let (alpha, basis) = (&eig.eigenvalues, &eig.eigenvectors);
    let pt = basis.transpose() * p;
    let bt = basis.transpose() * &q.b;
    let d = alpha.len();
    // y_i(λ) = (p_i − λ b_i) / (1 + 2λα_i)
    let numer: Vec<[f64; 2]> = (0..d).map(|i| [pt[i], -bt[i]]).collect();
    let denom: Vec<[f64; 2]> = (0..d).map(|i| [1.0, 2.0 * alpha[i]]).collect();
    let others = |skip: Option<usize>| {
        (0..d)
            .filter(|&j| Some(j) != skip)
            .fold(vec![1.0], |acc, j| poly_mul(&acc, &poly_mul(&denom[j], &denom[j])))
    };
    let mut total = poly_mul(&[q.c], &others(None));
    for i in 0..d {
        let rest = others(Some(i));
        let quad = poly_mul(&poly_mul(&numer[i], &numer[i]), &[alpha[i]]);
        poly_add(&mut total, &poly_mul(&quad, &rest));
        let lin = poly_mul(&poly_mul(&numer[i], &denom[i]), &[bt[i]]);
        poly_add(&mut total, &poly_mul(&lin, &rest));
    }
    real_roots(&total)
        .into_iter()
        .filter_map(|lambda| {
            let y = DVector::from_iterator(
                d,
                (0..d).map(|i| (pt[i] - lambda * bt[i]) / (1.0 + 2.0 * lambda * alpha[i])),
            );
            let x = basis * y;
            x.iter().all(|v| v.is_finite()).then_some(x)
        })
        .collect()
}

/// [`GeometricOracle::distance`] with explicit restart and step counts.
pub fn geometric_distance_oracle<T: Real>(
    f: &QuadraticPolynomial<T>,
    p: &[T],
    restarts: usize,
    steps: usize,
) -> Result<T> {
    GeometricOracle {
        restarts,
        steps,
        seed: 0,
    }
    .distance(f, p)
}
