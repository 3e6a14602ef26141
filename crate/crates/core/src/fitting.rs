//! Losses, analytic gradients and the minibatch SGD training loop.
//!
//! Parameters are the coefficient vectors `v(f_k)` in canonical monomial
//! order; gradients are taken with respect to those coordinates.

use std::f64::consts::PI;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cloud::PointCloud;
use crate::distance::{dist_2, DEGENERACY_TOL};
use crate::error::{check_dim, Error, Result};
use crate::isometry::orthonormalize_columns;
use crate::model::{gram_penalty, QuadricIntersection};
use crate::polynomial::{coefficient_len, packed_len, pairs, QuadraticPolynomial};
use crate::scalar::{dot, norm, Real};

/// Which objective is minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossVariant {
    /// Sum of order-2 distances plus the Hilbert–Schmidt orthogonality penalty.
    #[default]
    QFull,
    /// Sum of squared algebraic distances plus the coefficient-vector
    /// orthogonality penalty.
    QBase,
}

impl LossVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            LossVariant::QFull => "qfull",
            LossVariant::QBase => "qbase",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "qfull" => Some(LossVariant::QFull),
            "qbase" => Some(LossVariant::QBase),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LrSchedule {
    Constant,
    #[default]
    Cosine,
}

impl LrSchedule {
    fn factor(self, step: usize, total: usize) -> f64 {
        match self {
            LrSchedule::Constant => 1.0,
            LrSchedule::Cosine => 0.5 * (1.0 + (PI * step as f64 / total.max(1) as f64).cos()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub loss: LossVariant,
    /// Number of quadrics.
    pub m: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Project points onto the unit sphere before fitting.
    pub normalize_inputs: bool,
    pub schedule: LrSchedule,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            loss: LossVariant::QFull,
            m: 1,
            lambda: 1.0,
            learning_rate: 1e-2,
            batch_size: 64,
            epochs: 500,
            seed: 0,
            normalize_inputs: false,
            schedule: LrSchedule::Cosine,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.m == 0 {
            return bad("m must be positive");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be finite and nonnegative");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        Ok(())
    }
}

/// Loss split into its data and penalty terms; `total = data + λ·penalty`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms<T> {
    pub data: T,
    pub penalty: T,
    pub total: T,
}

/// Gradient of the data and penalty terms, one `D`-vector per quadric.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient<T> {
    pub data: Vec<Vec<T>>,
    pub penalty: Vec<Vec<T>>,
}

impl<T: Real> LossGradient<T> {
    /// `data_weight · ∇data + λ · ∇penalty`, flattened quadric by quadric.
    pub fn combined(&self, data_weight: T, lambda: T) -> Vec<T> {
        self.data
            .iter()
            .zip(&self.penalty)
            .flat_map(|(gd, gp)| gd.iter().zip(gp).map(move |(&a, &b)| data_weight * a + lambda * b))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-point data term.
    pub data: f64,
    pub penalty: f64,
    /// `data + λ · penalty`.
    pub total: f64,
    /// Wall time since training started.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

#[derive(Debug, Clone)]
pub struct FitResult<T> {
    pub model: QuadricIntersection<T>,
    pub trace: TrainTrace,
}

fn check_batch<T: Real>(model: &QuadricIntersection<T>, batch: &PointCloud<T>) -> Result<()> {
    check_dim(model.dim(), batch.dim())
}

/// `Σ_j Σ_k dist_2(p_j, f_k) + λ ‖ṼᵀṼ - I‖²`.
pub fn loss_qfull<T: Real>(
    model: &QuadricIntersection<T>,
    batch: &PointCloud<T>,
    lambda: T,
) -> Result<LossTerms<T>> {
    check_batch(model, batch)?;
    let mut data = T::zero();
    for p in batch.points() {
        for f in model.quadrics() {
            data += dist_2(f, p)?;
        }
    }
    let penalty = model.ortho_penalty();
    Ok(LossTerms {
        data,
        penalty,
        total: data + lambda * penalty,
    })
}

/// `Σ_j Σ_k f_k(p_j)² + λ ‖VᵀV - I‖²` with full coefficient vectors.
pub fn loss_qbase<T: Real>(
    model: &QuadricIntersection<T>,
    batch: &PointCloud<T>,
    lambda: T,
) -> Result<LossTerms<T>> {
    check_batch(model, batch)?;
    let mut data = T::zero();
    for p in batch.points() {
        for f in model.quadrics() {
            let v = f.eval_unchecked(p);
            data += v * v;
        }
    }
    let penalty = gram_penalty(&model.coefficient_columns());
    Ok(LossTerms {
        data,
        penalty,
        total: data + lambda * penalty,
    })
}

pub fn loss<T: Real>(
    variant: LossVariant,
    model: &QuadricIntersection<T>,
    batch: &PointCloud<T>,
    lambda: T,
) -> Result<LossTerms<T>> {
    match variant {
        LossVariant::QFull => loss_qfull(model, batch, lambda),
        LossVariant::QBase => loss_qbase(model, batch, lambda),
    }
}

/// Gradient of [`loss`] with respect to every coefficient `v(f_k)`.
///
/// Kinks take the zero subgradient: points with `f_k(p) = 0` contribute
/// nothing, and a vanishing `∇f` or `‖f‖_HS` drops the corresponding term.
pub fn grad_loss<T: Real>(
    variant: LossVariant,
    model: &QuadricIntersection<T>,
    batch: &PointCloud<T>,
) -> Result<LossGradient<T>> {
    check_batch(model, batch)?;
    let d = model.dim();
    let dd = coefficient_len(d);
    let mut data = vec![vec![T::zero(); dd]; model.len()];
    for (k, f) in model.quadrics().iter().enumerate() {
        let out = &mut data[k];
        let s = f.hs_norm();
        for p in batch.points() {
            match variant {
                LossVariant::QFull => accumulate_dist2_grad(f, s, p, out)
                    .map_err(|_| Error::DegenerateQuadric { quadric: k })?,
                LossVariant::QBase => {
                    let v = f.eval_unchecked(p);
                    accumulate_features(p, T::two() * v, out);
                }
            }
        }
    }
    let penalty = match variant {
        LossVariant::QFull => {
            let cols = model.weighted_columns();
            let sqrt2 = T::two().sqrt();
            penalty_grad(&cols)
                .into_iter()
                .map(|gw| {
                    let mut g = vec![T::zero(); dd];
                    for (slot, ((i, j), w)) in g.iter_mut().zip(pairs(d).zip(gw)) {
                        // ṽ_ij = α_ij / √2 off the diagonal
                        *slot = if i == j { w } else { w / sqrt2 };
                    }
                    g
                })
                .collect()
        }
        LossVariant::QBase => penalty_grad(&model.coefficient_columns()),
    };
    Ok(LossGradient { data, penalty })
}

/// `∂/∂c_k ‖CᵀC - I‖² = 4 Σ_l (⟨c_k, c_l⟩ - δ_kl) c_l`.
fn penalty_grad<T: Real>(cols: &[Vec<T>]) -> Vec<Vec<T>> {
    let four = T::lit(4.0);
    cols.iter()
        .enumerate()
        .map(|(k, ck)| {
            let mut g = vec![T::zero(); ck.len()];
            for (l, cl) in cols.iter().enumerate() {
                let target = if k == l { T::one() } else { T::zero() };
                let r = four * (dot(ck, cl) - target);
                for (gi, &x) in g.iter_mut().zip(cl) {
                    *gi += r * x;
                }
            }
            g
        })
        .collect()
}

/// `out += w · φ(p)`.
fn accumulate_features<T: Real>(p: &[T], w: T, out: &mut [T]) {
    let d = p.len();
    let np = packed_len(d);
    for (slot, (i, j)) in out[..np].iter_mut().zip(pairs(d)) {
        *slot += w * p[i] * p[j];
    }
    for (slot, &x) in out[np..np + d].iter_mut().zip(p) {
        *slot += w * x;
    }
    out[np + d] += w;
}

/// Adds `∂ dist_2(p, f) / ∂v(f)` to `out`. Errors when the distance is
/// infinite.
fn accumulate_dist2_grad<T: Real>(
    f: &QuadraticPolynomial<T>,
    s: T,
    p: &[T],
    out: &mut [T],
) -> std::result::Result<(), ()> {
    let tol = T::lit(DEGENERACY_TOL);
    let value = f.eval_unchecked(p);
    let a = value.abs();
    if a == T::zero() {
        return Ok(());
    }
    let g = f.grad_unchecked(p);
    let gn = norm(&g);
    let two = T::two();
    let h = gn / two;

    // partials of the distance with respect to a = |f(p)|, h and s
    let (da, dh, ds) = if s <= tol {
        if gn <= tol || gn == T::zero() {
            return Err(());
        }
        // a / (2h)
        (T::one() / gn, -a / (two * h * h), T::zero())
    } else {
        let r = (h * h + a * s).sqrt();
        let den = r + h;
        let den2 = den * den;
        let da = T::one() / den - a * (s / (two * r)) / den2;
        let dh = -a * (h / r + T::one()) / den2;
        let ds = -a * (a / (two * r)) / den2;
        (da, dh, ds)
    };
    let da = if value > T::zero() { da } else { -da };
    // ∂h/∂v = (g · ∂g/∂v) / (2‖g‖)
    let dh_scale = if gn > T::zero() { dh / (two * gn) } else { T::zero() };
    let ds_scale = if s > tol { ds / s } else { T::zero() };

    let d = p.len();
    let np = packed_len(d);
    for ((slot, (i, j)), &aij) in out[..np].iter_mut().zip(pairs(d)).zip(f.quad_packed()) {
        let phi = p[i] * p[j];
        let ggrad = if i == j {
            two * g[i] * p[i]
        } else {
            g[i] * p[j] + g[j] * p[i]
        };
        *slot += da * phi + dh_scale * ggrad + ds_scale * aij;
    }
    for ((slot, &x), &gk) in out[np..np + d].iter_mut().zip(p).zip(&g) {
        *slot += da * x + dh_scale * gk;
    }
    out[np + d] += da;
    Ok(())
}

/// Random model with HS-orthonormal quadratic parts. Linear and constant
/// parts are Gaussian scaled by 0.01.
pub fn init_model<T: Real>(d: usize, m: usize, seed: u64) -> Result<QuadricIntersection<T>> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidArgument("d and m must be positive".into()));
    }
    let np = packed_len(d);
    if m > np {
        return Err(Error::InvalidArgument(format!(
            "cannot orthonormalize {m} quadrics in dimension {d} (at most {np})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { rng.sample(StandardNormal) };
    loop {
        let raw: Vec<f64> = (0..np * m).map(|_| gauss()).collect();
        let Some(q) = orthonormalize_columns(np, m, &raw) else {
            continue;
        };
        let mut quadrics = Vec::with_capacity(m);
        for k in 0..m {
            let weighted: Vec<T> = (0..np).map(|r| T::lit(q[r * m + k])).collect();
            let lin = (0..d).map(|_| T::lit(0.01 * gauss())).collect();
            let c = T::lit(0.01 * gauss());
            quadrics.push(QuadraticPolynomial::from_weighted(d, &weighted, lin, c)?);
        }
        return QuadricIntersection::new(quadrics);
    }
}

/// Minibatch SGD on the configured loss.
///
/// Each step descends `(1/|B|) Σ_{j∈B} data_j + λ · penalty`, so `λ` weighs the
/// penalty against the per-point data term. After every epoch the trace
/// records the same objective evaluated on the whole cloud.
pub fn fit<T: Real>(cloud: &PointCloud<T>, config: &FitConfig) -> Result<FitResult<T>> {
    config.validate()?;
    let cloud = if config.normalize_inputs {
        cloud.normalized()
    } else {
        cloud.clone()
    };
    let d = cloud.dim();
    let n = cloud.len();
    let mut model = init_model::<T>(d, config.m, config.seed)?;
    let lambda = T::lit(config.lambda);

    let mut params: Vec<T> = model
        .quadrics()
        .iter()
        .flat_map(|f| f.to_coefficients().into_inner())
        .collect();
    let width = coefficient_len(d);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..n).collect();
    let steps_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = steps_per_epoch * config.epochs;
    let start = Instant::now();
    let mut trace = TrainTrace::default();
    let mut step = 0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch = cloud.select(chunk)?;
            let grad = grad_loss(config.loss, &model, &batch)?;
            let lr = T::lit(config.learning_rate * config.schedule.factor(step, total_steps));
            let weight = T::one() / T::from_usize(chunk.len()).expect("batch size fits");
            for (x, g) in params.iter_mut().zip(grad.combined(weight, lambda)) {
                *x -= lr * g;
            }
            model = rebuild(&params, width).map_err(|_| Error::Diverged { epoch })?;
            step += 1;
        }
        let terms = loss(config.loss, &model, &cloud, lambda)?;
        if !terms.total.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let data = terms.data.as_f64() / n as f64;
        let penalty = terms.penalty.as_f64();
        trace.epochs.push(EpochRecord {
            epoch,
            data,
            penalty,
            total: data + config.lambda * penalty,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(FitResult { model, trace })
}

fn rebuild<T: Real>(params: &[T], width: usize) -> Result<QuadricIntersection<T>> {
    let quadrics = params
        .chunks_exact(width)
        .map(QuadraticPolynomial::from_coefficients)
        .collect::<Result<Vec<_>>>()?;
    QuadricIntersection::new(quadrics)
}
