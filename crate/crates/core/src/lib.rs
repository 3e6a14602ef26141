//! Outlier detection by intersections of quadrics.
//!
//! A point cloud is approximated by the common zero set of `m` quadratic
//! polynomials fitted with an isometry-equivariant loss; a point's outlier
//! score is its mean order-2 approximate distance to those quadrics.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

pub mod baselines;
pub mod cloud;
pub mod datagen;
pub mod distance;
pub mod error;
pub mod eval;
pub mod fitting;
pub mod format;
pub mod isometry;
pub mod model;
pub mod polynomial;
pub mod scalar;

pub use baselines::{
    feature_map, feature_map_tilde, norm_score, pca_fit, qbase_exact, FeatureMatrix, NormScore,
    NormSign, PcaModel, QBaseSolution,
};
pub use cloud::PointCloud;
pub use datagen::{
    geometric_distance_oracle, inject_outliers, labels_from_indices, sample_ball, sample_circle,
    sample_curve, sample_sphere, sample_sphere_cylinder, tennis_point, CurveSpec, GeometricOracle,
};
pub use distance::{dist_1, dist_2, dist_alg, dist_k, distance_polynomial};
pub use error::{Error, Result};
pub use eval::{
    auc_roc, cosine_similarity, full_identification_rate, identification_rate,
    identification_rates, percentile, robustify, roc_curve, similarity_threshold,
    threshold_search, Cosine, IdentificationReport, IdentificationSetup, LabeledScores,
    Robustified, Similarity, SimilarityThreshold, ThresholdChoice,
};
pub use fitting::{
    fit, grad_loss, init_model, loss, loss_qbase, loss_qfull, EpochRecord, FitConfig, FitResult,
    LossGradient, LossTerms, LossVariant, LrSchedule, TrainTrace,
};
pub use format::ModelFile;
pub use isometry::{orthogonality_defect, Isometry};
pub use model::{OutlierScorer, QuadricIntersection};
pub use polynomial::{coefficient_len, packed_len, CoefficientVector, QuadraticPolynomial, WeightedQuadVector};
pub use scalar::Real;

pub type Quadric = QuadraticPolynomial<f64>;
pub type Model = QuadricIntersection<f64>;
pub type Cloud = PointCloud<f64>;
pub type Rigid = Isometry<f64>;
pub type Pca = PcaModel<f64>;
pub type Fit = FitResult<f64>;
pub type QuadricModelFile = ModelFile<f64>;
