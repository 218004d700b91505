//! Density fluctuation fields, their covariance predictions and estimators, and
//! event-exact path functionals of the exclusion process.

mod covariance;
mod experiments;
mod field;
mod observers;
mod test_function;

pub use covariance::{
    covariance_estimate, fit_slope, mean_estimate, she_covariance, CovariancePrediction, Estimate,
    PredictionMethod, MIN_REPLICAS,
};
pub use experiments::{
    bg_second_moment, dynamic_covariance, qv_rate, static_variance, DynamicCovariance, COVARIANCE_CSV_HEADER,
};
pub use field::{
    check_validity, discrete_norm_sq, fep_frame_velocity, field_eval_fep, field_eval_zr, particle_velocity,
    zr_frame_velocity, FieldSample,
};
pub use observers::{BgFunctional, FieldIntegral, FieldRecorder, LocalFunction, QuadraticVariation};
pub use test_function::{
    adaptive_simpson, gradient_norm_sq, heat_inner_product, inner_product, transform_test_function, Profile,
    TestFunction, TransformDirection, GAUSSIAN_CUTOFF, QUADRATURE_TOL,
};
