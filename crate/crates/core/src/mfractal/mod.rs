//! Multifractal measurement of point sets: box-counting partition sums,
//! scaling-range detection, generalized dimensions, the singularity
//! spectrum, pair correlation, pointwise dimension and the binomial cascade
//! reference.

pub mod cascade;
pub mod correlation;
pub mod dimension;
pub mod measure;
pub mod pointwise;
pub mod scaling;
pub mod spectrum;

pub use cascade::{
    analytic_alpha, analytic_dimension, analytic_f, analytic_tau, binomial_cascade, cascade_ladder, cascade_weights,
    sample_cascade, CascadeMode,
};
pub use correlation::{correlation_function, Correlation, CorrelationBin, CorrelationConfig};
pub use dimension::{default_q_grid, dimension_curve, measure_ladder, q_grid, DqConfig, DqCurve, DqEntry, LGridConfig};
pub use measure::{grid_measure, grid_measure_closed, log_partition, partition_function, scaling_ordinate, GridMeasure, PointSet, Space};
pub use pointwise::{geometric_radii, pointwise_dimension, PointwiseConfig, PointwiseSummary};
pub use scaling::{detect_scaling_ranges, fit_line, LineFit, RangePolicy, ScalingConfig, ScalingFit, ScalingRange};
pub use spectrum::{f_alpha, legendre, SpectrumPoint, MAX_Q_SPACING};
