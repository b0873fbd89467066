//! Parabolic geometry for space-time domains.
//!
//! - [`metric`]: the parabolic quasi-norm `ρ`, the metric `D` and the
//!   dilations `T_λ(t, x) = (λ²t, λx)`.
//! - [`lip`]: Lip(1,1/2) functions and sample-scale estimates of their
//!   constants.
//! - [`implicit`]: a constructive Lip(1,1/2) implicit function solver.
//! - [`domain`], [`frame`], [`chart`], [`atlas`]: star-like space-time
//!   domains, their local boundary graphs and chart covers.
//! - [`dsl`]: a small expression language for radial functions.
//!
//! Every estimate is a certificate at sample scale: it holds on the points
//! actually evaluated and is deterministic given the seed.

pub mod atlas;
pub mod chart;
pub mod checks;
pub mod domain;
pub mod dsl;
pub mod error;
pub mod frame;
pub mod implicit;
pub mod lip;
pub mod metric;
pub mod sampling;

pub use atlas::{build_atlas, build_atlas_with, verify_atlas, verify_atlas_with, Atlas, AtlasOptions, AtlasReport, CoverageReport, VerifyOptions};
pub use chart::{chart_function, extract_chart, extract_chart_with, BoundaryChart, ChartConstants, ChartManifest, ChartOptions};
pub use domain::{sphere_chord_identity, write_boundary_csv, BoundaryRow, SliceDomain, StarlikeDomain};
pub use dsl::{evaluate, parse, validate_spec, DomainConfig, RadialExpr, RadialSpec, ValidationReport};
pub use error::{ChartFailure, Error, Result};
pub use frame::{frame_to_pole, SpatialFrame};
pub use implicit::{build_g, choose_constants, solve_graph, solve_graph_in, IftConstants, IftProblem, ImplicitGraph, Neighborhood};
pub use lip::{
    check_bilipschitz, estimate_lip12, estimate_nondegeneracy, BiLipCertificate, Lip12Fn, LipEstimate, NondegenerateFn, SpaceTimeBox,
};
pub use metric::{
    comparability_check, dilate, eval_f, metric_distance, parabolic_norm, ComparabilityConstants, Dilation, ParabolicPoint, C0, C1,
};
pub use sampling::Sampler;
