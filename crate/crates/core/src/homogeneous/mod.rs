//! Left-invariant reductions on four-dimensional Lie groups.

pub mod algebra;
pub mod embed;
pub mod flow;
pub mod inoue;
pub mod lie;

pub use algebra::{invariant_gauge_defect, invariant_pcf_rhs, invariant_pcf_rhs_with, invariant_soliton_residual, Invariant, InvariantMetric};
pub use lie::{build_model, LieModel, ModelName};
pub use flow::{
    blowdown, classify_asymptotics, distance_to_ray, fit_exponential_decay, integrate, integrate_with, Classification, SingularityType, Trajectory,
};
pub use inoue::{inoue_lattice, InoueLattice};
