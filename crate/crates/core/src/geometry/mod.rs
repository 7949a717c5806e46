//! Riemannian structure of the flow: Onsager operator, metric, geodesics,
//! the dynamic distance `W_K` and the radial `W₁` distance.

pub mod geodesic;
pub mod onsager;
pub mod shooting;
mod transport;
pub mod wasserstein;

pub use geodesic::{geodesic_integrate, geodesic_rhs, path_action, GeodesicRun, GeodesicState, PathAction};
pub use onsager::{apply_onsager, hamiltonian, metric_form, solve_potential, solve_potential_with, PotentialSolve, SolveOptions};
pub use shooting::{wk_distance_shooting, ShootingOptions, ShootingResult};
pub use transport::transport_cost;
pub use wasserstein::{
    radial_cdf, w1_from_cdfs, w1_lp_oracle, w1_radial, w1_wk_inequality_report, CloudSpec, InequalityReport,
};
