//! Population and empirical landscape of the smoothed objective.

mod empirical;
mod population;
pub mod quadrature;

pub use empirical::{
    empirical_scan, monotone_u1_check, orthogonal_direction, u1_profile, vicinity_radius_fit, Axis,
    GridCell, GridSpec, LandscapeGrid, VicinityFit, VicinityPoint,
};
pub use population::{
    limiting_u2, ring_scan, u0_limit, u0_residual, Functional, PopulationPoint, PopulationProbe,
    Quadrature, RingPoint, U_DELTA_BRACKET,
};
pub use quadrature::Estimate;
