//! Potentials, the penalization region, nonlinearities and energies.

pub mod energy;
pub mod nonlinearity;
pub mod params;
pub mod potential;
pub mod region;

pub use energy::{
    limiting_energy, limiting_residual, nehari_projection, penalized_energy, penalized_ray_projection,
    penalized_residual, relative_residual, weighted_norm_sq, NehariProjection, PenalizedEnergy, PenalizedRay,
    RayParts,
};
pub use nonlinearity::{crossover, g1_prime, g2_prime, g_densities};
pub use params::{ModelParams, WellPolicy};
pub use potential::PotentialSpec;
pub use region::{PenalizationRegion, Shape};
