//! Numerical laboratory for scalar waves on the Schwarzschild exterior.
//!
//! The crate builds the tortoise-coordinate description of the exterior
//! geometry, the per-harmonic Regge-Wheeler potential family together with a
//! verifier for the six strongly-repulsive sign conditions, finite-difference
//! evolution of the per-mode linear and spherically symmetric semilinear wave
//! equations, the energy functionals (basic, Morawetz, local, trapping) that
//! diagnose decay, and least-squares post-processing of the recorded series.

pub mod analysis;
pub mod evolve;
pub mod functionals;
pub mod geometry;
pub mod harmonics;
pub mod mms;
pub mod potential;

pub use geometry::{
    build_grid, radius_from_tortoise, tortoise_from_radius, GeometryError, SchwarzschildParams,
    TortoiseGrid,
};
pub use potential::{
    critical_radius, critical_tortoise, potential_derivative, potential_value, search_constants,
    second_derivative_at_critical, trapping_term, verify_conditions, ConditionReport, Constants,
    FamilyReport, ModeSpec, PotentialError, PotentialTable, SearchGrid,
};
