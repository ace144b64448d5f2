//! Canonical heights, local heights, orbit analysis and invariant measures
//! for dynamical systems of several morphisms over ℚ.

pub mod arith;
pub mod canonical;
pub mod linalg;
pub mod poly;
pub mod local;
pub mod measures;
pub mod orbits;
pub mod systems;
