//! Dynamical systems (X; f_1, …, f_k) with a height functional for L and a
//! real degree d > k.

mod composed;
mod henon;
mod k3;
mod poly_map;
mod spec;

pub use composed::WordSystem;
pub use henon::HenonSystem;
pub use k3::{
    build_through, build_wheeler_through, k3_involution_step, BinaryRoot, DoubleCoverVariant,
    K3DoubleCoverSystem, K3TrilinearSystem, StepError,
};
pub use poly_map::{
    certificate_cap, check_morphism, lattes_duplication, macaulay_resultant,
    nullstellensatz_certificate, sylvester_resultant, Certificate, MorphismCheck, PolyMap, PolyMapSystem,
};
pub use spec::{BiTermSpec, System, SystemKindSpec, SystemSpec};

use crate::arith::{weighted_height, ArithError, ProjPoint, Space};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("map {map} is indeterminate at {point}")]
    Indeterminate { map: usize, point: String },
    #[error("point {0} does not lie on the surface")]
    OffSurface(String),
    #[error("fiber of map {map} through {point} is not finite")]
    DegenerateFiber { map: usize, point: String },
    #[error("map index {index} out of range (system has {k} maps)")]
    BadMapIndex { index: usize, k: usize },
    #[error("singular curve: 4a^3 + 27b^2 = 0")]
    SingularCurve,
    #[error("construction failed after {attempts} attempts")]
    ConstructionFailed { attempts: usize },
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// How the system may be used by the height engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Registration {
    /// Σ f_i^* L ≅ d L holds; canonical heights exist.
    LineBundle,
    /// Only Σ h(f_i x) ≥ (k + ε) h(x) + O(1) is known.
    InequalityOnly { k_plus_epsilon: f64 },
}

/// The interface the engines work against.
pub trait Dynamics: Send + Sync {
    fn label(&self) -> String;

    fn space(&self) -> Space;

    /// k, the number of maps.
    fn num_maps(&self) -> usize;

    /// d > k with Σ f_i^* L ≅ d L.
    fn degree(&self) -> f64;

    /// Real weights r_j of L = Σ r_j L_j over the factors of the space.
    fn weights(&self) -> Vec<f64>;

    fn evaluate(&self, i: usize, x: &ProjPoint) -> Result<ProjPoint, SystemError>;

    fn registration(&self) -> Registration {
        Registration::LineBundle
    }

    /// Membership in X (always true for full projective spaces).
    fn contains(&self, x: &ProjPoint) -> bool {
        x.in_space(&self.space()).is_ok()
    }

    /// The height h_L attached to the weights.
    fn height(&self, x: &ProjPoint) -> f64 {
        weighted_height(x, &self.weights())
    }

    /// Whether L is ample (all weights positive).
    fn is_ample(&self) -> bool {
        self.weights().iter().all(|&w| w > 0.0)
    }

    /// Points of X(ℚ) for empirical bounds; empty when no sampler exists.
    fn sample_points(&self, _count: usize, _seed: u64) -> Vec<ProjPoint> {
        Vec::new()
    }

    /// Every map is an involution (f_i ∘ f_i = id on X).
    fn involutive(&self) -> bool {
        false
    }

    /// The ℙᴺ polynomial structure, when there is one.
    fn poly_maps(&self) -> Option<&PolyMapSystem> {
        None
    }

    fn images(&self, x: &ProjPoint) -> Result<Vec<ProjPoint>, SystemError> {
        (0..self.num_maps()).map(|i| self.evaluate(i, x)).collect()
    }
}

pub(crate) fn check_index(i: usize, k: usize) -> Result<(), SystemError> {
    if i >= k {
        Err(SystemError::BadMapIndex { index: i, k })
    } else {
        Ok(())
    }
}
