//! Systems whose maps are words in the maps of a base system, with their own
//! height functional and degree (ℝ-divisor classes such as E^±).

use super::{check_index, Dynamics, SystemError};
use crate::arith::{ProjPoint, Space};
use std::sync::Arc;

/// Maps g_j = (word_j applied left to right), with L = Σ r_i L_i and d given.
#[derive(Clone)]
pub struct WordSystem {
    base: Arc<dyn Dynamics>,
    words: Vec<Vec<usize>>,
    weights: Vec<f64>,
    degree: f64,
}

impl std::fmt::Debug for WordSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WordSystem")
            .field("base", &self.base.label())
            .field("words", &self.words)
            .field("weights", &self.weights)
            .field("degree", &self.degree)
            .finish()
    }
}

impl WordSystem {
    pub fn new(
        base: Arc<dyn Dynamics>,
        words: Vec<Vec<usize>>,
        weights: Vec<f64>,
        degree: f64,
    ) -> Result<Self, SystemError> {
        let k = base.num_maps();
        if words.is_empty() || words.iter().any(|w| w.is_empty() || w.iter().any(|&i| i >= k)) {
            return Err(SystemError::Invalid("words must be nonempty and use valid map indices".into()));
        }
        if weights.len() != base.space().dims().len() {
            return Err(SystemError::Invalid("one weight per factor is required".into()));
        }
        if degree.is_nan() || degree <= words.len() as f64 {
            return Err(SystemError::Invalid(format!("degree {degree} must exceed k = {}", words.len())));
        }
        Ok(WordSystem { base, words, weights, degree })
    }

    /// (S; σ_2∘σ_1) with E⁺ = (2+√3)L_1 − L_2 and d = 7+4√3.
    pub fn silverman_plus(base: Arc<dyn Dynamics>) -> Result<Self, SystemError> {
        let a = 2.0 + 3f64.sqrt();
        WordSystem::new(base, vec![vec![0, 1]], vec![a, -1.0], a * a)
    }

    /// (S; σ_1∘σ_2) with E⁻ = −L_1 + (2+√3)L_2 and d = 7+4√3.
    pub fn silverman_minus(base: Arc<dyn Dynamics>) -> Result<Self, SystemError> {
        let a = 2.0 + 3f64.sqrt();
        WordSystem::new(base, vec![vec![1, 0]], vec![-1.0, a], a * a)
    }

    pub fn base(&self) -> &Arc<dyn Dynamics> {
        &self.base
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }
}

impl Dynamics for WordSystem {
    fn label(&self) -> String {
        format!("words{:?}w{:?}d{}@{}", self.words, self.weights, self.degree, self.base.label())
    }

    fn space(&self) -> Space {
        self.base.space()
    }

    fn num_maps(&self) -> usize {
        self.words.len()
    }

    fn degree(&self) -> f64 {
        self.degree
    }

    fn weights(&self) -> Vec<f64> {
        self.weights.clone()
    }

    fn contains(&self, x: &ProjPoint) -> bool {
        self.base.contains(x)
    }

    fn evaluate(&self, i: usize, x: &ProjPoint) -> Result<ProjPoint, SystemError> {
        check_index(i, self.words.len())?;
        let mut p = x.clone();
        for &m in &self.words[i] {
            p = self.base.evaluate(m, &p)?;
        }
        Ok(p)
    }

    fn sample_points(&self, count: usize, seed: u64) -> Vec<ProjPoint> {
        self.base.sample_points(count, seed)
    }
}
