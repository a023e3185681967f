//! Enumerated-state generator matrices, stationary measures, semigroup and
//! resolvent action, and exact verification of the duality and switching
//! identities.

mod duality;
mod generator;
mod observable;
mod semigroup;
mod stationary;

pub use duality::{
    reversal_consistency_check, sampled_duality_discrepancy, switching_check,
    duality_max_discrepancy, SwitchingReport,
};
pub use generator::Generator;
pub use observable::{
    growth_bound_check, oscillation, probe_locality, triple_norm, GrowthBoundReport, Observable,
};
pub use semigroup::{
    log_log_slope, resolvent_apply, resolvent_power_limit, resolvent_quadrature_check,
    resolvent_residual, semigroup_apply,
};
pub use stationary::{check_irreducible, dlr_volumes, gibbs_check, stationary_measure};

use crate::error::{Error, Result};

/// Probability vector over the enumerated states.
#[derive(Debug, Clone)]
pub struct Measure {
    p: Vec<f64>,
}

impl Measure {
    /// Validates nonnegativity and unit mass (to 1e-12), then renormalizes.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Invalid("empty measure".into()));
        }
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NonPositiveMeasureEntry {
                    state: i as u64,
                    value: v,
                });
            }
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "measure mass {total} differs from 1 beyond 1e-12"
            )));
        }
        let mut p = p;
        for v in &mut p {
            *v /= total;
        }
        Ok(Self { p })
    }

    /// Construct from unnormalized nonnegative weights.
    pub fn from_weights(w: Vec<f64>) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Invalid("weights must have positive mass".into()));
        }
        Self::new(w.into_iter().map(|v| v / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn get(&self, i: u64) -> f64 {
        self.p[i as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// Expectation of an observable vector.
    pub fn mean(&self, f: &[f64]) -> f64 {
        self.p.iter().zip(f).map(|(p, v)| p * v).sum()
    }

    pub fn check_strictly_positive(&self) -> Result<()> {
        for (i, &v) in self.p.iter().enumerate() {
            if v <= 0.0 {
                return Err(Error::NonPositiveMeasureEntry {
                    state: i as u64,
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Copy with one entry scaled by `1 + rel` and the mass renormalized;
    /// negative control for DLR checks.
    pub fn perturbed(&self, state: u64, rel: f64) -> Self {
        let mut p = self.p.clone();
        p[state as usize] *= 1.0 + rel;
        let total: f64 = p.iter().sum();
        for v in &mut p {
            *v /= total;
        }
        Self { p }
    }
}
