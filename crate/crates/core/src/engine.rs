//! Bundle of the exact objects derived from one model: the enumerated state
//! space, forward and reversed rate families, both generators, the
//! measure-weighted adjoint, and the stationary measure.

use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::dynamics::RateFamily;
use crate::error::Result;
use crate::exact::{stationary_measure, Generator, Measure};
use crate::model::{LocalAlphabet, Potential, Specification, StateSpace, Volume};

/// Exact engine for an enumerable model.
pub struct Engine {
    pub volume: Arc<Volume>,
    pub alphabet: LocalAlphabet,
    pub space: Arc<StateSpace>,
    pub potential: Arc<Potential>,
    pub spec: Arc<Specification>,
    pub rates: Arc<RateFamily>,
    /// Reversed rates from the local formula.
    pub rates_hat: Arc<RateFamily>,
    pub forward: Generator,
    /// Generator built from the reversed rate family.
    pub reversed: Generator,
    /// Measure-weighted adjoint of the forward generator.
    pub adjoint: Generator,
    pub mu: Measure,
    pub model_hash: String,
}

impl Engine {
    pub fn build(
        spec: Arc<Specification>,
        rates: Arc<RateFamily>,
        state_cap: u64,
        model_hash: String,
    ) -> Result<Self> {
        let volume = spec.volume().clone();
        let alphabet = spec.alphabet();
        let space = Arc::new(StateSpace::enumerate(&volume, alphabet, state_cap)?);
        let forward = Generator::build(&rates, &space)?;
        let mu = stationary_measure(&forward)?;
        let rates_hat = Arc::new(RateFamily::reversed(rates.clone(), spec.clone())?);
        let reversed = Generator::build(&rates_hat, &space)?;
        let adjoint = forward.adjoint(&mu)?;
        Ok(Self {
            volume,
            alphabet,
            space,
            potential: spec.potential().clone(),
            spec,
            rates,
            rates_hat,
            forward,
            reversed,
            adjoint,
            mu,
            model_hash,
        })
    }
}

/// Stable fingerprint of a model: canonical text rendering of graph,
/// alphabet, potential, and dynamics, hashed to 16 hex characters.
pub fn model_fingerprint(
    volume: &Volume,
    alphabet: LocalAlphabet,
    potential: &Potential,
    rates: &RateFamily,
) -> String {
    let mut text = String::new();
    text.push_str(&format!("q={};beta={:.17e};", alphabet.q(), potential.beta()));
    text.push_str(&format!("boundary={};", potential.boundary().tag()));
    text.push_str("sites=");
    for l in volume.labels() {
        text.push_str(l);
        text.push(',');
    }
    text.push_str(";edges=");
    for (a, b) in volume.edges() {
        text.push_str(&format!("{a}-{b},"));
    }
    text.push_str(";terms=");
    for t in potential.terms() {
        text.push_str(&format!("{:?}:", t.sites));
        for v in &t.table {
            text.push_str(&format!("{v:.17e},"));
        }
        text.push(';');
    }
    text.push_str(&format!("family={:?};regions=", rates.kind()));
    for r in rates.regions() {
        text.push_str(&format!("{:?},", r.sites));
    }
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;

    #[test]
    fn engine_builds_consistent_pieces() {
        let v = Arc::new(Volume::ring(3, true).unwrap());
        let a = LocalAlphabet::new(2).unwrap();
        let p =
            Arc::new(Potential::ising(v.clone(), a, 0.5, 1.0, 0.0, Boundary::Periodic).unwrap());
        let spec = Arc::new(Specification::new(p).unwrap());
        let rates = Arc::new(
            RateFamily::heat_bath(spec.clone(), RateFamily::single_site_regions(&v)).unwrap(),
        );
        let hash = model_fingerprint(&v, a, spec.potential(), &rates);
        let engine = Engine::build(spec, rates, StateSpace::DEFAULT_CAP, hash.clone()).unwrap();
        assert_eq!(engine.space.count(), 8);
        assert_eq!(engine.model_hash, hash);
        assert_eq!(hash.len(), 16);
        // reversible model: both reversal routes coincide
        assert!(engine.reversed.max_abs_entry_diff(&engine.adjoint) <= 1e-10);
    }

    #[test]
    fn fingerprint_distinguishes_beta() {
        let v = Arc::new(Volume::ring(3, true).unwrap());
        let a = LocalAlphabet::new(2).unwrap();
        let p1 =
            Arc::new(Potential::ising(v.clone(), a, 0.5, 1.0, 0.0, Boundary::Periodic).unwrap());
        let p2 =
            Arc::new(Potential::ising(v.clone(), a, 0.6, 1.0, 0.0, Boundary::Periodic).unwrap());
        let s1 = Arc::new(Specification::new(p1).unwrap());
        let s2 = Arc::new(Specification::new(p2).unwrap());
        let r1 = RateFamily::heat_bath(s1.clone(), RateFamily::single_site_regions(&v)).unwrap();
        let r2 = RateFamily::heat_bath(s2.clone(), RateFamily::single_site_regions(&v)).unwrap();
        let h1 = model_fingerprint(&v, a, s1.potential(), &r1);
        let h2 = model_fingerprint(&v, a, s2.potential(), &r2);
        assert_ne!(h1, h2);
    }
}
