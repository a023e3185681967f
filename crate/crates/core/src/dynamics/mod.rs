//! Transition-rate families over finite update regions, regularity audits, and
//! construction of the time-reversed rates.
//!
//! Rates are densities w.r.t. the uniform reference measure on the region, so
//! every total rate is the integral `sum_xi c(eta, xi) q^{-|region|}`. The
//! reversed family carries the density
//! `c(xi eta_off, eta_region) * gamma(xi | eta) / gamma(eta_region | eta)`,
//! which reduces to the original family exactly when the dynamics is
//! reversible for the Gibbs measure of the specification.

mod audit;

pub use audit::{
    condition_audit, quotient_bound_check, reversal_regularity_audit, AuditOptions,
    ConditionReport, QuotientReport, RegionOscillations, ReversalRegularityReport,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Configuration, LocalAlphabet, Specification, Volume};

/// A finite update region (sorted site indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub sites: Vec<usize>,
}

impl Region {
    pub fn new(mut sites: Vec<usize>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        Self { sites }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Family tag, kept for reports and model files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FamilyKind {
    HeatBath,
    Metropolis,
    Exponential,
    BlockHeatBath,
    CyclicRotation,
    Custom,
    Reversed,
}

/// Explicit density table for one custom rule: the density may depend on the
/// current configuration only through the `depends` sites.
#[derive(Debug, Clone)]
pub struct CustomRule {
    pub depends: Vec<usize>,
    /// `table[pattern_index][xi_index]`, both little-endian mixed radix.
    pub table: Vec<Vec<f64>>,
}

#[derive(Debug)]
enum RateKind {
    HeatBath(Arc<Specification>),
    Metropolis(Arc<Specification>),
    Exponential(Arc<Specification>),
    CyclicRotation,
    Custom(Vec<CustomRule>),
    Reversed {
        base: Arc<RateFamily>,
        spec: Arc<Specification>,
    },
}

#[derive(Debug, Clone)]
struct RegionMeta {
    term_ids: Vec<usize>,
    dependency: Vec<usize>,
}

/// A family of transition densities `c_region(eta, xi)` over update regions.
#[derive(Debug)]
pub struct RateFamily {
    volume: Arc<Volume>,
    alphabet: LocalAlphabet,
    regions: Vec<Region>,
    meta: Vec<RegionMeta>,
    by_site: Vec<Vec<usize>>,
    kind_tag: FamilyKind,
    kind: RateKind,
}

fn validate_regions(volume: &Volume, regions: &[Region]) -> Result<()> {
    for r in regions {
        if r.is_empty() {
            return Err(Error::Invalid("empty update region".into()));
        }
        for &s in &r.sites {
            volume.check_site(s)?;
        }
    }
    Ok(())
}

impl RateFamily {
    /// One region per site.
    pub fn single_site_regions(volume: &Volume) -> Vec<Region> {
        (0..volume.len()).map(|x| Region::new(vec![x])).collect()
    }

    /// One region per undirected edge.
    pub fn edge_regions(volume: &Volume) -> Vec<Region> {
        volume
            .edges()
            .into_iter()
            .map(|(a, b)| Region::new(vec![a, b]))
            .collect()
    }

    fn build(
        volume: Arc<Volume>,
        alphabet: LocalAlphabet,
        regions: Vec<Region>,
        kind_tag: FamilyKind,
        kind: RateKind,
    ) -> Result<Self> {
        validate_regions(&volume, &regions)?;
        let meta = regions
            .iter()
            .enumerate()
            .map(|(i, r)| match &kind {
                RateKind::HeatBath(spec)
                | RateKind::Metropolis(spec)
                | RateKind::Exponential(spec) => RegionMeta {
                    term_ids: spec.potential().terms_meeting(&r.sites),
                    dependency: spec.potential().dependency_of(&r.sites),
                },
                RateKind::CyclicRotation => RegionMeta {
                    term_ids: Vec::new(),
                    dependency: r.sites.clone(),
                },
                RateKind::Custom(rules) => {
                    let mut dep = rules[i].depends.clone();
                    dep.extend_from_slice(&r.sites);
                    dep.sort_unstable();
                    dep.dedup();
                    RegionMeta {
                        term_ids: Vec::new(),
                        dependency: dep,
                    }
                }
                RateKind::Reversed { base, spec } => {
                    let mut dep = base.meta[i].dependency.clone();
                    dep.extend(spec.potential().dependency_of(&r.sites));
                    dep.extend_from_slice(&r.sites);
                    dep.sort_unstable();
                    dep.dedup();
                    RegionMeta {
                        term_ids: spec.potential().terms_meeting(&r.sites),
                        dependency: dep,
                    }
                }
            })
            .collect();
        let mut by_site = vec![Vec::new(); volume.len()];
        for (i, r) in regions.iter().enumerate() {
            for &s in &r.sites {
                by_site[s].push(i);
            }
        }
        Ok(Self {
            volume,
            alphabet,
            regions,
            meta,
            by_site,
            kind_tag,
            kind,
        })
    }

    /// Heat-bath (Glauber) updates: resample the region from its conditional
    /// Gibbs distribution. Reversible for the Gibbs measure by construction.
    pub fn heat_bath(spec: Arc<Specification>, regions: Vec<Region>) -> Result<Self> {
        let volume = spec.volume().clone();
        let alphabet = spec.alphabet();
        Self::build(
            volume,
            alphabet,
            regions,
            FamilyKind::HeatBath,
            RateKind::HeatBath(spec),
        )
    }

    /// Heat-bath updates on every edge of the volume.
    pub fn block_heat_bath(spec: Arc<Specification>) -> Result<Self> {
        let regions = Self::edge_regions(spec.volume());
        let volume = spec.volume().clone();
        let alphabet = spec.alphabet();
        Self::build(
            volume,
            alphabet,
            regions,
            FamilyKind::BlockHeatBath,
            RateKind::HeatBath(spec),
        )
    }

    /// Metropolis updates: density `min(1, exp(-beta dH))`.
    pub fn metropolis(spec: Arc<Specification>, regions: Vec<Region>) -> Result<Self> {
        let volume = spec.volume().clone();
        let alphabet = spec.alphabet();
        Self::build(
            volume,
            alphabet,
            regions,
            FamilyKind::Metropolis,
            RateKind::Metropolis(spec),
        )
    }

    /// Unnormalized single-site exponential rates,
    /// `c_x(eta, xi) = exp(-beta sum_{B ni x} Phi_B(xi eta))`.
    pub fn exponential(spec: Arc<Specification>) -> Result<Self> {
        let regions = Self::single_site_regions(spec.volume());
        let volume = spec.volume().clone();
        let alphabet = spec.alphabet();
        Self::build(
            volume,
            alphabet,
            regions,
            FamilyKind::Exponential,
            RateKind::Exponential(spec),
        )
    }

    /// Deterministic single-site rotation `eta_x -> eta_x + 1 mod q` at
    /// density 1; irreversible test family, requires `q >= 3`.
    pub fn cyclic_rotation(volume: Arc<Volume>, alphabet: LocalAlphabet) -> Result<Self> {
        if alphabet.q() < 3 {
            return Err(Error::Invalid(format!(
                "cyclic rotation needs q >= 3, got q = {}",
                alphabet.q()
            )));
        }
        let regions = Self::single_site_regions(&volume);
        Self::build(
            volume,
            alphabet,
            regions,
            FamilyKind::CyclicRotation,
            RateKind::CyclicRotation,
        )
    }

    /// Explicit density tables, one rule per region.
    pub fn custom(
        volume: Arc<Volume>,
        alphabet: LocalAlphabet,
        regions: Vec<Region>,
        rules: Vec<CustomRule>,
    ) -> Result<Self> {
        if regions.len() != rules.len() {
            return Err(Error::Invalid(format!(
                "{} regions but {} rules",
                regions.len(),
                rules.len()
            )));
        }
        let q = usize::from(alphabet.q());
        for (i, (r, rule)) in regions.iter().zip(&rules).enumerate() {
            for &s in &rule.depends {
                volume.check_site(s)?;
            }
            if rule.depends.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!(
                    "rule {i}: depends sites must be strictly increasing"
                )));
            }
            let patterns = q.pow(rule.depends.len() as u32);
            let targets = q.pow(r.len() as u32);
            if rule.table.len() != patterns || rule.table.iter().any(|row| row.len() != targets) {
                return Err(Error::Invalid(format!(
                    "rule {i}: table shape must be q^|depends| x q^|region| = {patterns} x {targets}"
                )));
            }
            if rule
                .table
                .iter()
                .flatten()
                .any(|v| !v.is_finite() || *v < 0.0)
            {
                return Err(Error::Invalid(format!(
                    "rule {i}: densities must be finite and nonnegative"
                )));
            }
        }
        Self::build(
            volume,
            alphabet,
            regions,
            FamilyKind::Custom,
            RateKind::Custom(rules),
        )
    }

    /// Time-reversed family
    /// `c*(eta, xi) = c(xi eta_off, eta_region) gamma(xi|eta) / gamma(eta_region|eta)`.
    ///
    /// Requires the audited single-site bound of the specification to be
    /// strictly positive, which makes the denominator safe on every region.
    pub fn reversed(base: Arc<RateFamily>, spec: Arc<Specification>) -> Result<Self> {
        if spec.delta() <= 0.0 {
            return Err(Error::Invalid(
                "specification density bound delta must be strictly positive".into(),
            ));
        }
        let volume = base.volume.clone();
        let alphabet = base.alphabet;
        let regions = base.regions.clone();
        Self::build(
            volume,
            alphabet,
            regions,
            FamilyKind::Reversed,
            RateKind::Reversed { base, spec },
        )
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind_tag
    }

    pub fn volume(&self) -> &Arc<Volume> {
        &self.volume
    }

    pub fn alphabet(&self) -> LocalAlphabet {
        self.alphabet
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// Indices of regions containing the site.
    pub fn regions_at(&self, site: usize) -> &[usize] {
        &self.by_site[site]
    }

    /// Largest region size, the constant `R`.
    pub fn max_region_size(&self) -> usize {
        self.regions.iter().map(Region::len).max().unwrap_or(0)
    }

    /// Sites the density of `region_idx` may depend on (superset, by locality).
    pub fn dependency(&self, region_idx: usize) -> &[usize] {
        &self.meta[region_idx].dependency
    }

    /// Reference weight `q^{-|region|}` of one target pattern.
    pub fn lambda_weight(&self, region_idx: usize) -> f64 {
        self.alphabet.region_weight(self.regions[region_idx].len())
    }

    /// Transition density `c_region(eta, xi)` w.r.t. the reference measure.
    pub fn density(&self, eta: &Configuration, region_idx: usize, xi: &[u8]) -> f64 {
        let region = &self.regions[region_idx].sites;
        let meta = &self.meta[region_idx];
        match &self.kind {
            RateKind::HeatBath(spec) => spec
                .log_density_with_terms(&meta.term_ids, region, xi, eta)
                .exp(),
            RateKind::Metropolis(spec) => {
                let current = eta.restrict(region);
                let e_new = spec
                    .potential()
                    .energy_over_terms(&meta.term_ids, region, xi, eta);
                let e_old = spec
                    .potential()
                    .energy_over_terms(&meta.term_ids, region, &current, eta);
                (-spec.potential().beta() * (e_new - e_old)).exp().min(1.0)
            }
            RateKind::Exponential(spec) => {
                let e = spec
                    .potential()
                    .energy_over_terms(&meta.term_ids, region, xi, eta);
                (-spec.potential().beta() * e).exp()
            }
            RateKind::CyclicRotation => {
                let x = region[0];
                let next = (eta.get(x) + 1) % self.alphabet.q();
                if xi[0] == next {
                    1.0
                } else {
                    0.0
                }
            }
            RateKind::Custom(rules) => {
                let rule = &rules[region_idx];
                let q = usize::from(self.alphabet.q());
                let p_idx = rule
                    .depends
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (i, &s)| {
                        acc + usize::from(eta.get(s)) * q.pow(i as u32)
                    });
                let t_idx = xi
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (i, &v)| acc + usize::from(v) * q.pow(i as u32));
                rule.table[p_idx][t_idx]
            }
            RateKind::Reversed { base, spec } => {
                let current = eta.restrict(region);
                let flipped = eta.splice(region, xi);
                let forward = base.density(&flipped, region_idx, &current);
                if forward == 0.0 {
                    return 0.0;
                }
                let log_num = spec.log_density_with_terms(&meta.term_ids, region, xi, eta);
                let log_den = spec.log_density_with_terms(&meta.term_ids, region, &current, eta);
                forward * (log_num - log_den).exp()
            }
        }
    }

    /// Density looked up by explicit region sites; unlisted regions error.
    pub fn density_for(&self, eta: &Configuration, region: &[usize], xi: &[u8]) -> Result<f64> {
        let sorted = Region::new(region.to_vec());
        let idx = self
            .regions
            .iter()
            .position(|r| *r == sorted)
            .ok_or_else(|| Error::UnlistedRegion {
                region: region.to_vec(),
            })?;
        // map xi into sorted-site order
        let xi_sorted: Vec<u8> = sorted
            .sites
            .iter()
            .map(|s| xi[region.iter().position(|r| r == s).unwrap()])
            .collect();
        Ok(self.density(eta, idx, &xi_sorted))
    }

    /// Total jump rate of one region, `sum_xi c(eta, xi) q^{-|region|}`,
    /// including any mass on the current pattern (self jumps).
    pub fn region_total_rate(&self, eta: &Configuration, region_idx: usize) -> f64 {
        let k = self.regions[region_idx].len();
        let w = self.alphabet.region_weight(k);
        crate::model::pattern_iter(self.alphabet.q(), k)
            .map(|xi| self.density(eta, region_idx, &xi) * w)
            .sum()
    }

    /// Total jump rate over all regions.
    pub fn total_rate(&self, eta: &Configuration) -> f64 {
        (0..self.regions.len())
            .map(|i| self.region_total_rate(eta, i))
            .sum()
    }
}
