//! The TOML model/experiment file.
//!
//! A model file declares the site graph, the local alphabet, the interaction
//! potential (built-in Ising/Potts/zero or explicit term tables keyed by
//! local-state tuples), the dynamics family, and an optional experiment block
//! with seeds, horizons, grids, and observables. Table keys are
//! comma-separated local states in the order of the declared site list, e.g.
//! `"0,1"`. Parse errors cite line and column; semantic errors cite the
//! offending field and label.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{CustomRule, RateFamily, Region};
use crate::engine::model_fingerprint;
use crate::entropy::Phi;
use crate::error::{Error, Result};
use crate::model::{
    Boundary, InteractionTerm, LocalAlphabet, Potential, Specification, StateSpace, Volume,
};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub model: ModelSection,
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub experiment: Option<ExperimentSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub name: Option<String>,
    pub q: u8,
    pub beta: f64,
    pub boundary: String,
    #[serde(default)]
    pub boundary_values: Option<Vec<u8>>,
    pub graph: GraphSection,
    #[serde(default)]
    pub potential: Option<PotentialSection>,
    #[serde(default)]
    pub terms: Option<Vec<TermSection>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub kind: String,
    #[serde(default)]
    pub length: Option<usize>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub side: Option<usize>,
    #[serde(default)]
    pub sites: Option<Vec<String>>,
    #[serde(default)]
    pub edges: Option<Vec<[String; 2]>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: String,
    #[serde(default)]
    pub coupling: Option<f64>,
    #[serde(default)]
    pub field: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    pub sites: Vec<String>,
    pub table: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub family: String,
    /// Drive the dynamics at a different inverse temperature than the
    /// declared specification; deliberate mismatch knob for negative controls.
    #[serde(default)]
    pub beta_override: Option<f64>,
    #[serde(default)]
    pub rules: Option<Vec<RuleSection>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSection {
    pub region: Vec<String>,
    #[serde(default)]
    pub depends: Option<Vec<String>>,
    pub table: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub ensemble: Option<usize>,
    #[serde(default)]
    pub phi: Option<String>,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub state_cap: Option<u64>,
    #[serde(default)]
    pub observable: Option<ObservableSection>,
    #[serde(default)]
    pub feature_sites: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSection {
    pub fn times(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.stop > self.start) {
            return Err(Error::ModelFile(format!(
                "experiment.grid: need points >= 2 and stop > start, got {self:?}"
            )));
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| self.start + step * k as f64)
            .collect())
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSection {
    pub kind: String,
    pub site: String,
    #[serde(default)]
    pub value: Option<u8>,
    #[serde(default)]
    pub shift: Option<f64>,
}

/// A fully validated model: exact construction inputs plus the experiment
/// block and the canonical fingerprint.
#[derive(Debug)]
pub struct BuiltModel {
    pub volume: Arc<Volume>,
    pub alphabet: LocalAlphabet,
    /// Declared potential and specification (the reversal reference).
    pub potential: Arc<Potential>,
    pub spec: Arc<Specification>,
    /// Rate family, possibly driven at `dynamics.beta_override`.
    pub rates: Arc<RateFamily>,
    pub experiment: Option<ExperimentSection>,
    pub hash: String,
    pub name: String,
}

pub fn parse_str(text: &str) -> Result<ModelFile> {
    toml::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))
}

pub fn load(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)?;
    parse_str(&text)
}

fn parse_pattern_key(key: &str, arity: usize, q: u8, field: &str) -> Result<Vec<u8>> {
    let parts: Vec<&str> = key.split(',').collect();
    if parts.len() != arity {
        return Err(Error::ModelFile(format!(
            "{field}: key \"{key}\" has {} entries, expected {arity}",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| {
            let v: u8 = p
                .trim()
                .parse()
                .map_err(|_| Error::ModelFile(format!("{field}: bad state \"{p}\" in key \"{key}\"")))?;
            if v >= q {
                return Err(Error::ModelFile(format!(
                    "{field}: state {v} in key \"{key}\" outside alphabet of size {q}"
                )));
            }
            Ok(v)
        })
        .collect()
}

fn pattern_index(pattern: &[u8], q: u8) -> usize {
    pattern
        .iter()
        .enumerate()
        .fold(0usize, |acc, (i, &v)| acc + usize::from(v) * usize::from(q).pow(i as u32))
}

/// Reads a keyed table over the patterns of `declared` sites into a dense
/// vector indexed after sorting the sites ascending.
fn dense_table(
    declared: &[usize],
    table: &BTreeMap<String, f64>,
    q: u8,
    field: &str,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let k = declared.len();
    let size = usize::from(q).pow(k as u32);
    if table.len() != size {
        return Err(Error::ModelFile(format!(
            "{field}: table has {} entries, expected q^{k} = {size}",
            table.len()
        )));
    }
    let mut sorted: Vec<usize> = declared.to_vec();
    sorted.sort_unstable();
    // position of each sorted site inside the declared order
    let perm: Vec<usize> = sorted
        .iter()
        .map(|s| declared.iter().position(|d| d == s).unwrap())
        .collect();
    let mut dense = vec![f64::NAN; size];
    for (key, &value) in table {
        if !value.is_finite() {
            return Err(Error::ModelFile(format!(
                "{field}: non-finite value at key \"{key}\""
            )));
        }
        let declared_pattern = parse_pattern_key(key, k, q, field)?;
        let sorted_pattern: Vec<u8> = perm.iter().map(|&p| declared_pattern[p]).collect();
        dense[pattern_index(&sorted_pattern, q)] = value;
    }
    if let Some(slot) = dense.iter().position(|v| v.is_nan()) {
        return Err(Error::ModelFile(format!(
            "{field}: missing table entry for pattern index {slot}"
        )));
    }
    Ok((sorted, dense))
}

fn resolve_site(volume: &Volume, label: &str, field: &str) -> Result<usize> {
    volume.site_by_label(label).ok_or_else(|| {
        Error::ModelFile(format!("{field}: unknown site \"{label}\""))
    })
}

fn build_volume(section: &ModelSection) -> Result<Arc<Volume>> {
    let g = &section.graph;
    let wrap = section.boundary == "periodic";
    let volume = match g.kind.as_str() {
        "ring" => {
            let length = g.length.ok_or_else(|| {
                Error::ModelFile("model.graph: ring needs `length`".into())
            })?;
            Volume::ring(length, wrap)?
        }
        "torus" => {
            let dim = g
                .dim
                .ok_or_else(|| Error::ModelFile("model.graph: torus needs `dim`".into()))?;
            let side = g
                .side
                .ok_or_else(|| Error::ModelFile("model.graph: torus needs `side`".into()))?;
            Volume::torus(dim, side, wrap)?
        }
        "general" => {
            let sites = g.sites.clone().ok_or_else(|| {
                Error::ModelFile("model.graph: general graph needs `sites`".into())
            })?;
            if section.boundary != "free" {
                return Err(Error::ModelFile(
                    "model.boundary: general graphs support only \"free\"".into(),
                ));
            }
            let mut edges = Vec::new();
            for (i, e) in g.edges.clone().unwrap_or_default().iter().enumerate() {
                let a = sites.iter().position(|s| s == &e[0]).ok_or_else(|| {
                    Error::ModelFile(format!("model.graph.edges[{i}]: unknown site \"{}\"", e[0]))
                })?;
                let b = sites.iter().position(|s| s == &e[1]).ok_or_else(|| {
                    Error::ModelFile(format!("model.graph.edges[{i}]: unknown site \"{}\"", e[1]))
                })?;
                edges.push((a, b));
            }
            Volume::general(sites, &edges)?
        }
        other => {
            return Err(Error::ModelFile(format!(
                "model.graph.kind: unknown kind \"{other}\" (ring | torus | general)"
            )))
        }
    };
    Ok(Arc::new(volume))
}

fn build_boundary(section: &ModelSection) -> Result<Boundary> {
    match section.boundary.as_str() {
        "free" => Ok(Boundary::Free),
        "periodic" => Ok(Boundary::Periodic),
        "fixed" => {
            let values = section.boundary_values.clone().ok_or_else(|| {
                Error::ModelFile("model.boundary_values required for fixed boundary".into())
            })?;
            Ok(Boundary::Fixed(values))
        }
        other => Err(Error::ModelFile(format!(
            "model.boundary: unknown boundary \"{other}\" (free | periodic | fixed)"
        ))),
    }
}

fn build_potential(
    section: &ModelSection,
    volume: &Arc<Volume>,
    alphabet: LocalAlphabet,
    beta: f64,
) -> Result<Arc<Potential>> {
    let boundary = build_boundary(section)?;
    match (&section.potential, &section.terms) {
        (Some(p), None) => {
            let coupling = p.coupling.unwrap_or(1.0);
            let field = p.field.unwrap_or(0.0);
            let pot = match p.kind.as_str() {
                "ising" => Potential::ising(volume.clone(), alphabet, beta, coupling, field, boundary)?,
                "potts" => Potential::potts(volume.clone(), alphabet, beta, coupling, boundary)?,
                "zero" => Potential::zero(volume.clone(), alphabet),
                other => {
                    return Err(Error::ModelFile(format!(
                        "model.potential.kind: unknown kind \"{other}\" (ising | potts | zero)"
                    )))
                }
            };
            Ok(Arc::new(pot))
        }
        (None, Some(terms)) => {
            if matches!(boundary, Boundary::Fixed(_)) {
                return Err(Error::ModelFile(
                    "model.terms: fixed boundaries are supported only for the ising potential"
                        .into(),
                ));
            }
            let mut built = Vec::with_capacity(terms.len());
            for (i, t) in terms.iter().enumerate() {
                let field = format!("model.terms[{i}]");
                let declared: Vec<usize> = t
                    .sites
                    .iter()
                    .map(|l| resolve_site(volume, l, &field))
                    .collect::<Result<_>>()?;
                let (sites, table) = dense_table(&declared, &t.table, alphabet.q(), &field)?;
                built.push(InteractionTerm { sites, table });
            }
            Ok(Arc::new(Potential::new(
                volume.clone(),
                alphabet,
                beta,
                built,
                boundary,
            )?))
        }
        (Some(_), Some(_)) => Err(Error::ModelFile(
            "model: declare either model.potential or model.terms, not both".into(),
        )),
        (None, None) => Err(Error::ModelFile(
            "model: one of model.potential or model.terms is required".into(),
        )),
    }
}

fn build_rates(
    file: &ModelFile,
    volume: &Arc<Volume>,
    alphabet: LocalAlphabet,
    declared_spec: &Arc<Specification>,
) -> Result<Arc<RateFamily>> {
    let d = &file.dynamics;
    // dynamics may run at an overridden inverse temperature
    let driving_spec = match d.beta_override {
        Some(beta) => Arc::new(Specification::new(Arc::new(
            declared_spec.potential().with_beta(beta)?,
        ))?),
        None => declared_spec.clone(),
    };
    let rates = match d.family.as_str() {
        "heat_bath" => RateFamily::heat_bath(
            driving_spec,
            RateFamily::single_site_regions(volume),
        )?,
        "block_heat_bath" => RateFamily::block_heat_bath(driving_spec)?,
        "metropolis" => RateFamily::metropolis(
            driving_spec,
            RateFamily::single_site_regions(volume),
        )?,
        "exponential" => RateFamily::exponential(driving_spec)?,
        "cyclic_rotation" => RateFamily::cyclic_rotation(volume.clone(), alphabet)?,
        "custom" => {
            let rules = d.rules.clone().ok_or_else(|| {
                Error::ModelFile("dynamics.rules required for the custom family".into())
            })?;
            let mut regions = Vec::with_capacity(rules.len());
            let mut built = Vec::with_capacity(rules.len());
            for (i, rule) in rules.iter().enumerate() {
                let field = format!("dynamics.rules[{i}]");
                let region_declared: Vec<usize> = rule
                    .region
                    .iter()
                    .map(|l| resolve_site(volume, l, &field))
                    .collect::<Result<_>>()?;
                let depends_declared: Vec<usize> = rule
                    .depends
                    .clone()
                    .unwrap_or_else(|| rule.region.clone())
                    .iter()
                    .map(|l| resolve_site(volume, l, &field))
                    .collect::<Result<_>>()?;
                let q = alphabet.q();
                // normalize both axes to sorted site order
                let outer: BTreeMap<String, f64> =
                    rule.table.keys().map(|k| (k.clone(), 0.0)).collect();
                let (depends_sorted, _) = dense_table(&depends_declared, &outer, q, &field)?;
                let region_sorted = {
                    let mut r = region_declared.clone();
                    r.sort_unstable();
                    r
                };
                let p_size = usize::from(q).pow(depends_sorted.len() as u32);
                let t_size = usize::from(q).pow(region_sorted.len() as u32);
                let mut table = vec![vec![f64::NAN; t_size]; p_size];
                let dep_perm: Vec<usize> = depends_sorted
                    .iter()
                    .map(|s| depends_declared.iter().position(|d| d == s).unwrap())
                    .collect();
                let reg_perm: Vec<usize> = region_sorted
                    .iter()
                    .map(|s| region_declared.iter().position(|d| d == s).unwrap())
                    .collect();
                for (pk, row) in &rule.table {
                    let dp = parse_pattern_key(pk, depends_declared.len(), q, &field)?;
                    let sp: Vec<u8> = dep_perm.iter().map(|&p| dp[p]).collect();
                    let pi = pattern_index(&sp, q);
                    if row.len() != t_size {
                        return Err(Error::ModelFile(format!(
                            "{field}: row \"{pk}\" has {} targets, expected {t_size}",
                            row.len()
                        )));
                    }
                    for (tk, &v) in row {
                        let dt = parse_pattern_key(tk, region_declared.len(), q, &field)?;
                        let st: Vec<u8> = reg_perm.iter().map(|&p| dt[p]).collect();
                        table[pi][pattern_index(&st, q)] = v;
                    }
                }
                if table.iter().flatten().any(|v| v.is_nan()) {
                    return Err(Error::ModelFile(format!("{field}: incomplete table")));
                }
                regions.push(Region::new(region_declared));
                built.push(CustomRule {
                    depends: depends_sorted,
                    table,
                });
            }
            RateFamily::custom(volume.clone(), alphabet, regions, built)?
        }
        other => {
            return Err(Error::ModelFile(format!(
                "dynamics.family: unknown family \"{other}\""
            )))
        }
    };
    Ok(Arc::new(rates))
}

impl ModelFile {
    /// Validates and builds every exact-construction input.
    pub fn build(&self) -> Result<BuiltModel> {
        let alphabet = LocalAlphabet::new(self.model.q)
            .map_err(|e| Error::ModelFile(format!("model.q: {e}")))?;
        let volume = build_volume(&self.model)?;
        let potential = build_potential(&self.model, &volume, alphabet, self.model.beta)?;
        let spec = Arc::new(Specification::new(potential.clone())?);
        let rates = build_rates(self, &volume, alphabet, &spec)?;
        let hash = model_fingerprint(&volume, alphabet, &potential, &rates);
        let name = self
            .model
            .name
            .clone()
            .unwrap_or_else(|| format!("{}-{}", self.model.graph.kind, self.dynamics.family));
        Ok(BuiltModel {
            volume,
            alphabet,
            potential,
            spec,
            rates,
            experiment: self.experiment.clone(),
            hash,
            name,
        })
    }
}

impl BuiltModel {
    pub fn state_cap(&self) -> u64 {
        self.experiment
            .as_ref()
            .and_then(|e| e.state_cap)
            .unwrap_or(StateSpace::DEFAULT_CAP)
    }

    /// Resolve the declared observable against an enumerated space, applying
    /// the xlogx auto-shift when needed. Returns the observable and the
    /// shift that was applied.
    pub fn observable(
        &self,
        space: &StateSpace,
        phi: &Phi,
    ) -> Result<(crate::exact::Observable, f64)> {
        let section = self
            .experiment
            .as_ref()
            .and_then(|e| e.observable.clone())
            .ok_or_else(|| Error::ModelFile("experiment.observable is required".into()))?;
        let site = resolve_site(&self.volume, &section.site, "experiment.observable.site")?;
        let base = match section.kind.as_str() {
            "spin" => crate::exact::Observable::spin(space, site)?,
            "indicator" => {
                let value = section.value.ok_or_else(|| {
                    Error::ModelFile("experiment.observable.value required for indicator".into())
                })?;
                crate::exact::Observable::indicator(space, site, value)?
            }
            other => {
                return Err(Error::ModelFile(format!(
                    "experiment.observable.kind: unknown kind \"{other}\" (spin | indicator)"
                )))
            }
        };
        let mut shift = section.shift.unwrap_or(0.0);
        let (lo, _) = base.shifted(shift).range();
        if matches!(phi, Phi::XLogX) && lo <= 0.0 {
            // automatic affine shift into the domain, recorded by the caller
            shift += -lo + 1.0;
        }
        Ok((base.shifted(shift), shift))
    }

    pub fn feature_sites(&self) -> Result<Vec<usize>> {
        let labels = self
            .experiment
            .as_ref()
            .and_then(|e| e.feature_sites.clone())
            .unwrap_or_default();
        labels
            .iter()
            .map(|l| resolve_site(&self.volume, l, "experiment.feature_sites"))
            .collect()
    }
}

/// Parses a Phi selector: `square`, `xlogx`, or `power:<p>`.
pub fn phi_from_str(s: &str) -> Result<Phi> {
    match s {
        "square" => Ok(Phi::Square),
        "xlogx" => Ok(Phi::XLogX),
        other => match other.strip_prefix("power:") {
            Some(p) => {
                let p: f64 = p.parse().map_err(|_| {
                    Error::ModelFile(format!("experiment.phi: bad power exponent in \"{other}\""))
                })?;
                Phi::power(p)
            }
            None => Err(Error::ModelFile(format!(
                "experiment.phi: unknown selector \"{other}\" (square | xlogx | power:<p>)"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ISING_RING: &str = r#"
[model]
name = "ising-ring-4"
q = 2
beta = 0.5
boundary = "periodic"

[model.graph]
kind = "ring"
length = 4

[model.potential]
kind = "ising"
coupling = 1.0
field = 0.0

[dynamics]
family = "heat_bath"

[experiment]
seed = 7
horizon = 2.0
ensemble = 100
phi = "square"
grid = { start = 0.0, stop = 2.0, points = 5 }
observable = { kind = "spin", site = "s0" }
feature_sites = ["s0", "s2"]
"#;

    #[test]
    fn ising_ring_round_trip() {
        let file = parse_str(ISING_RING).unwrap();
        let built = file.build().unwrap();
        assert_eq!(built.volume.len(), 4);
        assert_eq!(built.potential.beta(), 0.5);
        assert_eq!(built.rates.regions().len(), 4);
        assert_eq!(built.hash.len(), 16);
        assert_eq!(built.name, "ising-ring-4");
        let grid = built.experiment.as_ref().unwrap().grid.unwrap().times().unwrap();
        assert_eq!(grid, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(built.feature_sites().unwrap(), vec![0, 2]);
    }

    #[test]
    fn parse_errors_cite_the_line() {
        let bad = "[model]\nq = 2\nbeta = \"half\"\n";
        let err = parse_str(bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "message should cite the line: {msg}");
    }

    #[test]
    fn unknown_site_cites_the_field() {
        let text = ISING_RING.replace("site = \"s0\"", "site = \"zz\"");
        let built = parse_str(&text).unwrap().build().unwrap();
        let space =
            StateSpace::enumerate(&built.volume, built.alphabet, StateSpace::DEFAULT_CAP).unwrap();
        let err = built.observable(&space, &Phi::Square).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("experiment.observable.site") && msg.contains("zz"),
            "{msg}"
        );
    }

    #[test]
    fn custom_terms_and_key_order() {
        let text = r#"
[model]
q = 2
beta = 1.0
boundary = "free"

[model.graph]
kind = "general"
sites = ["a", "b"]
edges = [["a", "b"]]

[[model.terms]]
sites = ["b", "a"]
table = { "0,0" = -1.0, "1,0" = 1.0, "0,1" = 1.0, "1,1" = -1.0 }

[dynamics]
family = "heat_bath"
"#;
        let built = parse_str(text).unwrap().build().unwrap();
        // declared order (b, a): key "1,0" means b=1, a=0; sorted storage is
        // (a, b), so pattern (0, 1) must carry the value 1.0
        let term = &built.potential.terms()[0];
        assert_eq!(term.sites, vec![0, 1]);
        assert_eq!(term.table, vec![-1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn missing_table_entries_are_rejected() {
        let text = r#"
[model]
q = 2
beta = 1.0
boundary = "free"

[model.graph]
kind = "general"
sites = ["a"]

[[model.terms]]
sites = ["a"]
table = { "0" = 1.0 }

[dynamics]
family = "heat_bath"
"#;
        let err = parse_str(text).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("model.terms[0]"), "{err}");
    }

    #[test]
    fn beta_override_changes_the_driving_rates_only() {
        let text = ISING_RING.replace("family = \"heat_bath\"", "family = \"heat_bath\"\nbeta_override = 0.6");
        let built = parse_str(&text).unwrap().build().unwrap();
        assert_eq!(built.potential.beta(), 0.5);
        // the rates resample from the 0.6 specification: densities differ
        let space =
            StateSpace::enumerate(&built.volume, built.alphabet, StateSpace::DEFAULT_CAP).unwrap();
        let eta = space.config_of(15);
        let declared = built.spec.density(&[0], &[0], &eta).unwrap();
        let driving = built.rates.density(&eta, 0, &[0]);
        assert!((declared - driving).abs() > 1e-3);
    }

    #[test]
    fn custom_rules_build_cyclic_rotation_by_hand() {
        let text = r#"
[model]
q = 3
beta = 0.0
boundary = "free"

[model.graph]
kind = "general"
sites = ["a"]

[model.potential]
kind = "zero"

[dynamics]
family = "custom"

[[dynamics.rules]]
region = ["a"]
table = { "0" = { "0" = 0.0, "1" = 1.0, "2" = 0.0 }, "1" = { "0" = 0.0, "1" = 0.0, "2" = 1.0 }, "2" = { "0" = 1.0, "1" = 0.0, "2" = 0.0 } }
"#;
        let built = parse_str(text).unwrap().build().unwrap();
        let cfg = crate::model::Configuration::constant(1, 2);
        assert_eq!(built.rates.density(&cfg, 0, &[0]), 1.0);
        assert_eq!(built.rates.density(&cfg, 0, &[1]), 0.0);
    }

    #[test]
    fn phi_selectors() {
        assert_eq!(phi_from_str("square").unwrap(), Phi::Square);
        assert_eq!(phi_from_str("xlogx").unwrap(), Phi::XLogX);
        assert!(matches!(phi_from_str("power:1.5").unwrap(), Phi::Power(_)));
        assert!(phi_from_str("cube").is_err());
    }
}
