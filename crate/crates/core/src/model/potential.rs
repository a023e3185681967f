use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Configuration, LocalAlphabet, Volume};

/// Boundary condition of a finite-volume potential.
///
/// `Fixed` freezes ghost sites outside the volume to declared values; the
/// constructors fold the resulting ghost interactions into single-site terms,
/// so all audited constants are boundary-dependent.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Free,
    Periodic,
    Fixed(Vec<u8>),
}

impl Boundary {
    pub fn tag(&self) -> &'static str {
        match self {
            Boundary::Free => "free",
            Boundary::Periodic => "periodic",
            Boundary::Fixed(_) => "fixed",
        }
    }
}

/// One interaction term: a finite site set `B` and a table over the local
/// patterns on `B` (little-endian mixed radix in the order of `sites`).
#[derive(Debug, Clone)]
pub struct InteractionTerm {
    pub sites: Vec<usize>,
    pub table: Vec<f64>,
}

impl InteractionTerm {
    /// Table value at the pattern given by `value_at(site)`.
    fn eval_with(&self, q: u8, mut value_at: impl FnMut(usize) -> u8) -> f64 {
        let mut idx = 0usize;
        let mut pow = 1usize;
        for &s in &self.sites {
            idx += usize::from(value_at(s)) * pow;
            pow *= usize::from(q);
        }
        self.table[idx]
    }

    fn max_abs(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Interaction potential: inverse temperature, finite term collection, and the
/// boundary condition tag. Terms live on subsets of the volume; ghost
/// interactions from fixed boundaries are pre-folded into the tables.
#[derive(Debug, Clone)]
pub struct Potential {
    volume: Arc<Volume>,
    alphabet: LocalAlphabet,
    beta: f64,
    terms: Vec<InteractionTerm>,
    boundary: Boundary,
    by_site: Vec<Vec<usize>>,
    range: usize,
    summability: f64,
}

impl Potential {
    pub fn new(
        volume: Arc<Volume>,
        alphabet: LocalAlphabet,
        beta: f64,
        terms: Vec<InteractionTerm>,
        boundary: Boundary,
    ) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::Invalid(format!(
                "inverse temperature must be finite and nonnegative, got {beta}"
            )));
        }
        let n = volume.len();
        let q = alphabet.q();
        for (k, term) in terms.iter().enumerate() {
            if term.sites.is_empty() {
                return Err(Error::Invalid(format!("term {k} has empty site set")));
            }
            if term.sites.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!(
                    "term {k} sites must be strictly increasing, got {:?}",
                    term.sites
                )));
            }
            for &s in &term.sites {
                if s >= n {
                    return Err(Error::SiteOutsideVolume { site: s, volume: n });
                }
            }
            let expect = usize::from(q).pow(term.sites.len() as u32);
            if term.table.len() != expect {
                return Err(Error::Invalid(format!(
                    "term {k} table has {} entries, expected q^|B| = {expect}",
                    term.table.len()
                )));
            }
            if term.table.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("term {k} table has non-finite entries")));
            }
        }
        let mut by_site = vec![Vec::new(); n];
        for (k, term) in terms.iter().enumerate() {
            for &s in &term.sites {
                by_site[s].push(k);
            }
        }
        let range = terms.iter().map(|t| t.sites.len()).max().unwrap_or(0);
        let summability = (0..n)
            .map(|x| {
                by_site[x]
                    .iter()
                    .map(|&k| terms[k].sites.len() as f64 * terms[k].max_abs())
                    .sum::<f64>()
            })
            .fold(0.0f64, f64::max);
        Ok(Self {
            volume,
            alphabet,
            beta,
            terms,
            boundary,
            by_site,
            range,
            summability,
        })
    }

    /// The zero potential (independent uniform spins at any temperature).
    pub fn zero(volume: Arc<Volume>, alphabet: LocalAlphabet) -> Self {
        Self::new(volume, alphabet, 0.0, Vec::new(), Boundary::Free).expect("zero potential")
    }

    /// Nearest-neighbor Ising potential on the volume's edges with coupling
    /// `j` and field `h`; states map to spins via `sigma = 2s - 1` (q = 2).
    ///
    /// With `Boundary::Fixed(ghosts)` on a chain (`Volume::ring(n, false)`),
    /// `ghosts = [left, right]` adds the frozen-neighbor field at the two ends.
    pub fn ising(
        volume: Arc<Volume>,
        alphabet: LocalAlphabet,
        beta: f64,
        j: f64,
        h: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if alphabet.q() != 2 {
            return Err(Error::Invalid(format!(
                "ising potential needs q = 2, got q = {}",
                alphabet.q()
            )));
        }
        let spin = |s: u8| f64::from(s) * 2.0 - 1.0;
        let mut terms = Vec::new();
        for (a, b) in volume.edges() {
            // -J sigma_a sigma_b, little-endian over (a, b)
            let table = vec![
                -j * spin(0) * spin(0),
                -j * spin(1) * spin(0),
                -j * spin(0) * spin(1),
                -j * spin(1) * spin(1),
            ];
            terms.push(InteractionTerm {
                sites: vec![a, b],
                table,
            });
        }
        let mut field = vec![h; volume.len()];
        if let Boundary::Fixed(ghosts) = &boundary {
            match volume.geometry() {
                crate::model::Geometry::Ring { length } => {
                    if ghosts.len() != 2 {
                        return Err(Error::Invalid(format!(
                            "fixed boundary on a chain needs 2 ghost values, got {}",
                            ghosts.len()
                        )));
                    }
                    if ghosts.iter().any(|&g| g >= 2) {
                        return Err(Error::StateOutsideAlphabet {
                            value: *ghosts.iter().max().unwrap(),
                            q: 2,
                        });
                    }
                    // ghost edge -J sigma_ghost sigma_end folds into the field
                    field[0] += j * spin(ghosts[0]);
                    field[length - 1] += j * spin(ghosts[1]);
                }
                _ => {
                    return Err(Error::Invalid(
                        "fixed boundary is supported on chain geometry only".into(),
                    ))
                }
            }
        }
        for (x, hx) in field.into_iter().enumerate() {
            if hx != 0.0 {
                terms.push(InteractionTerm {
                    sites: vec![x],
                    table: vec![-hx * spin(0), -hx * spin(1)],
                });
            }
        }
        Self::new(volume, alphabet, beta, terms, boundary)
    }

    /// Ferromagnetic Potts potential `-J * delta(sigma_a, sigma_b)` on edges.
    pub fn potts(
        volume: Arc<Volume>,
        alphabet: LocalAlphabet,
        beta: f64,
        j: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if matches!(boundary, Boundary::Fixed(_)) {
            return Err(Error::Invalid(
                "fixed boundary is not offered for the potts potential".into(),
            ));
        }
        let q = usize::from(alphabet.q());
        let mut terms = Vec::new();
        for (a, b) in volume.edges() {
            let mut table = vec![0.0; q * q];
            for s in 0..q {
                table[s + q * s] = -j;
            }
            terms.push(InteractionTerm {
                sites: vec![a, b],
                table,
            });
        }
        Self::new(volume, alphabet, beta, terms, boundary)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Same potential at a different inverse temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(
            self.volume.clone(),
            self.alphabet,
            beta,
            self.terms.clone(),
            self.boundary.clone(),
        )
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn volume(&self) -> &Arc<Volume> {
        &self.volume
    }

    pub fn alphabet(&self) -> LocalAlphabet {
        self.alphabet
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    /// Largest interaction set size, `max |B|`.
    pub fn range(&self) -> usize {
        self.range
    }

    /// Per-site summability constant `sup_x sum_{B:x in B} |B| max|Phi_B|`.
    pub fn summability(&self) -> f64 {
        self.summability
    }

    /// Indices of terms whose site set meets `region`, without duplicates.
    pub fn terms_meeting(&self, region: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = region
            .iter()
            .flat_map(|&s| self.by_site[s].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Sorted union of `region` with every interaction set meeting it.
    pub fn dependency_of(&self, region: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = region.to_vec();
        for k in self.terms_meeting(region) {
            out.extend_from_slice(&self.terms[k].sites);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Local energy of the spliced configuration `xi_region eta_off-region`:
    /// the sum over terms meeting `region` evaluated on the splice.
    pub fn local_energy(
        &self,
        region: &[usize],
        xi: &[u8],
        eta: &Configuration,
    ) -> Result<f64> {
        for &s in region {
            self.volume.check_site(s)?;
        }
        for &v in xi {
            if v >= self.alphabet.q() {
                return Err(Error::StateOutsideAlphabet {
                    value: v,
                    q: self.alphabet.q(),
                });
            }
        }
        let term_ids = self.terms_meeting(region);
        Ok(self.energy_over_terms(&term_ids, region, xi, eta))
    }

    /// Energy restricted to an explicit term list; hot path shared with the
    /// rate evaluators, which precompute the list per update region.
    pub fn energy_over_terms(
        &self,
        term_ids: &[usize],
        region: &[usize],
        xi: &[u8],
        eta: &Configuration,
    ) -> f64 {
        let q = self.alphabet.q();
        term_ids
            .iter()
            .map(|&k| {
                self.terms[k].eval_with(q, |site| {
                    match region.iter().position(|&r| r == site) {
                        Some(p) => xi[p],
                        None => eta.get(site),
                    }
                })
            })
            .sum()
    }
}
