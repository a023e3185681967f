use crate::error::{Error, Result};
use crate::model::Volume;

/// Finite local state space `{0, .., q-1}` with the uniform reference measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalAlphabet {
    q: u8,
}

impl LocalAlphabet {
    pub fn new(q: u8) -> Result<Self> {
        if q < 2 {
            return Err(Error::Invalid(format!("alphabet size {q} < 2")));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    /// Reference weight of a single local state, `1/q`.
    pub fn weight(&self) -> f64 {
        1.0 / f64::from(self.q)
    }

    pub fn log_weight(&self) -> f64 {
        -f64::from(self.q).ln()
    }

    /// Reference weight of a pattern on `k` sites, `q^{-k}`.
    pub fn region_weight(&self, k: usize) -> f64 {
        self.weight().powi(k as i32)
    }
}

/// Total assignment of a local state to every site of the volume.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    values: Vec<u8>,
}

impl Configuration {
    pub fn new(values: Vec<u8>, alphabet: LocalAlphabet) -> Result<Self> {
        for &v in &values {
            if v >= alphabet.q() {
                return Err(Error::StateOutsideAlphabet {
                    value: v,
                    q: alphabet.q(),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn constant(n_sites: usize, value: u8) -> Self {
        Self {
            values: vec![value; n_sites],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, site: usize) -> u8 {
        self.values[site]
    }

    pub fn set(&mut self, site: usize, value: u8) {
        self.values[site] = value;
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    /// Values restricted to `sites`, in the given order.
    pub fn restrict(&self, sites: &[usize]) -> Vec<u8> {
        sites.iter().map(|&s| self.values[s]).collect()
    }

    /// New configuration equal to `self` off `sites` and to `patch` on them.
    pub fn splice(&self, sites: &[usize], patch: &[u8]) -> Self {
        let mut out = self.clone();
        for (&s, &v) in sites.iter().zip(patch) {
            out.values[s] = v;
        }
        out
    }

    pub fn patch_in_place(&mut self, sites: &[usize], patch: &[u8]) {
        for (&s, &v) in sites.iter().zip(patch) {
            self.values[s] = v;
        }
    }
}

/// Enumerated product state space with a stable index <-> configuration
/// bijection (little-endian mixed radix over the site order).
#[derive(Debug, Clone)]
pub struct StateSpace {
    n_sites: usize,
    q: u8,
    count: u64,
    powers: Vec<u64>,
}

impl StateSpace {
    /// Default cap on the number of enumerated states.
    pub const DEFAULT_CAP: u64 = 1 << 22;

    pub fn enumerate(volume: &Volume, alphabet: LocalAlphabet, cap: u64) -> Result<Self> {
        let n_sites = volume.len();
        let q = alphabet.q();
        let size = (0..n_sites).try_fold(1u128, |acc, _| {
            let next = acc.checked_mul(u128::from(q))?;
            if next > u128::from(u64::MAX) {
                None
            } else {
                Some(next)
            }
        });
        let size = match size {
            Some(s) if s <= u128::from(cap) => s as u64,
            Some(s) => {
                return Err(Error::StateSpaceTooLarge {
                    q,
                    sites: n_sites,
                    size: s,
                    cap,
                })
            }
            None => {
                return Err(Error::StateSpaceTooLarge {
                    q,
                    sites: n_sites,
                    size: u128::MAX,
                    cap,
                })
            }
        };
        let mut powers = Vec::with_capacity(n_sites + 1);
        let mut p = 1u64;
        for _ in 0..=n_sites {
            powers.push(p);
            p = p.saturating_mul(u64::from(q));
        }
        Ok(Self {
            n_sites,
            q,
            count: size,
            powers,
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn alphabet(&self) -> LocalAlphabet {
        LocalAlphabet { q: self.q }
    }

    pub fn index_of(&self, cfg: &Configuration) -> u64 {
        debug_assert_eq!(cfg.len(), self.n_sites);
        cfg.values()
            .iter()
            .enumerate()
            .map(|(i, &v)| u64::from(v) * self.powers[i])
            .sum()
    }

    pub fn config_of(&self, mut idx: u64) -> Configuration {
        let q = u64::from(self.q);
        let mut values = Vec::with_capacity(self.n_sites);
        for _ in 0..self.n_sites {
            values.push((idx % q) as u8);
            idx /= q;
        }
        Configuration { values }
    }

    pub fn site_value(&self, idx: u64, site: usize) -> u8 {
        ((idx / self.powers[site]) % u64::from(self.q)) as u8
    }

    pub fn with_site(&self, idx: u64, site: usize, value: u8) -> u64 {
        let old = u64::from(self.site_value(idx, site));
        let new = u64::from(value);
        if new >= old {
            idx + (new - old) * self.powers[site]
        } else {
            idx - (old - new) * self.powers[site]
        }
    }

    pub fn with_patch(&self, mut idx: u64, sites: &[usize], values: &[u8]) -> u64 {
        for (&s, &v) in sites.iter().zip(values) {
            idx = self.with_site(idx, s, v);
        }
        idx
    }

    pub fn states(&self) -> impl Iterator<Item = u64> {
        0..self.count
    }

    /// Iterate all patterns on `k` sites in mixed-radix order.
    pub fn patterns(&self, k: usize) -> PatternIter {
        PatternIter {
            q: self.q,
            current: vec![0; k],
            done: k == 0,
            fresh: true,
        }
    }

    pub fn pattern_count(&self, k: usize) -> u64 {
        (0..k).fold(1u64, |acc, _| acc * u64::from(self.q))
    }
}

/// Iterator over all `q^k` patterns on `k` sites.
pub struct PatternIter {
    q: u8,
    current: Vec<u8>,
    done: bool,
    fresh: bool,
}

impl Iterator for PatternIter {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        if self.done && !self.fresh {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            if self.done {
                // k == 0: single empty pattern
                self.done = true;
                return Some(Vec::new());
            }
            return Some(self.current.clone());
        }
        for slot in self.current.iter_mut() {
            if *slot + 1 < self.q {
                *slot += 1;
                return Some(self.current.clone());
            }
            *slot = 0;
        }
        self.done = true;
        None
    }
}
