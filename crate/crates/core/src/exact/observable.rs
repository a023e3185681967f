use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::ConditionReport;
use crate::error::{Error, Result};
use crate::exact::{semigroup_apply, Generator};
use crate::model::StateSpace;

/// Real observable over the enumerated states, optionally tagged with the
/// sites it depends on.
#[derive(Debug, Clone)]
pub struct Observable {
    pub values: Vec<f64>,
    pub locality: Option<Vec<usize>>,
}

impl Observable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("observable has non-finite entries".into()));
        }
        Ok(Self {
            values,
            locality: None,
        })
    }

    pub fn constant(space: &StateSpace, c: f64) -> Self {
        Self {
            values: vec![c; space.count() as usize],
            locality: Some(Vec::new()),
        }
    }

    /// Spin value `2 s - 1` of one site; requires `q = 2`.
    pub fn spin(space: &StateSpace, site: usize) -> Result<Self> {
        if space.q() != 2 {
            return Err(Error::Invalid(format!(
                "spin observable needs q = 2, got q = {}",
                space.q()
            )));
        }
        if site >= space.n_sites() {
            return Err(Error::SiteOutsideVolume {
                site,
                volume: space.n_sites(),
            });
        }
        let values = space
            .states()
            .map(|idx| f64::from(space.site_value(idx, site)) * 2.0 - 1.0)
            .collect();
        Ok(Self {
            values,
            locality: Some(vec![site]),
        })
    }

    /// Indicator of `site` carrying local state `value`.
    pub fn indicator(space: &StateSpace, site: usize, value: u8) -> Result<Self> {
        if site >= space.n_sites() {
            return Err(Error::SiteOutsideVolume {
                site,
                volume: space.n_sites(),
            });
        }
        if value >= space.q() {
            return Err(Error::StateOutsideAlphabet {
                value,
                q: space.q(),
            });
        }
        let values = space
            .states()
            .map(|idx| {
                if space.site_value(idx, site) == value {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self {
            values,
            locality: Some(vec![site]),
        })
    }

    /// Random table over the patterns of `sites`, values in `[-scale, scale]`.
    pub fn random_local(space: &StateSpace, sites: &[usize], seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<f64> = (0..space.pattern_count(sites.len()))
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        let q = u64::from(space.q());
        let values = space
            .states()
            .map(|idx| {
                let key = sites.iter().enumerate().fold(0u64, |acc, (i, &s)| {
                    acc + u64::from(space.site_value(idx, s)) * q.pow(i as u32)
                });
                table[key as usize]
            })
            .collect();
        Self {
            values,
            locality: Some(sites.to_vec()),
        }
    }

    /// Pointwise sum of two observables; locality is the union of tags.
    pub fn sum(&self, other: &Observable) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::Invalid("observable length mismatch".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        let locality = match (&self.locality, &other.locality) {
            (Some(a), Some(b)) => {
                let mut u = a.clone();
                u.extend_from_slice(b);
                u.sort_unstable();
                u.dedup();
                Some(u)
            }
            _ => None,
        };
        Ok(Self { values, locality })
    }

    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + offset).collect(),
            locality: self.locality.clone(),
        }
    }

    pub fn range(&self) -> (f64, f64) {
        let lo = self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let hi = self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        (lo, hi)
    }
}

/// Oscillation of `f` at one site: the sup over pairs differing only there.
pub fn oscillation(space: &StateSpace, f: &[f64], site: usize) -> f64 {
    let q = space.q();
    let mut worst = 0.0f64;
    for idx in space.states() {
        if space.site_value(idx, site) != 0 {
            continue;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in 0..q {
            let x = f[space.with_site(idx, site, v) as usize];
            lo = lo.min(x);
            hi = hi.max(x);
        }
        worst = worst.max(hi - lo);
    }
    worst
}

/// Triple norm `sum_x delta_x(f)`, the total oscillation over all sites.
pub fn triple_norm(space: &StateSpace, f: &[f64]) -> f64 {
    (0..space.n_sites())
        .map(|x| oscillation(space, f, x))
        .sum()
}

/// Randomized check that a locality-tagged observable really depends only on
/// its tagged sites.
pub fn probe_locality(space: &StateSpace, obs: &Observable, probes: u64, seed: u64) -> bool {
    let Some(tag) = &obs.locality else {
        return true;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<usize> = (0..space.n_sites()).filter(|s| !tag.contains(s)).collect();
    if free.is_empty() {
        return true;
    }
    for _ in 0..probes {
        let idx = rng.random_range(0..space.count());
        let site = free[rng.random_range(0..free.len())];
        let v = rng.random_range(0..space.q());
        let other = space.with_site(idx, site, v);
        if obs.values[idx as usize] != obs.values[other as usize] {
            return false;
        }
    }
    true
}

/// Outcome of the semigroup growth-bound checks.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GrowthBoundReport {
    /// Per grid time: `(t, |||P_t f|||, e^{(M - eps) t} |||f|||, ok)`.
    pub per_t: Vec<(f64, f64, f64, bool)>,
    pub linf_lhs: f64,
    pub linf_rhs: f64,
    pub linf_ok: bool,
    pub pass: bool,
}

/// Asserts `|||P_t f||| <= e^{(M - eps) t} |||f|||` on the grid and
/// `||L f||_inf <= (total-rate bound) * |||f|||`, using audited constants.
pub fn growth_bound_check(
    gen: &Generator,
    report: &ConditionReport,
    space: &StateSpace,
    f: &[f64],
    ts: &[f64],
) -> Result<GrowthBoundReport> {
    let base = triple_norm(space, f);
    let mut per_t = Vec::with_capacity(ts.len());
    let mut pass = true;
    for &t in ts {
        let evolved = semigroup_apply(gen, f, t)?;
        let lhs = triple_norm(space, &evolved);
        let rhs = ((report.influence_m - report.epsilon) * t).exp() * base;
        let ok = lhs <= rhs * (1.0 + 1e-9) + 1e-12;
        pass &= ok;
        per_t.push((t, lhs, rhs, ok));
    }
    let lf = gen.apply_vec(f);
    let linf_lhs = lf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let linf_rhs = report.rate_total_bound * base;
    let linf_ok = linf_lhs <= linf_rhs * (1.0 + 1e-9) + 1e-12;
    pass &= linf_ok;
    Ok(GrowthBoundReport {
        per_t,
        linf_lhs,
        linf_rhs,
        linf_ok,
        pass,
    })
}
