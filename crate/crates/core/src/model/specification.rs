use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Configuration, LocalAlphabet, Potential, StateSpace, Volume};

/// Work-unit cap for the exhaustive enumeration checks below.
pub const SCAN_CAP: u64 = 1 << 26;

/// Sites a dependency neighborhood may contain before an exhaustive local scan
/// is refused.
pub const MAX_DEP_SITES: usize = 20;

/// Conditional Gibbs specification derived from a potential.
///
/// `density(region, xi, eta)` is the conditional density of the pattern `xi`
/// on `region` given `eta` off the region, w.r.t. the uniform reference
/// measure: `exp(-beta H_region(xi eta)) / Z_region(eta)`. Normalizers are
/// evaluated in log space so large `beta` stays finite.
#[derive(Debug, Clone)]
pub struct Specification {
    volume: Arc<Volume>,
    alphabet: LocalAlphabet,
    potential: Arc<Potential>,
    delta: f64,
    single_site_min: f64,
    single_site_max: f64,
}

impl Specification {
    /// Builds the specification and audits the single-site density bound
    /// `delta` by an exhaustive scan over each site's dependency neighborhood.
    pub fn new(potential: Arc<Potential>) -> Result<Self> {
        let volume = potential.volume().clone();
        let alphabet = potential.alphabet();
        let mut spec = Self {
            volume,
            alphabet,
            potential,
            delta: 1.0,
            single_site_min: 1.0,
            single_site_max: 1.0,
        };
        let (lo, hi) = spec.scan_single_site_bounds()?;
        spec.single_site_min = lo;
        spec.single_site_max = hi;
        spec.delta = lo.min(1.0 / hi);
        Ok(spec)
    }

    fn scan_single_site_bounds(&self) -> Result<(f64, f64)> {
        let q = self.alphabet.q();
        let n = self.volume.len();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for x in 0..n {
            let dep = self.potential.dependency_of(&[x]);
            if dep.len() > MAX_DEP_SITES {
                return Err(Error::ScanTooLarge {
                    work: (u128::from(q)).pow(dep.len() as u32),
                    cap: SCAN_CAP,
                });
            }
            let mut eta = Configuration::constant(n, 0);
            for pattern in pattern_iter(q, dep.len()) {
                eta.patch_in_place(&dep, &pattern);
                for v in 0..q {
                    let d = self.density(&[x], &[v], &eta)?;
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
        }
        if n == 0 {
            return Ok((1.0, 1.0));
        }
        Ok((lo, hi))
    }

    pub fn volume(&self) -> &Arc<Volume> {
        &self.volume
    }

    pub fn alphabet(&self) -> LocalAlphabet {
        self.alphabet
    }

    pub fn potential(&self) -> &Arc<Potential> {
        &self.potential
    }

    /// Audited single-site density bound: `delta <= gamma_x <= 1/delta`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The constant `C = |log delta|` entering the region density bounds.
    pub fn log_range_constant(&self) -> f64 {
        self.delta.ln().abs()
    }

    pub fn single_site_bounds(&self) -> (f64, f64) {
        (self.single_site_min, self.single_site_max)
    }

    /// Log conditional density of `xi` on `region` given `eta` off the region.
    pub fn log_density(&self, region: &[usize], xi: &[u8], eta: &Configuration) -> Result<f64> {
        let q = self.alphabet.q();
        if xi.len() != region.len() {
            return Err(Error::Invalid(format!(
                "pattern length {} does not match region size {}",
                xi.len(),
                region.len()
            )));
        }
        for &s in region {
            self.volume.check_site(s)?;
        }
        for &v in xi {
            if v >= q {
                return Err(Error::StateOutsideAlphabet { value: v, q });
            }
        }
        let term_ids = self.potential.terms_meeting(region);
        Ok(self.log_density_with_terms(&term_ids, region, xi, eta))
    }

    /// Hot-path variant with a precomputed incident-term list.
    pub fn log_density_with_terms(
        &self,
        term_ids: &[usize],
        region: &[usize],
        xi: &[u8],
        eta: &Configuration,
    ) -> f64 {
        let beta = self.potential.beta();
        let q = self.alphabet.q();
        let target = -beta * self.potential.energy_over_terms(term_ids, region, xi, eta);
        // log-sum-exp over all patterns on the region
        let mut max = f64::NEG_INFINITY;
        let mut exponents = Vec::with_capacity(usize::from(q).pow(region.len() as u32));
        for zeta in pattern_iter(q, region.len()) {
            let e = -beta * self.potential.energy_over_terms(term_ids, region, &zeta, eta);
            max = max.max(e);
            exponents.push(e);
        }
        let lse = max + exponents.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
        target - lse + region.len() as f64 * f64::from(q).ln()
    }

    /// Conditional density w.r.t. the uniform reference measure on the region.
    pub fn density(&self, region: &[usize], xi: &[u8], eta: &Configuration) -> Result<f64> {
        Ok(self.log_density(region, xi, eta)?.exp())
    }

    /// Conditional probability of the pattern, `density * q^{-|region|}`.
    pub fn probability(&self, region: &[usize], xi: &[u8], eta: &Configuration) -> Result<f64> {
        Ok(self.density(region, xi, eta)? * self.alphabet.region_weight(region.len()))
    }
}

/// Iterate all `q^k` patterns in little-endian mixed-radix order.
pub(crate) fn pattern_iter(q: u8, k: usize) -> impl Iterator<Item = Vec<u8>> {
    let total: u64 = (0..k).fold(1, |acc, _| acc * u64::from(q));
    (0..total).map(move |mut idx| {
        let mut p = Vec::with_capacity(k);
        for _ in 0..k {
            p.push((idx % u64::from(q)) as u8);
            idx /= u64::from(q);
        }
        p
    })
}

fn check_scan(work: u128) -> Result<()> {
    if work > u128::from(SCAN_CAP) {
        return Err(Error::ScanTooLarge {
            work,
            cap: SCAN_CAP,
        });
    }
    Ok(())
}

/// Worst absolute discrepancy between the direct region density and the
/// chain-rule product of single-site marginal conditional densities, over all
/// enumerable configurations. `order` fixes the site enumeration; default is
/// increasing site index.
pub fn chain_rule_check(
    spec: &Specification,
    space: &StateSpace,
    region: &[usize],
    order: Option<&[usize]>,
) -> Result<f64> {
    if region.len() < 2 {
        return Err(Error::Invalid(format!(
            "chain rule needs |region| >= 2, got {}",
            region.len()
        )));
    }
    let mut default_order: Vec<usize> = region.to_vec();
    default_order.sort_unstable();
    let order: Vec<usize> = match order {
        Some(o) => {
            let mut check: Vec<usize> = o.to_vec();
            check.sort_unstable();
            if check != default_order {
                return Err(Error::Invalid(
                    "enumeration order must be a permutation of the region".into(),
                ));
            }
            o.to_vec()
        }
        None => default_order,
    };
    let k = order.len();
    let q = space.q();
    let per_state: u128 = (1..=k)
        .map(|j| u128::from(space.pattern_count(j - 1)) * u128::from(space.pattern_count(j)))
        .sum();
    check_scan(u128::from(space.count()) * per_state)?;

    let mut worst = 0.0f64;
    for idx in space.states() {
        let omega = space.config_of(idx);
        let direct = spec.density(&order, &omega.restrict(&order), &omega)?;
        let mut product = 1.0;
        for j in 1..=k {
            let prefix = &order[..j];
            let target = omega.get(order[j - 1]);
            // marginal density at site order[j-1] of the kernel on the prefix,
            // conditioned on omega outside the prefix
            let mut marg = 0.0;
            for mut zeta in pattern_iter(q, j - 1) {
                zeta.push(target);
                marg += spec.density(prefix, &zeta, &omega)?;
            }
            marg *= space.alphabet().region_weight(j - 1);
            product *= marg;
        }
        worst = worst.max((direct - product).abs());
    }
    Ok(worst)
}

/// Result of the exhaustive density- and quotient-bound scan.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DensityBoundsReport {
    pub density_min: f64,
    pub density_max: f64,
    pub density_bound: f64,
    pub density_pass: bool,
    pub quotient_min: f64,
    pub quotient_max: f64,
    pub quotient_bound: f64,
    pub quotient_pass: bool,
}

/// Exhaustively verifies `e^{-C|region|} <= gamma <= e^{C|region|}` for the
/// diagonal densities and the two-sided quotient bound `e^{+-2C|region|}`
/// for density ratios, with `C = |log delta|`.
pub fn density_bounds_check(
    spec: &Specification,
    space: &StateSpace,
    region: &[usize],
) -> Result<DensityBoundsReport> {
    let k = region.len();
    let pats = space.pattern_count(k);
    check_scan(u128::from(space.count()) * u128::from(pats) * u128::from(pats))?;
    let c = spec.log_range_constant();
    let density_bound = (c * k as f64).exp();
    let quotient_bound = (2.0 * c * k as f64).exp();

    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    let mut qmin = f64::INFINITY;
    let mut qmax = 0.0f64;
    for idx in space.states() {
        let omega = space.config_of(idx);
        let own = spec.density(region, &omega.restrict(region), &omega)?;
        dmin = dmin.min(own);
        dmax = dmax.max(own);
        for xi in pattern_iter(space.q(), k) {
            let d = spec.density(region, &xi, &omega)?;
            let ratio = d / own;
            qmin = qmin.min(ratio);
            qmax = qmax.max(ratio);
        }
    }
    // small headroom over the bound for floating-point roundoff
    let tol = 1.0 + 1e-12;
    Ok(DensityBoundsReport {
        density_min: dmin,
        density_max: dmax,
        density_bound,
        density_pass: dmax <= density_bound * tol && dmin * tol >= 1.0 / density_bound,
        quotient_min: qmin,
        quotient_max: qmax,
        quotient_bound,
        quotient_pass: qmax <= quotient_bound * tol && qmin * tol >= 1.0 / quotient_bound,
    })
}

/// Max discrepancy of the consistency identity `gamma_outer gamma_inner =
/// gamma_outer` over all conditioning configurations and indicator targets.
pub fn consistency_check(
    spec: &Specification,
    space: &StateSpace,
    inner: &[usize],
    outer: &[usize],
) -> Result<f64> {
    if !inner.iter().all(|s| outer.contains(s)) {
        return Err(Error::Invalid(
            "inner region must be a subset of the outer region".into(),
        ));
    }
    let q = space.q();
    let pats_outer = space.pattern_count(outer.len());
    let pats_inner = space.pattern_count(inner.len());
    check_scan(
        u128::from(space.count()) * u128::from(pats_outer) * (1 + u128::from(pats_inner)),
    )?;
    let w_outer = space.alphabet().region_weight(outer.len());
    let w_inner = space.alphabet().region_weight(inner.len());
    // positions of the inner sites inside the outer pattern
    let inner_pos: Vec<usize> = inner
        .iter()
        .map(|s| outer.iter().position(|o| o == s).unwrap())
        .collect();

    let outer_patterns: Vec<Vec<u8>> = pattern_iter(q, outer.len()).collect();
    let mut worst = 0.0f64;
    for idx in space.states() {
        let eta = space.config_of(idx);
        let direct: Vec<f64> = outer_patterns
            .iter()
            .map(|xi| spec.density(outer, xi, &eta).map(|d| d * w_outer))
            .collect::<Result<_>>()?;
        let mut composite = vec![0.0f64; outer_patterns.len()];
        for (xi_idx, xi) in outer_patterns.iter().enumerate() {
            let p_outer = direct[xi_idx];
            let omega = eta.splice(outer, xi);
            for zeta in pattern_iter(q, inner.len()) {
                let p_inner = spec.density(inner, &zeta, &omega)? * w_inner;
                // target pattern: xi with the inner positions overwritten
                let mut target = xi.clone();
                for (p, &v) in inner_pos.iter().zip(&zeta) {
                    target[*p] = v;
                }
                let t_idx = target
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (i, &v)| acc + usize::from(v) * usize::from(q).pow(i as u32));
                composite[t_idx] += p_outer * p_inner;
            }
        }
        for (c, d) in composite.iter().zip(&direct) {
            worst = worst.max((c - d).abs());
        }
    }
    Ok(worst)
}

/// Oscillation of the specification kernel on `region` w.r.t. the state at
/// site `y`: the sup over configuration pairs differing only at `y` of the
/// total-variation distance `(1/2) sum_xi |gamma(xi|eta) - gamma(xi|zeta)|
/// lambda(xi)`. The scan is exhaustive over the dependency neighborhood of
/// the region, which is exact by locality of the potential.
pub fn oscillation_gamma(spec: &Specification, region: &[usize], y: usize) -> Result<f64> {
    spec.volume().check_site(y)?;
    // properness: the kernel ignores the configuration inside the region
    if region.contains(&y) {
        return Ok(0.0);
    }
    let dep = spec.potential().dependency_of(region);
    if !dep.contains(&y) {
        return Ok(0.0);
    }
    let q = spec.alphabet().q();
    let others: Vec<usize> = dep.iter().copied().filter(|&s| s != y).collect();
    if others.len() + 1 > MAX_DEP_SITES {
        return Err(Error::ScanTooLarge {
            work: u128::from(q).pow(dep.len() as u32),
            cap: SCAN_CAP,
        });
    }
    let pats = |k: usize| (0..k).fold(1u128, |acc, _| acc * u128::from(q));
    check_scan(pats(others.len()) * u128::from(q) * u128::from(q) * pats(region.len()))?;
    let w = spec.alphabet().region_weight(region.len());
    let n = spec.volume().len();
    let mut base = Configuration::constant(n, 0);
    let mut worst = 0.0f64;
    for ctx in pattern_iter(q, others.len()) {
        base.patch_in_place(&others, &ctx);
        for a in 0..q {
            for b in (a + 1)..q {
                let mut tv = 0.0;
                for xi in pattern_iter(q, region.len()) {
                    base.set(y, a);
                    let da = spec.density(region, &xi, &base)?;
                    base.set(y, b);
                    let db = spec.density(region, &xi, &base)?;
                    tv += (da - db).abs() * w;
                }
                worst = worst.max(0.5 * tv);
            }
        }
    }
    Ok(worst)
}
