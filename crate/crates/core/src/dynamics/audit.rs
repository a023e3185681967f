//! Audits of the well-definedness and regularity conditions of a rate family:
//! uniform rate bounds, the influence constant `M`, the single-site refresh
//! constant `epsilon`, kernel oscillations, and the analogous audit of the
//! time-reversed family with its proof-side bound
//! `sup c_hat <= delta^{-1} e^R sup c`.
//!
//! Oscillations of rate kernels use the total-variation norm of the signed
//! measure difference, `sum_xi |c(eta,xi) - c(zeta,xi)| lambda(xi)`;
//! specification kernels are probability kernels and use the total-variation
//! distance with the conventional factor 1/2.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::RateFamily;
use crate::error::Result;
use crate::model::{oscillation_gamma, pattern_iter, Configuration, Specification};

/// Knobs for the exhaustive-vs-probe decision.
#[derive(Debug, Clone)]
pub struct AuditOptions {
    /// Largest dependency neighborhood scanned exhaustively.
    pub max_dep_sites: usize,
    /// Random probes per sup when the exhaustive scan is refused.
    pub probe_samples: u64,
    pub probe_seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            max_dep_sites: 20,
            probe_samples: 20_000,
            probe_seed: 0x5eed_a0d1,
        }
    }
}

/// Oscillation table `delta_y c_region` of one region.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RegionOscillations {
    pub region_idx: usize,
    /// `(site, delta_y c)` for sites in the dependency neighborhood; all other
    /// sites have oscillation zero by locality.
    pub per_site: Vec<(usize, f64)>,
}

/// Audited constants of a rate family.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditionReport {
    /// `sup_x sum_{region ni x} sup |c|` (uniform density bound).
    pub rate_sup_density: f64,
    /// `sup_x sum_{region ni x} sup_eta total-rate` (uniform total-rate bound).
    pub rate_total_bound: f64,
    /// Influence constant `M = sup_x sum_{region ni x} sum_{y != x} delta_y c`.
    pub influence_m: f64,
    /// Single-site refresh constant `epsilon` (inner sums read as integrals
    /// against the reference measure).
    pub epsilon: f64,
    /// Largest region size `R`.
    pub max_region_size: usize,
    pub oscillations: Vec<RegionOscillations>,
    /// `sup_x sum_{region ni x, c > 0} sum_{y != x} delta_y gamma_region`.
    pub spec_oscillation_sum: f64,
    /// False when any sup fell back to randomized probes (values are then
    /// lower bounds).
    pub exhaustive: bool,
    pub probe_samples: u64,
}

fn region_pattern_work(rates: &RateFamily, region_idx: usize, opts: &AuditOptions) -> Option<u64> {
    let dep = rates.dependency(region_idx);
    if dep.len() > opts.max_dep_sites {
        return None;
    }
    let q = u64::from(rates.alphabet().q());
    Some((0..dep.len()).fold(1u64, |acc, _| acc.saturating_mul(q)))
}

/// Applies `f` to configurations covering the dependency pattern space of the
/// region: exhaustively when small, by seeded random probes otherwise.
/// Returns whether the scan was exhaustive.
fn scan_dependency(
    rates: &RateFamily,
    region_idx: usize,
    opts: &AuditOptions,
    mut f: impl FnMut(&mut Configuration, &[usize]),
) -> bool {
    let dep: Vec<usize> = rates.dependency(region_idx).to_vec();
    let n = rates.volume().len();
    let q = rates.alphabet().q();
    let mut cfg = Configuration::constant(n, 0);
    match region_pattern_work(rates, region_idx, opts) {
        Some(_) => {
            for pattern in pattern_iter(q, dep.len()) {
                cfg.patch_in_place(&dep, &pattern);
                f(&mut cfg, &dep);
            }
            true
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.probe_seed ^ region_idx as u64);
            for _ in 0..opts.probe_samples {
                let pattern: Vec<u8> = (0..dep.len()).map(|_| rng.random_range(0..q)).collect();
                cfg.patch_in_place(&dep, &pattern);
                f(&mut cfg, &dep);
            }
            false
        }
    }
}

/// Per-region sups of the density and of the total rate.
fn region_sups(rates: &RateFamily, region_idx: usize, opts: &AuditOptions) -> (f64, f64, bool) {
    let q = rates.alphabet().q();
    let k = rates.regions()[region_idx].len();
    let w = rates.lambda_weight(region_idx);
    let mut sup_density = 0.0f64;
    let mut sup_total = 0.0f64;
    let exhaustive = scan_dependency(rates, region_idx, opts, |cfg, _| {
        let mut total = 0.0;
        for xi in pattern_iter(q, k) {
            let d = rates.density(cfg, region_idx, &xi);
            sup_density = sup_density.max(d);
            total += d * w;
        }
        sup_total = sup_total.max(total);
    });
    (sup_density, sup_total, exhaustive)
}

/// Oscillation `delta_y c_region` (total-variation norm of the difference).
fn rate_oscillation(rates: &RateFamily, region_idx: usize, y: usize, opts: &AuditOptions) -> (f64, bool) {
    let dep = rates.dependency(region_idx);
    if !dep.contains(&y) {
        return (0.0, true);
    }
    let q = rates.alphabet().q();
    let k = rates.regions()[region_idx].len();
    let w = rates.lambda_weight(region_idx);
    let mut worst = 0.0f64;
    let exhaustive = scan_dependency(rates, region_idx, opts, |cfg, _| {
        let original = cfg.get(y);
        for b in 0..q {
            if b == original {
                continue;
            }
            let mut tv = 0.0;
            for xi in pattern_iter(q, k) {
                cfg.set(y, original);
                let da = rates.density(cfg, region_idx, &xi);
                cfg.set(y, b);
                let db = rates.density(cfg, region_idx, &xi);
                tv += (da - db).abs() * w;
            }
            cfg.set(y, original);
            worst = worst.max(tv);
        }
    });
    (worst, exhaustive)
}

/// The refresh constant: for each site x,
/// `inf over pairs differing at x of sum_{region ni x} (integral of c(eta,.)
/// over {xi_x = zeta_x} + integral of c(zeta,.) over {xi_x = eta_x})`.
fn epsilon_constant(rates: &RateFamily, opts: &AuditOptions) -> (f64, bool) {
    let n = rates.volume().len();
    let q = rates.alphabet().q();
    let mut eps = f64::INFINITY;
    let mut exhaustive = true;
    for x in 0..n {
        let region_ids: Vec<usize> = rates.regions_at(x).to_vec();
        if region_ids.is_empty() {
            return (0.0, true);
        }
        let mut dep: Vec<usize> = region_ids
            .iter()
            .flat_map(|&i| rates.dependency(i).iter().copied())
            .collect();
        dep.push(x);
        dep.sort_unstable();
        dep.dedup();
        let mut cfg = Configuration::constant(n, 0);
        let visit = |cfg: &mut Configuration, eps: &mut f64| {
            let original = cfg.get(x);
            for b in 0..q {
                if b == original {
                    continue;
                }
                let mut sum = 0.0;
                for &ri in &region_ids {
                    let region = &rates.regions()[ri].sites;
                    let pos = region.iter().position(|&s| s == x).unwrap();
                    let w = rates.lambda_weight(ri);
                    for xi in pattern_iter(q, region.len()) {
                        cfg.set(x, original);
                        if xi[pos] == b {
                            sum += rates.density(cfg, ri, &xi) * w;
                        }
                        cfg.set(x, b);
                        if xi[pos] == original {
                            sum += rates.density(cfg, ri, &xi) * w;
                        }
                    }
                    cfg.set(x, original);
                }
                *eps = eps.min(sum);
            }
        };
        let work = (0..dep.len()).try_fold(1u64, |acc, _| {
            let next = acc.checked_mul(u64::from(q))?;
            (dep.len() <= opts.max_dep_sites).then_some(next)
        });
        match work {
            Some(_) => {
                for pattern in pattern_iter(q, dep.len()) {
                    cfg.patch_in_place(&dep, &pattern);
                    visit(&mut cfg, &mut eps);
                }
            }
            None => {
                exhaustive = false;
                let mut rng = ChaCha8Rng::seed_from_u64(opts.probe_seed ^ (x as u64).rotate_left(17));
                for _ in 0..opts.probe_samples {
                    let pattern: Vec<u8> = (0..dep.len()).map(|_| rng.random_range(0..q)).collect();
                    cfg.patch_in_place(&dep, &pattern);
                    visit(&mut cfg, &mut eps);
                }
            }
        }
    }
    (eps, exhaustive)
}

/// Full audit of a rate family against its specification.
pub fn condition_audit(
    rates: &RateFamily,
    spec: &Specification,
    opts: &AuditOptions,
) -> Result<ConditionReport> {
    let n = rates.volume().len();
    let n_regions = rates.regions().len();
    let mut exhaustive = true;

    let mut sup_density = vec![0.0f64; n_regions];
    let mut sup_total = vec![0.0f64; n_regions];
    for i in 0..n_regions {
        let (d, t, ex) = region_sups(rates, i, opts);
        sup_density[i] = d;
        sup_total[i] = t;
        exhaustive &= ex;
    }

    let mut oscillations = Vec::with_capacity(n_regions);
    for i in 0..n_regions {
        let mut per_site = Vec::new();
        for &y in rates.dependency(i) {
            let (osc, ex) = rate_oscillation(rates, i, y, opts);
            exhaustive &= ex;
            per_site.push((y, osc));
        }
        oscillations.push(RegionOscillations {
            region_idx: i,
            per_site,
        });
    }

    let rate_sup_density = (0..n)
        .map(|x| {
            rates
                .regions_at(x)
                .iter()
                .map(|&i| sup_density[i])
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max);
    let rate_total_bound = (0..n)
        .map(|x| {
            rates
                .regions_at(x)
                .iter()
                .map(|&i| sup_total[i])
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max);

    let influence_m = (0..n)
        .map(|x| {
            rates
                .regions_at(x)
                .iter()
                .map(|&i| {
                    oscillations[i]
                        .per_site
                        .iter()
                        .filter(|(y, _)| *y != x)
                        .map(|(_, o)| o)
                        .sum::<f64>()
                })
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max)
        + 0.0;

    let (epsilon, eps_exhaustive) = epsilon_constant(rates, opts);
    exhaustive &= eps_exhaustive;

    // (S4) over regions with nonvanishing rates
    let mut spec_osc: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_regions);
    for i in 0..n_regions {
        let mut per = Vec::new();
        if sup_density[i] > 0.0 {
            let region = &rates.regions()[i].sites;
            for y in spec.potential().dependency_of(region) {
                let osc = oscillation_gamma(spec, region, y)?;
                per.push((y, osc));
            }
        }
        spec_osc.push(per);
    }
    let spec_oscillation_sum = (0..n)
        .map(|x| {
            rates
                .regions_at(x)
                .iter()
                .map(|&i| {
                    spec_osc[i]
                        .iter()
                        .filter(|(y, _)| *y != x)
                        .map(|(_, o)| o)
                        .sum::<f64>()
                })
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max)
        + 0.0;

    Ok(ConditionReport {
        rate_sup_density,
        rate_total_bound,
        influence_m,
        epsilon,
        max_region_size: rates.max_region_size(),
        oscillations,
        spec_oscillation_sum,
        exhaustive,
        probe_samples: if exhaustive { 0 } else { opts.probe_samples },
    })
}

/// Worst quotient `gamma(xi|eta)/gamma(eta_region|eta)` per rate-family
/// region against the bound `e^{+-2C|region|}`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct QuotientReport {
    pub worst_low: f64,
    pub worst_high: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn quotient_bound_check(
    rates: &RateFamily,
    spec: &Specification,
    opts: &AuditOptions,
) -> Result<QuotientReport> {
    let q = rates.alphabet().q();
    let c = spec.log_range_constant();
    let mut worst_low = f64::INFINITY;
    let mut worst_high = 0.0f64;
    let mut bound = 1.0f64;
    for i in 0..rates.regions().len() {
        let region: Vec<usize> = rates.regions()[i].sites.clone();
        let region_bound = (2.0 * c * region.len() as f64).exp();
        bound = bound.max(region_bound);
        scan_dependency(rates, i, opts, |cfg, _| {
            let own = spec
                .density(&region, &cfg.restrict(&region), cfg)
                .expect("density on listed region");
            for xi in pattern_iter(q, region.len()) {
                let d = spec.density(&region, &xi, cfg).expect("density");
                let ratio = d / own;
                worst_low = worst_low.min(ratio);
                worst_high = worst_high.max(ratio);
            }
        });
    }
    let tol = 1.0 + 1e-12;
    Ok(QuotientReport {
        worst_low,
        worst_high,
        bound,
        pass: worst_high <= bound * tol && worst_low * tol >= 1.0 / bound,
    })
}

/// Regularity audit of the time-reversed family, with the quotient and
/// uniform-rate bounds the reversed densities must respect.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ReversalRegularityReport {
    pub reversed: ConditionReport,
    /// Forward `sup_x sum sup |c|` used in the bounds below.
    pub forward_sup_density: f64,
    /// `delta^{-1} e^R * forward_sup_density`.
    pub bound: f64,
    /// Reversed total-rate bound respects `delta^{-1} e^R sup|c|`.
    pub total_rate_ok: bool,
    /// Reversed density bound respects the same display.
    pub sup_density_ok: bool,
    /// Per-region pointwise bound `c*(eta, xi) <= e^{2C|region|} sup c`.
    pub pointwise_ok: bool,
}

pub fn reversal_regularity_audit(
    rates: &Arc<RateFamily>,
    spec: &Arc<Specification>,
    opts: &AuditOptions,
) -> Result<ReversalRegularityReport> {
    let reversed_family = RateFamily::reversed(rates.clone(), spec.clone())?;
    let reversed = condition_audit(&reversed_family, spec, opts)?;
    let forward = condition_audit(rates, spec, opts)?;
    let r = rates.max_region_size() as f64;
    let bound = (1.0 / spec.delta()) * r.exp() * forward.rate_sup_density;
    let tol = 1.0 + 1e-12;
    // pointwise: per region, sup c* against e^{2C|region|} sup c
    let c_const = spec.log_range_constant();
    let mut pointwise_ok = true;
    for i in 0..rates.regions().len() {
        let (fwd_sup, _, _) = region_sups(rates, i, opts);
        let (rev_sup, _, _) = region_sups(&reversed_family, i, opts);
        let region_bound = (2.0 * c_const * rates.regions()[i].len() as f64).exp();
        pointwise_ok &= rev_sup <= fwd_sup * region_bound * tol;
    }
    Ok(ReversalRegularityReport {
        forward_sup_density: forward.rate_sup_density,
        total_rate_ok: reversed.rate_total_bound <= bound * tol,
        sup_density_ok: reversed.rate_sup_density <= bound * tol,
        pointwise_ok,
        bound,
        reversed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Boundary, LocalAlphabet, Potential, Volume};

    fn heat_bath(n: usize, beta: f64) -> (Arc<RateFamily>, Arc<Specification>) {
        let v = Arc::new(Volume::ring(n, true).unwrap());
        let a = LocalAlphabet::new(2).unwrap();
        let p =
            Arc::new(Potential::ising(v.clone(), a, beta, 1.0, 0.0, Boundary::Periodic).unwrap());
        let spec = Arc::new(Specification::new(p).unwrap());
        let rates = Arc::new(
            RateFamily::heat_bath(spec.clone(), RateFamily::single_site_regions(&v)).unwrap(),
        );
        (rates, spec)
    }

    #[test]
    fn beta_zero_heat_bath_constants() {
        let (rates, spec) = heat_bath(4, 0.0);
        let rep = condition_audit(&rates, &spec, &AuditOptions::default()).unwrap();
        assert!(rep.exhaustive);
        assert!(rep.influence_m.abs() < 1e-14, "M = {}", rep.influence_m);
        assert!((rep.epsilon - 1.0).abs() < 1e-12, "eps = {}", rep.epsilon);
        assert!((rep.rate_sup_density - 1.0).abs() < 1e-12);
        assert!((rep.rate_total_bound - 1.0).abs() < 1e-12);
        assert!(rep.spec_oscillation_sum.abs() < 1e-14);
    }

    #[test]
    fn epsilon_is_one_for_single_site_heat_bath_q2() {
        // q = 2 single-site heat bath: the two integrals add to 1 exactly
        let (rates, spec) = heat_bath(4, 0.5);
        let rep = condition_audit(&rates, &spec, &AuditOptions::default()).unwrap();
        assert!((rep.epsilon - 1.0).abs() < 1e-12, "eps = {}", rep.epsilon);
        assert!(rep.influence_m > 0.5, "M = {}", rep.influence_m);
    }

    #[test]
    fn cyclic_rotation_rate_bound_is_one() {
        let v = Arc::new(Volume::ring(4, true).unwrap());
        let a = LocalAlphabet::new(3).unwrap();
        let p = Arc::new(Potential::zero(v.clone(), a));
        let spec = Arc::new(Specification::new(p).unwrap());
        let rates = Arc::new(RateFamily::cyclic_rotation(v, a).unwrap());
        let rep = condition_audit(&rates, &spec, &AuditOptions::default()).unwrap();
        assert!((rep.rate_sup_density - 1.0).abs() < 1e-14);
        // total rate per site is the reference weight of the single target
        assert!((rep.rate_total_bound - 1.0 / 3.0).abs() < 1e-14);
        assert!(rep.influence_m.abs() < 1e-14);
    }

    #[test]
    fn quotient_bounds_hold_for_blocks() {
        let (_, spec) = heat_bath(4, 0.5);
        let blocks = Arc::new(RateFamily::block_heat_bath(spec.clone()).unwrap());
        let rep = quotient_bound_check(&blocks, &spec, &AuditOptions::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        let (singles, spec1) = heat_bath(4, 0.0);
        let rep1 = quotient_bound_check(&singles, &spec1, &AuditOptions::default()).unwrap();
        assert!((rep1.worst_high - 1.0).abs() < 1e-12);
        assert!((rep1.worst_low - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversal_regularity_matches_forward_for_heat_bath() {
        let (rates, spec) = heat_bath(4, 0.5);
        let rep = reversal_regularity_audit(&rates, &spec, &AuditOptions::default()).unwrap();
        let fwd = condition_audit(&rates, &spec, &AuditOptions::default()).unwrap();
        assert!(rep.total_rate_ok && rep.sup_density_ok && rep.pointwise_ok);
        assert!((rep.reversed.rate_sup_density - fwd.rate_sup_density).abs() < 1e-10);
        assert!((rep.reversed.influence_m - fwd.influence_m).abs() < 1e-10);
        assert!((rep.reversed.epsilon - fwd.epsilon).abs() < 1e-10);
    }

    #[test]
    fn reversed_cyclic_rotation_keeps_unit_rate_bound() {
        let v = Arc::new(Volume::ring(4, true).unwrap());
        let a = LocalAlphabet::new(3).unwrap();
        let p = Arc::new(Potential::zero(v.clone(), a));
        let spec = Arc::new(Specification::new(p).unwrap());
        let rates = Arc::new(RateFamily::cyclic_rotation(v, a).unwrap());
        let rep = reversal_regularity_audit(&rates, &spec, &AuditOptions::default()).unwrap();
        assert!((rep.reversed.rate_sup_density - 1.0).abs() < 1e-12);
        assert!(rep.total_rate_ok && rep.sup_density_ok && rep.pointwise_ok);
    }
}
