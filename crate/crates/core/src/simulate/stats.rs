//! Statistical verdicts for the trajectorial checks: confidence-interval
//! hypotheses on martingale increments, one-sided submartingale tests,
//! chi-square goodness-of-fit and two-sample batteries, and the exact
//! enumerated conditional-expectation check.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::exact::{semigroup_apply, Generator, Measure};
use crate::model::StateSpace;
use crate::simulate::{ProcessPath, Trajectory};

/// Minimum ensemble size before a CI verdict is issued.
pub const MIN_POWERED_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Underpowered,
}

/// One tested hypothesis with its statistic and confidence interval.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub statistic: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
    pub verdict: Verdict,
    pub note: String,
}

/// Structured summary of a test battery.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TestReport {
    pub title: String,
    pub hypotheses: Vec<Hypothesis>,
    pub overall: Verdict,
    pub master_seed: Option<u64>,
    pub model_hash: String,
}

impl TestReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            hypotheses: Vec::new(),
            overall: Verdict::Pass,
            master_seed: None,
            model_hash: String::new(),
        }
    }

    pub fn with_provenance(mut self, seed: Option<u64>, model_hash: impl Into<String>) -> Self {
        self.master_seed = seed;
        self.model_hash = model_hash.into();
        self
    }

    pub fn push(&mut self, h: Hypothesis) {
        match (self.overall, h.verdict) {
            (_, Verdict::Fail) => self.overall = Verdict::Fail,
            (Verdict::Pass, Verdict::Underpowered) => self.overall = Verdict::Underpowered,
            _ => {}
        }
        self.hypotheses.push(h);
    }

    pub fn passed(&self) -> bool {
        self.overall == Verdict::Pass
    }
}

/// Sample mean with a `z * standard error` interval.
pub fn mean_ci(xs: &[f64], z: f64) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let half = z * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

/// Sample covariance with a delta-method `z * standard error` interval on the
/// mean of centered products.
pub fn covariance_ci(xs: &[f64], ys: &[f64], z: f64) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let products: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    mean_ci(&products, z)
}

fn two_sided(name: impl Into<String>, stat: f64, lo: f64, hi: f64, n: usize) -> Hypothesis {
    let verdict = if n < MIN_POWERED_SAMPLES {
        Verdict::Underpowered
    } else if lo <= 0.0 && 0.0 <= hi {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Hypothesis {
        name: name.into(),
        statistic: stat,
        ci_low: lo,
        ci_high: hi,
        samples: n as u64,
        verdict,
        note: if verdict == Verdict::Underpowered {
            format!("need at least {MIN_POWERED_SAMPLES} samples for a verdict")
        } else {
            String::new()
        },
    }
}

fn one_sided_nonnegative(
    name: impl Into<String>,
    stat: f64,
    lo: f64,
    hi: f64,
    n: usize,
    powered: bool,
) -> Hypothesis {
    let verdict = if !powered {
        Verdict::Underpowered
    } else if hi >= 0.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Hypothesis {
        name: name.into(),
        statistic: stat,
        ci_low: lo,
        ci_high: hi,
        samples: n as u64,
        verdict,
        note: if verdict == Verdict::Underpowered {
            format!("need at least {MIN_POWERED_SAMPLES} ensemble samples for a verdict")
        } else {
            String::new()
        },
    }
}

/// Feature set for the conditional tests: local state values at declared
/// sites of the reversed path at time `s`, plus the process level `L(s)`.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub sites: Vec<usize>,
}

fn feature_value(space: &StateSpace, state: u64, site: usize) -> f64 {
    let v = f64::from(space.site_value(state, site));
    if space.q() == 2 {
        2.0 * v - 1.0
    } else {
        v
    }
}

/// Empirical martingale test on the increments `M(t) - M(s)`: the mean and
/// the covariance with every declared feature must have CIs containing zero.
pub fn martingale_test(
    paths: &[ProcessPath],
    space: &StateSpace,
    pair: (f64, f64),
    features: &FeatureSet,
    z: f64,
) -> Result<TestReport> {
    let (s, t) = pair;
    if !(s < t) {
        return Err(Error::Invalid(format!("need s < t, got ({s}, {t})")));
    }
    let mut report = TestReport::new(format!("martingale increments on ({s}, {t})"));
    let mut d = Vec::with_capacity(paths.len());
    let mut level = Vec::with_capacity(paths.len());
    let mut site_features: Vec<Vec<f64>> = vec![Vec::with_capacity(paths.len()); features.sites.len()];
    for p in paths {
        let is = p.position_of(s).ok_or_else(|| {
            Error::Invalid(format!("time {s} missing from the path grid"))
        })?;
        let it = p.position_of(t).ok_or_else(|| {
            Error::Invalid(format!("time {t} missing from the path grid"))
        })?;
        d.push(p.m[it] - p.m[is]);
        level.push(p.l[is]);
        for (k, &site) in features.sites.iter().enumerate() {
            site_features[k].push(feature_value(space, p.state[is], site));
        }
    }
    let n = d.len();
    let (mean, lo, hi) = mean_ci(&d, z);
    report.push(two_sided("mean increment", mean, lo, hi, n));
    for (k, &site) in features.sites.iter().enumerate() {
        let (c, lo, hi) = covariance_ci(&d, &site_features[k], z);
        report.push(two_sided(
            format!("cov(increment, state at site {site})"),
            c,
            lo,
            hi,
            n,
        ));
    }
    let (c, lo, hi) = covariance_ci(&d, &level, z);
    report.push(two_sided("cov(increment, L(s))", c, lo, hi, n));
    Ok(report)
}

/// One-sided submartingale test: `E[L(t) - L(s)] >= 0` overall and within
/// feature strata (split at the median), plus the requirement that the
/// martingale part passes the two-sided test.
pub fn submartingale_test(
    paths: &[ProcessPath],
    space: &StateSpace,
    pair: (f64, f64),
    features: &FeatureSet,
    z: f64,
) -> Result<TestReport> {
    let (s, t) = pair;
    if !(s < t) {
        return Err(Error::Invalid(format!("need s < t, got ({s}, {t})")));
    }
    let mut report = TestReport::new(format!("submartingale increments on ({s}, {t})"));
    let mut d = Vec::with_capacity(paths.len());
    let mut keys: Vec<Vec<f64>> = vec![Vec::new(); features.sites.len() + 1];
    for p in paths {
        let is = p
            .position_of(s)
            .ok_or_else(|| Error::Invalid(format!("time {s} missing from the path grid")))?;
        let it = p
            .position_of(t)
            .ok_or_else(|| Error::Invalid(format!("time {t} missing from the path grid")))?;
        d.push(p.l[it] - p.l[is]);
        for (k, &site) in features.sites.iter().enumerate() {
            keys[k].push(feature_value(space, p.state[is], site));
        }
        let last = keys.len() - 1;
        keys[last].push(p.l[is]);
    }
    let n = d.len();
    let powered = n >= MIN_POWERED_SAMPLES;
    let (mean, lo, hi) = mean_ci(&d, z);
    report.push(one_sided_nonnegative(
        "mean L increment",
        mean,
        lo,
        hi,
        n,
        powered,
    ));
    let names: Vec<String> = features
        .sites
        .iter()
        .map(|s| format!("site {s}"))
        .chain(std::iter::once("L(s)".into()))
        .collect();
    for (key, name) in keys.iter().zip(&names) {
        let mut sorted = key.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        for (label, pick) in [("low", true), ("high", false)] {
            let stratum: Vec<f64> = d
                .iter()
                .zip(key)
                .filter(|(_, k)| (**k <= median) == pick)
                .map(|(x, _)| *x)
                .collect();
            // degenerate strata (constant feature) carry no information
            if stratum.len() < 100 {
                continue;
            }
            let (mean, lo, hi) = mean_ci(&stratum, z);
            report.push(one_sided_nonnegative(
                format!("mean L increment | {name} {label}"),
                mean,
                lo,
                hi,
                stratum.len(),
                powered,
            ));
        }
    }
    let m_part = martingale_test(paths, space, pair, features, z)?;
    for h in m_part.hypotheses {
        report.push(Hypothesis {
            name: format!("martingale part: {}", h.name),
            ..h
        });
    }
    Ok(report)
}

/// Exact enumerated check of the conditional-expectation identity
/// `E[g_t(eta(T-t)) | eta(T-s) = x] = g_s(x)` where `g_u = line(T - u) f`.
///
/// The conditional law of the earlier forward-time point is enumerated by
/// Bayes from columns of the forward semigroup and the stationary measure,
/// independently of the reversed-rate construction. Returns the sup
/// discrepancy over states and grid pairs.
pub fn exact_conditional_check(
    forward: &Generator,
    line: &Generator,
    mu: &Measure,
    f: &[f64],
    horizon: f64,
    pairs: &[(f64, f64)],
) -> Result<f64> {
    let n = forward.len();
    let mut worst = 0.0f64;
    for &(s, t) in pairs {
        if !(0.0 <= s && s < t && t <= horizon) {
            return Err(Error::Invalid(format!(
                "pair ({s}, {t}) outside 0 <= s < t <= {horizon}"
            )));
        }
        let g_t = semigroup_apply(line, f, horizon - t)?;
        let g_s = semigroup_apply(line, f, horizon - s)?;
        let u = t - s;
        for x in 0..n {
            // column x of e^{u L}: transition probabilities into x
            let mut e_x = vec![0.0; n];
            e_x[x] = 1.0;
            let col = semigroup_apply(forward, &e_x, u)?;
            let mut numer = 0.0;
            for y in 0..n {
                numer += mu.get(y as u64) * col[y] * g_t[y];
            }
            let cond = numer / mu.get(x as u64);
            worst = worst.max((cond - g_s[x]).abs());
        }
    }
    Ok(worst)
}

/// Chi-square statistic with pooled small cells.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

fn chi_square_p(statistic: f64, dof: u64) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    1.0 - dist.cdf(statistic)
}

/// Goodness of fit of observed counts against exact cell probabilities.
/// Cells are pooled in index order until every expected count reaches 5.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if counts.len() != probs.len() {
        return Err(Error::Invalid("counts/probs length mismatch".into()));
    }
    let total: u64 = counts.iter().sum();
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for (c, p) in counts.iter().zip(probs) {
        acc_obs += *c as f64;
        acc_exp += p * total as f64;
        if acc_exp >= 5.0 {
            pooled.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc_obs;
                last.1 += acc_exp;
            }
            None => pooled.push((acc_obs, acc_exp.max(1e-12))),
        }
    }
    let statistic: f64 = pooled
        .iter()
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = pooled.len().saturating_sub(1) as u64;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof),
    })
}

/// Two-sample chi-square on matched cell counts, with pooled expectations.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.len() != b.len() {
        return Err(Error::Invalid("cell count mismatch".into()));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::Invalid("empty ensemble in two-sample test".into()));
    }
    // pool adjacent cells until both expected counts reach 5
    let ra = na as f64 / (na + nb) as f64;
    let rb = nb as f64 / (na + nb) as f64;
    let mut pooled: Vec<(f64, f64, f64)> = Vec::new(); // (obs_a, obs_b, combined)
    let (mut acc_a, mut acc_b) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        acc_a += *x as f64;
        acc_b += *y as f64;
        let combined = acc_a + acc_b;
        if combined * ra >= 5.0 && combined * rb >= 5.0 {
            pooled.push((acc_a, acc_b, combined));
            acc_a = 0.0;
            acc_b = 0.0;
        }
    }
    if acc_a + acc_b > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc_a;
                last.1 += acc_b;
                last.2 += acc_a + acc_b;
            }
            None => pooled.push((acc_a, acc_b, acc_a + acc_b)),
        }
    }
    let mut statistic = 0.0;
    for (oa, ob, combined) in &pooled {
        let ea = combined * ra;
        let eb = combined * rb;
        statistic += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    let dof = pooled.len().saturating_sub(1) as u64;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof),
    })
}

/// Two-time occupancy battery: for each declared site set and time pair, the
/// joint pattern at the two times is tabulated for both ensembles and
/// compared by a two-sample chi-square at the given level.
pub fn two_time_battery(
    a: &[Trajectory],
    b: &[Trajectory],
    rates: &crate::dynamics::RateFamily,
    space: &StateSpace,
    site_sets: &[Vec<usize>],
    time_pairs: &[(f64, f64)],
    level: f64,
) -> Result<TestReport> {
    let mut report = TestReport::new("two-time occupancy chi-square battery");
    for sites in site_sets {
        let cells_one = space.pattern_count(sites.len());
        let cells = (cells_one * cells_one) as usize;
        for &(t1, t2) in time_pairs {
            let tabulate = |ens: &[Trajectory]| -> Vec<u64> {
                let mut counts = vec![0u64; cells];
                for traj in ens {
                    let c1 = traj.state_at(rates, t1);
                    let c2 = traj.state_at(rates, t2);
                    let k1 = pattern_key(space, &c1, sites);
                    let k2 = pattern_key(space, &c2, sites);
                    counts[(k1 + cells_one * k2) as usize] += 1;
                }
                counts
            };
            let ca = tabulate(a);
            let cb = tabulate(b);
            let chi = chi_square_two_sample(&ca, &cb)?;
            let verdict = if a.len().min(b.len()) < MIN_POWERED_SAMPLES {
                Verdict::Underpowered
            } else if chi.p_value >= level {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            report.push(Hypothesis {
                name: format!("sites {sites:?} at times ({t1}, {t2})"),
                statistic: chi.statistic,
                ci_low: 0.0,
                ci_high: 0.0,
                samples: (a.len() + b.len()) as u64,
                verdict,
                note: format!("p = {:.4}, dof = {}, level = {level}", chi.p_value, chi.dof),
            });
        }
    }
    Ok(report)
}

fn pattern_key(space: &StateSpace, cfg: &crate::model::Configuration, sites: &[usize]) -> u64 {
    let q = u64::from(space.q());
    sites
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &s)| acc + u64::from(cfg.get(s)) * q.pow(i as u32))
}
