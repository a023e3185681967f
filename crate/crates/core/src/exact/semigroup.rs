//! Semigroup and resolvent action by uniformization.
//!
//! `e^{tL} f` is the Poisson mixture of powers of the jump kernel
//! `P = I + L/rate` truncated at cumulative mass `1 - 1e-13` and renormalized,
//! so positivity and constants are preserved and the truncation error is
//! certified. The resolvent `(I - lambda L)^{-1}` is the geometric mixture of
//! the same powers with ratio `lambda*rate / (1 + lambda*rate)`.

use crate::error::{Error, Result};
use crate::exact::Generator;

const POISSON_TAIL: f64 = 1e-13;
const GEOMETRIC_TAIL: f64 = 1e-14;
/// Above this `rate * t` the interval is halved and the semigroup composed,
/// keeping the Poisson weight recurrence inside the floating-point range.
const SPLIT_THRESHOLD: f64 = 200.0;

/// `e^{tL} f` with truncation error below `1e-12 * ||f||`.
pub fn semigroup_apply(gen: &Generator, f: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime { t });
    }
    let rate = gen.max_exit_rate();
    let a = rate * t;
    if a == 0.0 {
        return Ok(f.to_vec());
    }
    if a > SPLIT_THRESHOLD {
        let half = semigroup_apply(gen, f, t / 2.0)?;
        return semigroup_apply(gen, &half, t / 2.0);
    }
    let n = f.len();
    let mut power = f.to_vec();
    let mut scratch = vec![0.0; n];
    let mut weight = (-a).exp();
    let mut cumulative = weight;
    let mut out: Vec<f64> = f.iter().map(|v| v * weight).collect();
    let mut k = 0u64;
    while cumulative < 1.0 - POISSON_TAIL {
        // power <- P power = power + (L power)/rate
        gen.apply(&power, &mut scratch);
        for (p, s) in power.iter_mut().zip(&scratch) {
            *p += *s / rate;
        }
        k += 1;
        weight *= a / k as f64;
        cumulative += weight;
        for (o, p) in out.iter_mut().zip(&power) {
            *o += weight * p;
        }
        if k > 64 + (10.0 * a) as u64 {
            return Err(Error::NoConvergence(format!(
                "uniformization truncation stalled at k = {k}, cumulative {cumulative}"
            )));
        }
    }
    for o in &mut out {
        *o /= cumulative;
    }
    Ok(out)
}

/// Solves the resolvent equation `f - lambda L f = g` for `lambda >= 0`.
pub fn resolvent_apply(gen: &Generator, g: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::NegativeResolventParameter { lambda });
    }
    let rate = gen.max_exit_rate();
    let a = lambda * rate;
    if a == 0.0 {
        return Ok(g.to_vec());
    }
    let n = g.len();
    let scale = 1.0 / (1.0 + a);
    let rho = a * scale;
    let mut power = g.to_vec();
    let mut scratch = vec![0.0; n];
    let mut coeff = scale;
    let mut out: Vec<f64> = g.iter().map(|v| v * coeff).collect();
    // the remaining geometric tail after k terms is exactly rho^{k+1}
    let mut tail = rho;
    while tail > GEOMETRIC_TAIL {
        gen.apply(&power, &mut scratch);
        for (p, s) in power.iter_mut().zip(&scratch) {
            *p += *s / rate;
        }
        coeff *= rho;
        for (o, p) in out.iter_mut().zip(&power) {
            *o += coeff * p;
        }
        tail *= rho;
    }
    Ok(out)
}

/// Residual `max |f - lambda L f - g|` of a resolvent solution.
pub fn resolvent_residual(gen: &Generator, f: &[f64], g: &[f64], lambda: f64) -> f64 {
    let lf = gen.apply_vec(f);
    f.iter()
        .zip(&lf)
        .zip(g)
        .map(|((fv, lv), gv)| (fv - lambda * lv - gv).abs())
        .fold(0.0f64, f64::max)
}

/// Verifies the integral representation of the resolvent,
/// `f = int_0^inf e^{-t} S_{lambda t} g dt`, by adaptive quadrature.
/// Returns the sup-norm gap between the solved `f` and the quadrature.
pub fn resolvent_quadrature_check(gen: &Generator, g: &[f64], lambda: f64) -> Result<f64> {
    let f = resolvent_apply(gen, g, lambda)?;
    let integrand = |t: f64| -> Result<Vec<f64>> {
        let mut v = semigroup_apply(gen, g, lambda * t)?;
        let w = (-t).exp();
        for x in &mut v {
            *x *= w;
        }
        Ok(v)
    };
    // e^{-40} ~ 4e-18 leaves the tail far below the 1e-6 comparison scale
    let quad = adaptive_simpson(&integrand, 0.0, 40.0, 1e-9)?;
    Ok(f.iter()
        .zip(&quad)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max))
}

fn simpson_rule(fa: &[f64], fm: &[f64], fb: &[f64], h: f64) -> Vec<f64> {
    fa.iter()
        .zip(fm)
        .zip(fb)
        .map(|((a, m), b)| h / 6.0 * (a + 4.0 * m + b))
        .collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max)
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> Result<Vec<f64>>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let fa = f(a)?;
    let fm = f(0.5 * (a + b))?;
    let fb = f(b)?;
    let whole = simpson_rule(&fa, &fm, &fb, b - a);
    simpson_recurse(f, a, b, &fa, &fm, &fb, &whole, tol, 28)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse(
    f: &impl Fn(f64) -> Result<Vec<f64>>,
    a: f64,
    b: f64,
    fa: &[f64],
    fm: &[f64],
    fb: &[f64],
    whole: &[f64],
    tol: f64,
    depth: u32,
) -> Result<Vec<f64>> {
    let m = 0.5 * (a + b);
    let lm = f(0.5 * (a + m))?;
    let rm = f(0.5 * (m + b))?;
    let left = simpson_rule(fa, &lm, fm, m - a);
    let right = simpson_rule(fm, &rm, fb, b - m);
    let combined: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
    if depth == 0 || sup_diff(&combined, whole) <= 15.0 * tol {
        return Ok(combined);
    }
    let lv = simpson_recurse(f, a, m, fa, &lm, fm, &left, tol / 2.0, depth - 1)?;
    let rv = simpson_recurse(f, m, b, fm, &rm, fb, &right, tol / 2.0, depth - 1)?;
    Ok(lv.iter().zip(&rv).map(|(l, r)| l + r).collect())
}

/// Error curve of the backward-Euler power approximation
/// `(I - (t/n) L)^{-n} f` against the uniformized semigroup, per `n`.
pub fn resolvent_power_limit(
    gen: &Generator,
    f: &[f64],
    t: f64,
    ns: &[u64],
) -> Result<Vec<(u64, f64)>> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime { t });
    }
    let reference = semigroup_apply(gen, f, t)?;
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let lambda = t / n as f64;
        let mut x = f.to_vec();
        for _ in 0..n {
            x = resolvent_apply(gen, &x, lambda)?;
        }
        out.push((n, sup_diff(&x, &reference)));
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(u64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|&(x, y)| ((x as f64).ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RateFamily;
    use crate::model::{Boundary, LocalAlphabet, Potential, Specification, StateSpace, Volume};
    use std::sync::Arc;

    fn gen(n: usize, beta: f64) -> (Generator, StateSpace) {
        let v = Arc::new(Volume::ring(n, true).unwrap());
        let a = LocalAlphabet::new(2).unwrap();
        let p =
            Arc::new(Potential::ising(v.clone(), a, beta, 1.0, 0.0, Boundary::Periodic).unwrap());
        let spec = Arc::new(Specification::new(p).unwrap());
        let rates =
            RateFamily::heat_bath(spec.clone(), RateFamily::single_site_regions(&v)).unwrap();
        let space = StateSpace::enumerate(&v, a, StateSpace::DEFAULT_CAP).unwrap();
        (Generator::build(&rates, &space).unwrap(), space)
    }

    #[test]
    fn time_zero_is_identity_and_constants_are_fixed() {
        let (g, space) = gen(3, 0.4);
        let f: Vec<f64> = space.states().map(|i| (i as f64).sin()).collect();
        let out = semigroup_apply(&g, &f, 0.0).unwrap();
        assert_eq!(out, f);
        let c = vec![2.5; space.count() as usize];
        for t in [0.1, 1.0, 7.0] {
            let out = semigroup_apply(&g, &c, t).unwrap();
            for v in out {
                assert!((v - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positivity_preserved() {
        let (g, space) = gen(3, 0.6);
        let f: Vec<f64> = space
            .states()
            .map(|i| if i % 3 == 0 { 1.0 } else { 0.0 })
            .collect();
        let out = semigroup_apply(&g, &f, 0.9).unwrap();
        assert!(out.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn long_horizon_splits_cleanly() {
        let (g, space) = gen(3, 0.2);
        let f: Vec<f64> = space.states().map(|i| i as f64).collect();
        // rate*t beyond the split threshold
        let out = semigroup_apply(&g, &f, 200.0).unwrap();
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        // fully relaxed: every entry near the stationary mean
        for v in &out {
            assert!((v - mean).abs() < 1e-8);
        }
    }

    #[test]
    fn resolvent_identity_and_trivial_cases() {
        let (g, space) = gen(3, 0.5);
        let f: Vec<f64> = space.states().map(|i| ((i * 7 + 3) % 5) as f64).collect();
        let sol = resolvent_apply(&g, &f, 0.0).unwrap();
        assert_eq!(sol, f);
        let c = vec![1.25; space.count() as usize];
        let sol = resolvent_apply(&g, &c, 0.7).unwrap();
        for v in &sol {
            assert!((v - 1.25).abs() < 1e-12);
        }
        let sol = resolvent_apply(&g, &f, 0.3).unwrap();
        assert!(resolvent_residual(&g, &sol, &f, 0.3) < 1e-12);
    }

    #[test]
    fn quadrature_representation_matches() {
        let (g, space) = gen(3, 0.5);
        let f: Vec<f64> = space.states().map(|i| ((i * 5 + 1) % 7) as f64 / 7.0).collect();
        let gap = resolvent_quadrature_check(&g, &f, 0.3).unwrap();
        assert!(gap <= 1e-6, "quadrature gap {gap}");
    }

    #[test]
    fn power_limit_converges_first_order() {
        let (g, space) = gen(3, 0.5);
        let f: Vec<f64> = space.states().map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let ns: Vec<u64> = (2..=10).map(|k| 1 << k).collect();
        let curve = resolvent_power_limit(&g, &f, 1.0, &ns).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 < w[0].1, "error must decrease: {curve:?}");
        }
        let slope = log_log_slope(&curve);
        assert!((slope + 1.0).abs() < 0.15, "slope {slope}");
        let zero = resolvent_power_limit(&g, &f, 0.0, &[4, 16]).unwrap();
        assert!(zero.iter().all(|&(_, e)| e == 0.0));
    }
}
