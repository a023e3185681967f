//! Independent oracles and model fixtures for the verification suites.
//!
//! Everything here deliberately avoids the library's computational shortcuts:
//! the matrix exponential is dense scaling-and-squaring, Gibbs weights come
//! from total-energy enumeration, and the audited constants are recomputed by
//! full state-space scans.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;

use ipslab::dynamics::RateFamily;
use ipslab::exact::{stationary_measure, Generator, Measure};
use ipslab::model::{
    Boundary, Configuration, LocalAlphabet, Potential, Specification, StateSpace, Volume,
};

/// A fully built enumerable model.
#[derive(Debug)]
pub struct TestModel {
    pub volume: Arc<Volume>,
    pub alphabet: LocalAlphabet,
    pub potential: Arc<Potential>,
    pub spec: Arc<Specification>,
    pub rates: Arc<RateFamily>,
    pub space: Arc<StateSpace>,
    pub gen: Generator,
    pub mu: Measure,
}

fn assemble(spec: Arc<Specification>, rates: RateFamily) -> TestModel {
    let rates = Arc::new(rates);
    let space = Arc::new(
        StateSpace::enumerate(spec.volume(), spec.alphabet(), StateSpace::DEFAULT_CAP).unwrap(),
    );
    let gen = Generator::build(&rates, &space).unwrap();
    let mu = stationary_measure(&gen).unwrap();
    TestModel {
        volume: spec.volume().clone(),
        alphabet: spec.alphabet(),
        potential: spec.potential().clone(),
        spec,
        rates,
        space,
        gen,
        mu,
    }
}

fn ising_spec(n: usize, beta: f64) -> Arc<Specification> {
    let v = Arc::new(Volume::ring(n, true).unwrap());
    let a = LocalAlphabet::new(2).unwrap();
    let p = Arc::new(Potential::ising(v, a, beta, 1.0, 0.0, Boundary::Periodic).unwrap());
    Arc::new(Specification::new(p).unwrap())
}

pub fn ising_heat_bath(n: usize, beta: f64) -> TestModel {
    let spec = ising_spec(n, beta);
    let rates =
        RateFamily::heat_bath(spec.clone(), RateFamily::single_site_regions(spec.volume()))
            .unwrap();
    assemble(spec, rates)
}

pub fn ising_metropolis(n: usize, beta: f64) -> TestModel {
    let spec = ising_spec(n, beta);
    let rates =
        RateFamily::metropolis(spec.clone(), RateFamily::single_site_regions(spec.volume()))
            .unwrap();
    assemble(spec, rates)
}

pub fn ising_exponential(n: usize, beta: f64) -> TestModel {
    let spec = ising_spec(n, beta);
    let rates = RateFamily::exponential(spec.clone()).unwrap();
    assemble(spec, rates)
}

pub fn ising_block_heat_bath(n: usize, beta: f64) -> TestModel {
    let spec = ising_spec(n, beta);
    let rates = RateFamily::block_heat_bath(spec.clone()).unwrap();
    assemble(spec, rates)
}

pub fn potts_heat_bath(n: usize, q: u8, beta: f64) -> TestModel {
    let v = Arc::new(Volume::ring(n, true).unwrap());
    let a = LocalAlphabet::new(q).unwrap();
    let p = Arc::new(Potential::potts(v, a, beta, 1.0, Boundary::Periodic).unwrap());
    let spec = Arc::new(Specification::new(p).unwrap());
    let rates =
        RateFamily::heat_bath(spec.clone(), RateFamily::single_site_regions(spec.volume()))
            .unwrap();
    assemble(spec, rates)
}

pub fn torus_heat_bath(side: usize, beta: f64) -> TestModel {
    let v = Arc::new(Volume::torus(2, side, true).unwrap());
    let a = LocalAlphabet::new(2).unwrap();
    let p = Arc::new(Potential::ising(v, a, beta, 1.0, 0.0, Boundary::Periodic).unwrap());
    let spec = Arc::new(Specification::new(p).unwrap());
    let rates =
        RateFamily::heat_bath(spec.clone(), RateFamily::single_site_regions(spec.volume()))
            .unwrap();
    assemble(spec, rates)
}

pub fn cyclic_rotation(n: usize) -> TestModel {
    let v = Arc::new(Volume::ring(n, true).unwrap());
    let a = LocalAlphabet::new(3).unwrap();
    let p = Arc::new(Potential::zero(v.clone(), a));
    let spec = Arc::new(Specification::new(p).unwrap());
    let rates = RateFamily::cyclic_rotation(v, a).unwrap();
    assemble(spec, rates)
}

/// Dense materialization of a sparse generator.
pub fn dense_of(gen: &Generator) -> DMatrix<f64> {
    let n = gen.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = gen.diag()[i];
        for (j, v) in gen.row(i) {
            m[(i, j as usize)] = v;
        }
    }
    m
}

/// Dense matrix exponential by scaling and squaring with a Taylor series;
/// independent of the uniformization path it is used to check.
pub fn dense_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    // 1-norm (max column sum)
    let norm = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = a / 2f64.powi(squarings as i32);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..200 {
        term = (&term * &b) / k as f64;
        result += &term;
        let tnorm = term.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        if tnorm < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `e^{tL} f` through the dense oracle.
pub fn dense_semigroup_apply(gen: &Generator, f: &[f64], t: f64) -> Vec<f64> {
    let m = dense_expm(&(dense_of(gen) * t));
    (0..gen.len())
        .map(|i| (0..gen.len()).map(|j| m[(i, j)] * f[j]).sum())
        .collect()
}

/// Total energy of a full configuration, straight off the term tables.
pub fn total_energy(potential: &Potential, space: &StateSpace, idx: u64) -> f64 {
    let cfg = space.config_of(idx);
    potential
        .terms()
        .iter()
        .map(|term| {
            let pattern: Vec<u8> = term.sites.iter().map(|&s| cfg.get(s)).collect();
            let key = pattern.iter().enumerate().fold(0usize, |acc, (i, &v)| {
                acc + usize::from(v) * usize::from(space.q()).pow(i as u32)
            });
            term.table[key]
        })
        .sum()
}

/// Direct Gibbs enumeration: weights `exp(-beta H(omega))`, normalized.
pub fn gibbs_measure_by_enumeration(potential: &Potential, space: &StateSpace) -> Vec<f64> {
    let beta = potential.beta();
    let energies: Vec<f64> = space
        .states()
        .map(|i| total_energy(potential, space, i))
        .collect();
    let min = energies.iter().fold(f64::INFINITY, |m, &e| m.min(e));
    let weights: Vec<f64> = energies.iter().map(|e| (-beta * (e - min)).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// Brute-force oscillation of a rate kernel by a full state-space scan.
pub fn brute_rate_oscillation(
    rates: &RateFamily,
    space: &StateSpace,
    region_idx: usize,
    y: usize,
) -> f64 {
    let q = space.q();
    let k = rates.regions()[region_idx].len();
    let w = rates.lambda_weight(region_idx);
    let mut worst = 0.0f64;
    for idx in space.states() {
        let eta = space.config_of(idx);
        for b in 0..q {
            if b == eta.get(y) {
                continue;
            }
            let mut zeta = eta.clone();
            zeta.set(y, b);
            let mut tv = 0.0;
            for xi in patterns(q, k) {
                tv += (rates.density(&eta, region_idx, &xi)
                    - rates.density(&zeta, region_idx, &xi))
                .abs()
                    * w;
            }
            worst = worst.max(tv);
        }
    }
    worst
}

/// Brute-force influence constant `M` from the definition.
pub fn brute_influence_m(rates: &RateFamily, space: &StateSpace) -> f64 {
    let n = space.n_sites();
    let mut m = 0.0f64;
    for x in 0..n {
        let mut total = 0.0;
        for &ri in rates.regions_at(x) {
            for y in 0..n {
                if y != x {
                    total += brute_rate_oscillation(rates, space, ri, y);
                }
            }
        }
        m = m.max(total);
    }
    m + 0.0
}

/// Brute-force refresh constant from the definition, inner sums read as
/// integrals against the reference measure.
pub fn brute_epsilon(rates: &RateFamily, space: &StateSpace) -> f64 {
    let n = space.n_sites();
    let q = space.q();
    let mut eps = f64::INFINITY;
    for x in 0..n {
        for idx in space.states() {
            let eta = space.config_of(idx);
            for b in 0..q {
                if b == eta.get(x) {
                    continue;
                }
                let mut zeta = eta.clone();
                zeta.set(x, b);
                let mut sum = 0.0;
                for &ri in rates.regions_at(x) {
                    let sites = &rates.regions()[ri].sites;
                    let pos = sites.iter().position(|&s| s == x).unwrap();
                    let w = rates.lambda_weight(ri);
                    for xi in patterns(q, sites.len()) {
                        if xi[pos] == zeta.get(x) {
                            sum += rates.density(&eta, ri, &xi) * w;
                        }
                        if xi[pos] == eta.get(x) {
                            sum += rates.density(&zeta, ri, &xi) * w;
                        }
                    }
                }
                eps = eps.min(sum);
            }
        }
    }
    eps
}

/// Brute-force (S4) sum over regions with nonvanishing rates.
pub fn brute_spec_oscillation_sum(
    rates: &RateFamily,
    spec: &Specification,
    space: &StateSpace,
) -> f64 {
    let n = space.n_sites();
    let q = space.q();
    let mut worst = 0.0f64;
    for x in 0..n {
        let mut total = 0.0;
        for &ri in rates.regions_at(x) {
            let sites: Vec<usize> = rates.regions()[ri].sites.clone();
            let w = space.alphabet().region_weight(sites.len());
            // does this region carry any rate at all?
            let mut has_rate = false;
            'scan: for idx in space.states() {
                let eta = space.config_of(idx);
                for xi in patterns(q, sites.len()) {
                    if rates.density(&eta, ri, &xi) > 0.0 {
                        has_rate = true;
                        break 'scan;
                    }
                }
            }
            if !has_rate {
                continue;
            }
            for y in 0..n {
                if y == x || sites.contains(&y) {
                    continue;
                }
                let mut osc = 0.0f64;
                for idx in space.states() {
                    let eta = space.config_of(idx);
                    for b in 0..q {
                        if b == eta.get(y) {
                            continue;
                        }
                        let mut zeta = eta.clone();
                        zeta.set(y, b);
                        let mut tv = 0.0;
                        for xi in patterns(q, sites.len()) {
                            tv += (spec.density(&sites, &xi, &eta).unwrap()
                                - spec.density(&sites, &xi, &zeta).unwrap())
                            .abs()
                                * w;
                        }
                        osc = osc.max(0.5 * tv);
                    }
                }
                total += osc;
            }
        }
        worst = worst.max(total);
    }
    worst + 0.0
}

/// All q^k patterns in mixed-radix order.
pub fn patterns(q: u8, k: usize) -> Vec<Vec<u8>> {
    let total: u64 = (0..k).fold(1, |acc, _| acc * u64::from(q));
    (0..total)
        .map(|mut idx| {
            let mut p = Vec::with_capacity(k);
            for _ in 0..k {
                p.push((idx % u64::from(q)) as u8);
                idx /= u64::from(q);
            }
            p
        })
        .collect()
}

/// Magnetization-free spin observable values for reuse in tests.
pub fn spin_values(space: &StateSpace, site: usize) -> Vec<f64> {
    space
        .states()
        .map(|i| f64::from(space.site_value(i, site)) * 2.0 - 1.0)
        .collect()
}

/// Spin observable for q = 2, single-site indicator otherwise.
pub fn local_observable(space: &StateSpace, site: usize) -> ipslab::exact::Observable {
    if space.q() == 2 {
        ipslab::exact::Observable::spin(space, site).unwrap()
    } else {
        ipslab::exact::Observable::indicator(space, site, 0).unwrap()
    }
}

pub fn configuration_of(space: &StateSpace, values: &[u8]) -> Configuration {
    Configuration::new(values.to_vec(), space.alphabet()).unwrap()
}
