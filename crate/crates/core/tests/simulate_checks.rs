//! Law-level checks of the kinetic Monte Carlo engine and the trajectorial
//! statistics: marginals against the uniformization oracle, stationary
//! sampling against enumeration, reversal in law, and the martingale
//! positive/negative control pair on the irreversible rotation family.

mod common;

use std::sync::Arc;

use common::*;
use ipslab::dynamics::RateFamily;
use ipslab::entropy::{bregman_jump_sum, phi_entropy, Phi};
use ipslab::exact::{semigroup_apply, Generator, Observable};
use ipslab::simulate::{
    chi_square_gof, exact_conditional_check, gillespie_sample, martingale_test, mean_ci,
    sample_stationary_ensemble, submartingale_test, trajectory_rng, two_time_battery, FeatureSet,
    StationarySampler, TrajectorialEngine, Verdict,
};

#[test]
fn occupancy_law_matches_uniformization_marginal() {
    // fixed start, one-site occupancy at a fixed time, 10^4 trajectories
    let m = ising_heat_bath(4, 0.5);
    let start = configuration_of(&m.space, &[1, 1, 0, 1]);
    let start_idx = m.space.index_of(&start);
    let t = 0.8;
    let n = 10_000usize;
    let mut hits = 0u64;
    for index in 0..n as u64 {
        let rng = trajectory_rng(404, index);
        let traj = gillespie_sample(&m.rates, start.clone(), t, rng, None).unwrap();
        if traj.final_state(&m.rates).get(0) == 1 {
            hits += 1;
        }
    }
    let indicator = Observable::indicator(&m.space, 0, 1).unwrap();
    let marginal = semigroup_apply(&m.gen, &indicator.values, t).unwrap()[start_idx as usize];
    let p_hat = hits as f64 / n as f64;
    let sigma = (marginal * (1.0 - marginal) / n as f64).sqrt();
    assert!(
        (p_hat - marginal).abs() <= 3.0 * sigma,
        "occupancy {p_hat} vs exact {marginal} (3 sigma = {:.4})",
        3.0 * sigma
    );
}

#[test]
fn stationary_sampler_is_uniform_at_beta_zero() {
    let m = ising_heat_bath(4, 0.0);
    let sampler = StationarySampler::new(&m.mu);
    let mut rng = trajectory_rng(777, 0);
    let draws = 100_000usize;
    let mut counts = vec![0u64; m.space.count() as usize];
    for _ in 0..draws {
        counts[sampler.sample_index(&mut rng) as usize] += 1;
    }
    let probs = vec![1.0 / 16.0; 16];
    let chi = chi_square_gof(&counts, &probs).unwrap();
    assert!(chi.p_value >= 0.01, "uniformity p = {}", chi.p_value);
}

#[test]
fn stationary_sampler_energy_histogram_matches_enumeration() {
    let m = ising_heat_bath(4, 0.5);
    let sampler = StationarySampler::new(&m.mu);
    let mut rng = trajectory_rng(778, 0);
    let draws = 20_000usize;
    // exact energy-level probabilities from the stationary measure
    let energies: Vec<f64> = m
        .space
        .states()
        .map(|i| total_energy(&m.potential, &m.space, i))
        .collect();
    let mut levels: Vec<f64> = energies.to_vec();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let exact: Vec<f64> = levels
        .iter()
        .map(|lv| {
            m.space
                .states()
                .filter(|&i| (energies[i as usize] - lv).abs() < 1e-12)
                .map(|i| m.mu.get(i))
                .sum()
        })
        .collect();
    let mut counts = vec![0u64; levels.len()];
    for _ in 0..draws {
        let idx = sampler.sample_index(&mut rng);
        let e = energies[idx as usize];
        let k = levels
            .iter()
            .position(|lv| (lv - e).abs() < 1e-12)
            .unwrap();
        counts[k] += 1;
    }
    for (k, (&c, &p)) in counts.iter().zip(&exact).enumerate() {
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (c as f64 - mean).abs() <= 3.0 * sigma,
            "level {k}: count {c} vs {mean:.1} +- {:.1}",
            3.0 * sigma
        );
    }
}

fn reversal_battery(m: &TestModel, horizon: f64, seed: u64) -> ipslab::simulate::TestReport {
    let rates_hat = Arc::new(RateFamily::reversed(m.rates.clone(), m.spec.clone()).unwrap());
    let sampler = StationarySampler::new(&m.mu);
    let n = 10_000usize;
    let forward = sample_stationary_ensemble(&m.rates, &m.space, &sampler, horizon, seed, n).unwrap();
    let reversed: Vec<_> = forward.iter().map(|t| t.reversed(&m.rates)).collect();
    let direct = sample_stationary_ensemble(&rates_hat, &m.space, &sampler, horizon, seed ^ 0xabcdef, n)
        .unwrap();
    two_time_battery(
        &reversed,
        &direct,
        &m.rates,
        &m.space,
        &[vec![0], vec![0, 1]],
        &[(horizon / 3.0, 2.0 * horizon / 3.0)],
        0.01,
    )
    .unwrap()
}

#[test]
fn reversed_paths_match_reversed_rate_ensembles_in_law() {
    // reversible model: the reversed family is the forward family
    let m = ising_heat_bath(4, 0.5);
    let report = reversal_battery(&m, 2.0, 91);
    assert_eq!(report.overall, Verdict::Pass, "{report:?}");
    // irreversible rotation: the reversed family rotates the other way
    let c = cyclic_rotation(4);
    let report = reversal_battery(&c, 3.0, 92);
    assert_eq!(report.overall, Verdict::Pass, "{report:?}");
}

#[test]
fn cyclic_rotation_martingale_controls() {
    let m = cyclic_rotation(4);
    let rates_hat = Arc::new(RateFamily::reversed(m.rates.clone(), m.spec.clone()).unwrap());
    let reversed_gen = Generator::build(&rates_hat, &m.space).unwrap();
    let f = Observable::indicator(&m.space, 0, 0).unwrap();
    let horizon = 3.0;
    let pairs = [(0.75, 1.5), (1.5, 2.25)];

    // exact conditional-expectation statistic: the reversed-semigroup line is
    // a martingale; the forward-semigroup line along the reversed path is not
    let exact_rev =
        exact_conditional_check(&m.gen, &reversed_gen, &m.mu, &f.values, horizon, &pairs).unwrap();
    let exact_fwd =
        exact_conditional_check(&m.gen, &m.gen, &m.mu, &f.values, horizon, &pairs).unwrap();
    assert!(exact_rev <= 1e-8, "reversed-line discrepancy {exact_rev:.3e}");
    assert!(exact_fwd > 1e-3, "forward control must fail, got {exact_fwd:.3e}");

    // empirical statistic on 10^4 stationary paths
    let sampler = StationarySampler::new(&m.mu);
    let ens =
        sample_stationary_ensemble(&m.rates, &m.space, &sampler, horizon, 2024, 10_000).unwrap();
    let grid: Vec<f64> = (0..=8).map(|k| horizon * k as f64 / 8.0).collect();
    let features = FeatureSet { sites: vec![0, 1] };
    let pair = (0.75, 1.5);
    let mut verdicts = Vec::new();
    for line in [&reversed_gen, &m.gen] {
        let engine = TrajectorialEngine::new(
            m.space.clone(),
            rates_hat.clone(),
            line,
            Phi::Square,
            &f.values,
            horizon,
            256,
        )
        .unwrap();
        let paths = engine.process_ensemble(&ens, &grid).unwrap();
        let report = martingale_test(&paths, &m.space, pair, &features, 3.0).unwrap();
        verdicts.push(report.overall);
    }
    assert_eq!(verdicts[0], Verdict::Pass, "reversed-filtration statistic");
    assert_eq!(verdicts[1], Verdict::Fail, "forward-filtration control");
}

#[test]
fn submartingale_xlogx_with_martingale_part() {
    let m = ising_heat_bath(4, 0.5);
    let rates_hat = Arc::new(RateFamily::reversed(m.rates.clone(), m.spec.clone()).unwrap());
    let reversed_gen = Generator::build(&rates_hat, &m.space).unwrap();
    let f = Observable::spin(&m.space, 0).unwrap().shifted(2.0);
    let horizon = 2.0;
    let engine = TrajectorialEngine::new(
        m.space.clone(),
        rates_hat,
        &reversed_gen,
        Phi::XLogX,
        &f.values,
        horizon,
        256,
    )
    .unwrap();
    let sampler = StationarySampler::new(&m.mu);
    let ens =
        sample_stationary_ensemble(&m.rates, &m.space, &sampler, horizon, 555, 10_000).unwrap();
    let grid: Vec<f64> = (0..=8).map(|k| horizon * k as f64 / 8.0).collect();
    let paths = engine.process_ensemble(&ens, &grid).unwrap();
    let features = FeatureSet { sites: vec![0, 2] };
    let report = submartingale_test(&paths, &m.space, (0.5, 1.5), &features, 3.0).unwrap();
    assert_eq!(report.overall, Verdict::Pass, "{report:?}");
}

#[test]
fn trajectorial_expectations_match_the_exact_engine() {
    let m = ising_heat_bath(4, 0.5);
    let rates_hat = Arc::new(RateFamily::reversed(m.rates.clone(), m.spec.clone()).unwrap());
    let reversed_gen = Generator::build(&rates_hat, &m.space).unwrap();
    let f = Observable::spin(&m.space, 0).unwrap();
    let horizon = 2.0;
    let phi = Phi::Square;
    let engine = TrajectorialEngine::new(
        m.space.clone(),
        rates_hat,
        &reversed_gen,
        phi,
        &f.values,
        horizon,
        256,
    )
    .unwrap();
    let sampler = StationarySampler::new(&m.mu);
    let n = 10_000usize;
    let ens = sample_stationary_ensemble(&m.rates, &m.space, &sampler, horizon, 808, n).unwrap();
    let grid = [0.0, 0.5, 1.0, 1.5, 2.0];
    let paths = engine.process_ensemble(&ens, &grid).unwrap();

    // E[L(s)] against mu-expectations of Phi(P_{T-s} f) at five grid points
    for (k, &s) in grid.iter().enumerate() {
        let samples: Vec<f64> = paths
            .iter()
            .map(|p| p.l[p.position_of(s).unwrap()])
            .collect();
        let (mean, lo, hi) = mean_ci(&samples, 3.0);
        let g = engine.line_value(horizon - s).unwrap();
        let exact: f64 = m
            .space
            .states()
            .map(|i| m.mu.get(i) * phi.eval(g[i as usize]))
            .sum();
        assert!(
            lo <= exact && exact <= hi,
            "grid point {k}: E[L({s})] = {mean} vs exact {exact} in [{lo}, {hi}]"
        );
    }

    // expectation consistency: E[A(t) - A(s)] equals E[L(t) - L(s)] within
    // the CI and both match the exact entropy difference
    let (s, t) = (0.5, 1.5);
    let da: Vec<f64> = paths
        .iter()
        .map(|p| p.a[p.position_of(t).unwrap()] - p.a[p.position_of(s).unwrap()])
        .collect();
    let (mean_da, lo_da, hi_da) = mean_ci(&da, 3.0);
    let g_s = engine.line_value(horizon - s).unwrap();
    let g_t = engine.line_value(horizon - t).unwrap();
    let exact_drop =
        phi_entropy(&m.mu, &phi, &g_t).unwrap() - phi_entropy(&m.mu, &phi, &g_s).unwrap();
    assert!(
        lo_da <= exact_drop && exact_drop <= hi_da,
        "E[dA] = {mean_da} vs exact entropy difference {exact_drop} in [{lo_da}, {hi_da}]"
    );
    let dl: Vec<f64> = paths
        .iter()
        .map(|p| p.l[p.position_of(t).unwrap()] - p.l[p.position_of(s).unwrap()])
        .collect();
    let (mean_dl, _, _) = mean_ci(&dl, 3.0);
    let dm: Vec<f64> = dl.iter().zip(&da).map(|(l, a)| l - a).collect();
    let (mean_dm, lo_dm, hi_dm) = mean_ci(&dm, 3.0);
    assert!(
        lo_dm <= 0.0 && 0.0 <= hi_dm,
        "martingale increments must center on zero: {mean_dm} in [{lo_dm}, {hi_dm}]"
    );
    assert!((mean_dl - mean_da - mean_dm).abs() < 1e-12);
}

#[test]
fn squared_jump_integrand_uses_the_evolved_observable() {
    // Phi = u^2: the compensator integrand evaluates the divergence on
    // P_{T-s} f; the raw-observable squared-jump form agrees only at s = T
    let m = ising_heat_bath(4, 0.5);
    let rates_hat = Arc::new(RateFamily::reversed(m.rates.clone(), m.spec.clone()).unwrap());
    let reversed_gen = Generator::build(&rates_hat, &m.space).unwrap();
    let f = Observable::spin(&m.space, 0).unwrap();
    let phi = Phi::Square;
    let state = 9u64;
    let horizon = 2.0;
    let s_mid = 0.7;
    let evolved = semigroup_apply(&reversed_gen, &f.values, horizon - s_mid).unwrap();
    let evolved_mid = bregman_jump_sum(&rates_hat, &m.space, &phi, &evolved, state).unwrap();
    let raw_mid = bregman_jump_sum(&rates_hat, &m.space, &phi, &f.values, state).unwrap();
    assert!(
        (evolved_mid - raw_mid).abs() > 1e-3,
        "the two printed forms differ away from s = T: {evolved_mid} vs {raw_mid}"
    );
    // at s = T the semigroup is the identity and the forms coincide
    let at_t = semigroup_apply(&reversed_gen, &f.values, 0.0).unwrap();
    let evolved_t = bregman_jump_sum(&rates_hat, &m.space, &phi, &at_t, state).unwrap();
    assert!((evolved_t - raw_mid).abs() <= 1e-12);
}

#[test]
fn parallel_and_sequential_sampling_agree_bitwise() {
    let m = ising_heat_bath(4, 0.5);
    let sampler = StationarySampler::new(&m.mu);
    let horizon = 1.5;
    let seed = 3141;
    let parallel =
        sample_stationary_ensemble(&m.rates, &m.space, &sampler, horizon, seed, 64).unwrap();
    for (index, p) in parallel.iter().enumerate() {
        let mut rng = trajectory_rng(seed, index as u64);
        let initial = sampler.sample(&m.space, &mut rng);
        let sequential = gillespie_sample(&m.rates, initial, horizon, rng, None).unwrap();
        assert_eq!(p.initial, sequential.initial);
        assert_eq!(p.events.len(), sequential.events.len());
        for (a, b) in p.events.iter().zip(&sequential.events) {
            assert_eq!(a.time.to_bits(), b.time.to_bits(), "bit-identical times");
            assert_eq!(a.region, b.region);
            assert_eq!(a.new_values, b.new_values);
            assert_eq!(a.self_jump, b.self_jump);
        }
    }
}
