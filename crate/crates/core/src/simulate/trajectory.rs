use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::RateFamily;
use crate::error::{Error, Result};
use crate::exact::Measure;
use crate::model::{pattern_iter, Configuration, StateSpace};

/// Provenance of a sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SeedInfo {
    pub master_seed: u64,
    pub index: u64,
}

/// One jump event: at `time` the sites of `region` take `new_values`.
/// Density families may put mass on the current pattern; such events are
/// recorded and flagged as self jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub region: u32,
    pub new_values: Vec<u8>,
    pub self_jump: bool,
}

/// Initial configuration plus ordered jump events on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: Configuration,
    pub events: Vec<Event>,
    pub horizon: f64,
    pub seed: Option<SeedInfo>,
}

impl Trajectory {
    /// Right-continuous state at time `t`.
    pub fn state_at(&self, regions: &RateFamily, t: f64) -> Configuration {
        let mut cfg = self.initial.clone();
        for e in &self.events {
            if e.time > t {
                break;
            }
            cfg.patch_in_place(&regions.regions()[e.region as usize].sites, &e.new_values);
        }
        cfg
    }

    pub fn final_state(&self, regions: &RateFamily) -> Configuration {
        self.state_at(regions, self.horizon)
    }

    /// Number of events that change the configuration.
    pub fn proper_jumps(&self) -> usize {
        self.events.iter().filter(|e| !e.self_jump).count()
    }

    /// Event times are strictly increasing inside `(0, horizon]`.
    pub fn validate(&self) -> Result<()> {
        let mut last = 0.0;
        for e in &self.events {
            if !(e.time > last && e.time <= self.horizon) {
                return Err(Error::Invalid(format!(
                    "event time {} outside ({last}, {}]",
                    e.time, self.horizon
                )));
            }
            last = e.time;
        }
        Ok(())
    }

    /// The path of `eta(horizon - t)`: initial state is the terminal state,
    /// events are mirrored at the horizon with pre/post patterns swapped.
    pub fn reversed(&self, rates: &RateFamily) -> Trajectory {
        let mut cfg = self.initial.clone();
        let mut pre_patterns: Vec<Vec<u8>> = Vec::with_capacity(self.events.len());
        for e in &self.events {
            let sites = &rates.regions()[e.region as usize].sites;
            pre_patterns.push(cfg.restrict(sites));
            cfg.patch_in_place(sites, &e.new_values);
        }
        let events = self
            .events
            .iter()
            .zip(pre_patterns)
            .rev()
            .map(|(e, pre)| Event {
                time: self.horizon - e.time,
                region: e.region,
                new_values: pre,
                self_jump: e.self_jump,
            })
            .collect();
        Trajectory {
            initial: cfg,
            events,
            horizon: self.horizon,
            seed: self.seed,
        }
    }
}

/// Counter-based per-trajectory RNG: one ChaCha stream per
/// `(master seed, trajectory index)` pair, deterministic under parallelism.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn draw_unit(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    u.max(f64::MIN_POSITIVE)
}

/// Exact-in-law continuous-time jump chain: exponential holding at the total
/// rate, region chosen proportionally to its total rate, target pattern
/// proportionally to `density * lambda`. Zero total rate yields a trajectory
/// with no events. Draw order per event: holding, region, target.
pub fn gillespie_sample(
    rates: &RateFamily,
    initial: Configuration,
    horizon: f64,
    mut rng: ChaCha8Rng,
    seed: Option<SeedInfo>,
) -> Result<Trajectory> {
    if !(horizon >= 0.0) {
        return Err(Error::NegativeTime { t: horizon });
    }
    let q = rates.alphabet().q();
    let n_regions = rates.regions().len();
    let mut cfg = initial.clone();
    let mut t = 0.0;
    let mut events = Vec::new();
    let mut region_rates = vec![0.0f64; n_regions];
    loop {
        let mut total = 0.0;
        for (i, r) in region_rates.iter_mut().enumerate() {
            *r = rates.region_total_rate(&cfg, i);
            total += *r;
        }
        if total <= 0.0 {
            break;
        }
        t += -draw_unit(&mut rng).ln() / total;
        if t > horizon {
            break;
        }
        // region proportional to its total rate
        let mut pick = rng.random::<f64>() * total;
        let mut region = n_regions - 1;
        for (i, r) in region_rates.iter().enumerate() {
            if pick < *r {
                region = i;
                break;
            }
            pick -= r;
        }
        // target pattern proportional to density * lambda within the region
        let sites = &rates.regions()[region].sites;
        let w = rates.lambda_weight(region);
        let mut pick = rng.random::<f64>() * region_rates[region];
        let mut chosen: Option<Vec<u8>> = None;
        let mut last_positive: Option<Vec<u8>> = None;
        for xi in pattern_iter(q, sites.len()) {
            let mass = rates.density(&cfg, region, &xi) * w;
            if mass > 0.0 {
                last_positive = Some(xi.clone());
                if pick < mass {
                    chosen = Some(xi);
                    break;
                }
                pick -= mass;
            }
        }
        let xi = chosen
            .or(last_positive)
            .expect("positive total rate implies a positive-density pattern");
        let self_jump = xi == cfg.restrict(sites);
        cfg.patch_in_place(sites, &xi);
        events.push(Event {
            time: t,
            region: region as u32,
            new_values: xi,
            self_jump,
        });
    }
    Ok(Trajectory {
        initial,
        events,
        horizon,
        seed,
    })
}

/// Inverse-CDF sampler for an enumerated measure.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    cumulative: Vec<f64>,
}

impl StationarySampler {
    pub fn new(mu: &Measure) -> Self {
        let mut cumulative = Vec::with_capacity(mu.len());
        let mut acc = 0.0;
        for i in 0..mu.len() {
            acc += mu.get(i as u64);
            cumulative.push(acc);
        }
        Self { cumulative }
    }

    pub fn sample_index(&self, rng: &mut ChaCha8Rng) -> u64 {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u) as u64
    }

    pub fn sample(&self, space: &StateSpace, rng: &mut ChaCha8Rng) -> Configuration {
        space.config_of(self.sample_index(rng).min(space.count() - 1))
    }
}

/// Ensemble of stationary trajectories, embarrassingly parallel over the
/// trajectory index; results are bit-identical for any thread count.
pub fn sample_stationary_ensemble(
    rates: &RateFamily,
    space: &StateSpace,
    sampler: &StationarySampler,
    horizon: f64,
    master_seed: u64,
    count: usize,
) -> Result<Vec<Trajectory>> {
    (0..count as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = trajectory_rng(master_seed, index);
            let initial = sampler.sample(space, &mut rng);
            gillespie_sample(
                rates,
                initial,
                horizon,
                rng,
                Some(SeedInfo { master_seed, index }),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RateFamily;
    use crate::exact::{stationary_measure, Generator};
    use crate::model::{Boundary, LocalAlphabet, Potential, Specification, Volume};
    use std::sync::Arc;

    fn heat_bath(n: usize, beta: f64) -> (Arc<RateFamily>, StateSpace) {
        let v = Arc::new(Volume::ring(n, true).unwrap());
        let a = LocalAlphabet::new(2).unwrap();
        let p =
            Arc::new(Potential::ising(v.clone(), a, beta, 1.0, 0.0, Boundary::Periodic).unwrap());
        let spec = Arc::new(Specification::new(p).unwrap());
        let rates = Arc::new(
            RateFamily::heat_bath(spec.clone(), RateFamily::single_site_regions(&v)).unwrap(),
        );
        let space = StateSpace::enumerate(&v, a, StateSpace::DEFAULT_CAP).unwrap();
        (rates, space)
    }

    #[test]
    fn zero_rates_give_no_events() {
        let v = Arc::new(Volume::ring(3, true).unwrap());
        let a = LocalAlphabet::new(2).unwrap();
        let rules = (0..3)
            .map(|_| crate::dynamics::CustomRule {
                depends: vec![],
                table: vec![vec![0.0, 0.0]],
            })
            .collect();
        let rates = RateFamily::custom(
            v.clone(),
            a,
            RateFamily::single_site_regions(&v),
            rules,
        )
        .unwrap();
        let traj = gillespie_sample(
            &rates,
            Configuration::constant(3, 1),
            5.0,
            trajectory_rng(1, 0),
            None,
        )
        .unwrap();
        assert!(traj.events.is_empty());
        assert_eq!(traj.final_state(&rates).values(), &[1, 1, 1]);
    }

    #[test]
    fn trajectories_are_reproducible_and_valid() {
        let (rates, space) = heat_bath(4, 0.5);
        let gen = Generator::build(&rates, &space).unwrap();
        let mu = stationary_measure(&gen).unwrap();
        let sampler = StationarySampler::new(&mu);
        let a = sample_stationary_ensemble(&rates, &space, &sampler, 2.0, 42, 64).unwrap();
        let b = sample_stationary_ensemble(&rates, &space, &sampler, 2.0, 42, 64).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.initial, y.initial);
            assert_eq!(x.events, y.events);
            x.validate().unwrap();
        }
        // distinct indices explore distinct streams
        assert!(a[0].events != a[1].events || a[0].initial != a[1].initial);
    }

    #[test]
    fn double_reversal_is_identity() {
        let (rates, space) = heat_bath(4, 0.3);
        let gen = Generator::build(&rates, &space).unwrap();
        let mu = stationary_measure(&gen).unwrap();
        let sampler = StationarySampler::new(&mu);
        let trajs = sample_stationary_ensemble(&rates, &space, &sampler, 1.5, 7, 16).unwrap();
        for traj in &trajs {
            let back = traj.reversed(&rates).reversed(&rates);
            assert_eq!(back.initial, traj.initial);
            assert_eq!(back.events.len(), traj.events.len());
            for (e1, e2) in back.events.iter().zip(&traj.events) {
                assert!((e1.time - e2.time).abs() < 1e-12);
                assert_eq!(e1.region, e2.region);
                assert_eq!(e1.new_values, e2.new_values);
            }
        }
    }

    #[test]
    fn reversal_of_no_events_is_constant() {
        let (rates, _) = heat_bath(3, 0.0);
        let traj = Trajectory {
            initial: Configuration::constant(3, 1),
            events: vec![],
            horizon: 2.0,
            seed: None,
        };
        let rev = traj.reversed(&rates);
        assert_eq!(rev.initial.values(), &[1, 1, 1]);
        assert!(rev.events.is_empty());
    }

    #[test]
    fn point_mass_sampler_returns_the_configuration() {
        let (_, space) = heat_bath(3, 0.0);
        let mut w = vec![0.0; space.count() as usize];
        w[5] = 1.0;
        let mu = Measure::from_weights(w).unwrap();
        let sampler = StationarySampler::new(&mu);
        let mut rng = trajectory_rng(9, 3);
        for _ in 0..32 {
            assert_eq!(sampler.sample_index(&mut rng), 5);
        }
    }

    #[test]
    fn holding_times_have_the_right_mean() {
        // heat bath total rate is the number of sites, so the first holding
        // time is Exp(4); the horizon is long enough that censoring is ~0
        let (rates, space) = heat_bath(4, 0.5);
        let gen = Generator::build(&rates, &space).unwrap();
        let mu = stationary_measure(&gen).unwrap();
        let sampler = StationarySampler::new(&mu);
        let n = 10_000usize;
        let trajs = sample_stationary_ensemble(&rates, &space, &sampler, 10.0, 11, n).unwrap();
        let first_holds: Vec<f64> = trajs
            .iter()
            .filter_map(|t| t.events.first().map(|e| e.time))
            .collect();
        assert_eq!(first_holds.len(), n);
        let mean: f64 = first_holds.iter().sum::<f64>() / n as f64;
        let tol = 3.0 * 0.25 / (n as f64).sqrt();
        assert!((mean - 0.25).abs() < tol, "mean {mean} vs 0.25 +- {tol}");
    }
}
