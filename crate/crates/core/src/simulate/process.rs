//! The trajectorial entropy process `L(s) = Phi(P_{T-s} f (eta(T-s)))`, its
//! nondecreasing compensator
//! `A(t) = int_0^t sum_regions int c*(eta(T-s), xi)
//! div_Phi(P_{T-s}f(xi eta) | P_{T-s}f(eta)) lambda(dxi) ds`,
//! and the martingale part `M = L - A`.
//!
//! The observable line `P_{T-s} f` is driven by the generator of the
//! time-reversed dynamics, which is what makes the correction term of the
//! time-dependent martingale identity cancel along the reversed filtration;
//! for reversible families it coincides with the forward semigroup. The
//! forward-semigroup variant is kept as a deliberate negative control for
//! irreversible families.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::RateFamily;
use crate::entropy::{bregman_jump_sum, Phi};
use crate::error::{Error, Result};
use crate::exact::{semigroup_apply, Generator};
use crate::model::StateSpace;
use crate::simulate::Trajectory;

/// Which semigroup drives the observable line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemigroupSide {
    /// The time-reversed generator, along which the correction term of the
    /// time-dependent martingale identity cancels.
    Reversed,
    /// The forward generator along the reversed path; negative control,
    /// identical to `Reversed` only for reversible dynamics.
    ForwardControl,
}

/// Piecewise description of one trajectorial process path.
#[derive(Debug, Clone)]
pub struct ProcessPath {
    /// Evaluation times (the requested grid plus all reversed event times).
    pub s: Vec<f64>,
    /// Reversed-path state index at each time.
    pub state: Vec<u64>,
    pub l: Vec<f64>,
    pub a: Vec<f64>,
    pub m: Vec<f64>,
    pub is_event: Vec<bool>,
}

impl ProcessPath {
    /// Position of a requested grid time inside the evaluation times.
    pub fn position_of(&self, s: f64) -> Option<usize> {
        self.s.iter().position(|&x| (x - s).abs() <= 1e-12)
    }
}

/// Exact engine for the trajectorial process: caches the observable line
/// `P_u f` on a uniform base grid and refines by short uniformization steps.
/// Read-only during sampling; shared across threads.
pub struct TrajectorialEngine {
    space: Arc<StateSpace>,
    rates_hat: Arc<RateFamily>,
    line_generator: Generator,
    phi: Phi,
    horizon: f64,
    base_step: f64,
    base: Vec<Vec<f64>>,
    /// Per-segment quadrature tolerance for the compensator.
    pub quad_tol: f64,
}

impl TrajectorialEngine {
    /// `rates_hat` are the reversed rates entering the compensator;
    /// `line_generator` drives the observable line (choose per
    /// [`SemigroupSide`]).
    pub fn new(
        space: Arc<StateSpace>,
        rates_hat: Arc<RateFamily>,
        line_generator: &Generator,
        phi: Phi,
        f: &[f64],
        horizon: f64,
        base_points: usize,
    ) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::NegativeTime { t: horizon });
        }
        for &v in f {
            phi.check(v)?;
        }
        let base_points = base_points.max(2);
        let base_step = horizon / (base_points - 1) as f64;
        let mut base = Vec::with_capacity(base_points);
        base.push(f.to_vec());
        for k in 1..base_points {
            let prev = &base[k - 1];
            base.push(semigroup_apply(line_generator, prev, base_step)?);
        }
        Ok(Self {
            space,
            rates_hat,
            line_generator: line_generator.clone(),
            phi,
            horizon,
            base_step,
            base,
            quad_tol: 1e-8,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn phi(&self) -> Phi {
        self.phi
    }

    /// `P_u f` from the nearest cached base point below `u`.
    pub fn line_value(&self, u: f64) -> Result<Vec<f64>> {
        if !(u >= 0.0) {
            return Err(Error::NegativeTime { t: u });
        }
        let k = ((u / self.base_step).floor() as usize).min(self.base.len() - 1);
        let rest = u - k as f64 * self.base_step;
        if rest <= 0.0 {
            return Ok(self.base[k].clone());
        }
        semigroup_apply(&self.line_generator, &self.base[k], rest)
    }

    /// Compensator integrand at reversed time `s` in the given state:
    /// the Bregman jump sum of `P_{T-s} f` under the reversed rates.
    pub fn compensator_integrand(&self, state: u64, s: f64) -> Result<f64> {
        let g = self.line_value(self.horizon - s)?;
        bregman_jump_sum(&self.rates_hat, &self.space, &self.phi, &g, state)
    }

    /// Evaluates the process along one forward trajectory: `L` on the grid
    /// union event times, `A` by per-segment adaptive quadrature, `M = L - A`.
    pub fn process_path(&self, traj: &Trajectory, grid: &[f64]) -> Result<ProcessPath> {
        if (traj.horizon - self.horizon).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "trajectory horizon {} differs from engine horizon {}",
                traj.horizon, self.horizon
            )));
        }
        let reversed = traj.reversed(&self.rates_hat);
        // evaluation times: grid plus event times, deduplicated
        let mut times: Vec<(f64, bool)> = grid
            .iter()
            .filter(|&&t| (0.0..=self.horizon + 1e-12).contains(&t))
            .map(|&t| (t.min(self.horizon), false))
            .collect();
        times.push((0.0, false));
        times.push((self.horizon, false));
        for e in &reversed.events {
            times.push((e.time, true));
        }
        times.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut s: Vec<f64> = Vec::with_capacity(times.len());
        let mut is_event: Vec<bool> = Vec::new();
        for (t, ev) in times {
            match s.last() {
                Some(&last) if (t - last).abs() <= 1e-15 => {
                    let k = is_event.len() - 1;
                    is_event[k] |= ev;
                }
                _ => {
                    s.push(t);
                    is_event.push(ev);
                }
            }
        }

        // reversed-path states at each evaluation time (right-continuous)
        let mut state = Vec::with_capacity(s.len());
        let mut cfg = reversed.initial.clone();
        let mut next_event = 0usize;
        for &si in &s {
            while next_event < reversed.events.len() && reversed.events[next_event].time <= si {
                let e = &reversed.events[next_event];
                cfg.patch_in_place(
                    &self.rates_hat.regions()[e.region as usize].sites,
                    &e.new_values,
                );
                next_event += 1;
            }
            state.push(self.space.index_of(&cfg));
        }

        let mut l = Vec::with_capacity(s.len());
        for (i, &si) in s.iter().enumerate() {
            let g = self.line_value(self.horizon - si)?;
            l.push(self.phi.eval(g[state[i] as usize]));
        }

        // A(0) = 0; per-segment adaptive Simpson with the pre-jump state
        let mut a = Vec::with_capacity(s.len());
        a.push(0.0);
        for i in 1..s.len() {
            let (lo, hi) = (s[i - 1], s[i]);
            let x = state[i - 1];
            let increment = if hi > lo {
                self.integrate_segment(x, lo, hi)?
            } else {
                0.0
            };
            let prev = a[i - 1];
            a.push(prev + increment.max(0.0));
        }
        let m = l.iter().zip(&a).map(|(lv, av)| lv - av).collect();
        Ok(ProcessPath {
            s,
            state,
            l,
            a,
            m,
            is_event,
        })
    }

    fn integrate_segment(&self, state: u64, lo: f64, hi: f64) -> Result<f64> {
        let f = |s: f64| self.compensator_integrand(state, s);
        let fa = f(lo)?;
        let fm = f(0.5 * (lo + hi))?;
        let fb = f(hi)?;
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        self.simpson(&f, lo, hi, fa, fm, fb, whole, self.quad_tol, 24)
    }

    #[allow(clippy::too_many_arguments)]
    fn simpson(
        &self,
        f: &impl Fn(f64) -> Result<f64>,
        lo: f64,
        hi: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let mid = 0.5 * (lo + hi);
        let flm = f(0.5 * (lo + mid))?;
        let frm = f(0.5 * (mid + hi))?;
        let left = (mid - lo) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (hi - mid) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return Ok(left + right);
        }
        let lv = self.simpson(f, lo, mid, fa, flm, fm, left, tol / 2.0, depth - 1)?;
        let rv = self.simpson(f, mid, hi, fm, frm, fb, right, tol / 2.0, depth - 1)?;
        Ok(lv + rv)
    }

    /// Paths for a whole ensemble, parallel over trajectories with the
    /// result order fixed by the input order.
    pub fn process_ensemble(
        &self,
        trajectories: &[Trajectory],
        grid: &[f64],
    ) -> Result<Vec<ProcessPath>> {
        trajectories
            .par_iter()
            .map(|t| self.process_path(t, grid))
            .collect()
    }
}

/// The two observable-line generators for a model: the reversed semigroup
/// and the forward control.
pub fn line_generator_for(
    side: SemigroupSide,
    forward: &Generator,
    reversed: &Generator,
) -> Generator {
    match side {
        SemigroupSide::Reversed => reversed.clone(),
        SemigroupSide::ForwardControl => forward.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RateFamily;
    use crate::exact::{stationary_measure, Measure, Observable};
    use crate::model::{Boundary, LocalAlphabet, Potential, Specification, Volume};
    use crate::simulate::{sample_stationary_ensemble, StationarySampler};

    struct Setup {
        space: Arc<StateSpace>,
        rates: Arc<RateFamily>,
        rates_hat: Arc<RateFamily>,
        forward: Generator,
        reversed: Generator,
        mu: Measure,
    }

    fn heat_bath(n: usize, beta: f64) -> Setup {
        let v = Arc::new(Volume::ring(n, true).unwrap());
        let a = LocalAlphabet::new(2).unwrap();
        let p =
            Arc::new(Potential::ising(v.clone(), a, beta, 1.0, 0.0, Boundary::Periodic).unwrap());
        let spec = Arc::new(Specification::new(p).unwrap());
        let rates = Arc::new(
            RateFamily::heat_bath(spec.clone(), RateFamily::single_site_regions(&v)).unwrap(),
        );
        let rates_hat = Arc::new(RateFamily::reversed(rates.clone(), spec.clone()).unwrap());
        let space = Arc::new(StateSpace::enumerate(&v, a, StateSpace::DEFAULT_CAP).unwrap());
        let forward = Generator::build(&rates, &space).unwrap();
        let reversed = Generator::build(&rates_hat, &space).unwrap();
        let mu = stationary_measure(&forward).unwrap();
        Setup {
            space,
            rates,
            rates_hat,
            forward,
            reversed,
            mu,
        }
    }

    #[test]
    fn constant_observable_gives_flat_path() {
        let s = heat_bath(3, 0.4);
        let f = Observable::constant(&s.space, 0.7);
        let engine = TrajectorialEngine::new(
            s.space.clone(),
            s.rates_hat.clone(),
            &s.reversed,
            Phi::Square,
            &f.values,
            2.0,
            64,
        )
        .unwrap();
        let sampler = StationarySampler::new(&s.mu);
        let trajs =
            sample_stationary_ensemble(&s.rates, &s.space, &sampler, 2.0, 3, 4).unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| 0.2 * k as f64).collect();
        for traj in &trajs {
            let path = engine.process_path(traj, &grid).unwrap();
            for (l, (a, m)) in path.l.iter().zip(path.a.iter().zip(&path.m)) {
                assert!((l - 0.49).abs() < 1e-12);
                assert!(a.abs() < 1e-20, "constant observables have no compensator");
                assert!((m - 0.49).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn endpoint_identities() {
        let s = heat_bath(4, 0.5);
        let f = Observable::spin(&s.space, 0).unwrap();
        let horizon = 1.5;
        let engine = TrajectorialEngine::new(
            s.space.clone(),
            s.rates_hat.clone(),
            &s.reversed,
            Phi::Square,
            &f.values,
            horizon,
            128,
        )
        .unwrap();
        let sampler = StationarySampler::new(&s.mu);
        let trajs =
            sample_stationary_ensemble(&s.rates, &s.space, &sampler, horizon, 5, 8).unwrap();
        for traj in &trajs {
            let path = engine.process_path(traj, &[]).unwrap();
            // s = 0: Phi(P_T f(eta_T)); s = T: Phi(f(eta_0))
            let p_t_f = engine.line_value(horizon).unwrap();
            let terminal = s.space.index_of(&traj.final_state(&s.rates));
            let initial = s.space.index_of(&traj.initial);
            let first = path.l.first().unwrap();
            let last = path.l.last().unwrap();
            assert!((first - Phi::Square.eval(p_t_f[terminal as usize])).abs() < 1e-10);
            assert!((last - Phi::Square.eval(f.values[initial as usize])).abs() < 1e-12);
            // pathwise decomposition
            assert_eq!(path.a[0], 0.0);
            for i in 0..path.s.len() {
                assert!((path.l[i] - path.a[i] - path.m[i]).abs() <= 1e-12);
            }
            for w in path.a.windows(2) {
                assert!(w[1] >= w[0] - 1e-15, "compensator must be nondecreasing");
            }
        }
    }

    #[test]
    fn line_value_matches_direct_exponential() {
        let s = heat_bath(3, 0.5);
        let f = Observable::spin(&s.space, 1).unwrap();
        let engine = TrajectorialEngine::new(
            s.space.clone(),
            s.rates_hat.clone(),
            &s.reversed,
            Phi::Square,
            &f.values,
            2.0,
            64,
        )
        .unwrap();
        for u in [0.0, 0.37, 1.0, 1.99] {
            let cached = engine.line_value(u).unwrap();
            let direct = semigroup_apply(&s.reversed, &f.values, u).unwrap();
            for (c, d) in cached.iter().zip(&direct) {
                assert!((c - d).abs() < 1e-10, "u = {u}");
            }
        }
    }

    #[test]
    fn forward_control_differs_only_for_irreversible_dynamics() {
        let s = heat_bath(3, 0.5);
        // reversible: both sides give the same generator action
        let f = Observable::spin(&s.space, 0).unwrap();
        let a = semigroup_apply(&s.forward, &f.values, 0.8).unwrap();
        let b = semigroup_apply(&s.reversed, &f.values, 0.8).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        // irreversible rotation: the two lines separate
        let v = Arc::new(Volume::ring(4, true).unwrap());
        let al = LocalAlphabet::new(3).unwrap();
        let p = Arc::new(Potential::zero(v.clone(), al));
        let spec = Arc::new(Specification::new(p).unwrap());
        let rates = Arc::new(RateFamily::cyclic_rotation(v.clone(), al).unwrap());
        let rates_hat = Arc::new(RateFamily::reversed(rates.clone(), spec).unwrap());
        let space = Arc::new(StateSpace::enumerate(&v, al, StateSpace::DEFAULT_CAP).unwrap());
        let fwd = Generator::build(&rates, &space).unwrap();
        let rev = Generator::build(&rates_hat, &space).unwrap();
        let g = Observable::indicator(&space, 0, 0).unwrap();
        let x = semigroup_apply(&fwd, &g.values, 0.8).unwrap();
        let y = semigroup_apply(&rev, &g.values, 0.8).unwrap();
        let diff = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(diff > 1e-3, "irreversible lines must separate, got {diff}");
    }

    #[test]
    fn ensemble_paths_share_the_grid() {
        let s = heat_bath(3, 0.3);
        let f = Observable::spin(&s.space, 0).unwrap();
        let engine = TrajectorialEngine::new(
            s.space.clone(),
            s.rates_hat.clone(),
            &s.reversed,
            Phi::Square,
            &f.values,
            1.0,
            32,
        )
        .unwrap();
        let sampler = StationarySampler::new(&s.mu);
        let trajs = sample_stationary_ensemble(&s.rates, &s.space, &sampler, 1.0, 13, 8).unwrap();
        let grid = [0.25, 0.5, 0.75];
        let paths = engine.process_ensemble(&trajs, &grid).unwrap();
        for p in &paths {
            for g in grid {
                assert!(p.position_of(g).is_some());
            }
        }
    }
}
