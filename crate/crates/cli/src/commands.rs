use std::path::PathBuf;
use std::sync::Arc;

use ipslab::dynamics::{
    condition_audit, quotient_bound_check, reversal_regularity_audit, AuditOptions,
};
use ipslab::engine::Engine;
use ipslab::entropy::{
    decay_curve, dissipation, entropy_time_derivative, entropy_time_derivative_refined,
    phi_entropy, poincare_gap, Phi,
};
use ipslab::error::{Error, Result};
use ipslab::exact::{
    dlr_volumes, duality_max_discrepancy, gibbs_check, reversal_consistency_check,
    sampled_duality_discrepancy, semigroup_apply, switching_check,
};
use ipslab::export::{
    write_condition_report, write_decay_curve, write_generator_coo, write_measure,
    write_process_path, write_report, write_test_report, write_trajectory, FileMeta,
};
use ipslab::model::{
    chain_rule_check, consistency_check, density_bounds_check, StateSpace,
};
use ipslab::modelfile::{load, phi_from_str, BuiltModel};
use ipslab::simulate::{
    exact_conditional_check, martingale_test, mean_ci, sample_stationary_ensemble,
    submartingale_test, two_time_battery, FeatureSet, StationarySampler, TrajectorialEngine,
    Verdict,
};

const REVERSAL_TOL: f64 = 1e-10;
const DUALITY_TOL: f64 = 1e-10;
const SWITCHING_TOL: f64 = 1e-10;
const GIBBS_TOL: f64 = 1e-8;
const CHAIN_TOL: f64 = 1e-12;
const EXACT_MARTINGALE_TOL: f64 = 1e-8;
const DE_BRUIJN_TOL: f64 = 1e-6;
const CHI_LEVEL: f64 = 0.01;
const SIGMA: f64 = 3.0;
/// Full indicator-basis duality up to this dimension, sampled probes above.
const FULL_BASIS_CAP: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Audit,
    Stationary,
    Reverse,
    Duality,
    Decay,
    Simulate,
    Trajectorial,
    All,
}

pub struct RunConfig {
    pub model_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub state_cap: Option<u64>,
}

pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(serde::Serialize)]
struct SummaryLine {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(serde::Serialize)]
struct Summary {
    model: String,
    model_hash: String,
    seed: Option<u64>,
    checks: Vec<SummaryLine>,
}

struct Lab {
    built: BuiltModel,
    engine: Option<Engine>,
    out: PathBuf,
    seed: Option<u64>,
    state_cap: u64,
}

impl Lab {
    fn meta(&self) -> FileMeta {
        let meta = FileMeta::new(self.built.hash.clone());
        match self.seed {
            Some(s) => meta.with_seed(s),
            None => meta,
        }
    }

    fn engine(&mut self) -> Result<&Engine> {
        if self.engine.is_none() {
            let engine = Engine::build(
                self.built.spec.clone(),
                self.built.rates.clone(),
                self.state_cap,
                self.built.hash.clone(),
            )?;
            self.engine = Some(engine);
        }
        Ok(self.engine.as_ref().unwrap())
    }

    fn space(&self) -> Result<Arc<StateSpace>> {
        Ok(Arc::new(StateSpace::enumerate(
            &self.built.volume,
            self.built.alphabet,
            self.state_cap,
        )?))
    }

    fn required_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::ModelFile(
                "a master seed is mandatory for simulation commands (experiment.seed or --seed)"
                    .into(),
            )
        })
    }

    fn experiment_phi(&self) -> Result<Phi> {
        let s = self
            .built
            .experiment
            .as_ref()
            .and_then(|e| e.phi.clone())
            .ok_or_else(|| Error::ModelFile("experiment.phi is required".into()))?;
        phi_from_str(&s)
    }

    fn experiment_grid(&self) -> Result<Vec<f64>> {
        self.built
            .experiment
            .as_ref()
            .and_then(|e| e.grid)
            .ok_or_else(|| Error::ModelFile("experiment.grid is required".into()))?
            .times()
    }

    fn experiment_horizon(&self) -> Result<f64> {
        self.built
            .experiment
            .as_ref()
            .and_then(|e| e.horizon)
            .ok_or_else(|| Error::ModelFile("experiment.horizon is required".into()))
    }

    fn experiment_ensemble(&self) -> Result<usize> {
        self.built
            .experiment
            .as_ref()
            .and_then(|e| e.ensemble)
            .ok_or_else(|| Error::ModelFile("experiment.ensemble is required".into()))
    }
}

pub fn run_command(kind: CommandKind, config: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let file = load(&config.model_path)?;
    let built = file.build()?;
    let seed = config.seed.or(built.experiment.as_ref().and_then(|e| e.seed));
    let state_cap = config
        .state_cap
        .or(built.experiment.as_ref().and_then(|e| e.state_cap))
        .unwrap_or(StateSpace::DEFAULT_CAP);
    std::fs::create_dir_all(&config.out_dir)?;
    std::fs::copy(
        &config.model_path,
        config.out_dir.join("config_snapshot.toml"),
    )?;
    let mut lab = Lab {
        built,
        engine: None,
        out: config.out_dir.clone(),
        seed,
        state_cap,
    };
    let mut outcomes = Vec::new();
    let commands: &[CommandKind] = match kind {
        CommandKind::All => &[
            CommandKind::Audit,
            CommandKind::Stationary,
            CommandKind::Reverse,
            CommandKind::Duality,
            CommandKind::Decay,
            CommandKind::Simulate,
            CommandKind::Trajectorial,
        ],
        single => std::slice::from_ref(match single {
            CommandKind::Audit => &CommandKind::Audit,
            CommandKind::Stationary => &CommandKind::Stationary,
            CommandKind::Reverse => &CommandKind::Reverse,
            CommandKind::Duality => &CommandKind::Duality,
            CommandKind::Decay => &CommandKind::Decay,
            CommandKind::Simulate => &CommandKind::Simulate,
            CommandKind::Trajectorial => &CommandKind::Trajectorial,
            CommandKind::All => unreachable!(),
        }),
    };
    for cmd in commands {
        let batch = match cmd {
            CommandKind::Audit => cmd_audit(&mut lab)?,
            CommandKind::Stationary => cmd_stationary(&mut lab)?,
            CommandKind::Reverse => cmd_reverse(&mut lab)?,
            CommandKind::Duality => cmd_duality(&mut lab)?,
            CommandKind::Decay => cmd_decay(&mut lab)?,
            CommandKind::Simulate => cmd_simulate(&mut lab)?,
            CommandKind::Trajectorial => cmd_trajectorial(&mut lab)?,
            CommandKind::All => unreachable!(),
        };
        outcomes.extend(batch);
    }
    let summary = Summary {
        model: lab.built.name.clone(),
        model_hash: lab.built.hash.clone(),
        seed,
        checks: outcomes
            .iter()
            .map(|o| SummaryLine {
                name: o.name.clone(),
                pass: o.pass,
                detail: o.detail.clone(),
            })
            .collect(),
    };
    write_report(&config.out_dir.join("summary.toml"), &lab.meta(), &summary)?;
    Ok(outcomes)
}

fn outcome(name: &str, pass: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn cmd_audit(lab: &mut Lab) -> Result<Vec<CheckOutcome>> {
    let opts = AuditOptions::default();
    let mut out = Vec::new();
    let report = condition_audit(&lab.built.rates, &lab.built.spec, &opts)?;
    write_condition_report(&lab.out.join("audit/condition_report.toml"), &lab.meta(), &report)?;
    out.push(outcome(
        "audit.conditions",
        report.rate_sup_density.is_finite()
            && report.influence_m.is_finite()
            && report.epsilon.is_finite()
            && report.spec_oscillation_sum.is_finite(),
        format!(
            "rate_sup={:.6}, total_rate={:.6}, M={:.6}, eps={:.6}, R={}, S4_sum={:.6}, summability={:.6}{}",
            report.rate_sup_density,
            report.rate_total_bound,
            report.influence_m,
            report.epsilon,
            report.max_region_size,
            report.spec_oscillation_sum,
            lab.built.potential.summability(),
            if report.exhaustive {
                " (exhaustive)"
            } else {
                " (randomized probes: approximate)"
            }
        ),
    ));
    let rev = reversal_regularity_audit(&lab.built.rates, &lab.built.spec, &opts)?;
    write_report(&lab.out.join("audit/reversal_regularity.toml"), &lab.meta(), &rev)?;
    out.push(outcome(
        "audit.reversal_regularity",
        rev.total_rate_ok && rev.sup_density_ok && rev.pointwise_ok,
        format!(
            "reversed rate_sup={:.6} and total={:.6} against delta^-1 e^R sup = {:.6}; pointwise e^(2C|region|) bound {}",
            rev.reversed.rate_sup_density,
            rev.reversed.rate_total_bound,
            rev.bound,
            if rev.pointwise_ok { "holds" } else { "violated" }
        ),
    ));
    let quot = quotient_bound_check(&lab.built.rates, &lab.built.spec, &opts)?;
    out.push(outcome(
        "audit.quotient_bounds",
        quot.pass,
        format!(
            "ratios in [{:.6e}, {:.6e}] against e^(2C|region|) = {:.6e}",
            quot.worst_low, quot.worst_high, quot.bound
        ),
    ));

    // enumeration-based specification checks, skipped when not enumerable
    match lab.space() {
        Ok(space) => {
            let region: Vec<usize> = match lab.built.volume.edges().first() {
                Some(&(a, b)) => vec![a, b],
                None => vec![0],
            };
            if region.len() == 2 {
                let d1 = chain_rule_check(&lab.built.spec, &space, &region, None)?;
                let rev_order = vec![region[1], region[0]];
                let d2 = chain_rule_check(&lab.built.spec, &space, &region, Some(&rev_order))?;
                out.push(outcome(
                    "audit.chain_rule",
                    d1 <= CHAIN_TOL && d2 <= CHAIN_TOL,
                    format!("discrepancy {d1:.3e}, order-swapped {d2:.3e} (tol {CHAIN_TOL:.0e})"),
                ));
                let cons = consistency_check(&lab.built.spec, &space, &region[..1], &region)?;
                out.push(outcome(
                    "audit.consistency",
                    cons <= CHAIN_TOL,
                    format!("kernel consistency discrepancy {cons:.3e}"),
                ));
            }
            let bounds = density_bounds_check(&lab.built.spec, &space, &region)?;
            out.push(outcome(
                "audit.density_bounds",
                bounds.density_pass && bounds.quotient_pass,
                format!(
                    "density in [{:.6e}, {:.6e}] vs e^(C|region|) = {:.6e}",
                    bounds.density_min, bounds.density_max, bounds.density_bound
                ),
            ));
        }
        Err(e @ Error::StateSpaceTooLarge { .. }) => {
            out.push(outcome("audit.enumeration", true, format!("skipped: {e}")));
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

fn cmd_stationary(lab: &mut Lab) -> Result<Vec<CheckOutcome>> {
    let meta = lab.meta();
    let out_dir = lab.out.clone();
    let built_spec = lab.built.spec.clone();
    let engine = lab.engine()?;
    write_measure(&out_dir.join("stationary/measure.csv"), &meta, &engine.mu)?;
    let mut residual = vec![0.0; engine.forward.len()];
    engine
        .forward
        .apply_transpose(engine.mu.as_slice(), &mut residual);
    let res = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let volumes = dlr_volumes(&engine.volume);
    let dlr = gibbs_check(&engine.mu, &built_spec, &engine.space, &volumes)?;
    Ok(vec![
        outcome(
            "stationary.residual",
            res <= 1e-10,
            format!("max |mu^T L| = {res:.3e}"),
        ),
        outcome(
            "stationary.dlr",
            dlr <= GIBBS_TOL,
            format!("max DLR discrepancy {dlr:.3e} (tol {GIBBS_TOL:.0e}) over {} volumes", volumes.len()),
        ),
    ])
}

fn cmd_reverse(lab: &mut Lab) -> Result<Vec<CheckOutcome>> {
    let meta = lab.meta();
    let out_dir = lab.out.clone();
    let rates = lab.built.rates.clone();
    let spec = lab.built.spec.clone();
    let engine = lab.engine()?;
    write_generator_coo(&out_dir.join("reverse/reversed_generator.coo"), &meta, &engine.reversed)?;
    write_generator_coo(&out_dir.join("reverse/adjoint_generator.coo"), &meta, &engine.adjoint)?;
    let diff = reversal_consistency_check(
        &engine.forward,
        &rates,
        &spec,
        &engine.space,
        &engine.mu,
    )?;
    Ok(vec![outcome(
        "reverse.consistency",
        diff <= REVERSAL_TOL,
        format!(
            "max |generator(reversed rates) - mu-adjoint| = {diff:.3e} (tol {REVERSAL_TOL:.0e})"
        ),
    )])
}

fn cmd_duality(lab: &mut Lab) -> Result<Vec<CheckOutcome>> {
    let meta = lab.meta();
    let out_dir = lab.out.clone();
    let seed = lab.seed;
    let engine = lab.engine()?;
    let mut out = Vec::new();
    if engine.space.count() <= FULL_BASIS_CAP {
        let d = duality_max_discrepancy(&engine.forward, &engine.adjoint, &engine.mu);
        out.push(outcome(
            "duality.bilinear",
            d <= DUALITY_TOL,
            format!("full indicator basis, max discrepancy {d:.3e}"),
        ));
    } else {
        let d = sampled_duality_discrepancy(
            &engine.forward,
            &engine.adjoint,
            &engine.mu,
            &engine.space,
            seed.unwrap_or(0),
            64,
            3,
        );
        out.push(outcome(
            "duality.bilinear",
            d <= DUALITY_TOL,
            format!("sampled local observables (declared seed), max discrepancy {d:.3e}"),
        ));
    }
    let switching = switching_check(
        &engine.rates,
        &engine.rates_hat,
        &engine.space,
        &engine.mu,
    )?;
    write_report(&out_dir.join("duality/switching.toml"), &meta, &switching)?;
    out.push(outcome(
        "duality.switching",
        switching.max <= SWITCHING_TOL,
        format!(
            "per-region max {:.3e} over {} regions",
            switching.max,
            switching.per_region.len()
        ),
    ));
    Ok(out)
}

fn cmd_decay(lab: &mut Lab) -> Result<Vec<CheckOutcome>> {
    let phi = lab.experiment_phi()?;
    let grid = lab.experiment_grid()?;
    let meta = lab.meta();
    let out_dir = lab.out.clone();
    let built = &lab.built;
    let (f_obs, shift) = {
        let space = lab.space()?;
        built.observable(&space, &phi)?
    };
    let engine = lab.engine()?;
    let mut out = Vec::new();
    let c_star = match poincare_gap(&engine.forward, &engine.mu) {
        Ok(rep) => {
            out.push(outcome(
                "decay.poincare",
                true,
                format!("gap = {:.8}, c* = {:.8}", rep.gap, rep.c_star),
            ));
            Some(rep.c_star)
        }
        Err(Error::NotReversible { .. }) => {
            out.push(outcome(
                "decay.poincare",
                true,
                "non-reversible dynamics: reporting the tail-fit rate estimate instead".to_string(),
            ));
            None
        }
        Err(e) => return Err(e),
    };
    let curve = decay_curve(&engine.mu, &engine.forward, &phi, &f_obs.values, &grid, c_star)?;
    write_decay_curve(&out_dir.join("decay/curve.csv"), &meta, &curve)?;
    out.push(outcome(
        "decay.monotone",
        curve.is_monotone(1e-10),
        format!("entropy nonincreasing over {} grid points (shift {shift})", grid.len()),
    ));
    let worst_diss = curve.dissipation.iter().fold(f64::NEG_INFINITY, |m, &d| m.max(d));
    out.push(outcome(
        "decay.dissipation",
        worst_diss <= 1e-10,
        format!("max dissipation {worst_diss:.3e} (must be <= 0)"),
    ));
    // de Bruijn identity on interior grid points, Richardson-refined when
    // the first-order difference misses the tolerance
    let mut worst_fd = 0.0f64;
    for &t in grid.iter().skip(1).take(5) {
        let ft = semigroup_apply(&engine.forward, &f_obs.values, t)?;
        let diss = dissipation(&engine.mu, &engine.forward, &phi, &ft)?;
        let mut fd =
            entropy_time_derivative(&engine.mu, &engine.forward, &phi, &f_obs.values, t, 1e-4)?;
        if (fd - diss).abs() > DE_BRUIJN_TOL {
            fd = entropy_time_derivative_refined(
                &engine.mu,
                &engine.forward,
                &phi,
                &f_obs.values,
                t,
                1e-4,
            )?;
        }
        worst_fd = worst_fd.max((fd - diss).abs());
    }
    out.push(outcome(
        "decay.de_bruijn",
        worst_fd <= DE_BRUIJN_TOL,
        format!("max |finite difference - dissipation| = {worst_fd:.3e} (tol {DE_BRUIJN_TOL:.0e})"),
    ));
    if let Some(b) = &curve.bound {
        let ok = curve
            .entropy
            .iter()
            .zip(b)
            .all(|(e, b)| *e <= b * (1.0 + 1e-9) + 1e-15);
        out.push(outcome(
            "decay.poincare_bound",
            ok,
            "entropy under e^(-2t/c*) Ent(f) along the whole grid".to_string(),
        ));
    }
    Ok(out)
}

fn cmd_simulate(lab: &mut Lab) -> Result<Vec<CheckOutcome>> {
    let seed = lab.required_seed()?;
    let horizon = lab.experiment_horizon()?;
    let count = lab.experiment_ensemble()?;
    let meta = lab.meta();
    let out_dir = lab.out.clone();
    let engine = lab.engine()?;
    let sampler = StationarySampler::new(&engine.mu);
    let forward_ens = sample_stationary_ensemble(
        &engine.rates,
        &engine.space,
        &sampler,
        horizon,
        seed,
        count,
    )?;
    for (i, traj) in forward_ens.iter().take(3).enumerate() {
        write_trajectory(
            &out_dir.join(format!("simulate/trajectory_{i}.csv")),
            &meta,
            &engine.rates,
            traj,
        )?;
    }
    let mut out = Vec::new();

    // single-site occupancy against the exact stationary marginal
    let probe_site = 0usize;
    let q = engine.space.q();
    let t_probe = horizon / 2.0;
    let mut counts = vec![0u64; usize::from(q)];
    for traj in &forward_ens {
        let cfg = traj.state_at(&engine.rates, t_probe);
        counts[usize::from(cfg.get(probe_site))] += 1;
    }
    let probs: Vec<f64> = (0..q)
        .map(|v| {
            engine
                .space
                .states()
                .filter(|&i| engine.space.site_value(i, probe_site) == v)
                .map(|i| engine.mu.get(i))
                .sum()
        })
        .collect();
    let gof = ipslab::simulate::chi_square_gof(&counts, &probs)?;
    let powered = count >= ipslab::simulate::MIN_POWERED_SAMPLES;
    out.push(outcome(
        "simulate.occupancy",
        !powered || gof.p_value >= CHI_LEVEL,
        if powered {
            format!("site {probe_site} at t={t_probe}: chi2 p = {:.4}", gof.p_value)
        } else {
            format!("no verdict: ensemble of {count} is underpowered")
        },
    ));

    // reversal in law: reversed forward ensemble vs direct reversed-rate ensemble
    let reversed_forward: Vec<_> = forward_ens
        .iter()
        .map(|t| t.reversed(&engine.rates))
        .collect();
    let direct_hat = sample_stationary_ensemble(
        &engine.rates_hat,
        &engine.space,
        &sampler,
        horizon,
        seed ^ 0x9e3779b97f4a7c15,
        count,
    )?;
    let site_sets: Vec<Vec<usize>> = if engine.volume.len() >= 2 {
        vec![vec![0], vec![0, 1]]
    } else {
        vec![vec![0]]
    };
    let pairs = [(horizon / 3.0, 2.0 * horizon / 3.0)];
    let battery = two_time_battery(
        &reversed_forward,
        &direct_hat,
        &engine.rates,
        &engine.space,
        &site_sets,
        &pairs,
        CHI_LEVEL,
    )?
    .with_provenance(Some(seed), engine.model_hash.clone());
    write_test_report(&out_dir.join("simulate/reversal_battery.toml"), &meta, &battery)?;
    out.push(outcome(
        "simulate.reversal_in_law",
        battery.overall != Verdict::Fail,
        match battery.overall {
            Verdict::Pass => format!("{} two-time chi-square cells at level {CHI_LEVEL}", battery.hypotheses.len()),
            Verdict::Underpowered => format!("no verdict: ensemble of {count} is underpowered"),
            Verdict::Fail => "two-time occupancy laws differ".into(),
        },
    ));
    Ok(out)
}

fn cmd_trajectorial(lab: &mut Lab) -> Result<Vec<CheckOutcome>> {
    let seed = lab.required_seed()?;
    let horizon = lab.experiment_horizon()?;
    let count = lab.experiment_ensemble()?;
    let phi = lab.experiment_phi()?;
    let grid = lab.experiment_grid()?;
    let feature_sites = lab.built.feature_sites()?;
    let meta = lab.meta();
    let out_dir = lab.out.clone();
    let (f_obs, shift) = {
        let space = lab.space()?;
        lab.built.observable(&space, &phi)?
    };
    let engine = lab.engine()?;
    let mut out = Vec::new();

    // exact conditional-expectation check along the adjoint line
    let pairs = [
        (horizon / 4.0, horizon / 2.0),
        (horizon / 2.0, 3.0 * horizon / 4.0),
    ];
    let exact = exact_conditional_check(
        &engine.forward,
        &engine.adjoint,
        &engine.mu,
        &f_obs.values,
        horizon,
        &pairs,
    )?;
    out.push(outcome(
        "trajectorial.exact_martingale",
        exact <= EXACT_MARTINGALE_TOL,
        format!("enumerated conditional expectations match to {exact:.3e} (tol {EXACT_MARTINGALE_TOL:.0e}, shift {shift})"),
    ));

    let sampler = StationarySampler::new(&engine.mu);
    let ensemble = sample_stationary_ensemble(
        &engine.rates,
        &engine.space,
        &sampler,
        horizon,
        seed,
        count,
    )?;
    let traj_engine = TrajectorialEngine::new(
        engine.space.clone(),
        engine.rates_hat.clone(),
        &engine.adjoint,
        phi,
        &f_obs.values,
        horizon,
        256,
    )?;
    let paths = traj_engine.process_ensemble(&ensemble, &grid)?;
    for (i, p) in paths.iter().take(3).enumerate() {
        write_process_path(&out_dir.join(format!("trajectorial/path_{i}.csv")), &meta, p)?;
    }

    // pathwise decomposition invariants
    let mut decomposition_ok = true;
    let mut nondecreasing_ok = true;
    for p in &paths {
        if p.a[0] != 0.0 {
            nondecreasing_ok = false;
        }
        for w in p.a.windows(2) {
            if w[1] < w[0] {
                nondecreasing_ok = false;
            }
        }
        for i in 0..p.s.len() {
            if (p.l[i] - p.a[i] - p.m[i]).abs() > 1e-8 {
                decomposition_ok = false;
            }
        }
    }
    out.push(outcome(
        "trajectorial.compensator",
        nondecreasing_ok,
        "A(0) = 0 and A nondecreasing on every sampled path",
    ));
    out.push(outcome(
        "trajectorial.decomposition",
        decomposition_ok,
        "L = M + A pointwise on every evaluated grid point",
    ));

    let features = FeatureSet {
        sites: feature_sites,
    };
    let k = grid.len();
    let pair = (grid[k / 3], grid[(2 * k) / 3]);
    let m_report = martingale_test(&paths, &engine.space, pair, &features, SIGMA)?
        .with_provenance(Some(seed), engine.model_hash.clone());
    write_test_report(&out_dir.join("trajectorial/martingale.toml"), &meta, &m_report)?;
    out.push(outcome(
        "trajectorial.martingale",
        m_report.overall != Verdict::Fail,
        match m_report.overall {
            Verdict::Pass => format!("two-sided {SIGMA}-sigma CIs on ({}, {})", pair.0, pair.1),
            Verdict::Underpowered => format!("no verdict: ensemble of {count} is underpowered"),
            Verdict::Fail => "an increment CI excludes zero".into(),
        },
    ));
    let s_report = submartingale_test(&paths, &engine.space, pair, &features, SIGMA)?
        .with_provenance(Some(seed), engine.model_hash.clone());
    write_test_report(&out_dir.join("trajectorial/submartingale.toml"), &meta, &s_report)?;
    out.push(outcome(
        "trajectorial.submartingale",
        s_report.overall != Verdict::Fail,
        match s_report.overall {
            Verdict::Pass => "one-sided CIs nonnegative, martingale part two-sided".into(),
            Verdict::Underpowered => format!("no verdict: ensemble of {count} is underpowered"),
            Verdict::Fail => "a one-sided CI is negative".to_string(),
        },
    ));

    // expected compensator against the exact entropy difference
    let a_total: Vec<f64> = paths
        .iter()
        .map(|p| *p.a.last().expect("paths contain the horizon"))
        .collect();
    let (mean_a, lo, hi) = mean_ci(&a_total, SIGMA);
    let p_t_f = semigroup_apply(&engine.adjoint, &f_obs.values, horizon)?;
    let expected = phi_entropy(&engine.mu, &phi, &f_obs.values)?
        - phi_entropy(&engine.mu, &phi, &p_t_f)?;
    let powered = count >= ipslab::simulate::MIN_POWERED_SAMPLES;
    out.push(outcome(
        "trajectorial.mean_compensator",
        !powered || (lo <= expected && expected <= hi),
        if powered {
            format!("E[A(T)] = {mean_a:.6} vs exact entropy drop {expected:.6} in [{lo:.6}, {hi:.6}]")
        } else {
            format!("no verdict: ensemble of {count} is underpowered")
        },
    ));
    Ok(out)
}
