//! Monte Carlo orchestration.

use rayon::prelude::*;

use super::config::{Connectivity, ExperimentConfig, ExperimentKind, TopologyKind};
use super::table::{Cell, ResultTable};
use crate::asymptotic::{j_eq_asym, j_opt_asym, AsymptoticConfig, AsymptoticGains};
use crate::error::{Error, Result};
use crate::gains::{GainModel, SensorField};
use crate::ouprocess::{
    avar, simulate_filtering, spatial_constant, variance_profile, OUSamplingScheme,
};
use crate::rng::{stream_seed, streams, trial_seed};
use crate::snapshot::{strategy_fisher, Strategy};
use crate::topology::{nearest_neighbor, q_clique, rgg, rgg_radius, uniform_positions, Topology};

pub const SNAPSHOT_COLUMNS: &[&str] = &[
    "topology",
    "x",
    "strategy",
    "sigma2",
    "n_nodes",
    "trials",
    "mc_mean",
    "mc_std_err",
    "theory",
];

pub const OU_AVAR_COLUMNS: &[&str] = &[
    "topology",
    "x",
    "strategy",
    "sigma2",
    "n_nodes",
    "trials",
    "period",
    "mc_mean",
    "mc_std_err",
    "theory_avar",
    "var0",
];

pub const OU_VARIANCE_COLUMNS: &[&str] = &["period", "t", "var"];

pub const OU_TRACE_COLUMNS: &[&str] = &["period", "t", "theta", "estimate"];

/// One point of the connectivity sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConnectivityValue {
    Q(usize),
    Radius(f64),
    ExpectedNeighbors(f64),
}

impl ConnectivityValue {
    pub fn x(&self) -> f64 {
        match *self {
            ConnectivityValue::Q(q) => q as f64,
            ConnectivityValue::Radius(r) => r,
            ConnectivityValue::ExpectedNeighbors(q) => q,
        }
    }

    /// Clique size of the equivalent Q-clique network, with `Q~ = N pi r^2`
    /// rounded to the nearest integer for geometric graphs.
    pub fn equivalent_q(&self, n_nodes: usize) -> usize {
        let q = match *self {
            ConnectivityValue::Q(q) => return q,
            ConnectivityValue::Radius(r) => n_nodes as f64 * std::f64::consts::PI * r * r,
            ConnectivityValue::ExpectedNeighbors(q) => q,
        };
        (q.round() as usize).clamp(1, n_nodes.max(1))
    }
}

impl Connectivity {
    pub fn values(&self) -> Vec<ConnectivityValue> {
        match self {
            Connectivity::Q(v) => v.iter().map(|&q| ConnectivityValue::Q(q)).collect(),
            Connectivity::Radius(v) => v.iter().map(|&r| ConnectivityValue::Radius(r)).collect(),
            Connectivity::ExpectedNeighbors(v) => v
                .iter()
                .map(|&q| ConnectivityValue::ExpectedNeighbors(q))
                .collect(),
        }
    }
}

/// Builds the topology of one trial.
pub fn trial_topology(
    kind: TopologyKind,
    n_nodes: usize,
    value: ConnectivityValue,
    seed: u64,
) -> Result<Topology> {
    let positions = || uniform_positions(n_nodes, stream_seed(seed, streams::POSITIONS));
    match (kind, value) {
        (TopologyKind::Clique, ConnectivityValue::Q(q)) => q_clique(n_nodes, q),
        (TopologyKind::NearestNeighbor, ConnectivityValue::Q(q)) => {
            nearest_neighbor(&positions(), q)
        }
        (TopologyKind::Rgg, ConnectivityValue::Radius(r)) => rgg(&positions(), r),
        (TopologyKind::Rgg, ConnectivityValue::ExpectedNeighbors(q)) => {
            rgg(&positions(), rgg_radius(n_nodes, q))
        }
        _ => Err(Error::Config(format!(
            "connectivity {value:?} does not apply to {} topologies",
            kind.as_str()
        ))),
    }
}

/// Draws the gains of one trial.
pub fn trial_field(cfg: &ExperimentConfig, seed: u64) -> Result<SensorField> {
    let h = cfg
        .h_gain
        .sample(cfg.n_nodes, stream_seed(seed, streams::OBSERVATION_GAINS))?;
    let g = cfg
        .g_gain
        .sample(cfg.n_nodes, stream_seed(seed, streams::CHANNEL_GAINS))?;
    SensorField::new(h, g, cfg.eta2, cfg.sigma2, cfg.xi2)
}

/// Asymptotic parameters matching a config at clique size `q`.
pub fn asymptotic_config(cfg: &ExperimentConfig, total_energy: f64, q: usize) -> AsymptoticConfig {
    let gains = match (cfg.h_gain, cfg.g_gain) {
        (GainModel::Rayleigh { alpha: alpha_h }, GainModel::Rayleigh { alpha: alpha_g }) => {
            AsymptoticGains::Rayleigh { alpha_h, alpha_g }
        }
        (h, g) => AsymptoticGains::Homogeneous {
            h0: h.mean(),
            g0: g.mean(),
        },
    };
    AsymptoticConfig {
        total_energy,
        eta2: cfg.eta2,
        xi2: cfg.xi2,
        sigma2: cfg.sigma2,
        q,
        gains,
    }
}

fn theory_fisher(strategy: Strategy, acfg: &AsymptoticConfig) -> Result<f64> {
    match strategy {
        Strategy::Optimal => j_opt_asym(acfg),
        Strategy::Equal => j_eq_asym(acfg),
    }
}

/// Sample mean and standard error of the mean (zero for a single sample).
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs an experiment and returns its result table.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::SnapshotNn | ExperimentKind::SnapshotClique | ExperimentKind::SnapshotRgg => {
            run_snapshot(cfg)
        }
        ExperimentKind::OuAvar => run_ou_avar(cfg),
        ExperimentKind::OuVariance => run_ou_variance(cfg),
        ExperimentKind::OuTrace => run_ou_trace(cfg),
    }
}

/// Evaluates `per_trial` for every trial in parallel; results come back in
/// trial order.
fn collect_trials<T, F>(cfg: &ExperimentConfig, per_trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| per_trial(trial_seed(cfg.seed, i)))
        .collect()
}

fn run_snapshot(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let energy = cfg.energy.expect("validated");
    let mut table = ResultTable::new(SNAPSHOT_COLUMNS);
    for value in cfg.connectivity.values() {
        log::info!("{} x = {}", cfg.kind.as_str(), value.x());
        let per_trial = collect_trials(cfg, |seed| {
            let topo = trial_topology(cfg.topology, cfg.n_nodes, value, seed)?;
            let field = trial_field(cfg, seed)?;
            cfg.strategies
                .iter()
                .map(|&s| strategy_fisher(s, &field, &topo, energy))
                .collect::<Result<Vec<f64>>>()
        })?;
        let acfg = asymptotic_config(cfg, energy, value.equivalent_q(cfg.n_nodes));
        for (si, &strategy) in cfg.strategies.iter().enumerate() {
            let samples: Vec<f64> = per_trial.iter().map(|r| r[si]).collect();
            let (mean, se) = mean_and_std_err(&samples);
            table.push(vec![
                cfg.topology.as_str().into(),
                value.x().into(),
                strategy.as_str().into(),
                cfg.sigma2.into(),
                cfg.n_nodes.into(),
                cfg.trials.into(),
                mean.into(),
                se.into(),
                theory_fisher(strategy, &acfg)?.into(),
            ]);
        }
    }
    Ok(table)
}

fn run_ou_avar(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let power = cfg.power.expect("validated");
    let mut table = ResultTable::new(OU_AVAR_COLUMNS);
    for value in cfg.connectivity.values() {
        log::info!("ou-avar x = {}", value.x());
        // Per trial: one average variance per (strategy, period), with the
        // snapshot Fisher information at energy P T feeding the OU filter.
        let per_trial = collect_trials(cfg, |seed| {
            let topo = trial_topology(cfg.topology, cfg.n_nodes, value, seed)?;
            let field = trial_field(cfg, seed)?;
            let mut out = Vec::with_capacity(cfg.strategies.len() * cfg.periods.len());
            for &s in &cfg.strategies {
                for &t in &cfg.periods {
                    let j = strategy_fisher(s, &field, &topo, power * t)?;
                    let scheme = OUSamplingScheme::with_fisher(cfg.eta2, cfg.tau, t, j)?;
                    out.push(avar(&scheme));
                }
            }
            Ok(out)
        })?;
        let acfg = asymptotic_config(cfg, 0.0, value.equivalent_q(cfg.n_nodes));
        for (si, &strategy) in cfg.strategies.iter().enumerate() {
            let c = spatial_constant(strategy, &acfg)?;
            for (pi, &t) in cfg.periods.iter().enumerate() {
                let k = si * cfg.periods.len() + pi;
                let samples: Vec<f64> = per_trial.iter().map(|r| r[k]).collect();
                let (mean, se) = mean_and_std_err(&samples);
                let scheme = OUSamplingScheme::new(cfg.eta2, cfg.tau, t, power, c)?;
                table.push(vec![
                    cfg.topology.as_str().into(),
                    value.x().into(),
                    strategy.as_str().into(),
                    cfg.sigma2.into(),
                    cfg.n_nodes.into(),
                    cfg.trials.into(),
                    t.into(),
                    mean.into(),
                    se.into(),
                    avar(&scheme).into(),
                    scheme.var0().into(),
                ]);
            }
        }
    }
    Ok(table)
}

/// `(power, c)` of the OU experiments that do not simulate a network: either
/// `c P / eta^2` is given directly, or `c` comes from the Q-clique theory of
/// the first strategy and connectivity value.
fn ou_power_and_c(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    if let Some(cp) = cfg.cp_over_eta2 {
        return Ok((1.0, cp * cfg.eta2));
    }
    let power = cfg.power.expect("validated");
    let value = cfg.connectivity.values()[0];
    let acfg = asymptotic_config(cfg, 0.0, value.equivalent_q(cfg.n_nodes));
    Ok((power, spatial_constant(cfg.strategies[0], &acfg)?))
}

fn run_ou_variance(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let (power, c) = ou_power_and_c(cfg)?;
    let mut table = ResultTable::new(OU_VARIANCE_COLUMNS);
    let mut var0 = 0.0;
    let mut t_max: f64 = 0.0;
    for &t in &cfg.periods {
        let scheme = OUSamplingScheme::new(cfg.eta2, cfg.tau, t, power, c)?;
        let profile = variance_profile(&scheme, cfg.n_points)?;
        for (&ti, &vi) in profile.times.iter().zip(&profile.variances) {
            table.push(vec![t.into(), ti.into(), vi.into()]);
        }
        var0 = profile.var0;
        t_max = t_max.max(t);
    }
    // Reference line, tagged with period 0.
    table.push(vec![Cell::Num(0.0), Cell::Num(0.0), var0.into()]);
    table.push(vec![Cell::Num(0.0), t_max.into(), var0.into()]);
    Ok(table)
}

fn run_ou_trace(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let (power, c) = ou_power_and_c(cfg)?;
    let mut table = ResultTable::new(OU_TRACE_COLUMNS);
    let runs = cfg
        .periods
        .par_iter()
        .map(|&t| {
            let scheme = OUSamplingScheme::new(cfg.eta2, cfg.tau, t, power, c)?;
            simulate_filtering(&scheme, cfg.t_obs, cfg.m, None, cfg.seed)
        })
        .collect::<Result<Vec<_>>>()?;
    for (&t, run) in cfg.periods.iter().zip(&runs) {
        for i in 0..run.times.len() {
            table.push(vec![
                t.into(),
                run.times[i].into(),
                run.theta[i].into(),
                run.estimates[i].into(),
            ]);
        }
    }
    Ok(table)
}
