//! Experiment configuration.
//!
//! A config file is a flat list of `key = value` lines. Blank lines and lines
//! starting with `#` are ignored. List values are comma separated.
//!
//! ```text
//! kind       = snapshot-nn
//! n_nodes    = 2000
//! q          = 1, 2, 5, 10
//! strategy   = both
//! energy     = 0.7
//! sigma2     = 1
//! trials     = 50
//! seed       = 7
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gains::GainModel;
use crate::snapshot::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SnapshotNn,
    SnapshotRgg,
    SnapshotClique,
    OuVariance,
    OuAvar,
    OuTrace,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::SnapshotNn => "snapshot-nn",
            ExperimentKind::SnapshotRgg => "snapshot-rgg",
            ExperimentKind::SnapshotClique => "snapshot-clique",
            ExperimentKind::OuVariance => "ou-variance",
            ExperimentKind::OuAvar => "ou-avar",
            ExperimentKind::OuTrace => "ou-trace",
        }
    }

    pub fn is_snapshot(&self) -> bool {
        matches!(
            self,
            ExperimentKind::SnapshotNn | ExperimentKind::SnapshotRgg | ExperimentKind::SnapshotClique
        )
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "snapshot-nn" => ExperimentKind::SnapshotNn,
            "snapshot-rgg" => ExperimentKind::SnapshotRgg,
            "snapshot-clique" => ExperimentKind::SnapshotClique,
            "ou-variance" => ExperimentKind::OuVariance,
            "ou-avar" => ExperimentKind::OuAvar,
            "ou-trace" => ExperimentKind::OuTrace,
            _ => return Err(Error::Config(format!("unknown experiment kind `{s}`"))),
        })
    }
}

/// Collaboration topology family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Clique,
    NearestNeighbor,
    Rgg,
}

impl TopologyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TopologyKind::Clique => "clique",
            TopologyKind::NearestNeighbor => "nn",
            TopologyKind::Rgg => "rgg",
        }
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clique" => Ok(TopologyKind::Clique),
            "nn" => Ok(TopologyKind::NearestNeighbor),
            "rgg" => Ok(TopologyKind::Rgg),
            _ => Err(Error::Config(format!("unknown topology `{s}`"))),
        }
    }
}

/// Connectivity sweep values.
#[derive(Debug, Clone, PartialEq)]
pub enum Connectivity {
    /// Clique size, or neighborhood size (self included) for `nn`.
    Q(Vec<usize>),
    /// RGG radius.
    Radius(Vec<f64>),
    /// RGG with the radius derived from the expected neighbor count
    /// `q_tilde = N pi r^2`.
    ExpectedNeighbors(Vec<f64>),
}

impl Connectivity {
    pub fn len(&self) -> usize {
        match self {
            Connectivity::Q(v) => v.len(),
            Connectivity::Radius(v) => v.len(),
            Connectivity::ExpectedNeighbors(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Topology family; implied by the kind for snapshot experiments.
    pub topology: TopologyKind,
    pub n_nodes: usize,
    pub connectivity: Connectivity,
    pub strategies: Vec<Strategy>,
    pub energy: Option<f64>,
    pub power: Option<f64>,
    /// Fixes `c P / eta^2` directly instead of deriving `c` from the network.
    pub cp_over_eta2: Option<f64>,
    pub periods: Vec<f64>,
    pub eta2: f64,
    pub sigma2: f64,
    pub xi2: f64,
    pub tau: f64,
    pub h_gain: GainModel,
    pub g_gain: GainModel,
    pub t_obs: f64,
    pub m: usize,
    pub n_points: usize,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "kind",
    "topology",
    "n_nodes",
    "q",
    "radius",
    "expected_neighbors",
    "strategy",
    "energy",
    "power",
    "cp_over_eta2",
    "periods",
    "eta2",
    "sigma2",
    "xi2",
    "tau",
    "gain_model",
    "alpha_h",
    "alpha_g",
    "h0",
    "g0",
    "t_obs",
    "m",
    "n_points",
    "trials",
    "seed",
    "output",
];

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl ExperimentConfig {
    /// Parses a `key = value` document.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            let (k, v) = (k.into(), v.into());
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
            if map.insert(k.clone(), v).is_some() {
                return Err(Error::Config(format!("duplicate key `{k}`")));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);

        let kind: ExperimentKind = parse_value("kind", get("kind").ok_or_else(|| {
            Error::Config("missing required key `kind`".into())
        })?)?;
        let topology = match kind {
            ExperimentKind::SnapshotNn => TopologyKind::NearestNeighbor,
            ExperimentKind::SnapshotRgg => TopologyKind::Rgg,
            ExperimentKind::SnapshotClique => TopologyKind::Clique,
            _ => get("topology").map(|v| parse_value("topology", v)).transpose()?.unwrap_or(TopologyKind::Clique),
        };
        if kind.is_snapshot() && get("topology").is_some_and(|v| v != topology.as_str()) {
            return Err(Error::Config(format!(
                "`topology` conflicts with kind `{}`",
                kind.as_str()
            )));
        }

        let connectivity = match (get("q"), get("radius"), get("expected_neighbors")) {
            (Some(v), None, None) => Connectivity::Q(parse_list("q", v)?),
            (None, Some(v), None) => Connectivity::Radius(parse_list("radius", v)?),
            (None, None, Some(v)) => {
                Connectivity::ExpectedNeighbors(parse_list("expected_neighbors", v)?)
            }
            (None, None, None) => Connectivity::Q(vec![1]),
            _ => {
                return Err(Error::Config(
                    "set only one of `q`, `radius`, `expected_neighbors`".into(),
                ))
            }
        };

        let strategies = match get("strategy").unwrap_or("both") {
            "both" => Strategy::ALL.to_vec(),
            s => vec![parse_value::<Strategy>("strategy", s)?],
        };

        let gain_model = get("gain_model").unwrap_or("rayleigh");
        let opt_f64 = |k: &str| get(k).map(|v| parse_value::<f64>(k, v)).transpose();
        let (h_gain, g_gain) = match gain_model {
            "rayleigh" => (
                GainModel::Rayleigh {
                    alpha: opt_f64("alpha_h")?.unwrap_or(1.0),
                },
                GainModel::Rayleigh {
                    alpha: opt_f64("alpha_g")?.unwrap_or(1.0),
                },
            ),
            "constant" => (
                GainModel::Constant(opt_f64("h0")?.unwrap_or(1.0)),
                GainModel::Constant(opt_f64("g0")?.unwrap_or(1.0)),
            ),
            other => return Err(Error::Config(format!("unknown gain_model `{other}`"))),
        };

        let cfg = Self {
            kind,
            topology,
            n_nodes: get("n_nodes").map(|v| parse_value("n_nodes", v)).transpose()?.unwrap_or(2000),
            connectivity,
            strategies,
            energy: opt_f64("energy")?,
            power: opt_f64("power")?,
            cp_over_eta2: opt_f64("cp_over_eta2")?,
            periods: get("periods").map(|v| parse_list("periods", v)).transpose()?.unwrap_or_default(),
            eta2: opt_f64("eta2")?.unwrap_or(1.0),
            sigma2: opt_f64("sigma2")?.unwrap_or(1.0),
            xi2: opt_f64("xi2")?.unwrap_or(1.0),
            tau: opt_f64("tau")?.unwrap_or(1.0),
            h_gain,
            g_gain,
            t_obs: opt_f64("t_obs")?.unwrap_or(30.0),
            m: get("m").map(|v| parse_value("m", v)).transpose()?.unwrap_or(1600),
            n_points: get("n_points").map(|v| parse_value("n_points", v)).transpose()?.unwrap_or(201),
            trials: get("trials").map(|v| parse_value("trials", v)).transpose()?.unwrap_or(1),
            seed: get("seed").map(|v| parse_value("seed", v)).transpose()?.unwrap_or(0),
            output: get("output").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the cross-field invariants. Called by the parser; call it again
    /// after editing fields by hand.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("`trials` must be at least 1".into());
        }
        if self.n_nodes == 0 {
            return bad("`n_nodes` must be positive".into());
        }
        if self.strategies.is_empty() {
            return bad("no strategy selected".into());
        }
        for (name, v, strict) in [
            ("eta2", self.eta2, true),
            ("xi2", self.xi2, true),
            ("tau", self.tau, true),
            ("sigma2", self.sigma2, false),
        ] {
            if !(v > 0.0 || (!strict && v == 0.0)) || !v.is_finite() {
                return bad(format!("`{name}` = {v} is out of range"));
            }
        }
        match (self.h_gain, self.g_gain) {
            (GainModel::Rayleigh { alpha: a }, GainModel::Rayleigh { alpha: b }) if !(a > 0.0 && b > 0.0) => {
                return bad("Rayleigh scale parameters must be positive".into())
            }
            _ => {}
        }
        match &self.connectivity {
            Connectivity::Q(q) if q.contains(&0) => return bad("`q` values must be positive".into()),
            Connectivity::Radius(r) if r.iter().any(|&r| !(r >= 0.0)) => {
                return bad("`radius` values must be nonnegative".into())
            }
            Connectivity::ExpectedNeighbors(q) if q.iter().any(|&q| !(q > 0.0)) => {
                return bad("`expected_neighbors` values must be positive".into())
            }
            c if c.is_empty() => return bad("empty connectivity list".into()),
            _ => {}
        }
        let needs_network = matches!(self.kind, ExperimentKind::OuAvar)
            || self.kind.is_snapshot()
            || self.cp_over_eta2.is_none();
        if needs_network {
            match (self.topology, &self.connectivity) {
                (TopologyKind::Rgg, Connectivity::Q(_)) => {
                    return bad("rgg needs `radius` or `expected_neighbors`".into())
                }
                (TopologyKind::Clique | TopologyKind::NearestNeighbor, Connectivity::Radius(_) | Connectivity::ExpectedNeighbors(_)) => {
                    return bad("clique and nn topologies need `q`".into())
                }
                _ => {}
            }
            if let (TopologyKind::Clique, Connectivity::Q(qs)) = (self.topology, &self.connectivity) {
                if self.kind.is_snapshot() || self.kind == ExperimentKind::OuAvar {
                    if let Some(q) = qs.iter().find(|&&q| !self.n_nodes.is_multiple_of(q)) {
                        return bad(format!("q = {q} does not divide n_nodes = {}", self.n_nodes));
                    }
                }
            }
            if let (TopologyKind::NearestNeighbor, Connectivity::Q(qs)) = (self.topology, &self.connectivity) {
                if qs.iter().any(|&q| q > self.n_nodes) {
                    return bad("`q` exceeds `n_nodes`".into());
                }
            }
        }
        if self.kind.is_snapshot() {
            match self.energy {
                Some(e) if e > 0.0 => {}
                Some(e) => return bad(format!("`energy` = {e} must be positive")),
                None => return bad("snapshot experiments require `energy`".into()),
            }
            if self.power.is_some() || !self.periods.is_empty() || self.cp_over_eta2.is_some() {
                return bad("snapshot experiments take `energy`, not `power`/`periods`".into());
            }
        } else {
            if self.energy.is_some() {
                return bad("OU experiments take `power` and `periods`, not `energy`".into());
            }
            if self.periods.is_empty() {
                return bad("OU experiments require `periods`".into());
            }
            if self.periods.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
                return bad("`periods` must be positive".into());
            }
            match (self.kind, self.power, self.cp_over_eta2) {
                (ExperimentKind::OuAvar, None, _) => return bad("ou-avar requires `power`".into()),
                (ExperimentKind::OuAvar, _, Some(_)) => {
                    return bad("ou-avar derives c from the network; drop `cp_over_eta2`".into())
                }
                (_, None, None) => return bad("set `power` or `cp_over_eta2`".into()),
                (_, Some(_), Some(_)) => return bad("set only one of `power`, `cp_over_eta2`".into()),
                _ => {}
            }
            if let Some(p) = self.power.or(self.cp_over_eta2) {
                if !(p >= 0.0) {
                    return bad(format!("power = {p} must be nonnegative"));
                }
            }
            if self.kind == ExperimentKind::OuTrace && !(self.t_obs > 0.0 && self.m > 0) {
                return bad("ou-trace needs positive `t_obs` and `m`".into());
            }
            if self.kind == ExperimentKind::OuVariance && self.n_points < 2 {
                return bad("`n_points` must be at least 2".into());
            }
        }
        Ok(())
    }
}
