//! Single-snapshot collaborative estimation.
//!
//! Node `n` transmits `z_n = sum_{m in A(n)} W[n, m] x_m` with
//! `x_m = h_m theta + eps_m`. The fusion center receives `y = g' z + u` and
//! forms the MMSE estimate of `theta`. Everything here operates on the sparse
//! edge list of the topology; no dense `N x N` matrix is ever formed.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gains::SensorField;
use crate::harness::table::fmt_num;
use crate::linalg::{dot, pcg};
use crate::topology::Topology;

/// Upper bound accepted for the condition estimate of `G' Omega^-1 G`.
pub const MAX_CONDITION: f64 = 1e12;

/// Smallest Sherman–Morrison denominator accepted for an `Omega` block.
const SM_DENOMINATOR_TOL: f64 = 1e-14;

/// Energy allocation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Optimal,
    Equal,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Optimal, Strategy::Equal];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Optimal => "optimal",
            Strategy::Equal => "equal",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Strategy::Optimal),
            "equal" => Ok(Strategy::Equal),
            _ => Err(Error::Config(format!("unknown strategy `{s}`"))),
        }
    }
}

/// Fisher information achieved by `strategy` on a field and topology.
pub fn strategy_fisher(
    strategy: Strategy,
    field: &SensorField,
    topology: &Topology,
    total_energy: f64,
) -> Result<f64> {
    match strategy {
        Strategy::Optimal => Ok(optimal_ea(field, topology, total_energy)?.fisher),
        Strategy::Equal => Ok(evaluate(field, &equal_ea(field, topology, total_energy)?)?.fisher),
    }
}

/// A collaboration matrix `W` restricted to the support of a topology.
///
/// `values[l]` is the weight of the `l`-th edge in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct CollaborationMatrix<'a> {
    topology: &'a Topology,
    values: Vec<f64>,
}

impl<'a> CollaborationMatrix<'a> {
    pub fn new(topology: &'a Topology, values: Vec<f64>) -> Result<Self> {
        if values.len() != topology.n_edges() {
            return Err(Error::DimensionMismatch {
                what: "collaboration weights",
                expected: topology.n_edges(),
                actual: values.len(),
            });
        }
        Ok(Self { topology, values })
    }

    pub fn zeros(topology: &'a Topology) -> Self {
        Self {
            topology,
            values: vec![0.0; topology.n_edges()],
        }
    }

    pub fn topology(&self) -> &'a Topology {
        self.topology
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Weights of receiver `n`, aligned with `topology.neighbors(n)`.
    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[self.topology.edge_range(n)]
    }

    /// `W[n, m]`, zero outside the support.
    pub fn get(&self, n: usize, m: usize) -> f64 {
        match self.topology.neighbors(n).binary_search(&m) {
            Ok(i) => self.row(n)[i],
            Err(_) => 0.0,
        }
    }

    /// One `n m value` line per edge, in canonical order.
    pub fn to_triplets(&self) -> String {
        let mut out = String::new();
        for ((n, m), v) in self.topology.edges().zip(&self.values) {
            let _ = writeln!(out, "{n} {m} {v:e}");
        }
        out
    }

    /// Parses `n m value` lines. Every edge of `topology` must appear exactly
    /// once, in canonical order.
    pub fn from_triplets(topology: &'a Topology, text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(topology.n_edges());
        let mut edges = topology.edges();
        for (i, l) in text.lines().enumerate() {
            let l = l.trim();
            if l.is_empty() {
                continue;
            }
            let line = i + 1;
            let bad = || Error::Parse {
                line,
                msg: format!("expected `n m value`, found `{l}`"),
            };
            let mut it = l.split_whitespace();
            let n: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let m: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if it.next().is_some() {
                return Err(bad());
            }
            match edges.next() {
                Some(e) if e == (n, m) => values.push(v),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("edge ({n}, {m}) does not match the topology order"),
                    })
                }
            }
        }
        Self::new(topology, values)
    }
}

/// Performance of a collaboration matrix on a sensor field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMetrics {
    /// Net gain `g' W h`.
    pub mu: f64,
    /// Net noise variance `g' W Sigma W' g + xi^2`.
    pub zeta2: f64,
    /// Fisher information `mu^2 / zeta^2`.
    pub fisher: f64,
    /// MMSE distortion, `1/D = 1/eta^2 + J`.
    pub distortion: f64,
    /// Cumulative transmission energy `Tr(W E_x W')`.
    pub energy: f64,
}

impl SnapshotMetrics {
    pub const CSV_HEADER: &'static str = "mu,zeta2,fisher,distortion,energy";

    pub fn to_csv_record(&self) -> String {
        [self.mu, self.zeta2, self.fisher, self.distortion, self.energy]
            .iter()
            .map(|&v| fmt_num(v))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn check_dims(field: &SensorField, topology: &Topology) -> Result<()> {
    if field.n_nodes() != topology.n_nodes() {
        return Err(Error::DimensionMismatch {
            what: "sensor field",
            expected: topology.n_nodes(),
            actual: field.n_nodes(),
        });
    }
    Ok(())
}

/// `E[z_n^2] = sigma^2 |w_n|^2 + eta^2 (h_n' w_n)^2` for receiver row `w_n`.
fn row_energy(field: &SensorField, sources: &[usize], row: &[f64]) -> f64 {
    let h = field.h();
    let mut wh = 0.0;
    let mut ww = 0.0;
    for (&m, &w) in sources.iter().zip(row) {
        wh += w * h[m];
        ww += w * w;
    }
    field.sigma2() * ww + field.eta2() * wh * wh
}

pub fn evaluate(field: &SensorField, w: &CollaborationMatrix<'_>) -> Result<SnapshotMetrics> {
    let topo = w.topology();
    check_dims(field, topo)?;
    let g = field.effective_channel_gains();
    let h = field.h();
    let mut mu = 0.0;
    let mut energy = 0.0;
    // column sums of diag(g) W, i.e. W' g
    let mut wtg = vec![0.0; topo.n_nodes()];
    for n in 0..topo.n_nodes() {
        let sources = topo.neighbors(n);
        let row = w.row(n);
        let mut wh = 0.0;
        for (&m, &v) in sources.iter().zip(row) {
            wh += v * h[m];
            wtg[m] += g[n] * v;
        }
        mu += g[n] * wh;
        energy += row_energy(field, sources, row);
    }
    let zeta2 = field.sigma2() * dot(&wtg, &wtg) + field.xi2();
    let fisher = mu * mu / zeta2;
    Ok(SnapshotMetrics {
        mu,
        zeta2,
        fisher,
        distortion: 1.0 / (1.0 / field.eta2() + fisher),
        energy,
    })
}

/// Expected squared transmit signal `E[z_n^2]` of every node.
pub fn transmit_energy_per_node(
    field: &SensorField,
    w: &CollaborationMatrix<'_>,
) -> Result<Vec<f64>> {
    let topo = w.topology();
    check_dims(field, topo)?;
    Ok((0..topo.n_nodes())
        .map(|n| row_energy(field, topo.neighbors(n), w.row(n)))
        .collect())
}

/// Equal energy allocation: node `n` averages its neighborhood with a common
/// weight `d_n` chosen so that every node spends `total_energy / N`.
pub fn equal_ea<'a>(
    field: &SensorField,
    topology: &'a Topology,
    total_energy: f64,
) -> Result<CollaborationMatrix<'a>> {
    check_dims(field, topology)?;
    if !(total_energy > 0.0) {
        return Err(Error::param("total_energy", total_energy, "must be positive"));
    }
    let per_node = total_energy / topology.n_nodes() as f64;
    let h = field.h();
    let mut values = Vec::with_capacity(topology.n_edges());
    for n in 0..topology.n_nodes() {
        let sources = topology.neighbors(n);
        let sum_h: f64 = sources.iter().map(|&m| h[m]).sum();
        let denom = sum_h * sum_h * field.eta2() + sources.len() as f64 * field.sigma2();
        if !(denom > 0.0) {
            return Err(Error::ZeroDenominator { node: n });
        }
        let d = (per_node / denom).sqrt();
        values.extend(std::iter::repeat_n(d, sources.len()));
    }
    CollaborationMatrix::new(topology, values)
}

/// Optimal weights together with the closed-form Fisher information they
/// achieve.
#[derive(Debug, Clone)]
pub struct OptimalAllocation<'a> {
    pub weights: CollaborationMatrix<'a>,
    pub fisher: f64,
    /// `E / xi^2`.
    pub energy_xi: f64,
}

/// Per-receiver factorization of the block `Omega_n = [E_x]_{A(n), A(n)}`,
/// which equals `sigma^2 I + eta^2 h_n h_n'` on the neighborhood of `n`.
///
/// `Omega_n^-1 x = (x - c_n h_n (h_n' x)) / sigma^2` with
/// `c_n = eta^2 / (sigma^2 + eta^2 |h_n|^2)`.
struct OmegaBlocks<'t> {
    topology: &'t Topology,
    h: &'t [f64],
    sigma2: f64,
    eta2: f64,
    c: Vec<f64>,
    /// `sigma^2 + eta^2 |h_n|^2`, the largest eigenvalue of `Omega_n`.
    lambda_max: Vec<f64>,
}

impl<'t> OmegaBlocks<'t> {
    fn new(field: &'t SensorField, topology: &'t Topology) -> Result<Self> {
        let h = field.h();
        let (sigma2, eta2) = (field.sigma2(), field.eta2());
        let mut c = Vec::with_capacity(topology.n_nodes());
        let mut lambda_max = Vec::with_capacity(topology.n_nodes());
        for n in 0..topology.n_nodes() {
            let hh: f64 = topology.neighbors(n).iter().map(|&m| h[m] * h[m]).sum();
            let denom = sigma2 + eta2 * hh;
            if !(denom > SM_DENOMINATOR_TOL) {
                return Err(Error::Singular(format!(
                    "Omega block of node {n} has Sherman-Morrison denominator {denom:e}"
                )));
            }
            c.push(eta2 / denom);
            lambda_max.push(denom);
        }
        Ok(Self {
            topology,
            h,
            sigma2,
            eta2,
            c,
            lambda_max,
        })
    }

    /// Writes `Omega_n^-1 x_{A(n)}` into `out`, both aligned with the
    /// neighborhood of `n`. `x` is indexed by node.
    fn solve_into(&self, n: usize, x: &[f64], out: &mut Vec<f64>) {
        let sources = self.topology.neighbors(n);
        let hx: f64 = sources.iter().map(|&m| self.h[m] * x[m]).sum();
        let scale = self.c[n] * hx;
        out.clear();
        out.extend(
            sources
                .iter()
                .map(|&m| (x[m] - scale * self.h[m]) / self.sigma2),
        );
    }

    /// `w' Omega_n w` for a receiver row.
    fn quad(&self, n: usize, row: &[f64]) -> f64 {
        let sources = self.topology.neighbors(n);
        let hw: f64 = sources.iter().zip(row).map(|(&m, w)| self.h[m] * w).sum();
        self.sigma2 * dot(row, row) + self.eta2 * hw * hw
    }
}

/// Applies `M = G' Omega^-1 G = sum_n g_n^2 P_n' Omega_n^-1 P_n`.
fn apply_gram(blocks: &OmegaBlocks<'_>, g2: &[f64], x: &[f64], y: &mut [f64], buf: &mut Vec<f64>) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for n in 0..blocks.topology.n_nodes() {
        if g2[n] == 0.0 {
            continue;
        }
        blocks.solve_into(n, x, buf);
        for (&m, &v) in blocks.topology.neighbors(n).iter().zip(buf.iter()) {
            y[m] += g2[n] * v;
        }
    }
}

/// Energy-optimal collaboration weights.
///
/// With `M = G' Omega^-1 G`, `Gamma = M^-1` and `K = I + sigma^2 (E/xi^2) M`,
/// the optimum is
///
/// ```text
/// J_opt = h' (Sigma + Gamma / E_xi)^-1 h = E_xi h' M K^-1 h
/// w_opt = kappa Omega^-1 G K^-1 h
/// ```
///
/// so only solves against the well-conditioned `K` are needed. `M` is never
/// formed; it is applied block by block through `Omega_n^-1`.
pub fn optimal_ea<'a>(
    field: &SensorField,
    topology: &'a Topology,
    total_energy: f64,
) -> Result<OptimalAllocation<'a>> {
    check_dims(field, topology)?;
    if !(total_energy > 0.0) {
        return Err(Error::param("total_energy", total_energy, "must be positive"));
    }
    if !(field.sigma2() > 0.0) {
        return Err(Error::param(
            "sigma2",
            field.sigma2(),
            "optimal allocation requires positive measurement noise",
        ));
    }
    let n_nodes = topology.n_nodes();
    let sigma2 = field.sigma2();
    let energy_xi = total_energy / field.xi2();
    let h = field.h();
    let g = field.effective_channel_gains();
    let g2: Vec<f64> = g.iter().map(|v| v * v).collect();
    let blocks = OmegaBlocks::new(field, topology)?;

    // Eigenvalue bounds of M from the per-block bounds
    // 1/lambda_max(Omega_n) <= Omega_n^-1 <= 1/sigma^2, plus its diagonal.
    let mut lower = vec![0.0; n_nodes];
    let mut upper = vec![0.0; n_nodes];
    let mut diag = vec![0.0; n_nodes];
    for n in 0..n_nodes {
        for &m in topology.neighbors(n) {
            lower[m] += g2[n] / blocks.lambda_max[n];
            upper[m] += g2[n] / sigma2;
            diag[m] += g2[n] * (1.0 - blocks.c[n] * h[m] * h[m]) / sigma2;
        }
    }
    if let Some(k) = lower.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Singular(format!(
            "G'Omega^-1 G is singular: observation of node {k} reaches no transmitter with a nonzero channel gain"
        )));
    }
    let lo = lower.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = upper.iter().copied().fold(0.0, f64::max);
    let condition = hi / lo;
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular(format!(
            "G'Omega^-1 G condition estimate {condition:e} exceeds {MAX_CONDITION:e}"
        )));
    }

    let k_scale = sigma2 * energy_xi;
    let k_diag: Vec<f64> = diag.iter().map(|d| 1.0 + k_scale * d).collect();
    let apply_k = |x: &[f64], y: &mut [f64]| {
        let mut buf = Vec::new();
        apply_gram(&blocks, &g2, x, y, &mut buf);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi + k_scale * *yi;
        }
    };
    let v = pcg(apply_k, &k_diag, h, 1e-14, 10 * n_nodes + 200)?;

    let mut mv = vec![0.0; n_nodes];
    let mut buf = Vec::new();
    apply_gram(&blocks, &g2, &v, &mut mv, &mut buf);
    let fisher = energy_xi * dot(h, &mv);

    let mut values = Vec::with_capacity(topology.n_edges());
    let mut energy = 0.0;
    for n in 0..n_nodes {
        blocks.solve_into(n, &v, &mut buf);
        let start = values.len();
        values.extend(buf.iter().map(|x| g[n] * x));
        energy += blocks.quad(n, &values[start..]);
    }
    if !(energy > 0.0) {
        return Err(Error::Singular(
            "optimal direction has zero energy (all observation gains vanish)".into(),
        ));
    }
    let kappa = (total_energy / energy).sqrt();
    values.iter_mut().for_each(|w| *w *= kappa);

    Ok(OptimalAllocation {
        weights: CollaborationMatrix::new(topology, values)?,
        fisher,
        energy_xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gains::sample_rayleigh;
    use crate::topology::q_clique;

    fn unit_field(n: usize) -> SensorField {
        SensorField::new(vec![1.0; n], vec![1.0; n], 1.0, 1.0, 1.0).unwrap()
    }

    fn rayleigh_field(n: usize, seed: u64) -> SensorField {
        SensorField::new(
            sample_rayleigh(n, 1.0, seed).unwrap(),
            sample_rayleigh(n, 1.0, seed + 1).unwrap(),
            1.0,
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_weights() {
        let topo = q_clique(4, 2).unwrap();
        let field = rayleigh_field(4, 1);
        let m = evaluate(&field, &CollaborationMatrix::zeros(&topo)).unwrap();
        assert_eq!(m.mu, 0.0);
        assert_eq!(m.fisher, 0.0);
        assert_eq!(m.distortion, field.eta2());
        assert_eq!(m.energy, 0.0);
        assert!(transmit_energy_per_node(&field, &CollaborationMatrix::zeros(&topo))
            .unwrap()
            .iter()
            .all(|&e| e == 0.0));
    }

    #[test]
    fn scalar_evaluation() {
        let topo = q_clique(1, 1).unwrap();
        let w = CollaborationMatrix::new(&topo, vec![1.0]).unwrap();
        let m = evaluate(&unit_field(1), &w).unwrap();
        assert_eq!((m.mu, m.zeta2, m.fisher, m.energy), (1.0, 2.0, 0.5, 2.0));
        assert!((1.0 / m.distortion - (1.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let topo = q_clique(4, 2).unwrap();
        let w = CollaborationMatrix::zeros(&topo);
        assert!(evaluate(&unit_field(3), &w).is_err());
        assert!(CollaborationMatrix::new(&topo, vec![0.0; 3]).is_err());
        assert!(equal_ea(&unit_field(3), &topo, 1.0).is_err());
    }

    #[test]
    fn equal_ea_plug_in() {
        let topo = q_clique(4, 2).unwrap();
        let w = equal_ea(&unit_field(4), &topo, 4.0).unwrap();
        for &v in w.values() {
            assert!((v - 6f64.sqrt().recip()).abs() < 1e-15);
        }
        for e in transmit_energy_per_node(&unit_field(4), &w).unwrap() {
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_ea_energy_budget() {
        let topo = q_clique(100, 4).unwrap();
        let field = rayleigh_field(100, 7);
        let w = equal_ea(&field, &topo, 3.0).unwrap();
        let m = evaluate(&field, &w).unwrap();
        assert!((m.energy - 3.0).abs() < 1e-10 * 3.0);
        let per = transmit_energy_per_node(&field, &w).unwrap();
        assert!(per.iter().all(|e| (e - 0.03).abs() < 1e-12));
    }

    #[test]
    fn equal_ea_zero_denominator() {
        let topo = q_clique(2, 1).unwrap();
        let field = SensorField::new(vec![1.0, 0.0], vec![1.0; 2], 1.0, 0.0, 1.0).unwrap();
        match equal_ea(&field, &topo, 1.0) {
            Err(Error::ZeroDenominator { node }) => assert_eq!(node, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn optimal_scalar_case() {
        let topo = q_clique(1, 1).unwrap();
        let opt = optimal_ea(&unit_field(1), &topo, 1.0).unwrap();
        assert!((opt.fisher - 1.0 / 3.0).abs() < 1e-14);
        // Oracle: maximize w^2 / (w^2 + 1) subject to 2 w^2 <= 1.
        let w = 0.5f64.sqrt();
        assert!((opt.fisher - w * w / (w * w + 1.0)).abs() < 1e-14);
        assert!((opt.weights.values()[0] - w).abs() < 1e-14);
    }

    #[test]
    fn optimal_rejects_noiseless_observations() {
        let topo = q_clique(2, 2).unwrap();
        let field = SensorField::new(vec![1.0; 2], vec![1.0; 2], 1.0, 0.0, 1.0).unwrap();
        assert!(optimal_ea(&field, &topo, 1.0).is_err());
    }

    #[test]
    fn optimal_rejects_unreached_observation() {
        // Node 1 is only heard by itself and its channel gain is zero.
        let topo = q_clique(2, 1).unwrap();
        let field = SensorField::new(vec![1.0; 2], vec![1.0, 0.0], 1.0, 1.0, 1.0).unwrap();
        match optimal_ea(&field, &topo, 1.0) {
            Err(Error::Singular(msg)) => assert!(msg.contains("node 1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn optimal_self_consistent_on_cliques() {
        let topo = q_clique(500, 5).unwrap();
        let field = rayleigh_field(500, 21);
        let opt = optimal_ea(&field, &topo, 0.7).unwrap();
        let m = evaluate(&field, &opt.weights).unwrap();
        assert!((m.fisher - opt.fisher).abs() <= 1e-8 * opt.fisher);
        assert!((m.energy - 0.7).abs() <= 1e-10 * 0.7);
        assert!(m.mu > 0.0);
    }

    #[test]
    fn triplets_roundtrip() {
        let topo = q_clique(4, 2).unwrap();
        let field = rayleigh_field(4, 2);
        let w = optimal_ea(&field, &topo, 1.0).unwrap().weights;
        let text = w.to_triplets();
        assert_eq!(text.lines().count(), 8);
        let back = CollaborationMatrix::from_triplets(&topo, &text).unwrap();
        assert_eq!(back, w);
        assert!(CollaborationMatrix::from_triplets(&topo, "0 1 1.0\n").is_err());
    }

    #[test]
    fn metrics_csv_record() {
        let m = SnapshotMetrics {
            mu: 1.0,
            zeta2: 2.0,
            fisher: 0.5,
            distortion: 2.0 / 3.0,
            energy: 2.0,
        };
        let rec = m.to_csv_record();
        assert_eq!(rec.split(',').count(), 5);
        assert!(rec.starts_with("1.00000000000e0,2.00000000000e0,5.00000000000e-1,6.66666666667e-1"));
    }
}
