//! Power-constrained estimation of an Ornstein–Uhlenbeck process.
//!
//! The process `theta_t` is stationary, zero mean, with covariance
//! `eta^2 exp(-|t1 - t2| / tau)`. It is sampled every `T` seconds with a
//! per-sample energy budget `P T`, so each sample is observed as
//! `y_k = theta_{kT} + v_k` with `v_k ~ N(0, 1/J)` and `J = c P T / eta^2`.
//! The constant `c` summarizes the spatial aggregation stage (see
//! [`spatial_constant`]).

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::asymptotic::AsymptoticConfig;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, stream_seed, streams};
use crate::snapshot::Strategy;

/// Truncation level of the bracketing window: correlations below this are
/// dropped.
pub const WINDOW_EPS: f64 = 1e-12;

/// Largest conditioning window accepted, in samples.
pub const MAX_WINDOW_SAMPLES: usize = 20_000;

/// Periodic power-constrained sampling of an OU process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUSamplingScheme {
    eta2: f64,
    tau: f64,
    period: f64,
    power: f64,
    c: f64,
    fisher: f64,
}

impl OUSamplingScheme {
    pub fn new(eta2: f64, tau: f64, period: f64, power: f64, c: f64) -> Result<Self> {
        if !(eta2 > 0.0) {
            return Err(Error::param("eta2", eta2, "must be positive"));
        }
        if !(tau > 0.0) {
            return Err(Error::param("tau", tau, "must be positive"));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::param("period", period, "must be positive"));
        }
        if !(power >= 0.0) {
            return Err(Error::param("power", power, "must be nonnegative"));
        }
        if !(c >= 0.0) {
            return Err(Error::param("c", c, "must be nonnegative"));
        }
        Ok(Self {
            eta2,
            tau,
            period,
            power,
            c,
            fisher: c * power * period / eta2,
        })
    }

    /// A scheme with the per-sample Fisher information given directly
    /// (unit power, `c = J eta^2 / T`).
    pub fn with_fisher(eta2: f64, tau: f64, period: f64, fisher: f64) -> Result<Self> {
        if !(fisher >= 0.0) {
            return Err(Error::param("fisher", fisher, "must be nonnegative"));
        }
        let mut s = Self::new(eta2, tau, period, 1.0, fisher * eta2 / period)?;
        s.fisher = fisher;
        Ok(s)
    }

    /// Same power and aggregation constant, different sampling period.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        Self::new(self.eta2, self.tau, period, self.power, self.c)
    }

    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Per-sample Fisher information `J = c P T / eta^2`.
    pub fn fisher(&self) -> f64 {
        self.fisher
    }

    /// `rho = exp(-T / tau)`.
    pub fn rho(&self) -> f64 {
        (-self.period / self.tau).exp()
    }

    /// `rho' = (1 - rho) / (1 + rho) = tanh(T / 2 tau)`.
    pub fn rho_prime(&self) -> f64 {
        (self.half_period_ratio()).tanh()
    }

    fn half_period_ratio(&self) -> f64 {
        0.5 * self.period / self.tau
    }

    /// Window half-width with `rho^K_w` below [`WINDOW_EPS`].
    pub fn default_window(&self) -> usize {
        (self.tau / self.period * (1.0 / WINDOW_EPS).ln()).ceil() as usize
    }

    fn denominator(&self) -> f64 {
        let ej = self.eta2 * self.fisher;
        let rp = self.rho_prime();
        ((ej + rp) * (ej + 1.0 / rp)).sqrt()
    }
}

/// `theta_{k+1} = a theta_k + sqrt(eta^2 (1 - a^2)) w_k` with `a = exp(-dt/tau)`
/// and a stationary start. Returns `n_steps` values.
pub fn generate_path(eta2: f64, tau: f64, dt: f64, n_steps: usize, seed: u64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", dt, "must be positive"));
    }
    if !(tau > 0.0) {
        return Err(Error::param("tau", tau, "must be positive"));
    }
    if !(eta2 >= 0.0) {
        return Err(Error::param("eta2", eta2, "must be nonnegative"));
    }
    let mut rng = rng_from_seed(seed);
    let a = (-dt / tau).exp();
    let innovation = (eta2 * -(-2.0 * dt / tau).exp_m1()).sqrt();
    let mut path = Vec::with_capacity(n_steps);
    if n_steps == 0 {
        return Ok(path);
    }
    let w: f64 = rng.sample(StandardNormal);
    let mut theta = eta2.sqrt() * w;
    path.push(theta);
    for _ in 1..n_steps {
        let w: f64 = rng.sample(StandardNormal);
        theta = a * theta + innovation * w;
        path.push(theta);
    }
    Ok(path)
}

/// Kac–Murdock–Szegő matrix `C[i, j] = rho^|i - j|`.
pub fn kms_matrix(k: usize, rho: f64) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::param("k", 0.0, "must be at least 1"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::param("rho", rho, "must lie in [0, 1)"));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rho.powi(i.abs_diff(j) as i32)))
}

/// Exact Gaussian conditioning of `theta_t` on noisy samples at fixed
/// instants. The sample covariance `eta^2 C + I / J` is factored once.
#[derive(Debug, Clone)]
pub struct SampleConditioner {
    eta2: f64,
    tau: f64,
    times: Vec<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SampleConditioner {
    pub fn new(eta2: f64, tau: f64, fisher: f64, times: Vec<f64>) -> Result<Self> {
        if !(fisher > 0.0) {
            return Err(Error::param("fisher", fisher, "conditioning needs J > 0"));
        }
        if times.is_empty() {
            return Err(Error::param("times", 0.0, "need at least one sample"));
        }
        let noise = 1.0 / fisher;
        let k = times.len();
        let cov = DMatrix::from_fn(k, k, |i, j| {
            let v = eta2 * (-(times[i] - times[j]).abs() / tau).exp();
            if i == j {
                v + noise
            } else {
                v
            }
        });
        let chol = cov.clone().cholesky().ok_or_else(|| {
            let d = cov.diagonal();
            Error::Solver(format!(
                "sample covariance of dimension {k} is not positive definite \
                 (diagonal range [{:e}, {:e}], noise variance {noise:e})",
                d.min(),
                d.max()
            ))
        })?;
        Ok(Self {
            eta2,
            tau,
            times,
            chol,
        })
    }

    fn cross_cov(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.times.len(),
            self.times
                .iter()
                .map(|s| self.eta2 * (-(t - s).abs() / self.tau).exp()),
        )
    }

    /// MMSE weights `R_yy^-1 R_y theta_t` for estimating `theta_t`.
    pub fn weights(&self, t: f64) -> DVector<f64> {
        self.chol.solve(&self.cross_cov(t))
    }

    /// `Var(theta_t | y) = eta^2 - R_theta_y R_yy^-1 R_y_theta`.
    pub fn variance(&self, t: f64) -> f64 {
        let r = self.cross_cov(t);
        let w = self.chol.solve(&r);
        self.eta2 - r.dot(&w)
    }
}

fn window_times(period: f64, lo: i64, hi: i64) -> Vec<f64> {
    (lo..=hi).map(|k| k as f64 * period).collect()
}

/// Conditional variance at `t` in `[0, T]` given the `2 K_w + 2` samples at
/// `-K_w T, ..., 0, T, ..., (K_w + 1) T`.
pub fn window_variance(scheme: &OUSamplingScheme, t: f64, k_w: usize) -> Result<f64> {
    window_conditioner(scheme, k_w)?.map_or(Ok(scheme.eta2), |c| Ok(c.variance(t)))
}

/// Conditioner over the bracketing window, `None` when `J = 0`.
pub fn window_conditioner(
    scheme: &OUSamplingScheme,
    k_w: usize,
) -> Result<Option<SampleConditioner>> {
    if scheme.fisher == 0.0 {
        return Ok(None);
    }
    if 2 * k_w + 2 > MAX_WINDOW_SAMPLES {
        return Err(Error::param(
            "period",
            scheme.period,
            "conditioning window too large for this sampling period",
        ));
    }
    let k = k_w as i64;
    SampleConditioner::new(
        scheme.eta2,
        scheme.tau,
        scheme.fisher,
        window_times(scheme.period, -k, k + 1),
    )
    .map(Some)
}

/// `(varrho - rho/varrho) / (1 - rho)` in the stable form
/// `sinh((T - 2t) / 2 tau) / sinh(T / 2 tau)`.
fn bracket(scheme: &OUSamplingScheme, t: f64) -> f64 {
    let x = scheme.half_period_ratio();
    ((scheme.period - 2.0 * t) / (2.0 * scheme.tau)).sinh() / x.sinh()
}

/// Steady-state conditional variance at `t` in `[0, T]`:
///
/// ```text
/// eta^2 [1 + eta^2 J rho' {1 - ((varrho - rho/varrho)/(1 - rho))^2}]
///   / sqrt((eta^2 J + rho') (eta^2 J + 1/rho'))
/// ```
pub fn closed_form_variance(scheme: &OUSamplingScheme, t: f64) -> f64 {
    let b = bracket(scheme, t);
    let ej = scheme.eta2 * scheme.fisher;
    scheme.eta2 * (1.0 + ej * scheme.rho_prime() * (1.0 - b * b)) / scheme.denominator()
}

/// `I_T = (1/T) int_0^T (varrho - rho/varrho)^2 dt = (1 - rho^2) tau / T - 2 rho`.
pub fn i_t(period: f64, tau: f64) -> f64 {
    let rho = (-period / tau).exp();
    (1.0 - rho * rho) / (period / tau) - 2.0 * rho
}

/// Time average of the squared bracket, `I_T / (1 - rho)^2`, as
/// `(sinh(2x)/2 - x) / (2 x sinh^2 x)` with `x = T / 2 tau`.
fn mean_bracket_sq(x: f64) -> f64 {
    let num = if x < 0.5 {
        // sinh(2x)/2 - x = sum_{k>=1} (2x)^{2k+1} / (2 (2k+1)!)
        let y = 2.0 * x;
        let y2 = y * y;
        let mut term = y * y2 / 6.0;
        let mut sum: f64 = 0.0;
        let mut k = 1.0;
        while term > 1e-18 * sum.max(f64::MIN_POSITIVE) {
            sum += term;
            term *= y2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            k += 1.0;
        }
        0.5 * sum
    } else {
        0.5 * (2.0 * x).sinh() - x
    };
    let s = x.sinh();
    num / (2.0 * x * s * s)
}

/// Average conditional variance over one sampling period.
pub fn avar(scheme: &OUSamplingScheme) -> f64 {
    let ej = scheme.eta2 * scheme.fisher;
    let mean_b2 = mean_bracket_sq(scheme.half_period_ratio());
    scheme.eta2 * (1.0 + ej * scheme.rho_prime() * (1.0 - mean_b2)) / scheme.denominator()
}

/// Limit of the conditional variance as `T -> 0`: `eta^2 / sqrt(1 + 2 P tau c)`.
pub fn var0(eta2: f64, tau: f64, power: f64, c: f64) -> Result<f64> {
    if !(eta2 > 0.0) {
        return Err(Error::param("eta2", eta2, "must be positive"));
    }
    if !(tau > 0.0) {
        return Err(Error::param("tau", tau, "must be positive"));
    }
    if !(power >= 0.0) {
        return Err(Error::param("power", power, "must be nonnegative"));
    }
    if !(c >= 0.0) {
        return Err(Error::param("c", c, "must be nonnegative"));
    }
    Ok(eta2 / (1.0 + 2.0 * power * tau * c).sqrt())
}

impl OUSamplingScheme {
    pub fn var0(&self) -> f64 {
        self.eta2 / (1.0 + 2.0 * self.power * self.tau * self.c).sqrt()
    }
}

/// Aggregation constant `c` so that `J = c P T / eta^2` for a Q-clique network.
///
/// The energy in `cfg` is ignored.
pub fn spatial_constant(strategy: Strategy, cfg: &AsymptoticConfig) -> Result<f64> {
    match strategy {
        Strategy::Optimal => Ok(cfg.second_moment_g() * (1.0 - cfg.h_q()?) / cfg.xi2),
        Strategy::Equal => {
            let mg = cfg.mean_g();
            Ok(mg * mg / (cfg.xi2 * (1.0 + cfg.r_q()?)))
        }
    }
}

/// Conditional variance sampled on a regular grid over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    pub times: Vec<f64>,
    pub variances: Vec<f64>,
    pub avar: f64,
    pub var0: f64,
}

/// Closed-form profile on `n_points >= 2` equally spaced instants of `[0, T]`.
pub fn variance_profile(scheme: &OUSamplingScheme, n_points: usize) -> Result<VarianceProfile> {
    if n_points < 2 {
        return Err(Error::param("n_points", n_points as f64, "must be at least 2"));
    }
    let times: Vec<f64> = (0..n_points)
        .map(|i| scheme.period * i as f64 / (n_points - 1) as f64)
        .collect();
    let variances = times.iter().map(|&t| closed_form_variance(scheme, t)).collect();
    Ok(VarianceProfile {
        times,
        variances,
        avar: avar(scheme),
        var0: scheme.var0(),
    })
}

/// MMSE estimates `E[theta_t | y]` on `t_grid`, where `y[k]` is observed at
/// time `k T`.
///
/// Each estimate conditions on the samples within `default_window()` periods
/// of the bracketing pair, clipped to the available record.
pub fn filter_path(y: &[f64], scheme: &OUSamplingScheme, t_grid: &[f64]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::param("y", 0.0, "observation vector is empty"));
    }
    if scheme.fisher == 0.0 {
        return Ok(vec![0.0; t_grid.len()]);
    }
    let period = scheme.period;
    let last = y.len() as i64 - 1;
    let k_w = scheme.default_window() as i64;
    if 2 * k_w + 2 > MAX_WINDOW_SAMPLES as i64 {
        return Err(Error::param(
            "period",
            period,
            "conditioning window too large for this sampling period",
        ));
    }
    let mut conditioners: HashMap<(i64, i64), SampleConditioner> = HashMap::new();
    let mut weights: HashMap<(i64, i64, i64), DVector<f64>> = HashMap::new();
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let k0 = ((t / period).floor() as i64).clamp(0, last);
        let lo = (k0 - k_w).max(0);
        let hi = (k0 + 1 + k_w).min(last);
        let key = (lo - k0, hi - k0);
        let phase = t - k0 as f64 * period;
        let phase_key = (phase / period * 1e12).round() as i64;
        let wkey = (key.0, key.1, phase_key);
        let w = match weights.entry(wkey) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let c = match conditioners.entry(key) {
                    Entry::Occupied(c) => c.into_mut(),
                    Entry::Vacant(c) => c.insert(SampleConditioner::new(
                        scheme.eta2,
                        scheme.tau,
                        scheme.fisher,
                        window_times(period, key.0, key.1),
                    )?),
                };
                e.insert(c.weights(phase))
            }
        };
        let est: f64 = w
            .iter()
            .zip(&y[lo as usize..=hi as usize])
            .map(|(a, b)| a * b)
            .sum();
        out.push(est);
    }
    Ok(out)
}

/// One simulated path with its noisy samples and filtered estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    /// Evaluation instants `i * t_obs / m` for `i` in `0..m`.
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Sample instants inside `[0, t_obs]` and their observations.
    pub sample_times: Vec<f64>,
    pub observations: Vec<f64>,
}

impl FilterRun {
    pub fn mse(&self) -> f64 {
        self.theta
            .iter()
            .zip(&self.estimates)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / self.theta.len() as f64
    }
}

/// Simulates `theta` on the grid `i * t_obs / m`, `i` in `0..m`, samples it
/// at the instants `k T` with noise variance `1/J` and filters it.
///
/// Samples extend `pad` seconds beyond both ends of `[0, t_obs]` so that the
/// estimates are in steady state; `pad = None` uses one more than the
/// conditioning window half-width, in periods. The grid values depend only on
/// `seed`, `t_obs`, `m` and the process parameters, so runs that differ only
/// in the sampling period see the same path. Sample values off the grid are
/// drawn from the exact OU bridge between their grid neighbors.
pub fn simulate_filtering(
    scheme: &OUSamplingScheme,
    t_obs: f64,
    m: usize,
    pad: Option<f64>,
    seed: u64,
) -> Result<FilterRun> {
    if m == 0 || !(t_obs > 0.0) {
        return Err(Error::param("t_obs", t_obs, "need a positive duration and grid"));
    }
    let period = scheme.period;
    let pad = pad.unwrap_or((scheme.default_window() + 1) as f64 * period);
    if !(pad >= 0.0) || !pad.is_finite() {
        return Err(Error::param("pad", pad, "must be nonnegative"));
    }
    let dt = t_obs / m as f64;
    let times: Vec<f64> = (0..m).map(|i| i as f64 * dt).collect();
    let theta = generate_path(
        scheme.eta2,
        scheme.tau,
        dt,
        m,
        stream_seed(seed, streams::PATH),
    )?;

    let lead = (pad / period - 1e-9).ceil().max(0.0) as usize;
    let n_samples = lead + ((t_obs + pad) / period - 1e-9).ceil().max(0.0) as usize + 1;
    if n_samples > 50_000_000 {
        return Err(Error::param("period", period, "too many samples for this record"));
    }
    let all_times: Vec<f64> = (0..n_samples)
        .map(|k| (k as f64 - lead as f64) * period)
        .collect();
    let mut rng = rng_from_seed(stream_seed(seed, streams::NOISE));
    let values = sample_on_path(scheme.eta2, scheme.tau, &times, &theta, &all_times, &mut rng);
    let noise_sd = if scheme.fisher > 0.0 {
        (1.0 / scheme.fisher).sqrt()
    } else {
        0.0
    };
    let y: Vec<f64> = values
        .iter()
        .map(|&v| {
            let w: f64 = rng.sample(StandardNormal);
            v + noise_sd * w
        })
        .collect();

    let shift = lead as f64 * period;
    let t_grid: Vec<f64> = times.iter().map(|&t| t + shift).collect();
    let estimates = filter_path(&y, scheme, &t_grid)?;
    let (sample_times, observations) = all_times
        .iter()
        .zip(&y)
        .filter(|(&t, _)| t >= -1e-12 && t <= t_obs + 1e-12)
        .map(|(&t, &v)| (t, v))
        .unzip();
    Ok(FilterRun {
        times,
        theta,
        estimates,
        sample_times,
        observations,
    })
}

/// Draws the process at the sorted instants `at`, jointly with the known
/// values `path` at the sorted grid `grid`.
fn sample_on_path(
    eta2: f64,
    tau: f64,
    grid: &[f64],
    path: &[f64],
    at: &[f64],
    rng: &mut impl Rng,
) -> Vec<f64> {
    let tol = 1e-9 * (grid[grid.len() - 1] - grid[0]).abs().max(1.0);
    let step = |x: f64, gap: f64, w: f64| {
        let a = (-gap / tau).exp();
        a * x + (eta2 * -(-2.0 * gap / tau).exp_m1()).sqrt() * w
    };
    let mut out = vec![0.0; at.len()];
    let first = grid[0];
    let last = grid[grid.len() - 1];

    // Before the grid: run the reversible chain backwards from the first point.
    let n_before = at.partition_point(|&t| t < first - tol);
    let (mut x, mut t_prev) = (path[0], first);
    for i in (0..n_before).rev() {
        x = step(x, t_prev - at[i], rng.sample(StandardNormal));
        t_prev = at[i];
        out[i] = x;
    }

    let n_inside_end = at.partition_point(|&t| t <= last + tol);
    let mut left = (first, path[0]);
    let mut seg = 0;
    for i in n_before..n_inside_end {
        let t = at[i];
        while seg + 1 < grid.len() && grid[seg + 1] <= t + tol {
            seg += 1;
            left = (grid[seg], path[seg]);
        }
        if (t - grid[seg]).abs() <= tol {
            out[i] = path[seg];
            left = (grid[seg], path[seg]);
            continue;
        }
        let (t0, x0) = left;
        let (t1, x1) = (grid[seg + 1], path[seg + 1]);
        let ra = (-(t - t0) / tau).exp();
        let rb = (-(t1 - t) / tau).exp();
        let one_m_ra2 = -(-2.0 * (t - t0) / tau).exp_m1();
        let one_m_rb2 = -(-2.0 * (t1 - t) / tau).exp_m1();
        let one_m_rab2 = -(-2.0 * (t1 - t0) / tau).exp_m1();
        let mean = (ra * one_m_rb2 * x0 + rb * one_m_ra2 * x1) / one_m_rab2;
        let var = eta2 * one_m_ra2 * one_m_rb2 / one_m_rab2;
        let w: f64 = rng.sample(StandardNormal);
        out[i] = mean + var.max(0.0).sqrt() * w;
        left = (t, out[i]);
    }

    let (mut x, mut t_prev) = (path[path.len() - 1], last);
    for i in n_inside_end..at.len() {
        x = step(x, at[i] - t_prev, rng.sample(StandardNormal));
        t_prev = at[i];
        out[i] = x;
    }
    out
}
