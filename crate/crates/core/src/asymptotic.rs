//! Large-network limits of the Fisher information on Q-clique topologies.
//!
//! With `N = K Q` sensors, channel gains scaled as `g = g_tilde / sqrt(N)` and
//! `N -> infinity`:
//!
//! ```text
//! J_opt = (E / eta^2) (E[g~^2] / xi^2) (1 - H_Q)
//! J_eq  = (E / eta^2) (E[g~]^2 / xi^2) / (1 + R_Q)
//! H_Q   = E[ 1 / (1 + (eta^2/sigma^2)(h_1^2 + ... + h_Q^2)) ]
//! R_Q   = (Var[h] + sigma^2/eta^2) / (Q E[h]^2)
//! ```
//!
//! For Rayleigh observation gains `H_Q` has a closed form in terms of the
//! exponential integral `E1(z) = int_z^inf e^-t / t dt`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gains::GainModel;
use crate::linalg::CompensatedSum;
use crate::rng::{rng_from_seed, stream_seed};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Samples used by [`h_q`] when the closed form is numerically unreliable.
pub const H_Q_FALLBACK_SAMPLES: usize = 10_000_000;
const H_Q_FALLBACK_SEED: u64 = 0x4851_5F46_414C_4C42;

/// Relative size of the result against the largest term of the alternating
/// sum below which the closed form for `H_Q` is abandoned.
const CANCELLATION_LIMIT: f64 = 1e-6;

/// Exponential integral `E1(z) = int_z^inf e^-t / t dt` for `z > 0`.
pub fn exp_integral(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::param("z", z, "exponential integral requires z > 0"));
    }
    if z < 1.0 {
        Ok(e1_series(z))
    } else {
        Ok(e1_scaled_cf(z) * (-z).exp())
    }
}

/// `exp(z) E1(z)`, finite for every `z > 0`.
pub fn exp_integral_scaled(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::param("z", z, "exponential integral requires z > 0"));
    }
    if z < 1.0 {
        Ok(z.exp() * e1_series(z))
    } else {
        Ok(e1_scaled_cf(z))
    }
}

// -gamma - ln z + sum_{k>=1} (-1)^{k+1} z^k / (k k!)
fn e1_series(z: f64) -> f64 {
    let mut sum = CompensatedSum::default();
    let mut term = 1.0; // (-1)^{k+1} z^k / k!
    for k in 1..200 {
        let kf = k as f64;
        term *= if k == 1 { z } else { -z / kf };
        let contrib = term / kf;
        sum.add(contrib);
        if contrib.abs() < 1e-18 * sum.value().abs() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() + sum.value()
}

// Modified Lentz evaluation of
// e^z E1(z) = 1/(z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - ...)))
fn e1_scaled_cf(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `H_Q` for Rayleigh observation gains, with `lambda = sigma^2 / (2 alpha_h^2 eta^2)`.
///
/// Evaluates the closed form
/// `((-1)^{Q-1} lambda^Q e^lambda E1(lambda) - sum_{i=0}^{Q-2} i! (-lambda)^{Q-1-i}) / (Q-1)!`
/// and falls back to Monte Carlo when the alternating sum cancels badly.
pub fn h_q(q: usize, lambda: f64) -> Result<f64> {
    if q == 0 {
        return Err(Error::param("q", 0.0, "must be at least 1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", lambda, "must be positive"));
    }
    match h_q_closed_form(q, lambda)? {
        Some(v) => Ok(v),
        None => {
            log::warn!(
                "H_Q closed form loses precision at q = {q}, lambda = {lambda}; using Monte Carlo"
            );
            let est = h_q_mc(
                q,
                1.0,
                2.0 * lambda,
                GainModel::Rayleigh { alpha: 1.0 },
                H_Q_FALLBACK_SAMPLES,
                H_Q_FALLBACK_SEED,
            )?;
            Ok(est.mean)
        }
    }
}

/// The closed form alone, `None` when cancellation exceeds the limit.
pub fn h_q_closed_form(q: usize, lambda: f64) -> Result<Option<f64>> {
    let scaled_ei = exp_integral_scaled(lambda)?;
    let ln_lambda = lambda.ln();
    // ln i! for i = 0..q
    let mut ln_fact = Vec::with_capacity(q);
    ln_fact.push(0.0);
    for i in 1..q {
        ln_fact.push(ln_fact[i - 1] + (i as f64).ln());
    }
    let ln_fact_qm1 = ln_fact[q - 1];
    let alternating = |power: usize| if power.is_multiple_of(2) { 1.0 } else { -1.0 };

    let mut sum = CompensatedSum::default();
    let lead = alternating(q - 1)
        * (q as f64 * ln_lambda + scaled_ei.ln() - ln_fact_qm1).exp();
    let mut max_term = lead.abs();
    sum.add(lead);
    for i in 0..q.saturating_sub(1) {
        let power = q - 1 - i;
        let t = alternating(power) * (ln_fact[i] - ln_fact_qm1 + power as f64 * ln_lambda).exp();
        max_term = max_term.max(t.abs());
        sum.add(-t);
    }
    let value = sum.value();
    if !(value > 0.0 && value < 1.0) || value < CANCELLATION_LIMIT * max_term {
        return Ok(None);
    }
    Ok(Some(value))
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

const MC_CHUNK: usize = 1 << 16;

/// Monte Carlo estimate of `E[1 / (1 + (eta^2/sigma^2)(h_1^2 + ... + h_q^2))]`.
pub fn h_q_mc(
    q: usize,
    eta2: f64,
    sigma2: f64,
    gains: GainModel,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", 0.0, "must be at least 1"));
    }
    if !(eta2 >= 0.0) || !(sigma2 >= 0.0) {
        return Err(Error::param("sigma2", sigma2, "variances must be nonnegative"));
    }
    let integrand = |s: f64| -> f64 {
        if sigma2 > 0.0 {
            1.0 / (1.0 + eta2 / sigma2 * s)
        } else if eta2 * s > 0.0 {
            0.0
        } else {
            1.0
        }
    };
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    let partials: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(stream_seed(seed, c as u64));
            let len = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for _ in 0..len {
                let s: f64 = (0..q)
                    .map(|_| {
                        let h = gains.sample_with(&mut rng);
                        h * h
                    })
                    .sum();
                let v = integrand(s);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let n = n_samples as f64;
    let (s1, s2) = partials
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let mean = s1 / n;
    let var = if n_samples > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_err: (var / n).sqrt(),
    })
}

/// `R_Q = (Var[h] + sigma^2/eta^2) / (q E[h]^2)`.
pub fn r_q(q: usize, eta2: f64, sigma2: f64, mean_h: f64, var_h: f64) -> Result<f64> {
    if q == 0 {
        return Err(Error::param("q", 0.0, "must be at least 1"));
    }
    if mean_h == 0.0 || !mean_h.is_finite() {
        return Err(Error::param("mean_h", mean_h, "R_Q is singular for zero mean gain"));
    }
    if !(eta2 > 0.0) {
        return Err(Error::param("eta2", eta2, "must be positive"));
    }
    Ok((var_h + sigma2 / eta2) / (q as f64 * mean_h * mean_h))
}

/// Gain distributions for the asymptotic formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticGains {
    Rayleigh { alpha_h: f64, alpha_g: f64 },
    Homogeneous { h0: f64, g0: f64 },
}

impl AsymptoticGains {
    pub fn observation(&self) -> GainModel {
        match *self {
            AsymptoticGains::Rayleigh { alpha_h, .. } => GainModel::Rayleigh { alpha: alpha_h },
            AsymptoticGains::Homogeneous { h0, .. } => GainModel::Constant(h0),
        }
    }

    pub fn channel(&self) -> GainModel {
        match *self {
            AsymptoticGains::Rayleigh { alpha_g, .. } => GainModel::Rayleigh { alpha: alpha_g },
            AsymptoticGains::Homogeneous { g0, .. } => GainModel::Constant(g0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConfig {
    pub total_energy: f64,
    pub eta2: f64,
    pub xi2: f64,
    pub sigma2: f64,
    pub q: usize,
    pub gains: AsymptoticGains,
}

impl AsymptoticConfig {
    /// The unit-variance Rayleigh(1) setting used in the reference experiments.
    pub fn rayleigh_unit(total_energy: f64, sigma2: f64, q: usize) -> Self {
        Self {
            total_energy,
            eta2: 1.0,
            xi2: 1.0,
            sigma2,
            q,
            gains: AsymptoticGains::Rayleigh {
                alpha_h: 1.0,
                alpha_g: 1.0,
            },
        }
    }

    pub fn with_energy(self, total_energy: f64) -> Self {
        Self {
            total_energy,
            ..self
        }
    }

    pub fn with_q(self, q: usize) -> Self {
        Self { q, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::param("q", 0.0, "must be at least 1"));
        }
        if !(self.total_energy >= 0.0) {
            return Err(Error::param("total_energy", self.total_energy, "must be nonnegative"));
        }
        if !(self.eta2 > 0.0) {
            return Err(Error::param("eta2", self.eta2, "must be positive"));
        }
        if !(self.xi2 > 0.0) {
            return Err(Error::param("xi2", self.xi2, "must be positive"));
        }
        if !(self.sigma2 >= 0.0) {
            return Err(Error::param("sigma2", self.sigma2, "must be nonnegative"));
        }
        if let AsymptoticGains::Rayleigh { alpha_h, alpha_g } = self.gains {
            if !(alpha_h > 0.0) {
                return Err(Error::param("alpha_h", alpha_h, "must be positive"));
            }
            if !(alpha_g > 0.0) {
                return Err(Error::param("alpha_g", alpha_g, "must be positive"));
            }
        }
        Ok(())
    }

    /// `lambda = sigma^2 / (2 alpha_h^2 eta^2)`; `None` for homogeneous gains.
    pub fn lambda(&self) -> Option<f64> {
        match self.gains {
            AsymptoticGains::Rayleigh { alpha_h, .. } => {
                Some(self.sigma2 / (2.0 * alpha_h * alpha_h * self.eta2))
            }
            AsymptoticGains::Homogeneous { .. } => None,
        }
    }

    pub fn mean_g(&self) -> f64 {
        self.gains.channel().mean()
    }

    pub fn second_moment_g(&self) -> f64 {
        self.gains.channel().second_moment()
    }

    pub fn mean_h(&self) -> f64 {
        self.gains.observation().mean()
    }

    pub fn var_h(&self) -> f64 {
        self.gains.observation().variance()
    }

    pub fn h_q(&self) -> Result<f64> {
        self.validate()?;
        match self.gains {
            AsymptoticGains::Rayleigh { .. } => {
                let lambda = self.lambda().unwrap_or(0.0);
                if lambda == 0.0 {
                    Ok(0.0)
                } else {
                    h_q(self.q, lambda)
                }
            }
            AsymptoticGains::Homogeneous { h0, .. } => {
                let s = self.eta2 * self.q as f64 * h0 * h0;
                Ok(if self.sigma2 > 0.0 {
                    self.sigma2 / (self.sigma2 + s)
                } else if s > 0.0 {
                    0.0
                } else {
                    1.0
                })
            }
        }
    }

    pub fn r_q(&self) -> Result<f64> {
        self.validate()?;
        r_q(self.q, self.eta2, self.sigma2, self.mean_h(), self.var_h())
    }
}

/// Asymptotic Fisher information of optimal energy allocation.
pub fn j_opt_asym(cfg: &AsymptoticConfig) -> Result<f64> {
    let h = cfg.h_q()?;
    Ok(cfg.total_energy / cfg.eta2 * cfg.second_moment_g() / cfg.xi2 * (1.0 - h))
}

/// Asymptotic Fisher information of equal energy allocation.
pub fn j_eq_asym(cfg: &AsymptoticConfig) -> Result<f64> {
    let r = cfg.r_q()?;
    let mg = cfg.mean_g();
    Ok(cfg.total_energy / cfg.eta2 * mg * mg / cfg.xi2 / (1.0 + r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Composite Gauss–Legendre quadrature of `int_z^inf e^-t / t dt` after
    /// the substitution `t = z + s / (1 - s)`, independent of the series and
    /// continued fraction used by the implementation.
    fn e1_quadrature(z: f64) -> f64 {
        // 20-point Gauss–Legendre nodes and weights on [-1, 1].
        const X: [f64; 10] = [
            0.076_526_521_133_497_34,
            0.227_785_851_141_645_1,
            0.373_706_088_715_419_55,
            0.510_867_001_950_827_1,
            0.636_053_680_726_515,
            0.746_331_906_460_150_8,
            0.839_116_971_822_218_8,
            0.912_234_428_251_325_8,
            0.963_971_927_277_913_8,
            0.993_128_599_185_094_9,
        ];
        const W: [f64; 10] = [
            0.152_753_387_130_725_78,
            0.149_172_986_472_603_66,
            0.142_096_109_318_381_87,
            0.131_688_638_449_176_53,
            0.118_194_531_961_518_25,
            0.101_930_119_817_240_26,
            0.083_276_741_576_704_67,
            0.062_672_048_334_109_44,
            0.040_601_429_800_386_22,
            0.017_614_007_139_153_273,
        ];
        let f = |s: f64| {
            let t = z + s / (1.0 - s);
            (-t).exp() / t / ((1.0 - s) * (1.0 - s))
        };
        // geometric panels cluster near s = 0 where the integrand varies fastest for small z
        let mut edges = vec![0.0];
        let mut e = 1e-9;
        while e < 0.5 {
            edges.push(e);
            e *= 2.0;
        }
        let n = 4000;
        for i in 0..=n {
            let s = 0.5 + 0.5 * i as f64 / n as f64 * (1.0 - 1e-12);
            edges.push(s);
        }
        let mut total = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
            for k in 0..10 {
                total += W[k] * r * (f(c + r * X[k]) + f(c - r * X[k]));
            }
        }
        total
    }

    #[test]
    fn quadrature_oracle_values() {
        // Frozen from the quadrature oracle above.
        assert!((e1_quadrature(1.0) - 0.219_383_934_395_52).abs() < 1e-11);
        assert!((e1_quadrature(0.001) - 6.331_539_364_136_15).abs() < 1e-5);
    }

    #[test]
    fn e1_matches_quadrature() {
        for &z in &[1e-3, 0.05, 0.3, 0.7, 0.999, 1.0, 1.5, 3.0, 10.0, 30.0] {
            let q = e1_quadrature(z);
            let v = exp_integral(z).unwrap();
            assert!((v - q).abs() < 1e-12, "z = {z}: {v} vs {q}");
        }
    }

    #[test]
    fn e1_reference_points() {
        assert!((exp_integral(1.0).unwrap() - 0.219_383_934_395_52).abs() < 1e-11);
        assert!((exp_integral(0.001).unwrap() - 6.331_54).abs() < 1e-5);
        let s = 700.0 * exp_integral_scaled(700.0).unwrap();
        assert!(s > 0.9985 && s < 1.0, "{s}");
        let direct = 700.0 * 700f64.exp() * exp_integral(700.0).unwrap();
        assert!((direct - s).abs() < 1e-9);
    }

    #[test]
    fn e1_continuity_at_switch() {
        let below = exp_integral(1.0 - 1e-12).unwrap();
        let above = exp_integral(1.0).unwrap();
        assert!((below - above).abs() < 1e-11);
        assert!(exp_integral(1e-6).unwrap().is_finite());
    }

    #[test]
    fn e1_rejects_nonpositive() {
        assert!(exp_integral(0.0).is_err());
        assert!(exp_integral(-1.0).is_err());
    }

    #[test]
    fn h1_is_lambda_e_lambda_e1() {
        let v = h_q(1, 1.0).unwrap();
        assert!((v - std::f64::consts::E * e1_quadrature(1.0)).abs() < 1e-9);
        assert!((v - 0.596_347).abs() < 1e-6);
        for &l in &[0.1f64, 0.5, 2.0] {
            let expected = l * l.exp() * exp_integral(l).unwrap();
            assert!((h_q(1, l).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn h2_matches_direct_integral() {
        // H_2 = lambda - lambda^2 e^lambda E1(lambda)
        for &l in &[0.25f64, 0.5, 1.0] {
            let expected = l - l * l * l.exp() * exp_integral(l).unwrap();
            assert!((h_q(2, l).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn h_q_large_q_approximation() {
        let v = h_q(30, 1.0).unwrap();
        let approx = 1.0 / 29.0;
        assert!((v - approx).abs() < 0.05 * approx, "{v}");
    }

    #[test]
    fn h_q_noiseless_limit() {
        assert!(h_q(2, 1e-8).unwrap() < 1e-6);
    }

    #[test]
    fn h_q_decreasing_and_bounded() {
        for &l in &[0.1, 0.5, 1.0, 2.0] {
            let mut prev = 1.0;
            for q in 1..=50 {
                let v = h_q(q, l).unwrap();
                assert!(v > 0.0 && v < prev, "q = {q}, lambda = {l}: {v} vs {prev}");
                prev = v;
            }
        }
    }

    #[test]
    fn h_q_cancellation_detected() {
        // Large lambda * q makes the alternating sum cancel catastrophically.
        assert_eq!(h_q_closed_form(60, 40.0).unwrap(), None);
        let v = h_q(3, 50.0).unwrap();
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn h_q_mc_limits() {
        let g = GainModel::Rayleigh { alpha: 1.0 };
        let e = h_q_mc(3, 1.0, 1e12, g, 1000, 1).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-10);
        let e = h_q_mc(3, 0.0, 1.0, g, 1000, 1).unwrap();
        assert_eq!(e.mean, 1.0);
        assert!(h_q_mc(3, 1.0, 1.0, g, 0, 1).is_err());
    }

    #[test]
    fn h_q_mc_matches_closed_form() {
        let e = h_q_mc(2, 1.0, 1.0, GainModel::Rayleigh { alpha: 1.0 }, 1_000_000, 5).unwrap();
        let exact = h_q(2, 0.5).unwrap();
        assert!((e.mean - exact).abs() < 3.0 * e.std_err, "{e:?} vs {exact}");
    }

    #[test]
    fn r_q_values() {
        assert_eq!(r_q(3, 1.0, 0.0, 2.0, 0.0).unwrap(), 0.0);
        let mh = (PI / 2.0).sqrt();
        let v = r_q(1, 1.0, 1.0, mh, 2.0 - PI / 2.0).unwrap();
        assert!((v - 0.909_86).abs() < 1e-5, "{v}");
        assert_eq!(r_q(4, 1.0, 1.0, mh, 0.4).unwrap(), r_q(2, 1.0, 1.0, mh, 0.4).unwrap() / 2.0);
        assert!(r_q(2, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn homogeneous_strategies_agree() {
        let cfg = AsymptoticConfig {
            total_energy: 1.0,
            eta2: 1.0,
            xi2: 1.0,
            sigma2: 1.0,
            q: 1,
            gains: AsymptoticGains::Homogeneous { h0: 1.0, g0: 1.0 },
        };
        assert!((j_opt_asym(&cfg).unwrap() - 0.5).abs() < 1e-15);
        assert!((j_eq_asym(&cfg).unwrap() - 0.5).abs() < 1e-15);
        for q in [2, 5, 17] {
            let c = AsymptoticConfig {
                q,
                sigma2: 0.7,
                total_energy: 2.0,
                gains: AsymptoticGains::Homogeneous { h0: 1.3, g0: 0.8 },
                ..cfg
            };
            let expected = 2.0 * 0.64 / (1.0 + 0.7 / (q as f64 * 1.69));
            assert!((j_opt_asym(&c).unwrap() - expected).abs() < 1e-14);
            assert!((j_eq_asym(&c).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn fully_connected_limit_ratio() {
        // As Q grows, J_eq / J_opt -> E[g]^2 / E[g^2] = pi / 4 for Rayleigh gains.
        let cfg = AsymptoticConfig::rayleigh_unit(0.7, 1.0, 5000);
        let ratio = j_eq_asym(&cfg).unwrap() / j_opt_asym(&cfg).unwrap();
        assert!((ratio - PI / 4.0).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn saturation_by_q_20() {
        let cfg = AsymptoticConfig::rayleigh_unit(0.7, 1.0, 1);
        let j20 = j_opt_asym(&cfg.with_q(20)).unwrap();
        let j50 = j_opt_asym(&cfg.with_q(50)).unwrap();
        assert!(j50 - j20 < 0.02 * j20);
        let mut prev = 0.0;
        for q in [1, 2, 5, 10, 20, 50] {
            let (o, e) = (
                j_opt_asym(&cfg.with_q(q)).unwrap(),
                j_eq_asym(&cfg.with_q(q)).unwrap(),
            );
            assert!(o >= e && o > prev);
            prev = o;
        }
    }
}
