//! Observation and channel gains.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Open01;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Distribution of observation or channel gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainModel {
    Rayleigh { alpha: f64 },
    /// Every sensor has the same gain.
    Constant(f64),
}

impl GainModel {
    pub fn mean(&self) -> f64 {
        match *self {
            GainModel::Rayleigh { alpha } => alpha * (PI / 2.0).sqrt(),
            GainModel::Constant(v) => v,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            GainModel::Rayleigh { alpha } => 2.0 * alpha * alpha,
            GainModel::Constant(v) => v * v,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            GainModel::Rayleigh { alpha } => (2.0 - PI / 2.0) * alpha * alpha,
            GainModel::Constant(_) => 0.0,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        match *self {
            GainModel::Rayleigh { alpha } => sample_rayleigh(n, alpha, seed),
            GainModel::Constant(v) => Ok(vec![v; n]),
        }
    }

    pub(crate) fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            GainModel::Rayleigh { alpha } => rayleigh_draw(rng, alpha),
            GainModel::Constant(v) => v,
        }
    }
}

fn rayleigh_draw<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    alpha * (-2.0 * u.ln()).sqrt()
}

/// `n` i.i.d. Rayleigh(`alpha`) draws via the inverse CDF.
pub fn sample_rayleigh(n: usize, alpha: f64, seed: u64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::param("alpha", alpha, "must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..n).map(|_| rayleigh_draw(&mut rng, alpha)).collect())
}

/// Gains and noise levels of an `N`-sensor field.
///
/// The measurement-noise covariance is `sigma2 * I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorField {
    h: Vec<f64>,
    g_tilde: Vec<f64>,
    eta2: f64,
    sigma2: f64,
    xi2: f64,
}

impl SensorField {
    pub fn new(h: Vec<f64>, g_tilde: Vec<f64>, eta2: f64, sigma2: f64, xi2: f64) -> Result<Self> {
        if h.len() != g_tilde.len() {
            return Err(Error::DimensionMismatch {
                what: "channel gains",
                expected: h.len(),
                actual: g_tilde.len(),
            });
        }
        if h.is_empty() {
            return Err(Error::param("n_nodes", 0.0, "must be positive"));
        }
        if !(eta2 > 0.0) {
            return Err(Error::param("eta2", eta2, "must be positive"));
        }
        if !(sigma2 >= 0.0) {
            return Err(Error::param("sigma2", sigma2, "must be nonnegative"));
        }
        if !(xi2 > 0.0) {
            return Err(Error::param("xi2", xi2, "must be positive"));
        }
        Ok(Self {
            h,
            g_tilde,
            eta2,
            sigma2,
            xi2,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn g_tilde(&self) -> &[f64] {
        &self.g_tilde
    }

    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn xi2(&self) -> f64 {
        self.xi2
    }

    /// Channel gains `g = g_tilde / sqrt(N)`.
    pub fn effective_channel_gains(&self) -> Vec<f64> {
        let scale = (self.n_nodes() as f64).sqrt().recip();
        self.g_tilde.iter().map(|g| g * scale).collect()
    }
}
