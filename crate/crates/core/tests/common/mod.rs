//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the solvers under test: the brute-force maximizer and the
//! dense closed form are built directly from the defining identities
//! `Tr[W E_x W'] = w' Omega w` and `g' W = w' G`.

#![allow(dead_code)]

use collabsense::gains::{sample_rayleigh, SensorField};
use collabsense::rng::{rng_from_seed, stream_seed};
use collabsense::snapshot::CollaborationMatrix;
use collabsense::topology::Topology;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Rayleigh(1) gains with `eta^2 = sigma^2 = xi^2 = 1`.
pub fn rayleigh_field(n: usize, seed: u64) -> SensorField {
    rayleigh_field_with(n, seed, 1.0, 1.0, 1.0)
}

pub fn rayleigh_field_with(n: usize, seed: u64, eta2: f64, sigma2: f64, xi2: f64) -> SensorField {
    let h = sample_rayleigh(n, 1.0, stream_seed(seed, 101)).unwrap();
    let g = sample_rayleigh(n, 1.0, stream_seed(seed, 102)).unwrap();
    SensorField::new(h, g, eta2, sigma2, xi2).unwrap()
}

pub fn full_topology(n: usize) -> Topology {
    let lists: Vec<Vec<usize>> = (0..n).map(|_| (0..n).collect()).collect();
    Topology::from_neighbor_lists(lists, None).unwrap()
}

/// Dense `Omega` (L x L) and `G` (L x N) in canonical edge order.
pub fn dense_omega_g(field: &SensorField, topo: &Topology) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = field.n_nodes();
    let h = field.h();
    let g = field.effective_channel_gains();
    let ex = DMatrix::from_fn(n, n, |i, j| {
        field.eta2() * h[i] * h[j] + if i == j { field.sigma2() } else { 0.0 }
    });
    let edges: Vec<(usize, usize)> = topo.edges().collect();
    let l = edges.len();
    let omega = DMatrix::from_fn(l, l, |a, b| {
        let (na, ma) = edges[a];
        let (nb, mb) = edges[b];
        if na == nb {
            ex[(ma, mb)]
        } else {
            0.0
        }
    });
    let gmat = DMatrix::from_fn(l, n, |a, k| if edges[a].1 == k { g[edges[a].0] } else { 0.0 });
    (omega, gmat)
}

/// Literal dense evaluation of `J = h'(Sigma + Gamma / E_xi)^-1 h` with
/// `Gamma = (G' Omega^-1 G)^-1`, and of the weights
/// `w = kappa Omega^-1 G Gamma (Sigma + Gamma / E_xi)^-1 h`.
pub fn dense_closed_form(field: &SensorField, topo: &Topology, energy: f64) -> (f64, Vec<f64>) {
    let n = field.n_nodes();
    let (omega, gmat) = dense_omega_g(field, topo);
    let omega_inv = omega.clone().try_inverse().expect("Omega invertible");
    let gamma = (gmat.transpose() * &omega_inv * &gmat)
        .try_inverse()
        .expect("G' Omega^-1 G invertible");
    let e_xi = energy / field.xi2();
    let sigma = DMatrix::identity(n, n) * field.sigma2();
    let inner = (sigma + &gamma / e_xi).try_inverse().expect("invertible");
    let h = DVector::from_column_slice(field.h());
    let j = h.dot(&(&inner * &h));
    let dir = &omega_inv * &gmat * &gamma * &inner * &h;
    let kappa = (energy / dir.dot(&(&omega * &dir))).sqrt();
    (j, (dir * kappa).as_slice().to_vec())
}

/// `(J, E)` of an edge weight vector, straight from the dense matrices.
pub fn dense_metrics(field: &SensorField, topo: &Topology, w: &[f64]) -> (f64, f64) {
    let (omega, gmat) = dense_omega_g(field, topo);
    let w = DVector::from_column_slice(w);
    let h = DVector::from_column_slice(field.h());
    let mu = w.dot(&(&gmat * &h));
    let gw = gmat.transpose() * &w;
    let zeta2 = field.sigma2() * gw.norm_squared() + field.xi2();
    (mu * mu / zeta2, w.dot(&(&omega * &w)))
}

/// Multi-start projected-gradient maximization of `J_W` over A-sparse `W` on
/// the energy ellipsoid `w' Omega w = E`.
///
/// Works in whitened coordinates `u = L' w` with `Omega = L L'`, so the
/// constraint becomes the sphere `|u|^2 = E`. Each start ascends along the
/// tangent gradient with Armijo backtracking and stops once the relative
/// improvement stays below `1e-10`.
pub fn brute_force_fisher(field: &SensorField, topo: &Topology, energy: f64, starts: usize, seed: u64) -> f64 {
    let (omega, gmat) = dense_omega_g(field, topo);
    let chol = omega.cholesky().expect("Omega positive definite");
    let l = chol.l();
    let linv = l.clone().try_inverse().unwrap();
    let h = DVector::from_column_slice(field.h());
    let a = &linv * (&gmat * &h);
    let lg = &linv * &gmat;
    let b = (&lg * lg.transpose()) * field.sigma2();
    let xi2 = field.xi2();
    let fisher = |u: &DVector<f64>| {
        let mu = u.dot(&a);
        mu * mu / (u.dot(&(&b * u)) + xi2)
    };
    let project = |u: DVector<f64>| {
        let s = (energy / u.norm_squared()).sqrt();
        u * s
    };

    let dim = a.len();
    let mut rng = rng_from_seed(seed);
    let mut best = 0.0f64;
    for _ in 0..starts {
        let mut u = project(DVector::from_fn(dim, |_, _| rng.sample(StandardNormal)));
        let mut j = fisher(&u);
        let mut step = 1.0;
        let mut quiet = 0;
        for _ in 0..200_000 {
            let mu = u.dot(&a);
            let bu = &b * &u;
            let zeta2 = u.dot(&bu) + xi2;
            let grad = &a * (2.0 * mu / zeta2) - bu * (2.0 * mu * mu / (zeta2 * zeta2));
            let tangent = &grad - &u * (u.dot(&grad) / energy);
            let slope = tangent.norm_squared();
            if slope == 0.0 {
                break;
            }
            let mut accepted = None;
            for _ in 0..60 {
                let cand = project(&u + &tangent * step);
                let jc = fisher(&cand);
                if jc >= j + 1e-4 * step * slope {
                    accepted = Some((cand, jc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, jc)) = accepted else {
                break;
            };
            let improvement = (jc - j) / j.abs().max(f64::MIN_POSITIVE);
            u = cand;
            j = jc;
            step *= 2.0;
            if improvement < 1e-10 {
                quiet += 1;
                if quiet >= 20 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        best = best.max(j);
    }
    best
}

/// Empirical MSE of `theta_hat = y / (mu (1 + zeta^2 / (eta^2 mu^2)))` over
/// `n_draws` simulated `(theta, observation noise, channel noise)` triples.
pub fn empirical_mmse(field: &SensorField, w: &CollaborationMatrix<'_>, n_draws: usize, seed: u64) -> f64 {
    let topo = w.topology();
    let n = field.n_nodes();
    let h = field.h();
    let g = field.effective_channel_gains();
    // c_m = sum_n g_n W_nm, so y = c'x + u.
    let mut c = vec![0.0; n];
    for (idx, (rcv, src)) in topo.edges().enumerate() {
        c[src] += g[rcv] * w.values()[idx];
    }
    let mu: f64 = c.iter().zip(h).map(|(a, b)| a * b).sum();
    let zeta2 = field.sigma2() * c.iter().map(|v| v * v).sum::<f64>() + field.xi2();
    let scale = 1.0 / (mu * (1.0 + zeta2 / (field.eta2() * mu * mu)));
    let (eta, sigma, xi) = (field.eta2().sqrt(), field.sigma2().sqrt(), field.xi2().sqrt());
    let mut rng = rng_from_seed(seed);
    let mut sq = 0.0;
    for _ in 0..n_draws {
        let theta = eta * rng.sample::<f64, _>(StandardNormal);
        let mut y = xi * rng.sample::<f64, _>(StandardNormal);
        for m in 0..n {
            let x = h[m] * theta + sigma * rng.sample::<f64, _>(StandardNormal);
            y += c[m] * x;
        }
        let err = scale * y - theta;
        sq += err * err;
    }
    sq / n_draws as f64
}
