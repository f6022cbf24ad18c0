//! Angular δ-nets on the sphere and the minimax bound for approximating a
//! relu network by one whose weights point along net directions.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{PnnError, Result};
use crate::lines::{build_line_set, LineSet, ZERO_TOL};
use crate::mc::{mc_mean, McEstimate};
use crate::risk::relu;
use crate::rng;

/// Greedy construction adds probes farther than `NET_BUILD_RATIO·δ`, so the
/// finished net covers at δ with a margin fresh probes cannot miss.
pub const NET_BUILD_RATIO: f64 = 0.9;
/// Total probe budget as a multiple of `max_probes`.
const PROBE_BUDGET_FACTOR: usize = 1000;

/// Unit vectors whose lines come within angle `delta` of every direction.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularNet {
    pub dim: usize,
    pub delta: f64,
    /// d×m matrix of unit columns.
    pub vectors: DMatrix<f64>,
}

impl AngularNet {
    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    /// Angle from `v` to the nearest net direction (either sign) and its index.
    pub fn nearest(&self, v: &DVector<f64>) -> (usize, f64) {
        let vn = v / v.norm();
        let mut best = (0, -1.0);
        for (j, c) in self.vectors.column_iter().enumerate() {
            let a = c.dot(&vn).abs();
            if a > best.1 {
                best = (j, a);
            }
        }
        (best.0, best.1.min(1.0).acos())
    }

    pub fn to_line_set(&self) -> Result<LineSet> {
        build_line_set(&self.vectors.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= FRAC_PI_2 {
        Ok(())
    } else {
        Err(PnnError::DomainError(delta))
    }
}

/// `(1/2)(1 + √2/√(1 − cos δ))ⁿ`.
pub fn net_size_bound(n: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(0.5 * base(delta).powi(n as i32))
}

fn base(delta: f64) -> f64 {
    1.0 + 2f64.sqrt() / (1.0 - delta.cos()).sqrt()
}

/// Net size for s-sparse weights: `(1/2) C(d, s) (…)ˢ`, or `(k/2)(…)ˢ` when the
/// sparsity patterns of the `k` neurons are known.
pub fn sparse_net_size(d: usize, s: usize, delta: f64, k: Option<usize>) -> Result<f64> {
    check_delta(delta)?;
    if s == 0 || s > d {
        return Err(PnnError::ParameterOutOfRange(format!("need 1 <= s <= d, got s={s}, d={d}")));
    }
    let count = match k {
        Some(k) => k as f64,
        None => (0..s).fold(1.0, |acc, i| acc * (d - i) as f64 / (i + 1) as f64),
    };
    Ok(0.5 * count * base(delta).powi(s as i32))
}

fn random_unit(d: usize, g: &mut impl rand::Rng) -> DVector<f64> {
    loop {
        let v: DVector<f64> = DVector::from_fn(d, |_, _| StandardNormal.sample(g));
        let n = v.norm();
        if n > ZERO_TOL {
            return v / n;
        }
    }
}

/// Grow a net from uniform probes until `max_probes` consecutive probes are covered.
pub fn greedy_angular_net(d: usize, delta: f64, seed: u64, max_probes: usize) -> Result<AngularNet> {
    check_delta(delta)?;
    if d == 0 || max_probes == 0 {
        return Err(PnnError::ParameterOutOfRange("d and max_probes must be positive".into()));
    }
    let cos_build = (delta * NET_BUILD_RATIO).cos();
    let mut g = rng::stream(seed, 0);
    let mut net: Vec<DVector<f64>> = Vec::new();
    let mut covered = 0;
    let budget = max_probes.saturating_mul(PROBE_BUDGET_FACTOR);
    for _ in 0..budget {
        let v = random_unit(d, &mut g);
        if net.iter().any(|u| u.dot(&v).abs() >= cos_build) {
            covered += 1;
            if covered >= max_probes {
                let mut vectors = DMatrix::zeros(d, net.len());
                for (j, u) in net.iter().enumerate() {
                    vectors.set_column(j, u);
                }
                return Ok(AngularNet { dim: d, delta, vectors });
            }
        } else {
            let (u, _) = crate::lines::canonicalize_vector(&v)?;
            net.push(u);
            covered = 0;
        }
    }
    Err(PnnError::CoverageNotReached(budget))
}

/// Largest angle from `n_probes` uniform probes to the net.
pub fn coverage_gap(net: &AngularNet, n_probes: usize, seed: u64) -> f64 {
    const CHUNK: usize = 4096;
    (0..n_probes.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut g = rng::stream(seed, c as u64);
            let count = CHUNK.min(n_probes - c * CHUNK);
            (0..count).map(|_| net.nearest(&random_unit(net.dim, &mut g)).1).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Replace each column of `w_star` by the nearest net direction with the same norm.
/// Returns the approximation and the largest matching angle.
pub fn nearest_net_approx(w_star: &DMatrix<f64>, net: &AngularNet) -> Result<(DMatrix<f64>, f64)> {
    if net.is_empty() {
        return Err(PnnError::ParameterOutOfRange("empty net".into()));
    }
    if w_star.nrows() != net.dim {
        return Err(PnnError::DimensionMismatch(format!("weights have dim {}, net {}", w_star.nrows(), net.dim)));
    }
    let mut out = DMatrix::zeros(w_star.nrows(), w_star.ncols());
    let mut max_angle = 0.0f64;
    for (j, c) in w_star.column_iter().enumerate() {
        let n = c.norm();
        if n <= ZERO_TOL {
            continue;
        }
        let c = c.into_owned();
        let (i, angle) = net.nearest(&c);
        let u = net.vectors.column(i);
        let sign = if u.dot(&c) < 0.0 { -1.0 } else { 1.0 };
        out.set_column(j, &(u * (sign * n)));
        max_angle = max_angle.max(angle);
    }
    Ok((out, max_angle))
}

/// `k M √(2d(1 − cos δ))`.
pub fn minimax_risk_bound(k: usize, m: f64, d: usize, delta: f64) -> f64 {
    k as f64 * m * (2.0 * d as f64 * (1.0 - delta.cos())).sqrt()
}

/// `(|relu(w1ᵀx) − relu(w2ᵀx)|, ‖w1 − w2‖‖x‖)`.
pub fn relu_gap(w1: &DVector<f64>, w2: &DVector<f64>, x: &DVector<f64>) -> (f64, f64) {
    ((relu(w1.dot(x)) - relu(w2.dot(x))).abs(), (w1 - w2).norm() * x.norm())
}

/// Monte Carlo estimate of `E|h(x; W) − h(x; W̃)|`.
pub fn mc_abs_error(w: &DMatrix<f64>, w_tilde: &DMatrix<f64>, n_samples: usize, seed: u64) -> Result<McEstimate> {
    if w.nrows() != w_tilde.nrows() {
        return Err(PnnError::DimensionMismatch("dims differ".into()));
    }
    let out = |m: &DMatrix<f64>, x: &[f64]| -> f64 {
        m.column_iter().map(|c| relu(c.iter().zip(x).map(|(a, b)| a * b).sum())).sum()
    };
    mc_mean(w.nrows(), n_samples, seed, |x| (out(w, x) - out(w_tilde, x)).abs())
}
