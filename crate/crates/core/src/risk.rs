//! Population risk `L(W) = E[(h(x; W) − h(x; W*))²]` for x ~ N(0, I), where
//! `h(x; W) = Σ_i relu(w_iᵀx)`.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{PnnError, Result};
use crate::kernel::{psi_apply, KernelBundle};
use crate::lines::{NeuronLineMap, PnnWeights, FEASIBILITY_TOL, ZERO_TOL};
use crate::mc::{mc_mean, McEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskBreakdown {
    /// `(1/4)‖Σw − Σw*‖²`.
    pub linear_term: f64,
    /// The part quadratic in the per-line masses.
    pub kernel_term: f64,
    pub total: f64,
}

impl RiskBreakdown {
    fn new(linear_term: f64, kernel_term: f64) -> Self {
        RiskBreakdown { linear_term, kernel_term, total: linear_term + kernel_term }
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn output_unchecked(x: &[f64], w: &DMatrix<f64>) -> f64 {
    let mut h = 0.0;
    for c in w.column_iter() {
        let mut s = 0.0;
        for (a, b) in c.iter().zip(x) {
            s += a * b;
        }
        h += relu(s);
    }
    h
}

/// `Σ_i relu(w_iᵀx)`.
pub fn network_output(x: &DVector<f64>, w: &DMatrix<f64>) -> Result<f64> {
    if x.len() != w.nrows() {
        return Err(PnnError::DimensionMismatch(format!("x has dim {}, weights {}", x.len(), w.nrows())));
    }
    Ok(output_unchecked(x.as_slice(), w))
}

/// Monte Carlo estimate of the population risk with its standard error.
pub fn monte_carlo_risk(w: &DMatrix<f64>, w_star: &DMatrix<f64>, n_samples: usize, seed: u64) -> Result<McEstimate> {
    if w.nrows() != w_star.nrows() {
        return Err(PnnError::DimensionMismatch(format!("dims {} and {}", w.nrows(), w_star.nrows())));
    }
    mc_mean(w.nrows(), n_samples, seed, |x| {
        let e = output_unchecked(x, w) - output_unchecked(x, w_star);
        e * e
    })
}

/// Risk of a network with scalar input.
pub fn scalar_risk(w: &[f64], w_star: &[f64]) -> RiskBreakdown {
    let s: f64 = w.iter().sum::<f64>() - w_star.iter().sum::<f64>();
    let a: f64 = w.iter().map(|x| x.abs()).sum::<f64>() - w_star.iter().map(|x| x.abs()).sum::<f64>();
    RiskBreakdown::new(0.25 * s * s, 0.25 * a * a)
}

/// The matrix `C` of degree-one networks: unit diagonal, `2/π` elsewhere.
pub fn degree_one_c(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { FRAC_2_PI })
}

/// Risk when neuron `j` of both networks sits on the coordinate axis `map(j)`.
pub fn degree_one_risk(w: &DMatrix<f64>, w_star: &DMatrix<f64>, map: &NeuronLineMap) -> Result<RiskBreakdown> {
    let d = w.nrows();
    if w_star.nrows() != d || w.ncols() != map.num_neurons() || w_star.ncols() != map.num_neurons() {
        return Err(PnnError::DimensionMismatch("weights and map disagree".into()));
    }
    if map.num_lines() != d {
        return Err(PnnError::DimensionMismatch(format!("map has {} axes, d = {d}", map.num_lines())));
    }
    let masses = |m: &DMatrix<f64>| -> Result<DVector<f64>> {
        let mut q = DVector::zeros(d);
        for (j, c) in m.column_iter().enumerate() {
            let axis = map.line_of(j);
            let off: f64 = c.iter().enumerate().filter(|&(i, _)| i != axis).map(|(_, x)| x * x).sum::<f64>().sqrt();
            if off > FEASIBILITY_TOL * c[axis].abs().max(1.0) {
                return Err(PnnError::InfeasibleWeights { neuron: j, deviation: off });
            }
            q[axis] += c[axis].abs();
        }
        Ok(q)
    };
    let dq = masses(w)? - masses(w_star)?;
    let z = w.column_sum() - w_star.column_sum();
    let c = degree_one_c(d);
    Ok(RiskBreakdown::new(0.25 * z.norm_squared(), 0.25 * dq.dot(&(c * &dq))))
}

/// Risk of two networks on the same line configuration.
pub fn matched_risk(w: &PnnWeights, w_star: &PnnWeights) -> Result<RiskBreakdown> {
    if w.config() != w_star.config() {
        return Err(PnnError::ConfigMismatch);
    }
    let (q, _) = w.decompose();
    let (q_star, _) = w_star.decompose();
    let dq = q - q_star;
    let psi_k = psi_apply(w.lines().gram())?;
    let z = w.column_sum() - w_star.column_sum();
    Ok(RiskBreakdown::new(0.25 * z.norm_squared(), 0.25 * dq.dot(&(psi_k * &dq))))
}

/// Risk of a network on lines `L` against a target on possibly different lines `L*`.
pub fn mismatched_risk(w: &PnnWeights, w_star: &PnnWeights) -> Result<RiskBreakdown> {
    if w.dim() != w_star.dim() {
        return Err(PnnError::DimensionMismatch(format!("dims {} and {}", w.dim(), w_star.dim())));
    }
    let bundle = KernelBundle::new(w.lines(), w_star.lines())?;
    let (q, _) = w.decompose();
    let (q_star, _) = w_star.decompose();
    let z = w.column_sum() - w_star.column_sum();
    Ok(mismatched_risk_parts(&bundle, &z, &q, &q_star))
}

/// Mismatched risk from precomputed pieces: `z = Σw − Σw*` and the masses.
pub fn mismatched_risk_parts(bundle: &KernelBundle, z: &DVector<f64>, q: &DVector<f64>, q_star: &DVector<f64>) -> RiskBreakdown {
    let kernel = 0.25 * q.dot(&(&bundle.psi_ll * q)) + 0.25 * q_star.dot(&(&bundle.psi_star * q_star))
        - 0.5 * q.dot(&(&bundle.psi_cross * q_star));
    RiskBreakdown::new(0.25 * z.norm_squared(), kernel)
}

/// Angle between two nonzero vectors, accurate near 0 and π.
pub fn angle_between(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let a = a / a.norm();
    let b = b / b.norm();
    2.0 * (&a - &b).norm().atan2((&a + &b).norm())
}

/// `E[1{w1ᵀx > 0, w2ᵀx > 0} x xᵀ]` for x ~ N(0, I).
pub fn truncated_covariance(w1: &DVector<f64>, w2: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = w1.len();
    if w2.len() != d {
        return Err(PnnError::DimensionMismatch(format!("dims {d} and {}", w2.len())));
    }
    let (n1, n2) = (w1.norm(), w2.norm());
    if n1 <= ZERO_TOL || n2 <= ZERO_TOL {
        return Err(PnnError::ZeroVector);
    }
    let a = w1 / n1;
    let b = w2 / n2;
    let theta = angle_between(&a, &b);
    let mut t = DMatrix::identity(d, d) * ((PI - theta) / (2.0 * PI));
    let v = &b - &a * a.dot(&b);
    let vn = v.norm();
    if vn > 0.0 && theta > 0.0 && theta < PI {
        let (s, c) = theta.sin_cos();
        let v = v / vn;
        let sin_m = (&a * a.transpose() - &v * v.transpose()) * (s * c) + (&a * v.transpose() + &v * a.transpose()) * (s * s);
        t += sin_m / (2.0 * PI);
    }
    Ok(t)
}

/// `E[relu(aᵀx) relu(bᵀx)] = ‖a‖‖b‖ (sin θ + (π − θ) cos θ) / 2π`.
pub fn relu_kernel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na <= ZERO_TOL || nb <= ZERO_TOL {
        return 0.0;
    }
    let theta = angle_between(a, b);
    na * nb * (theta.sin() + (PI - theta) * theta.cos()) / (2.0 * PI)
}

/// Exact population risk for arbitrary weight matrices, summed pairwise.
pub fn population_risk(w: &DMatrix<f64>, w_star: &DMatrix<f64>) -> Result<f64> {
    if w.nrows() != w_star.nrows() {
        return Err(PnnError::DimensionMismatch(format!("dims {} and {}", w.nrows(), w_star.nrows())));
    }
    let cols = |m: &DMatrix<f64>| m.column_iter().map(|c| c.into_owned()).collect::<Vec<DVector<f64>>>();
    let (a, b) = (cols(w), cols(w_star));
    let gram = |x: &[DVector<f64>], y: &[DVector<f64>]| -> f64 {
        x.iter().map(|u| y.iter().map(|v| relu_kernel(u, v)).sum::<f64>()).sum()
    };
    Ok(gram(&a, &a) - 2.0 * gram(&a, &b) + gram(&b, &b))
}
