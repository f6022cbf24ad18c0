//! Region classification, optimality certificates, gradients and the
//! stationary points of sign-consistent ("bad") regions.

use nalgebra::{DMatrix, DVector};

use crate::error::{PnnError, Result};
use crate::kernel::{min_eigenvalue, psi_apply, KernelBundle};
use crate::lines::{LineSign, PnnWeights, RegionSignature, ZERO_TOL};
use crate::linalg;
use crate::risk::truncated_covariance;

/// Threshold on λ_min(ψ[K_L]) for treating the kernel as positive definite.
pub const PD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    OnlyGlobal,
    OnlyBadLocal,
    NoOptima,
    MayHaveBadLocal,
    GoodRegion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionClassification {
    pub label: RegionLabel,
    /// Lines whose neurons do not have mixed signs.
    pub witness: Vec<usize>,
}

/// Sign of a scalar weight: +1 for positive or zero, −1 for negative.
fn scalar_sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn all_equal(s: &[f64]) -> bool {
    s.windows(2).all(|p| p[0] == p[1])
}

/// Which optima the orthant `R(s)` of a scalar network contains, given the target `w*`.
pub fn scalar_region_classify(s: &[f64], w_star: &[f64]) -> RegionClassification {
    let target: Vec<f64> = w_star.iter().map(|&x| scalar_sign(x)).collect();
    let label = if !all_equal(&target) {
        if all_equal(s) {
            RegionLabel::OnlyBadLocal
        } else {
            RegionLabel::OnlyGlobal
        }
    } else if all_equal(s) && s.first() == target.first() {
        RegionLabel::OnlyGlobal
    } else {
        RegionLabel::NoOptima
    };
    RegionClassification { label, witness: Vec::new() }
}

/// Hessian `(1/2)·11ᵀ + (1/2)·ssᵀ` of the scalar risk inside `R(s)`, with its numerical rank.
pub fn scalar_hessian(s: &[f64]) -> (DMatrix<f64>, usize) {
    let k = s.len();
    let h = DMatrix::from_fn(k, k, |i, j| 0.5 + 0.5 * s[i] * s[j]);
    let eig = linalg::sym_eigenvalues(&h);
    let top = eig.last().copied().unwrap_or(0.0);
    let rank = eig.iter().filter(|&&l| l > 1e-12 * top.max(1.0)).count();
    (h, rank)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalCheck {
    pub is_global: bool,
    /// `‖Σw − Σw*‖`.
    pub sum_residual: f64,
    /// `‖q − q*‖`.
    pub mass_residual: f64,
    /// λ_min(ψ[K_L]) > `PD_TOL`; when false the check is sufficient only.
    pub kernel_pd: bool,
}

/// Test the two global-optimality conditions `Σw = Σw*` and `q = q*`.
pub fn global_optimum_check(w: &PnnWeights, w_star: &PnnWeights, tol: f64) -> Result<GlobalCheck> {
    if w.config() != w_star.config() {
        return Err(PnnError::ConfigMismatch);
    }
    let sum_residual = (w.column_sum() - w_star.column_sum()).norm();
    let mass_residual = (w.decompose().0 - w_star.decompose().0).norm();
    let kernel_pd = min_eigenvalue(&psi_apply(w.lines().gram())?)? > PD_TOL;
    Ok(GlobalCheck { is_global: sum_residual <= tol && mass_residual <= tol, sum_residual, mass_residual, kernel_pd })
}

/// At least `d` lines carry neurons of both signs.
pub fn region_condition(signature: &RegionSignature, d: usize) -> bool {
    signature.mixed_lines().len() >= d
}

pub fn classify_region(signature: &RegionSignature, d: usize) -> RegionClassification {
    let witness = (0..signature.summary.len()).filter(|&l| signature.summary[l] != LineSign::Mixed).collect();
    let label = if region_condition(signature, d) { RegionLabel::GoodRegion } else { RegionLabel::MayHaveBadLocal };
    RegionClassification { label, witness }
}

/// Probability that uniformly random signs on `r` lines with `t` neurons each
/// leave at least `d` lines mixed.
pub fn good_region_probability(r: usize, d: usize, t: usize) -> f64 {
    if t == 0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    let p = 1.0 - 2f64.powi(1 - t as i32);
    let mut tail = 0.0;
    let mut binom = 1.0;
    for i in 0..d.min(r + 1) {
        if i > 0 {
            binom *= (r - i + 1) as f64 / i as f64;
        }
        tail += binom * p.powi(i as i32) * (1.0 - p).powi((r - i) as i32);
    }
    (1.0 - tail).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// d×k gradient of the population risk.
    pub full: DMatrix<f64>,
    /// `⟨∇_{w_j} L, u_{g(j)}⟩`, the derivative along each neuron's line.
    pub projected: Vec<f64>,
}

/// Exact gradient of the population risk against a target with columns `w_star`:
/// `∇_{w_j} L = 2 Σ_i T(w_i, w_j) w_i − 2 Σ_i T(w*_i, w_j) w*_i`, where `T` is the
/// truncated covariance.
pub fn analytic_gradient(w: &PnnWeights, w_star: &DMatrix<f64>) -> Result<Gradient> {
    let m = w.matrix();
    if w_star.nrows() != m.nrows() {
        return Err(PnnError::DimensionMismatch(format!("dims {} and {}", m.nrows(), w_star.nrows())));
    }
    let (d, k) = (m.nrows(), m.ncols());
    let mut full = DMatrix::zeros(d, k);
    for j in 0..k {
        let wj = m.column(j).into_owned();
        if wj.norm() <= ZERO_TOL {
            return Err(PnnError::ZeroColumn(j));
        }
        let mut g = DVector::zeros(d);
        for (src, sign) in [(m, 2.0), (w_star, -2.0)] {
            for c in src.column_iter() {
                if c.norm() <= ZERO_TOL {
                    continue;
                }
                let c = c.into_owned();
                g += truncated_covariance(&c, &wj)? * &c * sign;
            }
        }
        full.set_column(j, &g);
    }
    let u = w.lines().unit_vectors();
    let projected = (0..k).map(|j| u.column(w.config().map.line_of(j)).dot(&full.column(j))).collect();
    Ok(Gradient { full, projected })
}

/// Every projected gradient component is within `tol` of zero.
pub fn stationarity_check(w: &PnnWeights, w_star: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let g = analytic_gradient(w, w_star)?;
    Ok(g.projected.iter().all(|x| x.abs() <= tol))
}

/// Stationary point of a region where every line has a single sign.
#[derive(Debug, Clone, PartialEq)]
pub struct BadRegionStationary {
    /// `z = Σw − Σw*`.
    pub z: DVector<f64>,
    /// Per-line masses solving the stationarity condition.
    pub q: DVector<f64>,
}

fn check_signs(signs: &[f64], r: usize) -> Result<DMatrix<f64>> {
    if signs.len() != r {
        return Err(PnnError::DimensionMismatch(format!("{} signs for {r} lines", signs.len())));
    }
    if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(PnnError::ParameterOutOfRange("line signs must be +1 or -1".into()));
    }
    Ok(DMatrix::from_diagonal(&DVector::from_column_slice(signs)))
}

/// Closed form for `z` and `q` at a stationary point of the region with
/// per-line signs `signs`, where `w0 = Σw*`:
///
/// `q = (SUᵀUS + D11)† (SUᵀw0 + D12 q*)`
/// `z = −(USSᵀUᵀ)⁻¹ US [D11 P† SUᵀ w0 + (D11 P† − I) D12 q*]`, `P = SUᵀUS + D11`.
pub fn bad_region_z(bundle: &KernelBundle, signs: &[f64], q_star: &DVector<f64>, w0: &DVector<f64>) -> Result<BadRegionStationary> {
    let u = bundle.lines.unit_vectors();
    let r = u.ncols();
    if q_star.len() != bundle.r_star() || w0.len() != u.nrows() {
        return Err(PnnError::DimensionMismatch("q* or w0 has the wrong length".into()));
    }
    let s = check_signs(signs, r)?;
    let us = u * &s;
    let projector = &us * us.transpose();
    let proj_inv = linalg::sym_inverse_checked(&projector, PnnError::SingularProjector)?;
    let d11 = &bundle.psi_ll;
    let p_pinv = linalg::pinv_sym(&(us.transpose() * &us + d11));
    let sutw0 = us.transpose() * w0;
    let rhs = d11 * &p_pinv * &sutw0 + (d11 * &p_pinv - DMatrix::identity(r, r)) * (&bundle.psi_cross * q_star);
    let z = -(proj_inv * (&us * rhs));
    let q = p_pinv * (sutw0 + &bundle.psi_cross * q_star);
    Ok(BadRegionStationary { z, q })
}

/// Residual `SUᵀz + D11 q − D12 q*` of the stationarity condition.
pub fn bad_region_residual(bundle: &KernelBundle, signs: &[f64], q_star: &DVector<f64>, st: &BadRegionStationary) -> Result<DVector<f64>> {
    let s = check_signs(signs, bundle.r())?;
    let us = bundle.lines.unit_vectors() * s;
    Ok(us.transpose() * &st.z + &bundle.psi_ll * &st.q - &bundle.psi_cross * q_star)
}

/// Loss at a stationary point of the all-positive region with `Σw* = 0`:
/// `(1/4) q*ᵀ (D22 − D12ᵀ (D11 + UᵀU)⁻¹ D12) q*`.
pub fn bad_region_loss(bundle: &KernelBundle, q_star: &DVector<f64>) -> Result<f64> {
    bad_region_loss_signed(bundle, &vec![1.0; bundle.r()], q_star)
}

/// As [`bad_region_loss`] with per-line signs, so the augmented block is `D11 + SUᵀUS`.
pub fn bad_region_loss_signed(bundle: &KernelBundle, signs: &[f64], q_star: &DVector<f64>) -> Result<f64> {
    if q_star.len() != bundle.r_star() {
        return Err(PnnError::DimensionMismatch("q* has the wrong length".into()));
    }
    let s = check_signs(signs, bundle.r())?;
    if min_eigenvalue(&bundle.psi_ll)? <= PD_TOL {
        return Err(PnnError::SingularKernel);
    }
    let us = bundle.lines.unit_vectors() * s;
    let aug = &bundle.psi_ll + us.transpose() * &us;
    let x = linalg::spd_solve(&aug, &bundle.psi_cross)?;
    let schur = &bundle.psi_star - bundle.psi_cross.transpose() * x;
    Ok(0.25 * q_star.dot(&(schur * q_star)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lines::{random_line_set, LineConfig, NeuronLineMap};
    use crate::risk::{matched_risk, scalar_risk};

    #[test]
    fn scalar_regions_for_known_targets() {
        use RegionLabel::*;
        assert_eq!(scalar_region_classify(&[1.0, 1.0], &[6.0, -4.0]).label, OnlyBadLocal);
        assert_eq!(scalar_region_classify(&[-1.0, -1.0], &[6.0, -4.0]).label, OnlyBadLocal);
        assert_eq!(scalar_region_classify(&[1.0, -1.0], &[6.0, -4.0]).label, OnlyGlobal);
        assert_eq!(scalar_region_classify(&[-1.0, 1.0], &[6.0, -4.0]).label, OnlyGlobal);
        assert_eq!(scalar_region_classify(&[1.0, 1.0], &[6.0, 4.0]).label, OnlyGlobal);
        assert_eq!(scalar_region_classify(&[1.0, -1.0], &[6.0, 4.0]).label, NoOptima);
        assert_eq!(scalar_region_classify(&[-1.0, -1.0], &[6.0, 4.0]).label, NoOptima);
    }

    #[test]
    fn hessian_examples() {
        let (h, rank) = scalar_hessian(&[1.0, 1.0]);
        assert_eq!(h, DMatrix::from_element(2, 2, 1.0));
        assert_eq!(rank, 1);
        let (h, rank) = scalar_hessian(&[1.0, -1.0]);
        assert_eq!(h, DMatrix::identity(2, 2));
        assert_eq!(rank, 2);
        let (h, rank) = scalar_hessian(&[1.0, -1.0, -1.0, 1.0, 1.0]);
        assert_eq!(rank, 2);
        assert!(linalg::sym_eigenvalues(&h)[0] >= -1e-12);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let ws = [2.0, -1.0, 0.5];
        let w = [0.7, -0.4, -1.3];
        let s: Vec<f64> = w.iter().map(|&x| scalar_sign(x)).collect();
        let (h, _) = scalar_hessian(&s);
        let f = |v: &[f64]| scalar_risk(v, &ws).total;
        let e = 1e-4;
        for i in 0..3 {
            for j in 0..3 {
                let mut v = w.to_vec();
                let at = |v: &mut Vec<f64>, a: f64, b: f64| {
                    let mut x = v.clone();
                    x[i] += a;
                    x[j] += b;
                    f(&x)
                };
                let fd = (at(&mut v, e, e) - at(&mut v, e, -e) - at(&mut v, -e, e) + at(&mut v, -e, -e)) / (4.0 * e * e);
                assert!((fd - h[(i, j)]).abs() < 1e-6, "({i},{j}) {fd}");
            }
        }
    }

    #[test]
    fn global_checks() {
        let cfg = LineConfig::new(random_line_set(1, 1, 0).unwrap(), NeuronLineMap::round_robin(2, 1).unwrap()).unwrap();
        let w = PnnWeights::from_signed_norms(cfg.clone(), &[5.0, 5.0]).unwrap();
        let ws = PnnWeights::from_signed_norms(cfg, &[6.0, 4.0]).unwrap();
        let g = global_optimum_check(&w, &ws, 1e-12).unwrap();
        assert!(g.is_global && g.kernel_pd);

        let cfg = LineConfig::new(random_line_set(4, 3, 1).unwrap(), NeuronLineMap::round_robin(6, 3).unwrap()).unwrap();
        let ws = PnnWeights::from_signed_norms(cfg.clone(), &[1.0, -0.5, 0.3, 0.8, 0.2, -1.1]).unwrap();
        let g = global_optimum_check(&ws, &ws, 0.0).unwrap();
        assert_eq!((g.is_global, g.sum_residual, g.mass_residual), (true, 0.0, 0.0));
        let w = PnnWeights::from_signed_norms(cfg, &[0.2, -0.5, 0.3, 0.8, 0.2, -1.1]).unwrap();
        assert!(!global_optimum_check(&w, &ws, 1e-9).unwrap().is_global);
        assert!(matched_risk(&w, &ws).unwrap().total > 0.0);
    }

    #[test]
    fn region_condition_counts_mixed_lines() {
        let sig = |summary: Vec<LineSign>| RegionSignature { signs: vec![], zero: vec![], summary };
        use LineSign::*;
        assert!(region_condition(&sig(vec![Mixed, AllPlus, Mixed, Mixed, AllMinus]), 2));
        assert!(!region_condition(&sig(vec![AllPlus; 4]), 1));
        let c = classify_region(&sig(vec![Mixed, AllPlus, Zero]), 2);
        assert_eq!(c.label, RegionLabel::MayHaveBadLocal);
        assert_eq!(c.witness, vec![1, 2]);
    }

    #[test]
    fn good_region_probability_edges() {
        assert_eq!(good_region_probability(5, 0, 2), 1.0);
        assert_eq!(good_region_probability(5, 6, 2), 0.0);
        // t = 1: a single neuron is never mixed.
        assert_eq!(good_region_probability(5, 1, 1), 0.0);
        let p: f64 = 0.5;
        assert!((good_region_probability(3, 1, 2) - (1.0 - (1.0 - p).powi(3))).abs() < 1e-15);
    }

    #[test]
    fn scalar_stationary_points() {
        let cfg = LineConfig::new(random_line_set(1, 1, 0).unwrap(), NeuronLineMap::round_robin(2, 1).unwrap()).unwrap();
        let ws = DMatrix::from_row_slice(1, 2, &[6.0, -4.0]);
        let bad = PnnWeights::from_signed_norms(cfg.clone(), &[3.0, 3.0]).unwrap();
        assert!(stationarity_check(&bad, &ws, 1e-9).unwrap());
        let other = PnnWeights::from_signed_norms(cfg.clone(), &[2.0, 3.0]).unwrap();
        assert!(!stationarity_check(&other, &ws, 1e-3).unwrap());
        let zero = PnnWeights::from_signed_norms(cfg, &[0.0, 3.0]).unwrap();
        assert_eq!(analytic_gradient(&zero, &ws), Err(PnnError::ZeroColumn(0)));
    }

    #[test]
    fn bad_region_zero_target() {
        let a = random_line_set(3, 5, 2).unwrap();
        let b = random_line_set(3, 2, 3).unwrap();
        let kb = KernelBundle::new(&a, &b).unwrap();
        let st = bad_region_z(&kb, &[1.0; 5], &DVector::zeros(2), &DVector::zeros(3)).unwrap();
        assert_eq!(st.z, DVector::zeros(3));
        assert_eq!(bad_region_loss(&kb, &DVector::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn bad_region_singular_projector() {
        // Two lines in d = 3 cannot span the space.
        let a = random_line_set(3, 2, 2).unwrap();
        let kb = KernelBundle::new(&a, &a).unwrap();
        let err = bad_region_z(&kb, &[1.0, 1.0], &DVector::from_vec(vec![1.0, 1.0]), &DVector::zeros(3));
        assert_eq!(err, Err(PnnError::SingularProjector));
    }
}
