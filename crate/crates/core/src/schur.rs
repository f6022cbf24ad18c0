//! Generalized Schur complements `ψ[K]/ψ[K_L]` and the approximation bounds
//! built on them.

use std::f64::consts::FRAC_2_PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{PnnError, Result};
use crate::kernel::{min_eigenvalue, psi, KernelBundle};
use crate::landscape::PD_TOL;
use crate::lines::{canonicalize_vector, random_line_set, LineSet, COLLINEARITY_TOL};
use crate::linalg::{self, PINV_RTOL};
use crate::rng::derive_seed;

/// `1 − 2/π`.
pub const ONE_MINUS_2_PI: f64 = 1.0 - FRAC_2_PI;

#[derive(Debug, Clone, PartialEq)]
pub struct SchurReport {
    pub schur: DMatrix<f64>,
    pub spectral_norm: f64,
    pub min_eigenvalue: f64,
}

impl SchurReport {
    fn from_matrix(schur: DMatrix<f64>) -> SchurReport {
        let schur = linalg::symmetrize(&schur);
        let eig = linalg::sym_eigenvalues(&schur);
        let min_eigenvalue = eig.first().copied().unwrap_or(0.0);
        let spectral_norm = eig.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        SchurReport { schur, spectral_norm, min_eigenvalue }
    }

    /// `(exact, upper_bound)` = `((1/4) q*ᵀ S q*, (1/4)‖q*‖² ‖S‖)`.
    pub fn good_local_loss(&self, q_star: &DVector<f64>) -> Result<(f64, f64)> {
        good_local_loss(self, q_star)
    }
}

/// `ψ[K_{L*}] − ψ[K_{L,L*}]ᵀ ψ[K_L]† ψ[K_{L,L*}]`.
pub fn schur_complement(bundle: &KernelBundle) -> SchurReport {
    // Block elimination with the Cholesky factor of ψ[K_L] when it is positive
    // definite: ψ[K*] − WᵀW with W = C⁻¹ψ[K_{L,L*}]. This stays accurate for
    // badly conditioned kernels (lines at small angles), where dividing by
    // tiny eigenvalues would not.
    if let Some(chol) = linalg::symmetrize(&bundle.psi_ll).cholesky() {
        if let Some(w) = chol.l().solve_lower_triangular(&bundle.psi_cross) {
            if w.iter().all(|x| x.is_finite()) {
                return SchurReport::from_matrix(&bundle.psi_star - w.transpose() * &w);
            }
        }
    }
    // Otherwise the pseudo-inverse: with ψ[K_L] = V Λ Vᵀ, subtract BᵀB for
    // B = Λ^{-1/2} Vᵀ ψ[K_{L,L*}] over the retained eigenpairs.
    let eig = linalg::sym_eigen(&bundle.psi_ll);
    let smax = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut schur = bundle.psi_star.clone();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > PINV_RTOL * smax {
            let row = eig.eigenvectors.column(k).transpose() * &bundle.psi_cross;
            schur -= row.transpose() * &row / lam;
        }
    }
    SchurReport::from_matrix(schur)
}

pub fn good_local_loss(report: &SchurReport, q_star: &DVector<f64>) -> Result<(f64, f64)> {
    if q_star.len() != report.schur.nrows() {
        return Err(PnnError::DimensionMismatch(format!("q* has {} entries, Schur is {}", q_star.len(), report.schur.nrows())));
    }
    if q_star.iter().any(|&x| x < 0.0) {
        return Err(PnnError::NegativeMass);
    }
    let exact = 0.25 * q_star.dot(&(&report.schur * q_star));
    Ok((exact, 0.25 * q_star.norm_squared() * report.spectral_norm))
}

/// Result of adding one line to `L`.
#[derive(Debug, Clone)]
pub struct LineAddition {
    pub report: SchurReport,
    pub alpha: f64,
    pub v: DVector<f64>,
    /// The bundle for `L ∪ {new}` against the same `L*`.
    pub bundle: KernelBundle,
}

/// Rank-one downdate of the Schur complement when `new_line` joins `L`:
/// `new = old − α v vᵀ`, `α = (1 − ⟨ψ[z1], ψ[K_L]⁻¹ ψ[z1]⟩)⁻¹`,
/// `v = ψ[z2] − ψ[K_{L,L*}]ᵀ ψ[K_L]⁻¹ ψ[z1]`, with `z1 = U_Lᵀu`, `z2 = U_{L*}ᵀu`.
pub fn add_line_update(report: &SchurReport, bundle: &KernelBundle, new_line: &DVector<f64>) -> Result<LineAddition> {
    let (u, _) = canonicalize_vector(new_line)?;
    let ul = bundle.lines.unit_vectors();
    if u.len() != ul.nrows() {
        return Err(PnnError::DimensionMismatch(format!("new line has dim {}, lines {}", u.len(), ul.nrows())));
    }
    let r = ul.ncols();
    let z1 = ul.transpose() * &u;
    if let Some(i) = z1.iter().position(|x| x.abs() >= 1.0 - COLLINEARITY_TOL) {
        return Err(PnnError::DuplicateLine(i, r));
    }
    if min_eigenvalue(&bundle.psi_ll)? <= PD_TOL {
        return Err(PnnError::SingularKernel);
    }
    let psi_vec = |z: DVector<f64>| -> Result<DVector<f64>> {
        z.iter().map(|&x| psi(x.clamp(-1.0, 1.0))).collect::<Result<Vec<_>>>().map(DVector::from_vec)
    };
    let pz1 = psi_vec(z1)?;
    let pz2 = psi_vec(bundle.lines_star.unit_vectors().transpose() * &u)?;
    let y = linalg::spd_solve_vec(&bundle.psi_ll, &pz1)?;
    let denom = 1.0 - pz1.dot(&y);
    if !(denom > 0.0) {
        return Err(PnnError::SingularKernel);
    }
    let alpha = 1.0 / denom;
    let v = pz2 - bundle.psi_cross.transpose() * y;
    let next = SchurReport::from_matrix(&report.schur - &v * v.transpose() * alpha);
    let bundle = KernelBundle::new(&bundle.lines.with_line(&u)?, &bundle.lines_star)?;
    Ok(LineAddition { report: next, alpha, v, bundle })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearestLines {
    pub lines: LineSet,
    /// Index into `L` chosen for each line of `L*`.
    pub indices: Vec<usize>,
    /// How many lines of `L*` had their first choice taken already.
    pub exclusions: usize,
}

/// For each line of `L*`, the closest line of `L` (up to orientation), taking
/// lines greedily in `L*` order without reuse.
pub fn nearest_line_subset(l: &LineSet, l_star: &LineSet) -> Result<NearestLines> {
    if l.len() < l_star.len() {
        return Err(PnnError::ParameterOutOfRange(format!("need r >= r*, got {} < {}", l.len(), l_star.len())));
    }
    let c = crate::lines::cross_gram(l, l_star)?;
    let mut used = vec![false; l.len()];
    let mut indices = Vec::with_capacity(l_star.len());
    let mut exclusions = 0;
    for i in 0..l_star.len() {
        let best = |free_only: bool| {
            (0..l.len())
                .filter(|&j| !free_only || !used[j])
                .max_by(|&a, &b| c[(a, i)].abs().total_cmp(&c[(b, i)].abs()).then(b.cmp(&a)))
                .expect("r >= r*")
        };
        let first = best(false);
        let pick = if used[first] {
            exclusions += 1;
            best(true)
        } else {
            first
        };
        used[pick] = true;
        indices.push(pick);
    }
    let cols: Vec<DVector<f64>> = indices.iter().map(|&j| l.line(j)).collect();
    Ok(NearestLines { lines: crate::lines::build_line_set(&cols)?, indices, exclusions })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReference {
    /// `(2/π + 1/(πd))·11ᵀ + (1 − 2/π)·I`, r×r.
    pub matrix: DMatrix<f64>,
    /// `(1 + r*/r)(1 − 2/π)`.
    pub limit: f64,
    /// `(value, multiplicity)` pairs of the matrix spectrum.
    pub eigenvalues: Vec<(f64, usize)>,
}

pub fn asymptotic_reference(d: usize, r: usize, r_star: usize) -> Result<AsymptoticReference> {
    if d == 0 || r == 0 || r_star == 0 {
        return Err(PnnError::ParameterOutOfRange("d, r and r* must be positive".into()));
    }
    let (df, rf) = (d as f64, r as f64);
    let off = FRAC_2_PI + 1.0 / (std::f64::consts::PI * df);
    let matrix = DMatrix::from_element(r, r, off) + DMatrix::identity(r, r) * ONE_MINUS_2_PI;
    let gamma = rf / df;
    let top = FRAC_2_PI * rf + ONE_MINUS_2_PI + gamma / std::f64::consts::PI;
    let mut eigenvalues = vec![(top, 1)];
    if r > 1 {
        eigenvalues.insert(0, (ONE_MINUS_2_PI, r - 1));
    }
    Ok(AsymptoticReference { matrix, limit: normalized_loss_bound(r, r_star), eigenvalues })
}

/// Asymptotic bound `(1 + r*/r)(1 − 2/π)` on `L(W)/L(W = 0)` at a good local optimum.
pub fn normalized_loss_bound(r: usize, r_star: usize) -> f64 {
    (1.0 + r_star as f64 / r as f64) * ONE_MINUS_2_PI
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationBound {
    pub bound: f64,
    pub schur_norm: f64,
    /// `‖U_L − U_{L*}‖_F`.
    pub z_fro: f64,
}

/// Bound `(1 + 2r/δ)‖Z‖_F² + 4√r ‖Z‖_F` on `‖ψ[K]/ψ[K_L]‖` when `L` is a small
/// perturbation `U_L = U_{L*} + Z` of `L*`.
pub fn perturbation_bound(l: &LineSet, l_star: &LineSet, delta: f64) -> Result<PerturbationBound> {
    if l.len() != l_star.len() || l.dim() != l_star.dim() {
        return Err(PnnError::DimensionMismatch("perturbation needs r = r* and equal dims".into()));
    }
    if !(delta > 0.0) {
        return Err(PnnError::ParameterOutOfRange("delta must be positive".into()));
    }
    let lam = min_eigenvalue(&crate::kernel::psi_apply(l_star.gram())?)?;
    if lam < delta {
        return Err(PnnError::PreconditionViolated(format!("λ_min(ψ[K_L*]) = {lam:e} < δ = {delta:e}")));
    }
    let rs = (l.len() as f64).sqrt();
    let z = (l.unit_vectors() - l_star.unit_vectors()).norm();
    if 2.0 * rs * z + z * z > delta / 2.0 {
        return Err(PnnError::PreconditionViolated(format!(
            "2√r‖Z‖_F + ‖Z‖_F² = {:e} > δ/2 = {:e}",
            2.0 * rs * z + z * z,
            delta / 2.0
        )));
    }
    let bound = (1.0 + 2.0 * l.len() as f64 / delta) * z * z + 4.0 * rs * z;
    let schur_norm = schur_complement(&KernelBundle::new(l, l_star)?).spectral_norm;
    Ok(PerturbationBound { bound, schur_norm, z_fro: z })
}

/// Coefficient of `‖q*‖²` in the high-dimensional bound on the loss at a bad
/// local optimum: `(1/4)(1 − 2/π + (1 + √γ + μ)² r*/r)`.
pub fn bad_local_asymptotic_bound(gamma: f64, r: usize, r_star: usize, mu: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(PnnError::ParameterOutOfRange(format!("gamma must exceed 1, got {gamma}")));
    }
    if !(mu > 1.0) {
        return Err(PnnError::ParameterOutOfRange(format!("mu must exceed 1, got {mu}")));
    }
    if r == 0 {
        return Err(PnnError::ParameterOutOfRange("r must be positive".into()));
    }
    let c = 1.0 + gamma.sqrt() + mu;
    Ok(0.25 * (ONE_MINUS_2_PI + c * c * r_star as f64 / r as f64))
}

/// `(αI + β·11ᵀ)⁻¹ = α₂I + β₂·11ᵀ` with `α₂ = 1/α`, `β₂ = −β/(α² + αβn)`.
pub fn structured_inverse(alpha: f64, beta: f64, n: usize) -> Result<(f64, f64)> {
    let denom = alpha * alpha + alpha * beta * n as f64;
    if alpha == 0.0 || denom == 0.0 || !denom.is_finite() {
        return Err(PnnError::SingularStructure);
    }
    Ok((1.0 / alpha, -beta / denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Use every line of `L`.
    AllLines,
    /// Use only the nearest line of `L` for each target line.
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    pub r_star: usize,
    pub r: usize,
    pub trial: usize,
    pub seed: u64,
    pub spectral_norm: f64,
    pub min_eig: f64,
    pub runtime_ms: f64,
}

/// Schur norms for random `L*` (r* lines) against random `L` (r lines), for each
/// `r` in `rs` and each trial. Rows come back in (r, trial) order.
pub fn schur_sweep(d: usize, r_star: usize, rs: &[usize], trials: usize, seed: u64, mode: SweepMode) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(usize, usize)> = rs.iter().flat_map(|&r| (0..trials).map(move |t| (r, t))).collect();
    jobs.par_iter()
        .map(|&(r, trial)| {
            let s = derive_seed(derive_seed(seed, r as u64), trial as u64);
            let start = Instant::now();
            let l_star = random_line_set(d, r_star, derive_seed(s, 0))?;
            let l = random_line_set(d, r, derive_seed(s, 1))?;
            let l = match mode {
                SweepMode::AllLines => l,
                SweepMode::Nearest => nearest_line_subset(&l, &l_star)?.lines,
            };
            let rep = schur_complement(&KernelBundle::new(&l, &l_star)?);
            Ok(SweepRow {
                d,
                r_star,
                r,
                trial,
                seed: s,
                spectral_norm: rep.spectral_norm,
                min_eig: rep.min_eigenvalue,
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect()
}
