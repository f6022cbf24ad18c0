//! The kernel ψ(x) = x + (2/π)(√(1−x²) − x·arccos x) and the ψ-transformed
//! Gram blocks of a pair of line sets.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{PnnError, Result};
use crate::lines::{build_line_set, cross_gram, LineSet};
use crate::linalg;

/// Slack allowed outside `[-1, 1]` before an argument counts as a bug.
pub const DOMAIN_SLACK: f64 = 1e-9;
pub const SYMMETRY_TOL: f64 = 1e-9;

pub fn psi(x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0 + DOMAIN_SLACK) {
        return Err(PnnError::DomainError(x));
    }
    let x = x.clamp(-1.0, 1.0);
    Ok(x + FRAC_2_PI * ((1.0 - x * x).sqrt() - x * x.acos()))
}

pub fn psi_apply(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = m.clone();
    for x in out.iter_mut() {
        *x = psi(*x)?;
    }
    Ok(out)
}

/// `r` lines in the plane whose adjacent angles are all `π/r`.
pub fn equiangular_2d(r: usize) -> Result<LineSet> {
    if r < 2 {
        return Err(PnnError::ParameterOutOfRange("equiangular sets need r >= 2".into()));
    }
    let cols: Vec<DVector<f64>> = (0..r)
        .map(|i| {
            let a = PI * i as f64 / r as f64;
            DVector::from_vec(vec![a.cos(), a.sin()])
        })
        .collect();
    build_line_set(&cols)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(PnnError::DimensionMismatch("matrix is not square".into()));
    }
    let asym = linalg::asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(PnnError::NotSymmetric(asym));
    }
    Ok(linalg::sym_eigenvalues(m).first().copied().unwrap_or(f64::NAN))
}

/// ψ applied to the Gram blocks of a network's lines `L` and a target's lines `L*`.
#[derive(Debug, Clone)]
pub struct KernelBundle {
    pub lines: LineSet,
    pub lines_star: LineSet,
    /// ψ[K_L], r×r.
    pub psi_ll: DMatrix<f64>,
    /// ψ[K_{L,L*}], r×r*.
    pub psi_cross: DMatrix<f64>,
    /// ψ[K_{L*}], r*×r*.
    pub psi_star: DMatrix<f64>,
    /// The joint (r+r*)×(r+r*) matrix with the blocks above.
    pub joint: DMatrix<f64>,
}

impl KernelBundle {
    pub fn new(lines: &LineSet, lines_star: &LineSet) -> Result<KernelBundle> {
        let psi_ll = psi_apply(lines.gram())?;
        let psi_cross = psi_apply(&cross_gram(lines, lines_star)?)?;
        let psi_star = psi_apply(lines_star.gram())?;
        let (r, rs) = (psi_ll.nrows(), psi_star.nrows());
        let mut joint = DMatrix::zeros(r + rs, r + rs);
        joint.view_mut((0, 0), (r, r)).copy_from(&psi_ll);
        joint.view_mut((0, r), (r, rs)).copy_from(&psi_cross);
        joint.view_mut((r, 0), (rs, r)).copy_from(&psi_cross.transpose());
        joint.view_mut((r, r), (rs, rs)).copy_from(&psi_star);
        Ok(KernelBundle {
            lines: lines.clone(),
            lines_star: lines_star.clone(),
            psi_ll,
            psi_cross,
            psi_star,
            joint,
        })
    }

    pub fn r(&self) -> usize {
        self.psi_ll.nrows()
    }

    pub fn r_star(&self) -> usize {
        self.psi_star.nrows()
    }
}
