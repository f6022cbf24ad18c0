//! Line sets, neuron-to-line maps and the per-line decomposition of weights.
//!
//! A line is stored as its canonical unit vector: the entry at the largest
//! index whose magnitude exceeds [`ZERO_TOL`] is positive.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{PnnError, Result};
use crate::rng;

pub const ZERO_TOL: f64 = 1e-12;
pub const COLLINEARITY_TOL: f64 = 1e-9;
pub const FEASIBILITY_TOL: f64 = 1e-9;

const MAX_REDRAWS: usize = 10_000;

/// Normalize `v` and flip it into canonical orientation.
///
/// Returns the unit vector and the flag `s(v)`, so that `v = ‖v‖ s(v) u`.
pub fn canonicalize_vector(v: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let n = v.norm();
    if !(n > ZERO_TOL) {
        return Err(PnnError::ZeroVector);
    }
    let flag = orientation(v);
    // Vectors that are already unit up to roundoff are kept as they are, so
    // canonicalizing twice gives the same bits.
    if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok((if flag < 0.0 { -v } else { v.clone() }, flag));
    }
    Ok((v * (flag / n), flag))
}

/// Sign of the entry at the largest index with magnitude above `ZERO_TOL`.
fn orientation(v: &DVector<f64>) -> f64 {
    match v.iter().rev().find(|x| x.abs() > ZERO_TOL) {
        Some(&x) if x < 0.0 => -1.0,
        _ => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSet {
    dim: usize,
    unit_vectors: DMatrix<f64>,
    angle_matrix: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl LineSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.unit_vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The d×r matrix `U` whose columns are the canonical unit vectors.
    pub fn unit_vectors(&self) -> &DMatrix<f64> {
        &self.unit_vectors
    }

    pub fn line(&self, i: usize) -> DVector<f64> {
        self.unit_vectors.column(i).into_owned()
    }

    /// Angles between lines, in `[0, π]`.
    pub fn angle_matrix(&self) -> &DMatrix<f64> {
        &self.angle_matrix
    }

    /// `K = UᵀU` with entries clamped to `[-1, 1]`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Index of a line collinear with `v`, if any.
    pub fn find_collinear(&self, v: &DVector<f64>) -> Option<usize> {
        let n = v.norm();
        (0..self.len()).find(|&i| (self.unit_vectors.column(i).dot(v) / n).abs() >= 1.0 - COLLINEARITY_TOL)
    }

    /// Append a line, returning a new set.
    pub fn with_line(&self, v: &DVector<f64>) -> Result<LineSet> {
        let mut cols: Vec<DVector<f64>> = (0..self.len()).map(|i| self.line(i)).collect();
        cols.push(v.clone());
        build_line_set(&cols)
    }

    /// Validate columns that are already unit and canonical, keeping their bits.
    pub fn from_unit_columns(u: DMatrix<f64>) -> Result<LineSet> {
        for (i, c) in u.column_iter().enumerate() {
            let c = c.into_owned();
            if (c.norm() - 1.0).abs() > ZERO_TOL * 10.0 || orientation(&c) < 0.0 {
                return Err(PnnError::Parse(format!("column {i} is not a canonical unit vector")));
            }
        }
        finish(u)
    }

    /// Serialize as CSV: header `dim,r` then one row per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim,r");
        let _ = writeln!(s, "{},{}", self.dim, self.len());
        for c in self.unit_vectors.column_iter() {
            let row: Vec<String> = c.iter().map(|&x| fmt_f64(x)).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<LineSet> {
        let mut rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = rows.next().ok_or_else(|| PnnError::Parse("empty input".into()))?;
        if header.replace(' ', "") != "dim,r" {
            return Err(PnnError::Parse(format!("unexpected header {header:?}")));
        }
        let sizes = parse_row(rows.next().ok_or_else(|| PnnError::Parse("missing sizes".into()))?)?;
        if sizes.len() != 2 || sizes[0] < 1.0 || sizes[1] < 1.0 {
            return Err(PnnError::Parse("bad sizes row".into()));
        }
        let (d, r) = (sizes[0] as usize, sizes[1] as usize);
        let mut u = DMatrix::zeros(d, r);
        for j in 0..r {
            let row = parse_row(rows.next().ok_or_else(|| PnnError::Parse(format!("missing line {j}")))?)?;
            if row.len() != d {
                return Err(PnnError::Parse(format!("line {j} has {} entries, expected {d}", row.len())));
            }
            u.set_column(j, &DVector::from_vec(row));
        }
        if rows.next().is_some() {
            return Err(PnnError::Parse("trailing rows".into()));
        }
        LineSet::from_unit_columns(u)
    }
}

/// Format with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_row(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| PnnError::Parse(format!("{t:?}: {e}"))))
        .collect()
}

fn finish(u: DMatrix<f64>) -> Result<LineSet> {
    let dim = u.nrows();
    let r = u.ncols();
    if dim == 0 {
        return Err(PnnError::DimensionMismatch("lines must have dim >= 1".into()));
    }
    let mut gram = u.transpose() * &u;
    for i in 0..r {
        gram[(i, i)] = 1.0;
        for j in (i + 1)..r {
            let k = gram[(i, j)].clamp(-1.0, 1.0);
            if k.abs() >= 1.0 - COLLINEARITY_TOL {
                return Err(PnnError::DuplicateLine(i, j));
            }
            gram[(i, j)] = k;
            gram[(j, i)] = k;
        }
    }
    let angle_matrix = gram.map(f64::acos);
    Ok(LineSet { dim, unit_vectors: u, angle_matrix, gram })
}

/// Canonicalize raw vectors into a line set.
pub fn build_line_set(raw: &[DVector<f64>]) -> Result<LineSet> {
    let d = raw.first().map(|v| v.len()).ok_or_else(|| {
        PnnError::DimensionMismatch("a line set needs at least one vector".into())
    })?;
    let mut u = DMatrix::zeros(d, raw.len());
    for (j, v) in raw.iter().enumerate() {
        if v.len() != d {
            return Err(PnnError::DimensionMismatch(format!("vector {j} has dim {}, expected {d}", v.len())));
        }
        let (c, _) = canonicalize_vector(v)?;
        u.set_column(j, &c);
    }
    finish(u)
}

/// `U_aᵀ U_b` with entries clamped to `[-1, 1]`.
pub fn cross_gram(a: &LineSet, b: &LineSet) -> Result<DMatrix<f64>> {
    if a.dim != b.dim {
        return Err(PnnError::DimensionMismatch(format!("dims {} and {}", a.dim, b.dim)));
    }
    Ok((a.unit_vectors.transpose() * &b.unit_vectors).map(|x| x.clamp(-1.0, 1.0)))
}

/// Draw `r` uniformly random lines in dimension `d`, redrawing near-collinear ones.
pub fn random_line_set(d: usize, r: usize, seed: u64) -> Result<LineSet> {
    if d == 0 || r == 0 {
        return Err(PnnError::ParameterOutOfRange("d and r must be positive".into()));
    }
    let mut g = rng::stream(seed, 0);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut redraws = 0;
    while cols.len() < r {
        let v = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut g));
        let Ok((c, _)) = canonicalize_vector(&v) else { continue };
        if cols.iter().any(|u| u.dot(&c).abs() >= 1.0 - COLLINEARITY_TOL) {
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(PnnError::TooManyCollisions(r));
            }
            continue;
        }
        cols.push(c);
    }
    build_line_set(&cols)
}

/// Surjective assignment of neurons to lines (0-based line indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronLineMap {
    assignment: Vec<usize>,
    num_lines: usize,
}

impl NeuronLineMap {
    pub fn new(assignment: Vec<usize>, num_lines: usize) -> Result<NeuronLineMap> {
        if assignment.is_empty() {
            return Err(PnnError::InvalidMap("no neurons".into()));
        }
        let mut hit = vec![false; num_lines];
        for (i, &g) in assignment.iter().enumerate() {
            if g >= num_lines {
                return Err(PnnError::InvalidMap(format!("neuron {i} maps to line {g} of {num_lines}")));
            }
            hit[g] = true;
        }
        if let Some(l) = hit.iter().position(|h| !h) {
            return Err(PnnError::InvalidMap(format!("line {l} has no neurons")));
        }
        Ok(NeuronLineMap { assignment, num_lines })
    }

    /// Neuron `j` goes to line `j mod r`.
    pub fn round_robin(k: usize, r: usize) -> Result<NeuronLineMap> {
        NeuronLineMap::new((0..k).map(|j| j % r.max(1)).collect(), r)
    }

    /// One neuron per line.
    pub fn identity(r: usize) -> NeuronLineMap {
        NeuronLineMap { assignment: (0..r).collect(), num_lines: r }
    }

    pub fn num_neurons(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_lines(&self) -> usize {
        self.num_lines
    }

    pub fn line_of(&self, neuron: usize) -> usize {
        self.assignment[neuron]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Neurons on line `l`, in index order.
    pub fn members(&self, l: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&j| self.assignment[j] == l).collect()
    }
}

/// A line set together with the map assigning neurons to it.
#[derive(Debug, Clone, PartialEq)]
pub struct LineConfig {
    pub lines: LineSet,
    pub map: NeuronLineMap,
}

impl LineConfig {
    pub fn new(lines: LineSet, map: NeuronLineMap) -> Result<Arc<LineConfig>> {
        if map.num_lines() != lines.len() {
            return Err(PnnError::DimensionMismatch(format!(
                "map covers {} lines, set has {}",
                map.num_lines(),
                lines.len()
            )));
        }
        Ok(Arc::new(LineConfig { lines, map }))
    }
}

/// Sign pattern of the neurons on one line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSign {
    AllPlus,
    AllMinus,
    Mixed,
    /// Every neuron on the line is zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSignature {
    /// `signs[l]` lists ±1 for the neurons on line `l`, in neuron order.
    pub signs: Vec<Vec<f64>>,
    /// Zero-column markers parallel to `signs`.
    pub zero: Vec<Vec<bool>>,
    pub summary: Vec<LineSign>,
}

impl RegionSignature {
    pub fn mixed_lines(&self) -> Vec<usize> {
        (0..self.summary.len()).filter(|&l| self.summary[l] == LineSign::Mixed).collect()
    }

    pub fn has_zero_columns(&self) -> bool {
        self.zero.iter().flatten().any(|&z| z)
    }
}

/// A weight matrix whose columns lie on the lines of its configuration.
#[derive(Debug, Clone)]
pub struct PnnWeights {
    matrix: DMatrix<f64>,
    config: Arc<LineConfig>,
}

impl PnnWeights {
    pub fn new(matrix: DMatrix<f64>, config: Arc<LineConfig>) -> Result<PnnWeights> {
        let (d, k) = (config.lines.dim(), config.map.num_neurons());
        if matrix.nrows() != d || matrix.ncols() != k {
            return Err(PnnError::DimensionMismatch(format!(
                "weights are {}x{}, config expects {d}x{k}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for j in 0..k {
            let w = matrix.column(j);
            let u = config.lines.unit_vectors().column(config.map.line_of(j));
            let t = u.dot(&w);
            let deviation = (w - u * t).norm();
            if deviation > FEASIBILITY_TOL * w.norm().max(1.0) {
                return Err(PnnError::InfeasibleWeights { neuron: j, deviation });
            }
        }
        Ok(PnnWeights { matrix, config })
    }

    /// `w_j = t_j u_{g(j)}`.
    pub fn from_signed_norms(config: Arc<LineConfig>, t: &[f64]) -> Result<PnnWeights> {
        let k = config.map.num_neurons();
        if t.len() != k {
            return Err(PnnError::DimensionMismatch(format!("{} norms for {k} neurons", t.len())));
        }
        let mut m = DMatrix::zeros(config.lines.dim(), k);
        for (j, &tj) in t.iter().enumerate() {
            m.set_column(j, &(config.lines.unit_vectors().column(config.map.line_of(j)) * tj));
        }
        Ok(PnnWeights { matrix: m, config })
    }

    /// Treat an arbitrary weight matrix as a network with one line per neuron.
    pub fn from_unconstrained(matrix: DMatrix<f64>) -> Result<PnnWeights> {
        let mut cols = Vec::with_capacity(matrix.ncols());
        for (j, c) in matrix.column_iter().enumerate() {
            if c.norm() <= ZERO_TOL {
                return Err(PnnError::ZeroColumn(j));
            }
            cols.push(c.into_owned());
        }
        let lines = build_line_set(&cols)?;
        let k = cols.len();
        let config = LineConfig::new(lines, NeuronLineMap::identity(k))?;
        PnnWeights::new(matrix, config)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn config(&self) -> &Arc<LineConfig> {
        &self.config
    }

    pub fn lines(&self) -> &LineSet {
        &self.config.lines
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_neurons(&self) -> usize {
        self.matrix.ncols()
    }

    /// `t_j = ⟨w_j, u_{g(j)}⟩`, the signed norm of each neuron.
    pub fn signed_norms(&self) -> Vec<f64> {
        (0..self.num_neurons())
            .map(|j| {
                let u = self.config.lines.unit_vectors().column(self.config.map.line_of(j));
                u.dot(&self.matrix.column(j))
            })
            .collect()
    }

    /// `Σ_j w_j`.
    pub fn column_sum(&self) -> DVector<f64> {
        self.matrix.column_sum()
    }

    pub fn decompose(&self) -> (DVector<f64>, RegionSignature) {
        let cfg = &self.config;
        let r = cfg.lines.len();
        let t = self.signed_norms();
        let mut q = DVector::zeros(r);
        let mut signs = vec![Vec::new(); r];
        let mut zero = vec![Vec::new(); r];
        for (j, &tj) in t.iter().enumerate() {
            let l = cfg.map.line_of(j);
            let is_zero = self.matrix.column(j).norm() <= ZERO_TOL;
            q[l] += self.matrix.column(j).norm();
            signs[l].push(if is_zero || tj > 0.0 { 1.0 } else { -1.0 });
            zero[l].push(is_zero);
        }
        let summary = (0..r)
            .map(|l| {
                let live: Vec<f64> = signs[l].iter().zip(&zero[l]).filter(|(_, &z)| !z).map(|(&s, _)| s).collect();
                if live.is_empty() {
                    LineSign::Zero
                } else if live.iter().all(|&s| s > 0.0) {
                    LineSign::AllPlus
                } else if live.iter().all(|&s| s < 0.0) {
                    LineSign::AllMinus
                } else {
                    LineSign::Mixed
                }
            })
            .collect();
        (q, RegionSignature { signs, zero, summary })
    }
}

/// Per-line masses `q` and the region signature of `w`.
pub fn decompose_weights(w: &PnnWeights) -> (DVector<f64>, RegionSignature) {
    w.decompose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn orientation_examples() {
        let (u, s) = canonicalize_vector(&v(&[-1.0, 2.0, 0.0, 3.0, 0.0])).unwrap();
        assert_eq!(s, 1.0);
        assert!(u[3] > 0.0);
        let (u, s) = canonicalize_vector(&v(&[-1.0, 2.0, 0.0, 0.0, -3.0])).unwrap();
        assert_eq!(s, -1.0);
        assert!(u[4] > 0.0 && u[0] > 0.0);
        let (u, s) = canonicalize_vector(&v(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!((u, s), (v(&[1.0, 0.0, 0.0]), 1.0));
        assert_eq!(canonicalize_vector(&v(&[0.0, 1e-13])), Err(PnnError::ZeroVector));
    }

    #[test]
    fn small_line_sets() {
        let ls = build_line_set(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        assert_eq!(ls.gram(), &DMatrix::identity(2, 2));
        assert_eq!(ls.angle_matrix()[(0, 1)], FRAC_PI_2);
        assert_eq!(ls.angle_matrix()[(0, 0)], 0.0);

        let err = build_line_set(&[v(&[1.0, 0.0]), v(&[-1.0, 0.0])]).unwrap_err();
        assert_eq!(err, PnnError::DuplicateLine(0, 1));

        let ls = build_line_set(&[v(&[1.0, 0.0]), v(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2])]).unwrap();
        assert!((ls.gram()[(0, 1)] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((ls.angle_matrix()[(0, 1)] - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn cross_gram_cases() {
        let a = build_line_set(&[v(&[1.0, 0.0])]).unwrap();
        let b = build_line_set(&[v(&[0.0, 1.0])]).unwrap();
        assert_eq!(cross_gram(&a, &b).unwrap(), DMatrix::zeros(1, 1));
        let a = random_line_set(5, 4, 1).unwrap();
        let b = random_line_set(5, 3, 2).unwrap();
        let c = cross_gram(&a, &b).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let dot: f64 = (0..5).map(|t| a.unit_vectors()[(t, i)] * b.unit_vectors()[(t, j)]).sum();
                assert!((c[(i, j)] - dot).abs() < 1e-15);
            }
        }
        assert!((cross_gram(&a, &a).unwrap() - a.gram()).abs().max() < 1e-15);
        let e = random_line_set(4, 2, 2).unwrap();
        assert!(matches!(cross_gram(&a, &e), Err(PnnError::DimensionMismatch(_))));
    }

    #[test]
    fn random_lines_deterministic() {
        assert_eq!(random_line_set(3, 5, 7).unwrap(), random_line_set(3, 5, 7).unwrap());
        assert_ne!(random_line_set(3, 5, 7).unwrap(), random_line_set(3, 5, 8).unwrap());
    }

    #[test]
    fn random_lines_gram_concentration() {
        let ls = random_line_set(200, 200, 3).unwrap();
        let g = ls.gram();
        let mut xs = Vec::new();
        for i in 0..200 {
            for j in (i + 1)..200 {
                xs.push(g[(i, j)]);
            }
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        // Canonical orientation does not bias the inner products' sign.
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((sd * (200f64).sqrt() - 1.0).abs() < 0.05, "sd {sd}");
    }

    #[test]
    fn random_lines_2d_angle_uniform() {
        // In the plane, the acute angle between two random lines is uniform on [0, π/2].
        let ls = random_line_set(2, 10_000, 11).unwrap();
        let mut xs: Vec<f64> = (0..5_000)
            .map(|i| ls.gram()[(2 * i, 2 * i + 1)].abs().acos() / FRAC_PI_2)
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i as f64 + 1.0) / n - x).abs().max((x - i as f64 / n).abs()))
            .fold(0.0, f64::max);
        // 1% critical value of the Kolmogorov–Smirnov statistic.
        assert!(ks < 1.63 / n.sqrt(), "ks {ks}");
    }

    #[test]
    fn decompose_simple() {
        let ls = build_line_set(&[v(&[0.0, 1.0])]).unwrap();
        let cfg = LineConfig::new(ls, NeuronLineMap::round_robin(2, 1).unwrap()).unwrap();
        let w = PnnWeights::from_signed_norms(cfg, &[2.0, -3.0]).unwrap();
        let (q, s) = w.decompose();
        assert_eq!(q[0], 5.0);
        assert_eq!(s.signs[0], vec![1.0, -1.0]);
        assert_eq!(s.summary[0], LineSign::Mixed);
    }

    #[test]
    fn decompose_random_matches_bruteforce() {
        let ls = random_line_set(4, 3, 5).unwrap();
        let cfg = LineConfig::new(ls, NeuronLineMap::round_robin(6, 3).unwrap()).unwrap();
        let t = [0.3, -1.2, 2.0, -0.7, 0.1, 1.5];
        let w = PnnWeights::from_signed_norms(cfg, &t).unwrap();
        let (q, _) = w.decompose();
        for l in 0..3 {
            let mut s = 0.0;
            for j in 0..6 {
                if j % 3 == l {
                    let c = w.matrix().column(j);
                    s += c.iter().map(|x| x * x).sum::<f64>().sqrt();
                }
            }
            assert!((q[l] - s).abs() < 1e-14);
        }
    }

    #[test]
    fn infeasible_weights_rejected() {
        let ls = build_line_set(&[v(&[1.0, 0.0])]).unwrap();
        let cfg = LineConfig::new(ls, NeuronLineMap::identity(1)).unwrap();
        let m = DMatrix::from_column_slice(2, 1, &[1.0, 1e-3]);
        assert!(matches!(PnnWeights::new(m, cfg), Err(PnnError::InfeasibleWeights { neuron: 0, .. })));
    }

    #[test]
    fn zero_columns_flagged() {
        let ls = build_line_set(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let cfg = LineConfig::new(ls, NeuronLineMap::round_robin(4, 2).unwrap()).unwrap();
        let w = PnnWeights::from_signed_norms(cfg, &[0.0, 0.0, -1.0, 2.0]).unwrap();
        let (q, s) = w.decompose();
        assert_eq!(q.as_slice(), &[1.0, 2.0]);
        assert_eq!(s.signs[0], vec![1.0, -1.0]);
        assert_eq!(s.summary[0], LineSign::AllMinus);
        assert_eq!(s.summary[1], LineSign::AllPlus);
        assert!(s.has_zero_columns());
    }

    #[test]
    fn map_must_be_surjective() {
        assert!(matches!(NeuronLineMap::new(vec![0, 0], 2), Err(PnnError::InvalidMap(_))));
        assert!(matches!(NeuronLineMap::new(vec![0, 2], 2), Err(PnnError::InvalidMap(_))));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let ls = random_line_set(6, 9, 21).unwrap();
        let back = LineSet::from_csv(&ls.to_csv()).unwrap();
        assert_eq!(back, ls);
        assert!(LineSet::from_csv("dim,r\n2,1\n1,0,0\n").is_err());
    }
}
