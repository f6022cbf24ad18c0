//! Synthetic data from a ground-truth network and mini-batch SGD with optional
//! projection of each neuron's gradient onto its line.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{PnnError, Result};
use crate::landscape::{region_condition, stationarity_check};
use crate::lines::{random_line_set, LineConfig, LineSet, NeuronLineMap, PnnWeights, RegionSignature};
use crate::rng::{self, derive_seed};

/// Largest column-to-line distance tolerated after projected updates.
pub const LINE_DEVIATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Heavy-ball coefficient in `[0, 1)`; 0 is plain SGD.
    pub momentum: f64,
    /// The step size is multiplied by `decay_rate` every `decay_every_steps`
    /// mini-batch steps. `decay_every_steps = 0` disables decay.
    pub decay_rate: f64,
    pub decay_every_steps: usize,
    /// Stop once the mean epoch loss over the last `early_stop_window` epochs
    /// falls below `early_stop_threshold`. A window of 0 disables early stopping.
    pub early_stop_window: usize,
    pub early_stop_threshold: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Degree-one matched experiments: batch 100, momentum 0.9, step 0.01.
    pub fn matched_default() -> TrainConfig {
        TrainConfig {
            batch_size: 100,
            epochs: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            decay_rate: 0.95,
            decay_every_steps: 390,
            early_stop_window: 10,
            early_stop_threshold: 1e-5,
            seed: 0,
        }
    }

    /// Mismatched experiments: batch 100, no momentum, step 1e-3.
    pub fn mismatched_default() -> TrainConfig {
        TrainConfig {
            batch_size: 100,
            epochs: 100,
            learning_rate: 1e-3,
            momentum: 0.0,
            decay_rate: 0.95,
            decay_every_steps: 390,
            early_stop_window: 0,
            early_stop_threshold: 0.0,
            seed: 0,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: &str| Err(PnnError::ParameterOutOfRange(m.into()));
        if self.batch_size == 0 || self.batch_size > n {
            return bad("batch_size must be in 1..=n");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if !(self.decay_rate > 0.0) {
            return bad("decay_rate must be positive");
        }
        Ok(())
    }
}

/// Inputs stored column-wise (d×n) with their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Mean squared error of `w` on this data.
    pub fn mse(&self, w: &DMatrix<f64>) -> f64 {
        let n = self.len().max(1) as f64;
        (0..self.len()).map(|i| (forward(w.as_slice(), self.x.column(i).as_slice()) - self.y[i]).powi(2)).sum::<f64>() / n
    }

    /// `Σ(ŷ − y)² / Σy²`.
    pub fn normalized_mse(&self, w: &DMatrix<f64>) -> f64 {
        let num: f64 = (0..self.len()).map(|i| (forward(w.as_slice(), self.x.column(i).as_slice()) - self.y[i]).powi(2)).sum();
        num / self.y.iter().map(|y| y * y).sum::<f64>()
    }
}

fn forward(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    w.chunks_exact(d).map(|c| c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().max(0.0)).sum()
}

/// `n` samples `x ~ N(0, I)` labelled by `y = Σ relu(w*_iᵀx)`.
pub fn generate_dataset(w_star: &DMatrix<f64>, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(PnnError::ParameterOutOfRange("n must be >= 1".into()));
    }
    let d = w_star.nrows();
    let mut g = rng::stream(seed, 0);
    let x = DMatrix::from_fn(d, n, |_, _| StandardNormal.sample(&mut g));
    let y = (0..n).map(|i| forward(w_star.as_slice(), x.column(i).as_slice())).collect();
    Ok(Dataset { x, y })
}

/// `r` random lines with two neurons each: one scaled by U(0, 1), one by U(−1, 0).
pub fn init_random_pnn(d: usize, r: usize, seed: u64) -> Result<PnnWeights> {
    let lines = random_line_set(d, r, derive_seed(seed, 0))?;
    let map = NeuronLineMap::new((0..2 * r).map(|j| j / 2).collect(), r)?;
    let mut g = rng::stream(derive_seed(seed, 1), 0);
    let t: Vec<f64> = (0..2 * r)
        .map(|j| {
            let a: f64 = g.gen::<f64>();
            if j % 2 == 0 {
                a
            } else {
                -a
            }
        })
        .collect();
    PnnWeights::from_signed_norms(LineConfig::new(lines, map)?, &t)
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub final_weights: DMatrix<f64>,
    /// Full-batch training MSE at the final weights.
    pub final_train_loss: f64,
    /// `Σ(ŷ − y)²/Σy²` on held-out data, when given.
    pub final_test_loss_normalized: Option<f64>,
    pub epochs_run: usize,
    /// Signature of the final weights when training was projected.
    pub final_signature: Option<RegionSignature>,
    pub line_feasibility_ok: bool,
    pub max_line_deviation: f64,
    /// Mean mini-batch loss of each epoch.
    pub trajectory: Vec<f64>,
}

impl TrainResult {
    pub fn pnn_weights(&self, config: Arc<LineConfig>) -> Result<PnnWeights> {
        PnnWeights::new(self.final_weights.clone(), config)
    }
}

fn line_deviation(w: &[f64], dirs: &[f64], d: usize) -> f64 {
    w.chunks_exact(d)
        .zip(dirs.chunks_exact(d))
        .map(|(c, u)| {
            let t: f64 = c.iter().zip(u).map(|(a, b)| a * b).sum();
            c.iter().zip(u).map(|(a, b)| (a - t * b).powi(2)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

/// Mini-batch SGD on the empirical squared error.
///
/// With `lines` given, each neuron's gradient is projected onto its line before
/// the update, so the weights stay on their lines.
pub fn sgd_train(
    data: &Dataset,
    test: Option<&Dataset>,
    init: &DMatrix<f64>,
    lines: Option<&Arc<LineConfig>>,
    config: &TrainConfig,
) -> Result<TrainResult> {
    let (d, k, n) = (init.nrows(), init.ncols(), data.len());
    if data.dim() != d || test.is_some_and(|t| t.dim() != d) {
        return Err(PnnError::DimensionMismatch("data and weights disagree on d".into()));
    }
    config.validate(n)?;
    // Line direction of each neuron, laid out like the weights.
    let dirs: Option<Vec<f64>> = match lines {
        Some(cfg) => {
            if cfg.lines.dim() != d || cfg.map.num_neurons() != k {
                return Err(PnnError::DimensionMismatch("line config does not fit the weights".into()));
            }
            PnnWeights::new(init.clone(), cfg.clone())?;
            Some((0..k).flat_map(|j| cfg.lines.line(cfg.map.line_of(j)).iter().copied().collect::<Vec<_>>()).collect())
        }
        None => None,
    };
    let mut w = init.as_slice().to_vec();
    let mut velocity = vec![0.0; d * k];
    let mut grad = vec![0.0; d * k];
    let mut pre = vec![0.0; k];
    let mut order: Vec<usize> = (0..n).collect();
    let mut g = rng::stream(config.seed, 0);
    let mut trajectory = Vec::with_capacity(config.epochs);
    let mut max_dev = 0.0f64;
    let mut step = 0usize;
    let xs = data.x.as_slice();

    for epoch in 0..config.epochs {
        order.shuffle(&mut g);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|v| *v = 0.0);
            let mut loss = 0.0;
            let scale = 2.0 / batch.len() as f64;
            for &i in batch {
                let x = &xs[i * d..(i + 1) * d];
                let mut h = 0.0;
                for j in 0..k {
                    let s: f64 = w[j * d..(j + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
                    pre[j] = s;
                    h += s.max(0.0);
                }
                let e = h - data.y[i];
                loss += e * e;
                for j in 0..k {
                    if pre[j] > 0.0 {
                        for (gv, xv) in grad[j * d..(j + 1) * d].iter_mut().zip(x) {
                            *gv += scale * e * xv;
                        }
                    }
                }
            }
            let loss = loss / batch.len() as f64;
            if !loss.is_finite() {
                return Err(PnnError::Diverged(epoch));
            }
            if let Some(u) = &dirs {
                for j in 0..k {
                    let (gj, uj) = (&mut grad[j * d..(j + 1) * d], &u[j * d..(j + 1) * d]);
                    let t: f64 = gj.iter().zip(uj).map(|(a, b)| a * b).sum();
                    for (gv, uv) in gj.iter_mut().zip(uj) {
                        *gv = t * uv;
                    }
                }
            }
            let lr = if config.decay_every_steps > 0 {
                config.learning_rate * config.decay_rate.powi((step / config.decay_every_steps) as i32)
            } else {
                config.learning_rate
            };
            for ((wv, vv), gv) in w.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *vv = config.momentum * *vv + gv;
                *wv -= lr * *vv;
            }
            step += 1;
            epoch_loss += loss;
            batches += 1;
        }
        trajectory.push(epoch_loss / batches as f64);
        if let Some(u) = &dirs {
            max_dev = max_dev.max(line_deviation(&w, u, d));
        }
        let win = config.early_stop_window;
        if win > 0 && trajectory.len() >= win {
            let mean = trajectory[trajectory.len() - win..].iter().sum::<f64>() / win as f64;
            if mean < config.early_stop_threshold {
                break;
            }
        }
    }

    let final_weights = DMatrix::from_vec(d, k, w);
    let final_signature = match lines {
        Some(cfg) => Some(PnnWeights::new(final_weights.clone(), cfg.clone())?.decompose().1),
        None => None,
    };
    Ok(TrainResult {
        final_train_loss: data.mse(&final_weights),
        final_test_loss_normalized: test.map(|t| t.normalized_mse(&final_weights)),
        epochs_run: trajectory.len(),
        final_signature,
        line_feasibility_ok: dirs.is_some() && max_dev <= LINE_DEVIATION_TOL,
        max_line_deviation: max_dev,
        trajectory,
        final_weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Global,
    BadLocal,
    NotConverged,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Global => "global",
            Outcome::BadLocal => "bad_local",
            Outcome::NotConverged => "not_converged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classified {
    pub outcome: Outcome,
    /// Number of lines whose neurons do not carry both signs.
    pub signature_violations: usize,
    /// Fewer than `d` mixed lines.
    pub violates_mixed_condition: bool,
}

/// Label a matched run: `Global` if the final training loss is at most `tol`,
/// `BadLocal` if the population projected gradient is within `grad_tol` of zero,
/// else `NotConverged`.
pub fn classify_outcome(result: &TrainResult, config: &Arc<LineConfig>, w_star: &DMatrix<f64>, tol: f64, grad_tol: f64) -> Result<Classified> {
    let w = result.pnn_weights(config.clone())?;
    let sig = w.decompose().1;
    let d = config.lines.dim();
    let signature_violations = sig.summary.len() - sig.mixed_lines().len();
    let violates_mixed_condition = !region_condition(&sig, d);
    let outcome = if result.final_train_loss <= tol {
        Outcome::Global
    } else if !sig.has_zero_columns() && stationarity_check(&w, w_star, grad_tol)? {
        Outcome::BadLocal
    } else {
        Outcome::NotConverged
    };
    Ok(Classified { outcome, signature_violations, violates_mixed_condition })
}

/// The d standard axes as a line set.
pub fn axis_lines(d: usize) -> Result<LineSet> {
    crate::lines::build_line_set(&(0..d).map(|i| DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 })).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedTrial {
    pub trial: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub final_train_loss: f64,
    /// `‖W − W*‖_F²`.
    pub gap: f64,
    pub epochs_run: usize,
    pub signature_violations: usize,
    pub violates_mixed_condition: bool,
    pub normalized_test_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedSummary {
    pub d: usize,
    pub k: usize,
    pub fraction_global: f64,
    pub trials: Vec<MatchedTrial>,
}

/// Settings shared by the training experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub n_train: usize,
    pub n_test: usize,
    /// Loss at or below which a run counts as global.
    pub global_tol: f64,
    /// Projected-gradient tolerance for calling a run stationary.
    pub grad_tol: f64,
}

impl ExperimentConfig {
    pub fn matched_default() -> ExperimentConfig {
        ExperimentConfig { train: TrainConfig::matched_default(), n_train: 2000, n_test: 2000, global_tol: 1e-5, grad_tol: 0.05 }
    }

    pub fn mismatched_default() -> ExperimentConfig {
        ExperimentConfig { train: TrainConfig::mismatched_default(), n_train: 4000, n_test: 4000, global_tol: 1e-5, grad_tol: 0.05 }
    }
}

/// Degree-one matched runs: neuron j sits on axis `j mod d`, target and initial
/// signed norms are standard normal, training is projected onto the axes.
pub fn experiment_matched_degree_one(d: usize, k: usize, trials: usize, cfg: &ExperimentConfig) -> Result<MatchedSummary> {
    if d == 0 || k == 0 || k % d != 0 {
        return Err(PnnError::ParameterOutOfRange(format!("k = {k} must be a positive multiple of d = {d}")));
    }
    let config = LineConfig::new(axis_lines(d)?, NeuronLineMap::round_robin(k, d)?)?;
    let trials: Vec<MatchedTrial> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(cfg.train.seed, trial as u64);
            let mut g = rng::stream(seed, 0);
            let mut draw = || -> Vec<f64> { (0..k).map(|_| StandardNormal.sample(&mut g)).collect() };
            let w_star = PnnWeights::from_signed_norms(config.clone(), &draw())?;
            let init = PnnWeights::from_signed_norms(config.clone(), &draw())?;
            let train = generate_dataset(w_star.matrix(), cfg.n_train, derive_seed(seed, 1))?;
            let test = generate_dataset(w_star.matrix(), cfg.n_test, derive_seed(seed, 2))?;
            let tc = TrainConfig { seed: derive_seed(seed, 3), ..cfg.train.clone() };
            let res = sgd_train(&train, Some(&test), init.matrix(), Some(&config), &tc)?;
            let cl = classify_outcome(&res, &config, w_star.matrix(), cfg.global_tol, cfg.grad_tol)?;
            Ok(MatchedTrial {
                trial,
                seed,
                outcome: cl.outcome,
                final_train_loss: res.final_train_loss,
                gap: (&res.final_weights - w_star.matrix()).norm_squared(),
                epochs_run: res.epochs_run,
                signature_violations: cl.signature_violations,
                violates_mixed_condition: cl.violates_mixed_condition,
                normalized_test_mse: res.final_test_loss_normalized.unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<_>>()?;
    let fraction_global = trials.iter().filter(|t| t.outcome == Outcome::Global).count() as f64 / trials.len().max(1) as f64;
    Ok(MatchedSummary { d, k, fraction_global, trials })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchedRun {
    pub k: usize,
    pub trial: usize,
    pub init: usize,
    pub seed: u64,
    pub epochs_run: usize,
    pub final_train_loss: f64,
    pub normalized_test_mse: f64,
    pub feasible: bool,
    pub signature_violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseStats {
    pub min: f64,
    pub mean: f64,
    pub median: f64,
}

impl MseStats {
    pub fn of(values: &[f64]) -> MseStats {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            return MseStats { min: f64::NAN, mean: f64::NAN, median: f64::NAN };
        }
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        MseStats { min: v[0], mean: v.iter().sum::<f64>() / n as f64, median }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchedTable {
    pub d: usize,
    pub k_star: usize,
    pub runs: Vec<MismatchedRun>,
    /// `(k, stats over feasible runs)` in the order of `k_list`.
    pub stats: Vec<(usize, MseStats)>,
}

/// A dense ground-truth network with `N(0, I/d)` columns.
pub fn random_dense_network(d: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng::stream(seed, 0);
    let s = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, k, |_, _| { let z: f64 = StandardNormal.sample(&mut g); s * z })
}

/// For each trial a dense ground truth with `k_star` neurons; for each `k` in
/// `k_list` and each of `inits` initializations, projected SGD on `k/2` random lines.
pub fn experiment_mismatched_random(d: usize, k_star: usize, k_list: &[usize], trials: usize, inits: usize, cfg: &ExperimentConfig) -> Result<MismatchedTable> {
    if let Some(k) = k_list.iter().find(|&&k| k == 0 || k % 2 != 0) {
        return Err(PnnError::ParameterOutOfRange(format!("k = {k} must be a positive even number")));
    }
    let jobs: Vec<(usize, usize, usize)> = k_list
        .iter()
        .flat_map(|&k| (0..trials).flat_map(move |t| (0..inits).map(move |i| (k, t, i))))
        .collect();
    let runs: Vec<MismatchedRun> = jobs
        .par_iter()
        .map(|&(k, trial, init)| {
            let tseed = derive_seed(cfg.train.seed, trial as u64);
            let w_star = random_dense_network(d, k_star, derive_seed(tseed, 0));
            let train = generate_dataset(&w_star, cfg.n_train, derive_seed(tseed, 1))?;
            let test = generate_dataset(&w_star, cfg.n_test, derive_seed(tseed, 2))?;
            let seed = derive_seed(derive_seed(tseed, 100 + k as u64), init as u64);
            let w0 = init_random_pnn(d, k / 2, seed)?;
            let tc = TrainConfig { seed: derive_seed(seed, 7), ..cfg.train.clone() };
            let res = sgd_train(&train, Some(&test), w0.matrix(), Some(w0.config()), &tc)?;
            let sig = res.final_signature.as_ref().expect("projected run");
            Ok(MismatchedRun {
                k,
                trial,
                init,
                seed,
                epochs_run: res.epochs_run,
                final_train_loss: res.final_train_loss,
                normalized_test_mse: res.final_test_loss_normalized.unwrap_or(f64::NAN),
                feasible: res.line_feasibility_ok,
                signature_violations: sig.summary.len() - sig.mixed_lines().len(),
            })
        })
        .collect::<Result<_>>()?;
    let stats = k_list
        .iter()
        .map(|&k| {
            let v: Vec<f64> = runs.iter().filter(|r| r.k == k && r.feasible).map(|r| r.normalized_test_mse).collect();
            (k, MseStats::of(&v))
        })
        .collect();
    Ok(MismatchedTable { d, k_star, runs, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lines::LineSign;

    #[test]
    fn dataset_basics() {
        let z = generate_dataset(&DMatrix::zeros(3, 2), 50, 1).unwrap();
        assert!(z.y.iter().all(|&y| y == 0.0));
        let w = DMatrix::from_column_slice(2, 2, &[1.0, 0.5, -0.3, 2.0]);
        assert_eq!(generate_dataset(&w, 10, 4).unwrap(), generate_dataset(&w, 10, 4).unwrap());
        let n = 200_000;
        let data = generate_dataset(&w, n, 5).unwrap();
        let mean = data.y.iter().sum::<f64>() / n as f64;
        let sd = (data.y.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let want: f64 = w.column_iter().map(|c| c.norm()).sum::<f64>() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((mean - want).abs() <= 4.0 * sd / (n as f64).sqrt());
        assert!(generate_dataset(&w, 0, 1).is_err());
    }

    #[test]
    fn init_has_opposite_pairs() {
        let w = init_random_pnn(4, 6, 3).unwrap();
        assert_eq!(w.num_neurons(), 12);
        let (_, sig) = w.decompose();
        assert!(sig.summary.iter().all(|s| *s == LineSign::Mixed));
        assert!(w.matrix().column_iter().all(|c| c.norm() <= 1.0));
    }

    #[test]
    fn start_at_target_stops_early() {
        let w = init_random_pnn(3, 2, 1).unwrap();
        let data = generate_dataset(w.matrix(), 500, 2).unwrap();
        let res = sgd_train(&data, None, w.matrix(), Some(w.config()), &TrainConfig::matched_default()).unwrap();
        assert_eq!(res.epochs_run, 10);
        assert!(res.final_train_loss < 1e-5);
        assert!(res.line_feasibility_ok);
    }

    #[test]
    fn config_validation() {
        let w = init_random_pnn(2, 1, 1).unwrap();
        let data = generate_dataset(w.matrix(), 50, 2).unwrap();
        let cfg = TrainConfig { batch_size: 51, ..TrainConfig::matched_default() };
        assert!(sgd_train(&data, None, w.matrix(), None, &cfg).is_err());
        let cfg = TrainConfig { momentum: 1.0, ..TrainConfig::matched_default() };
        assert!(sgd_train(&data, None, w.matrix(), None, &cfg).is_err());
    }

    #[test]
    fn divergence_reported() {
        let w = init_random_pnn(3, 2, 1).unwrap();
        let data = generate_dataset(&(w.matrix() * 3.0), 400, 2).unwrap();
        let cfg = TrainConfig { learning_rate: 50.0, momentum: 0.0, ..TrainConfig::matched_default() };
        assert!(matches!(sgd_train(&data, None, w.matrix(), Some(w.config()), &cfg), Err(PnnError::Diverged(_))));
    }

    #[test]
    fn stats() {
        let s = MseStats::of(&[3.0, 1.0, 2.0, 10.0]);
        assert_eq!((s.min, s.mean, s.median), (1.0, 4.0, 2.5));
    }
}
