use nalgebra::{DMatrix, DVector};
use pnn_core::kernel::KernelBundle;
use pnn_core::landscape::{bad_region_loss, good_region_probability, scalar_region_classify};
use pnn_core::lines::{random_line_set, LineConfig, NeuronLineMap, PnnWeights};
use pnn_core::minimax::{
    coverage_gap, greedy_angular_net, mc_abs_error, minimax_risk_bound, nearest_net_approx, net_size_bound, sparse_net_size,
};
use pnn_core::risk::{matched_risk, mismatched_risk, monte_carlo_risk, scalar_risk};
use pnn_core::rng::{derive_seed, stream};
use pnn_core::schur::{asymptotic_reference, bad_local_asymptotic_bound, schur_complement, schur_sweep, SweepMode};
use pnn_core::trainer::{experiment_matched_degree_one, experiment_mismatched_random, ExperimentConfig, MseStats};
use pnn_core::{RegionLabel, RiskBreakdown};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::report::{Cell, CsvOut, ExperimentSpec};
use crate::{Cli, CliError, Command, Demo, LandscapeAction, MinimaxAction, RiskArgs, TrainKind, TrainOverrides};

type CmdResult = std::result::Result<(), CliError>;

const DEFAULT_APPROX_SAMPLES: usize = 200_000;

pub fn run(cli: &Cli) -> CmdResult {
    if cli.mc_samples == Some(0) {
        return Err(CliError::Usage("--mc-samples must be positive".into()));
    }
    match &cli.command {
        Command::Risk(args) => cmd_risk(cli, args),
        Command::Landscape { action } => cmd_landscape(cli, action),
        Command::SchurSweep(a) => cmd_schur_sweep(cli, a),
        Command::Asymptotic(a) => cmd_asymptotic(cli, a),
        Command::Train { kind } => cmd_train(cli, kind),
        Command::Minimax { action } => cmd_minimax(cli, action),
    }
}

fn open(cli: &Cli, spec: &ExperimentSpec, columns: &[&str]) -> std::result::Result<CsvOut, CliError> {
    let spec = match cli.mc_samples {
        Some(n) => spec.clone().param("mc_samples", n),
        None => spec.clone(),
    };
    Ok(CsvOut::create(cli.out.as_deref(), &spec, columns)?)
}

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut g = stream(seed, 0);
    (0..n).map(|_| StandardNormal.sample(&mut g)).collect()
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn mc_cells(cli: &Cli, w: &DMatrix<f64>, w_star: &DMatrix<f64>, seed: u64) -> std::result::Result<[Cell; 2], CliError> {
    Ok(match cli.mc_samples {
        Some(n) => {
            let e = monte_carlo_risk(w, w_star, n, seed)?;
            [e.estimate.into(), e.stderr.into()]
        }
        None => [Cell::Empty, Cell::Empty],
    })
}

fn risk_cells(b: &RiskBreakdown) -> [Cell; 3] {
    [b.linear_term.into(), b.kernel_term.into(), b.total.into()]
}

fn cmd_risk(cli: &Cli, a: &RiskArgs) -> CmdResult {
    if a.demo == Some(Demo::Scalar) {
        return risk_scalar_demo(cli, a);
    }
    if !a.matched && !a.mismatched {
        return Err(CliError::Usage("risk needs one of --demo scalar, --matched or --mismatched".into()));
    }
    let cfg = LineConfig::new(random_line_set(a.d, a.r, derive_seed(cli.seed, 0))?, NeuronLineMap::round_robin(a.k, a.r)?)?;
    let w = PnnWeights::from_signed_norms(cfg.clone(), &normals(derive_seed(cli.seed, 1), a.k))?;
    let (kind, w_star, (r_star, k_star)) = if a.matched {
        let ws = if a.at_target { w.clone() } else { PnnWeights::from_signed_norms(cfg, &normals(derive_seed(cli.seed, 2), a.k))? };
        ("matched", ws, (a.r, a.k))
    } else {
        if a.at_target {
            return Err(CliError::Usage("--at-target needs --matched".into()));
        }
        let cfg_star = LineConfig::new(
            random_line_set(a.d, a.r_star, derive_seed(cli.seed, 3))?,
            NeuronLineMap::round_robin(a.k_star, a.r_star)?,
        )?;
        ("mismatched", PnnWeights::from_signed_norms(cfg_star, &normals(derive_seed(cli.seed, 4), a.k_star))?, (a.r_star, a.k_star))
    };
    let b = if a.matched { matched_risk(&w, &w_star)? } else { mismatched_risk(&w, &w_star)? };
    let spec = ExperimentSpec::new("risk", cli.seed)
        .param("instance", kind)
        .param("d", a.d)
        .param("r", a.r)
        .param("k", a.k)
        .param("r_star", r_star)
        .param("k_star", k_star)
        .param("at_target", a.at_target);
    let mut out = open(cli, &spec, &["instance", "d", "r", "k", "r_star", "k_star", "linear_term", "kernel_term", "total", "mc_estimate", "mc_stderr"])?;
    let mut row: Vec<Cell> = vec![kind.into(), a.d.into(), a.r.into(), a.k.into(), r_star.into(), k_star.into()];
    row.extend(risk_cells(&b));
    row.extend(mc_cells(cli, w.matrix(), w_star.matrix(), derive_seed(cli.seed, 5))?);
    out.row(row)?;
    Ok(out.finish()?)
}

fn risk_scalar_demo(cli: &Cli, a: &RiskArgs) -> CmdResult {
    let targets: Vec<Vec<f64>> = match &a.w_star {
        Some(t) => vec![t.clone()],
        None => vec![vec![6.0, 4.0], vec![6.0, -4.0]],
    };
    let spec = ExperimentSpec::new("risk", cli.seed)
        .param("demo", "scalar")
        .param("w_star", targets.iter().map(|t| joined(t)).collect::<Vec<_>>().join(" | "))
        .param("w", a.w.as_ref().map_or("target and (3, 3)".to_string(), |w| joined(w)));
    let mut out = open(cli, &spec, &["w", "w_star", "linear_term", "kernel_term", "total", "mc_estimate", "mc_stderr"])?;
    for (i, ws) in targets.iter().enumerate() {
        let points: Vec<Vec<f64>> = match &a.w {
            Some(w) => vec![w.clone()],
            None => vec![ws.clone(), vec![3.0, 3.0]],
        };
        for (j, w) in points.iter().enumerate() {
            if w.is_empty() || ws.is_empty() {
                return Err(CliError::Usage("scalar weights must be nonempty".into()));
            }
            let b = scalar_risk(w, ws);
            let mut row: Vec<Cell> = vec![joined(w).into(), joined(ws).into()];
            row.extend(risk_cells(&b));
            let (wm, wsm) = (DMatrix::from_row_slice(1, w.len(), w), DMatrix::from_row_slice(1, ws.len(), ws));
            row.extend(mc_cells(cli, &wm, &wsm, derive_seed(cli.seed, (10 * i + j) as u64))?);
            out.row(row)?;
        }
    }
    Ok(out.finish()?)
}

fn label_name(l: RegionLabel) -> &'static str {
    match l {
        RegionLabel::OnlyGlobal => "only_global",
        RegionLabel::OnlyBadLocal => "only_bad_local",
        RegionLabel::NoOptima => "no_optima",
        RegionLabel::MayHaveBadLocal => "may_have_bad_local",
        RegionLabel::GoodRegion => "good_region",
    }
}

fn cmd_landscape(cli: &Cli, action: &LandscapeAction) -> CmdResult {
    match action {
        LandscapeAction::Classify { scalar, w_star } => {
            if !scalar {
                return Err(CliError::Usage("classify supports --scalar networks only".into()));
            }
            let k = w_star.len();
            if k == 0 || k > 20 {
                return Err(CliError::Usage("--w-star needs between 1 and 20 entries".into()));
            }
            let spec = ExperimentSpec::new("landscape classify", cli.seed).param("scalar", true).param("w_star", joined(w_star));
            let mut out = open(cli, &spec, &["signs", "label"])?;
            for bits in 0..(1u32 << k) {
                let s: Vec<f64> = (0..k).map(|j| if bits >> (k - 1 - j) & 1 == 1 { -1.0 } else { 1.0 }).collect();
                let c = scalar_region_classify(&s, w_star);
                let signs: String = s.iter().map(|&x| if x > 0.0 { '+' } else { '-' }).collect();
                out.row(vec![signs.into(), label_name(c.label).into()])?;
            }
            Ok(out.finish()?)
        }
        LandscapeAction::Probability { r, d, t } => {
            let spec = ExperimentSpec::new("landscape probability", cli.seed).list("r", r).param("d", d).param("t", t);
            let mut out = open(cli, &spec, &["r", "d", "t", "probability"])?;
            for &ri in r {
                out.row(vec![ri.into(), (*d).into(), (*t).into(), good_region_probability(ri, *d, *t).into()])?;
            }
            Ok(out.finish()?)
        }
        LandscapeAction::BadRegion { d, r, r_star, trials, mu } => {
            let spec = ExperimentSpec::new("landscape bad-region", cli.seed)
                .param("d", d)
                .param("r", r)
                .param("r_star", r_star)
                .param("trials", trials)
                .param("mu", mu);
            let gamma = *r as f64 / *d as f64;
            let coef = bad_local_asymptotic_bound(gamma, *r, *r_star, *mu).ok();
            let mut out = open(cli, &spec, &["trial", "seed", "q_star_norm_sq", "bad_region_loss", "good_local_loss", "asymptotic_bound"])?;
            for trial in 0..*trials {
                let seed = derive_seed(cli.seed, trial as u64);
                let l = random_line_set(*d, *r, derive_seed(seed, 0))?;
                let ls = random_line_set(*d, *r_star, derive_seed(seed, 1))?;
                let mut g = stream(derive_seed(seed, 2), 0);
                let q = DVector::from_fn(*r_star, |_, _| g.gen::<f64>());
                let kb = KernelBundle::new(&l, &ls)?;
                let bad = bad_region_loss(&kb, &q)?;
                let (good, _) = schur_complement(&kb).good_local_loss(&q)?;
                let nq = q.norm_squared();
                out.row(vec![trial.into(), seed.into(), nq.into(), bad.into(), good.into(), coef.map(|c| c * nq).into()])?;
            }
            Ok(out.finish()?)
        }
    }
}

fn cmd_schur_sweep(cli: &Cli, a: &crate::SweepArgs) -> CmdResult {
    if a.r.is_empty() || a.r.contains(&0) || a.trials == 0 {
        return Err(CliError::Usage("--r must list positive sizes and --trials must be positive".into()));
    }
    let mode = if a.nearest { SweepMode::Nearest } else { SweepMode::AllLines };
    let spec = ExperimentSpec::new("schur-sweep", cli.seed)
        .param("d", a.d)
        .param("r_star", a.r_star)
        .list("r", &a.r)
        .param("trials", a.trials)
        .param("mode", if a.nearest { "nearest" } else { "all_lines" })
        .param("asymptotic", a.asymptotic)
        .param("timing", a.timing);
    let rows = schur_sweep(a.d, a.r_star, &a.r, a.trials, cli.seed, mode)?;
    let mut cols = vec!["d", "r_star", "r", "trial", "seed", "spectral_norm", "min_eig", "runtime_ms"];
    if a.asymptotic {
        cols.push("asymptotic_limit");
    }
    let mut out = open(cli, &spec, &cols)?;
    for row in rows {
        let mut cells: Vec<Cell> = vec![
            row.d.into(),
            row.r_star.into(),
            row.r.into(),
            row.trial.into(),
            row.seed.into(),
            row.spectral_norm.into(),
            row.min_eig.into(),
            if a.timing { row.runtime_ms.into() } else { Cell::Empty },
        ];
        if a.asymptotic {
            cells.push(asymptotic_reference(row.d, row.r, row.r_star)?.limit.into());
        }
        out.row(cells)?;
    }
    Ok(out.finish()?)
}

fn cmd_asymptotic(cli: &Cli, a: &crate::AsymptoticArgs) -> CmdResult {
    let rep = asymptotic_reference(a.d, a.r, a.r_star)?;
    let spec = ExperimentSpec::new("asymptotic", cli.seed).param("d", a.d).param("r", a.r).param("r_star", a.r_star);
    let mut out = open(cli, &spec, &["d", "r", "r_star", "limit", "eigenvalue", "multiplicity"])?;
    for &(v, m) in &rep.eigenvalues {
        out.row(vec![a.d.into(), a.r.into(), a.r_star.into(), rep.limit.into(), v.into(), m.into()])?;
    }
    Ok(out.finish()?)
}

fn apply_overrides(mut cfg: ExperimentConfig, o: &TrainOverrides, seed: u64) -> ExperimentConfig {
    cfg.train.seed = seed;
    if let Some(v) = o.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = o.learning_rate {
        cfg.train.learning_rate = v;
    }
    if let Some(v) = o.momentum {
        cfg.train.momentum = v;
    }
    if let Some(v) = o.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = o.n_train {
        cfg.n_train = v;
    }
    if let Some(v) = o.n_test {
        cfg.n_test = v;
    }
    cfg
}

fn train_spec(name: &str, seed: u64, cfg: &ExperimentConfig) -> ExperimentSpec {
    let t = &cfg.train;
    ExperimentSpec::new(name, seed)
        .param("epochs", t.epochs)
        .param("batch_size", t.batch_size)
        .param("learning_rate", t.learning_rate)
        .param("momentum", t.momentum)
        .param("decay_rate", t.decay_rate)
        .param("decay_every_steps", t.decay_every_steps)
        .param("early_stop_window", t.early_stop_window)
        .param("early_stop_threshold", t.early_stop_threshold)
        .param("n_train", cfg.n_train)
        .param("n_test", cfg.n_test)
        .param("global_tol", cfg.global_tol)
        .param("grad_tol", cfg.grad_tol)
}

const TRAIN_COLUMNS: [&str; 12] = [
    "experiment",
    "d",
    "k",
    "k_star",
    "trial",
    "seed",
    "epochs_run",
    "final_train_loss",
    "normalized_test_mse",
    "outcome",
    "signature_violations",
    "init",
];

fn cmd_train(cli: &Cli, kind: &TrainKind) -> CmdResult {
    match kind {
        TrainKind::Matched { d, k, trials, train } => {
            let cfg = apply_overrides(ExperimentConfig::matched_default(), train, cli.seed);
            let spec = train_spec("train matched", cli.seed, &cfg).param("d", d).list("k", k).param("trials", trials);
            let summaries = k.iter().map(|&ki| experiment_matched_degree_one(*d, ki, *trials, &cfg)).collect::<Result<Vec<_>, _>>()?;
            let mut out = open(cli, &spec, &TRAIN_COLUMNS)?;
            for s in &summaries {
                for t in &s.trials {
                    out.row(vec![
                        "matched".into(),
                        s.d.into(),
                        s.k.into(),
                        s.k.into(),
                        t.trial.into(),
                        t.seed.into(),
                        t.epochs_run.into(),
                        t.final_train_loss.into(),
                        t.normalized_test_mse.into(),
                        t.outcome.as_str().into(),
                        t.signature_violations.into(),
                        0usize.into(),
                    ])?;
                }
            }
            for s in &summaries {
                out.comment(&format!("summary k={} fraction_global={}", s.k, pnn_core::lines::fmt_f64(s.fraction_global)))?;
            }
            Ok(out.finish()?)
        }
        TrainKind::Mismatched { d, k_star, k, trials, inits, train } => {
            let cfg = apply_overrides(ExperimentConfig::mismatched_default(), train, cli.seed);
            let spec = train_spec("train mismatched", cli.seed, &cfg)
                .param("d", d)
                .param("k_star", k_star)
                .list("k", k)
                .param("trials", trials)
                .param("inits", inits);
            let table = experiment_mismatched_random(*d, *k_star, k, *trials, *inits, &cfg)?;
            let mut out = open(cli, &spec, &TRAIN_COLUMNS)?;
            for r in &table.runs {
                out.row(vec![
                    "mismatched".into(),
                    table.d.into(),
                    r.k.into(),
                    table.k_star.into(),
                    r.trial.into(),
                    r.seed.into(),
                    r.epochs_run.into(),
                    r.final_train_loss.into(),
                    r.normalized_test_mse.into(),
                    (if r.feasible { "feasible" } else { "infeasible" }).into(),
                    r.signature_violations.into(),
                    r.init.into(),
                ])?;
            }
            for (k, MseStats { min, mean, median }) in &table.stats {
                let f = pnn_core::lines::fmt_f64;
                out.comment(&format!("summary k={k} min={} mean={} median={}", f(*min), f(*mean), f(*median)))?;
            }
            Ok(out.finish()?)
        }
    }
}

fn cmd_minimax(cli: &Cli, action: &MinimaxAction) -> CmdResult {
    match action {
        MinimaxAction::Bound { d, s, delta, k, m } => {
            let spec = ExperimentSpec::new("minimax bound", cli.seed).param("d", d).param("s", s).param("delta", delta).param("k", k).param("M", m);
            let mut out = open(
                cli,
                &spec,
                &["d", "s", "delta", "k", "M", "net_size_bound", "sparse_net_size", "sparse_net_size_known_patterns", "minimax_risk_bound"],
            )?;
            out.row(vec![
                (*d).into(),
                (*s).into(),
                (*delta).into(),
                (*k).into(),
                (*m).into(),
                net_size_bound(*d, *delta)?.into(),
                sparse_net_size(*d, *s, *delta, None)?.into(),
                sparse_net_size(*d, *s, *delta, Some(*k))?.into(),
                minimax_risk_bound(*k, *m, *d, *delta).into(),
            ])?;
            Ok(out.finish()?)
        }
        MinimaxAction::Net { d, delta, probes, coverage_probes } => {
            let spec = ExperimentSpec::new("minimax net", cli.seed)
                .param("d", d)
                .param("delta", delta)
                .param("probes", probes)
                .param("coverage_probes", coverage_probes);
            let net = greedy_angular_net(*d, *delta, cli.seed, *probes)?;
            let gap = coverage_gap(&net, *coverage_probes, derive_seed(cli.seed, 1));
            let mut out = open(cli, &spec, &["d", "delta", "net_size", "net_size_bound", "coverage_gap"])?;
            out.row(vec![(*d).into(), (*delta).into(), net.len().into(), net_size_bound(*d, *delta)?.into(), gap.into()])?;
            Ok(out.finish()?)
        }
        MinimaxAction::Approx { d, delta, k, networks, m } => {
            if *k == 0 || *m <= 0.0 {
                return Err(CliError::Usage("--k and --M must be positive".into()));
            }
            let n = cli.mc_samples.unwrap_or(DEFAULT_APPROX_SAMPLES);
            let spec = ExperimentSpec::new("minimax approx", cli.seed)
                .param("d", d)
                .param("delta", delta)
                .param("k", k)
                .param("networks", networks)
                .param("M", m)
                .param("samples", n);
            let net = greedy_angular_net(*d, *delta, cli.seed, 10_000)?;
            let bound = minimax_risk_bound(*k, *m, *d, *delta);
            let mut out = open(cli, &spec, &["network", "k", "max_angle", "mc_abs_error", "mc_stderr", "bound"])?;
            for i in 0..*networks {
                let seed = derive_seed(cli.seed, 100 + i as u64);
                let mut g = stream(seed, 0);
                let cols: Vec<DVector<f64>> = (0..*k)
                    .map(|_| {
                        let v = DVector::from_fn(*d, |_, _| StandardNormal.sample(&mut g));
                        let scale: f64 = g.gen_range(0.0..=*m);
                        v.normalize() * scale.max(1e-3 * m)
                    })
                    .collect();
                let w = DMatrix::from_columns(&cols);
                let (w_tilde, max_angle) = nearest_net_approx(&w, &net)?;
                let e = mc_abs_error(&w, &w_tilde, n, derive_seed(seed, 1))?;
                out.row(vec![i.into(), (*k).into(), max_angle.into(), e.estimate.into(), e.stderr.into(), bound.into()])?;
            }
            Ok(out.finish()?)
        }
    }
}

