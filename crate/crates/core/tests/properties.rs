use nalgebra::{DMatrix, DVector};
use pnn_core::kernel::{min_eigenvalue, psi, psi_apply, KernelBundle};
use pnn_core::landscape::{region_condition, scalar_hessian, stationarity_check};
use pnn_core::lines::*;
use pnn_core::minimax::{greedy_angular_net, nearest_net_approx, relu_gap};
use pnn_core::risk::{matched_risk, mismatched_risk, mismatched_risk_parts};
use pnn_core::schur::{add_line_update, schur_complement};
use proptest::prelude::*;
use std::sync::OnceLock;

fn nonzero_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..=max_len).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-6))
}

fn config(d: usize, r: usize, k: usize, seed: u64) -> std::sync::Arc<LineConfig> {
    LineConfig::new(random_line_set(d, r, seed).unwrap(), NeuronLineMap::round_robin(k, r).unwrap()).unwrap()
}

fn permuted(l: &LineSet, perm: &[usize]) -> LineSet {
    build_line_set(&perm.iter().map(|&i| l.line(i)).collect::<Vec<_>>()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalize_is_idempotent(v in nonzero_vec(8)) {
        let (c, flag) = canonicalize_vector(&DVector::from_vec(v.clone())).unwrap();
        prop_assert!(flag == 1.0 || flag == -1.0);
        let (c2, flag2) = canonicalize_vector(&c).unwrap();
        prop_assert_eq!(&c2, &c);
        prop_assert_eq!(flag2, 1.0);
        let back = &c * (flag * DVector::from_vec(v.clone()).norm());
        prop_assert!((back - DVector::from_vec(v)).amax() <= 1e-9);
    }

    #[test]
    fn gram_is_cosine_of_angles(d in 1usize..8, r in 1usize..12, seed in any::<u64>()) {
        prop_assume!(d > 1 || r == 1);
        let l = random_line_set(d, r, seed).unwrap();
        let (a, k) = (l.angle_matrix(), l.gram());
        for i in 0..r {
            for j in 0..r {
                prop_assert!((0.0..=std::f64::consts::PI).contains(&a[(i, j)]));
                prop_assert!((k[(i, j)] - a[(i, j)].cos()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cross_gram_transposes(d in 2usize..8, r in 1usize..8, rs in 1usize..8, seed in any::<u64>()) {
        let a = random_line_set(d, r, seed).unwrap();
        let b = random_line_set(d, rs, seed.wrapping_add(1)).unwrap();
        prop_assert_eq!(cross_gram(&a, &b).unwrap(), cross_gram(&b, &a).unwrap().transpose());
    }

    #[test]
    fn decompose_ignores_order_within_lines(
        t in prop::collection::vec(-2.0..2.0f64, 12),
        seed in any::<u64>(),
        rot in 0usize..4,
    ) {
        let cfg = config(4, 3, 12, seed);
        let w = PnnWeights::from_signed_norms(cfg.clone(), &t).unwrap();
        // Rotate the neurons of each line among themselves.
        let mut t2 = t.clone();
        for l in 0..3 {
            let members = cfg.map.members(l);
            for (p, &j) in members.iter().enumerate() {
                t2[members[(p + rot) % members.len()]] = t[j];
            }
        }
        let w2 = PnnWeights::from_signed_norms(cfg, &t2).unwrap();
        let ((q1, s1), (q2, s2)) = (w.decompose(), w2.decompose());
        prop_assert!((q1 - q2).amax() <= 1e-12);
        prop_assert_eq!(s1.summary, s2.summary);
    }

    #[test]
    fn psi_is_lipschitz_and_above_identity(x in -1.0..=1.0f64, y in -1.0..=1.0f64) {
        let (px, py) = (psi(x).unwrap(), psi(y).unwrap());
        prop_assert!((px - py).abs() <= (x - y).abs() + 1e-15);
        prop_assert!(px >= x - 1e-15);
        prop_assert!(px >= std::f64::consts::FRAC_2_PI - 1e-15);
        prop_assert!((px - psi(-x).unwrap()).abs() <= 1e-15);
    }

    #[test]
    fn kernel_is_psd(d in 2usize..12, r in 2usize..30, seed in any::<u64>()) {
        let l = random_line_set(d, r, seed).unwrap();
        prop_assert!(min_eigenvalue(&psi_apply(l.gram()).unwrap()).unwrap() >= -1e-9);
    }

    #[test]
    fn matched_risk_is_nonnegative(
        t in prop::collection::vec(-3.0..3.0f64, 8),
        ts in prop::collection::vec(-3.0..3.0f64, 8),
        seed in any::<u64>(),
    ) {
        let cfg = config(3, 4, 8, seed);
        let w = PnnWeights::from_signed_norms(cfg.clone(), &t).unwrap();
        let ws = PnnWeights::from_signed_norms(cfg, &ts).unwrap();
        prop_assert!(matched_risk(&w, &ws).unwrap().total >= -1e-12);
        prop_assert!(matched_risk(&ws, &ws).unwrap().total.abs() <= 1e-12);
    }

    #[test]
    fn mismatched_risk_ignores_line_order(
        t in prop::collection::vec(-3.0..3.0f64, 6),
        qs in prop::collection::vec(0.0..3.0f64, 4),
        seed in any::<u64>(),
        shift in 1usize..4,
    ) {
        let w = PnnWeights::from_signed_norms(config(5, 3, 6, seed), &t).unwrap();
        let ls = random_line_set(5, 4, seed.wrapping_add(9)).unwrap();
        let perm: Vec<usize> = (0..4).map(|i| (i + shift) % 4).collect();
        let star = |l: LineSet, q: &[f64]| PnnWeights::from_signed_norms(LineConfig::new(l, NeuronLineMap::identity(4)).unwrap(), q).unwrap();
        let qp: Vec<f64> = perm.iter().map(|&i| qs[i]).collect();
        let a = mismatched_risk(&w, &star(ls.clone(), &qs)).unwrap().total;
        let b = mismatched_risk(&w, &star(permuted(&ls, &perm), &qp)).unwrap().total;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn scalar_hessian_is_psd(bits in 1u32..1024, k in 1usize..=10) {
        let s: Vec<f64> = (0..k).map(|j| if bits >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let (h, rank) = scalar_hessian(&s);
        prop_assert!(h.symmetric_eigenvalues().min() >= -1e-12);
        prop_assert!(rank == 1 || rank == 2);
    }

    #[test]
    fn schur_is_psd_and_vanishes_on_containment(d in 2usize..10, r in 2usize..20, seed in any::<u64>(), take in 1usize..5) {
        let l = random_line_set(d, r, seed).unwrap();
        let ls = random_line_set(d, take, seed.wrapping_add(3)).unwrap();
        let rep = schur_complement(&KernelBundle::new(&l, &ls).unwrap());
        prop_assert!(rep.min_eigenvalue >= -1e-9);
        let sub: Vec<usize> = (0..take.min(r)).collect();
        let rep = schur_complement(&KernelBundle::new(&l, &permuted(&l, &sub)).unwrap());
        prop_assert!(rep.spectral_norm <= 1e-10);
    }

    #[test]
    fn adding_a_line_never_hurts(d in 2usize..8, r in 1usize..10, rs in 1usize..5, seed in any::<u64>()) {
        let l = random_line_set(d, r, seed).unwrap();
        let ls = random_line_set(d, rs, seed.wrapping_add(5)).unwrap();
        let extra = random_line_set(d, 1, seed.wrapping_add(6)).unwrap().line(0);
        prop_assume!(l.find_collinear(&extra).is_none());
        let kb = KernelBundle::new(&l, &ls).unwrap();
        prop_assume!(min_eigenvalue(&kb.psi_ll).unwrap() > 1e-8);
        let rep = schur_complement(&kb);
        let step = add_line_update(&rep, &kb, &extra).unwrap();
        prop_assert!(step.alpha >= 0.0);
        prop_assert!(step.report.spectral_norm <= rep.spectral_norm + 1e-10);
    }

    #[test]
    fn good_local_value_is_the_unconstrained_minimum(d in 2usize..8, r in 2usize..12, rs in 1usize..5, seed in any::<u64>(),
        qs in prop::collection::vec(0.0..2.0f64, 5)) {
        let l = random_line_set(d, r, seed).unwrap();
        let ls = random_line_set(d, rs, seed.wrapping_add(7)).unwrap();
        let kb = KernelBundle::new(&l, &ls).unwrap();
        prop_assume!(min_eigenvalue(&kb.psi_ll).unwrap() > 1e-6);
        let q_star = DVector::from_column_slice(&qs[..rs]);
        let q = kb.psi_ll.clone().cholesky().unwrap().solve(&(&kb.psi_cross * &q_star));
        let at_opt = mismatched_risk_parts(&kb, &DVector::zeros(d), &q, &q_star).total;
        let (exact, _) = schur_complement(&kb).good_local_loss(&q_star).unwrap();
        prop_assert!((at_opt - exact).abs() <= 1e-9 * q_star.norm_squared().max(1.0), "{} vs {}", at_opt, exact);
    }

    #[test]
    fn relu_gap_is_lipschitz(w1 in nonzero_vec(5), w2 in nonzero_vec(5), x in nonzero_vec(5)) {
        let n = w1.len().min(w2.len()).min(x.len());
        let v = |a: &[f64]| DVector::from_column_slice(&a[..n]);
        let (gap, bound) = relu_gap(&v(&w1), &v(&w2), &v(&x));
        prop_assert!(gap <= bound * (1.0 + 1e-12) + 1e-12);
    }
}

fn net() -> &'static pnn_core::minimax::AngularNet {
    static NET: OnceLock<pnn_core::minimax::AngularNet> = OnceLock::new();
    NET.get_or_init(|| greedy_angular_net(3, 0.3, 1, 10_000).unwrap())
}

proptest! {
    #[test]
    fn net_approximation_error_identity(cols in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 1..6)) {
        let w = DMatrix::from_fn(3, cols.len(), |i, j| cols[j][i]);
        prop_assume!(w.column_iter().all(|c| c.norm() > 1e-3));
        let (wt, max_angle) = nearest_net_approx(&w, net()).unwrap();
        prop_assert!(max_angle <= 0.3 + 1e-9);
        for (a, b) in w.column_iter().zip(wt.column_iter()) {
            let cos = a.dot(&b) / (a.norm() * b.norm());
            let want = 2.0 * a.norm_squared() * (1.0 - cos);
            prop_assert!(((a - b).norm_squared() - want).abs() <= 1e-9 * a.norm_squared().max(1.0));
        }
    }
}

/// A good-region stationary point built by hand: with L a small perturbation of
/// L*, the optimal masses are positive and two opposite-signed neurons per line
/// can realize both those masses and Σw = Σw*.
#[test]
fn good_region_stationary_point_attains_schur_value() {
    let d = 3;
    let ls = random_line_set(d, 6, 77).unwrap();
    let u = ls.unit_vectors() + DMatrix::from_fn(d, 6, |i, j| 0.02 * ((i * 7 + j * 3) as f64).sin());
    let l = build_line_set(&u.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>()).unwrap();
    let masses = [1.0, 0.8, 1.2, 0.9, 1.1, 1.0];
    // Two target neurons per line with opposite signs keep Σw* well inside what the masses allow.
    let ts: Vec<f64> = masses.iter().flat_map(|&m| [0.7 * m, -0.3 * m]).collect();
    let ws = PnnWeights::from_signed_norms(LineConfig::new(ls.clone(), NeuronLineMap::new((0..12).map(|j| j / 2).collect(), 6).unwrap()).unwrap(), &ts).unwrap();
    let q_star = DVector::from_vec(masses.to_vec());
    let kb = KernelBundle::new(&l, &ls).unwrap();
    let q = kb.psi_ll.clone().cholesky().unwrap().solve(&(&kb.psi_cross * &q_star));
    assert!(q.min() > 0.0);
    let target = ws.column_sum();
    let c = l.unit_vectors().clone().pseudo_inverse(1e-12).unwrap() * &target;
    assert!(c.iter().zip(q.iter()).all(|(c, q)| c.abs() < *q));
    let t: Vec<f64> = (0..6).flat_map(|i| [(q[i] + c[i]) / 2.0, -(q[i] - c[i]) / 2.0]).collect();
    let cfg = LineConfig::new(l, NeuronLineMap::new((0..12).map(|j| j / 2).collect(), 6).unwrap()).unwrap();
    let w = PnnWeights::from_signed_norms(cfg, &t).unwrap();
    assert!(region_condition(&w.decompose().1, d));
    assert!(stationarity_check(&w, ws.matrix(), 1e-9).unwrap());
    let (exact, _) = schur_complement(&kb).good_local_loss(&q_star).unwrap();
    assert!((mismatched_risk(&w, &ws).unwrap().total - exact).abs() <= 1e-6);
}
