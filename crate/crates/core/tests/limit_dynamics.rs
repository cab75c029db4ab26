use mch_peakon::limit_dynamics::{
    dispersive_limit_integrate, integrate_limit, limiting_rhs, ordered_rhs, s2_star,
    sticky_integrate, three_peakon_thresholds, two_peakon_collision_time, ClusterState,
    LimitDynConfig, LimitMode,
};
use mch_peakon::reg_dynamics::{integrate_regularized, RegDynConfig};
use mch_peakon::{EventKind, Mollifier, PeakonEnsemble, Trajectory};
use proptest::prelude::*;

fn ens(p: &[f64], x: &[f64]) -> PeakonEnsemble {
    PeakonEnsemble::new(p.to_vec(), x.to_vec()).unwrap()
}

/// The ordered velocities summed term by term.
fn ordered_oracle(x: &[f64], p: &[f64]) -> Vec<f64> {
    let n = p.len();
    (0..n)
        .map(|i| {
            let mut v = p[i] * p[i] / 6.0;
            for j in 0..i {
                v += 0.5 * p[i] * p[j] * (x[j] - x[i]).exp();
            }
            for j in i + 1..n {
                v += 0.5 * p[i] * p[j] * (x[i] - x[j]).exp();
            }
            for m in 0..i {
                for k in i + 1..n {
                    v += p[m] * p[k] * (x[m] - x[k]).exp();
                }
            }
            v
        })
        .collect()
}

fn state(p: &[f64], x: &[f64]) -> ClusterState {
    ClusterState::from_ensemble(&ens(p, x), 1e-12).unwrap()
}

fn run(mode: LimitMode, p: &[f64], x: &[f64], t_end: f64) -> Trajectory {
    integrate_limit(&ens(p, x), &LimitDynConfig::new(mode, t_end)).unwrap()
}

#[test]
fn limiting_rhs_examples() {
    let v = limiting_rhs(&state(&[1.0], &[0.3]), &[1.0]);
    assert!((v[0] - 1.0 / 6.0).abs() < 1e-15);
    let v = limiting_rhs(&state(&[1.0, 1.0], &[0.0, 0.0]), &[1.0, 1.0]);
    assert_eq!(v.len(), 1);
    assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
    let v = limiting_rhs(&state(&[2.0, 1.0], &[0.0, 1.0]), &[2.0, 1.0]);
    let want = ordered_oracle(&[0.0, 1.0], &[2.0, 1.0]);
    for i in 0..2 {
        assert!((v[i] - want[i]).abs() < 1e-14);
    }
}

#[test]
fn ordered_rhs_examples() {
    let e1 = (-1f64).exp();
    let v = ordered_rhs(&[0.0, 1.0], &[2.0, 1.0]).unwrap();
    assert!((v[0] - (4.0 / 6.0 + e1)).abs() < 1e-15);
    assert!((v[1] - (1.0 / 6.0 + e1)).abs() < 1e-15);
    for gap in [0.01, 0.5, 3.0] {
        let v = ordered_rhs(&[0.0, gap], &[2.0, 1.0]).unwrap();
        assert!((v[0] - v[1] - 0.5).abs() < 1e-14);
    }
    assert!(ordered_rhs(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    assert!(ordered_rhs(&[1.0, 0.0], &[1.0, 1.0]).is_err());
}

#[test]
fn collision_time_examples() {
    assert_eq!(two_peakon_collision_time(0.0, 1.0, 2.0, 1.0).unwrap(), Some(2.0));
    assert_eq!(two_peakon_collision_time(-7.0, -5.0, 4.0, 2.0).unwrap(), Some(1.0));
    assert_eq!(two_peakon_collision_time(0.0, 1.0, 2.0, -2.0).unwrap(), None);
    assert!(two_peakon_collision_time(1.0, 0.0, 2.0, 1.0).is_err());
}

#[test]
fn split_threshold_closed_form() {
    assert!((s2_star(4.0, 2.0, 3.0) - 4.5f64.ln()).abs() < 1e-15);
    assert!((s2_star(4.0, 2.0, 3.0) - 1.5041).abs() < 1e-4);
    // the threshold solves the pair's relative-velocity equation
    let s = s2_star(4.0, 2.0, 3.0);
    let rel = (4.0 - 16.0) / 6.0 + 0.5 * (4.0 + 2.0) * 3.0 * (-s).exp();
    assert!(rel.abs() < 1e-14);
    // a vanishing third peakon pushes the threshold to −∞: no split ever
    let mut last = f64::INFINITY;
    for p3 in [1.0, 1e-2, 1e-4, 1e-8] {
        let s = s2_star(4.0, 2.0, p3);
        assert!(s < last);
        last = s;
        let th = three_peakon_thresholds(4.0, 2.0, p3, 0.1, 1.0).unwrap();
        if s <= 0.0 {
            assert_eq!(th.t2, None);
        }
    }
    assert!(three_peakon_thresholds(2.0, 4.0, 3.0, 1.0, 0.0).is_err());
}

#[test]
fn two_peakon_sticky_merge() {
    let traj = run(LimitMode::Sticky, &[2.0, 1.0], &[0.0, 1.0], 4.0);
    assert_eq!(traj.events.len(), 1);
    let ev = &traj.events[0];
    assert_eq!(ev.kind, EventKind::Merge);
    assert_eq!(ev.indices, vec![0, 1]);
    assert!((ev.time - 2.0).abs() < 1e-6, "{}", ev.time);
    let (a, b) = (traj.positions_at(3.0).unwrap(), traj.positions_at(4.0).unwrap());
    assert_eq!(a[0], a[1]);
    assert!((b[0] - a[0] - 1.5).abs() < 1e-9);
}

#[test]
fn figure_one_sticky() {
    let traj = run(LimitMode::Sticky, &[4.0, 2.0, 1.0], &[-7.0, -5.0, -3.0], 1.8);
    let merges: Vec<_> = traj.events.iter().filter(|e| e.kind == EventKind::Merge).collect();
    assert_eq!(merges.len(), 2);
    assert_eq!((merges[0].left.clone(), merges[0].right.clone()), (vec![1], vec![2]));
    assert_eq!((merges[1].left.clone(), merges[1].right.clone()), (vec![0], vec![1, 2]));
    assert_eq!(traj.cluster_count(traj.len() - 1), 1);
    let a = traj.positions_at(1.7).unwrap();
    let b = traj.positions_at(1.8).unwrap();
    assert!(((b[0] - a[0]) / 0.1 - 49.0 / 6.0).abs() < 1e-9);
    let dl = run(LimitMode::DispersiveLimit, &[4.0, 2.0, 1.0], &[-7.0, -5.0, -3.0], 1.8);
    assert_eq!(dl.events, traj.events);
    assert_eq!(dl.positions, traj.positions);
}

#[test]
fn momentum_balance_at_merges() {
    let p = [4.0, 2.0, 1.0];
    let traj = run(LimitMode::Sticky, &p, &[-7.0, -5.0, -3.0], 1.8);
    for ev in &traj.events {
        let k = traj.times.partition_point(|t| *t < ev.time);
        let x = &traj.positions[k];
        // clusters just after the merge, with the merged pair pulled apart by a tiny gap
        let after = ClusterState::from_ensemble(&ens(&p, x), 1e-12).unwrap();
        let c = after.clusters.iter().position(|c| c.first == ev.left[0]).unwrap();
        let v_after = limiting_rhs(&after, &p)[c];
        let (pa, pb): (f64, f64) = (
            ev.left.iter().map(|&i| p[i]).sum(),
            ev.right.iter().map(|&i| p[i]).sum(),
        );
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        for (j, cl) in after.clusters.iter().enumerate() {
            if j == c {
                xs.extend([cl.position - 1e-10, cl.position]);
                ps.extend([pa, pb]);
            } else {
                xs.push(cl.position);
                ps.push(cl.amplitude);
            }
        }
        let v = ordered_rhs(&xs, &ps).unwrap();
        let lhs = (pa + pb) * v_after;
        let rhs = pa * v[c] + pb * v[c + 1];
        assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }
}

#[test]
fn figure_two_split_follows_threshold() {
    let (p, x) = ([4.0, 2.0, 3.0], [-7.0, -6.0, -2.0]);
    let traj = dispersive_limit_integrate(&ens(&p, &x), &LimitDynConfig::new(LimitMode::DispersiveLimit, 2.0)).unwrap();
    let kinds: Vec<_> = traj.events.iter().map(|e| (e.kind, e.left.clone(), e.right.clone())).collect();
    assert_eq!(
        kinds,
        vec![
            (EventKind::Merge, vec![0], vec![1]),
            (EventKind::Split, vec![0], vec![1]),
            (EventKind::Merge, vec![1], vec![2]),
        ]
    );
    let merge = &traj.events[0];
    let s2 = {
        let y = traj.positions_at(merge.time).unwrap();
        y[2] - y[1]
    };
    let th = three_peakon_thresholds(4.0, 2.0, 3.0, s2, merge.time).unwrap();
    let t2 = th.t2.unwrap();
    let split = &traj.events[1];
    assert!((split.time - t2).abs() <= 0.05 * t2, "{} vs {t2}", split.time);
    let y = traj.positions_at(split.time).unwrap();
    assert!((y[2] - y[1] - th.s2_star).abs() < 1e-3);
    // the probe crosses from below at the split
    assert!(split.probe_before.unwrap() <= 0.0);
    assert!(split.probe_at.unwrap() >= -1e-12);
    assert_eq!(traj.cluster_count(traj.len() - 1), 2);
    let sticky = sticky_integrate(&ens(&p, &x), &LimitDynConfig::new(LimitMode::Sticky, 2.0)).unwrap();
    assert_eq!(sticky.cluster_count(sticky.len() - 1), 1);
}

#[test]
fn figure_three_bifurcation() {
    let a = run(LimitMode::Sticky, &[4.0, 3.0, 2.0], &[-4.0, -3.0, 4.0], 3.0);
    let b = run(LimitMode::Sticky, &[4.0, 3.0, 2.0], &[-4.0, -2.0, 4.0], 3.0);
    assert_eq!(a.cluster_count(a.len() - 1), 1);
    assert_eq!(b.cluster_count(b.len() - 1), 2);
}

#[test]
fn regularized_agrees_before_first_event() {
    let (p, x) = ([4.0, 2.0, 3.0], [-7.0, -6.0, -2.0]);
    let limit = run(LimitMode::DispersiveLimit, &p, &x, 2.0);
    let t_first = limit.events[0].time;
    let eps = 0.02;
    let reg = integrate_regularized(&ens(&p, &x), &RegDynConfig::new(Mollifier::bump(eps).unwrap(), 0.9 * t_first)).unwrap();
    let d = reg.sup_distance(&limit).unwrap();
    assert!(d <= 0.05f64.max(5.0 * eps), "{d}");
}

fn configs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![-3.0f64..-0.2, 0.2f64..3.0], n),
            prop::collection::vec(0.05f64..2.0, n),
        )
    })
}

fn cumulative(steps: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    steps
        .iter()
        .map(|s| {
            acc += s;
            acc
        })
        .collect()
}

proptest! {
    #[test]
    fn limiting_matches_ordered_when_separated((p, steps) in configs()) {
        let x = cumulative(&steps);
        let a = limiting_rhs(&state(&p, &x), &p);
        let b = ordered_rhs(&x, &p).unwrap();
        let c = ordered_oracle(&x, &p);
        for i in 0..p.len() {
            let scale = b[i].abs().max(1.0);
            prop_assert!((a[i] - b[i]).abs() < 1e-13 * scale);
            prop_assert!((c[i] - b[i]).abs() < 1e-13 * scale);
        }
    }

    #[test]
    fn merged_cluster_moves_like_one_peakon(p in prop::collection::vec(0.2f64..3.0, 2..5)) {
        let x = vec![0.5; p.len()];
        let v = limiting_rhs(&state(&p, &x), &p);
        let total: f64 = p.iter().sum();
        prop_assert!((v[0] - total * total / 6.0).abs() < 1e-12 * total * total);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sticky_never_crosses((p, steps) in configs()) {
        let x = cumulative(&steps);
        let mut cfg = LimitDynConfig::new(LimitMode::Sticky, 2.0);
        cfg.dt = 2e-3;
        let traj = sticky_integrate(&ens(&p, &x), &cfg).unwrap();
        let mut last = usize::MAX;
        for (k, y) in traj.positions.iter().enumerate() {
            prop_assert!(y.windows(2).all(|w| w[0] <= w[1]));
            let c = traj.cluster_count(k);
            prop_assert!(c <= last);
            last = c;
        }
        prop_assert!(traj.events.iter().all(|e| e.kind == EventKind::Merge));
    }
}
