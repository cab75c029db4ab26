mod common;

use common::oracle;
use mch_peakon::reg_dynamics::{
    collision_rate, consistency_error, integrate_regularized, velocity_field, RegDynConfig, StepSize,
};
use mch_peakon::{Error, Mollifier, MollifierFamily, PeakonEnsemble, TestFunction};
use proptest::prelude::*;

fn ens(p: &[f64], x: &[f64]) -> PeakonEnsemble {
    PeakonEnsemble::new(p.to_vec(), x.to_vec()).unwrap()
}

#[test]
fn one_peakon_speed() {
    let m = Mollifier::bump(0.02).unwrap();
    for x in [-3.0, 0.0, 11.5] {
        let v = velocity_field(&ens(&[1.0], &[x]), &m).unwrap()[0];
        assert!((v - 1.0 / 6.0).abs() < 2e-3, "{v}");
    }
    // the O(ε) offset scales with p², so p = 2 meets the same absolute gate at ε/4
    let v = velocity_field(&ens(&[2.0], &[0.0]), &m).unwrap()[0];
    assert!((v / 4.0 - 1.0 / 6.0).abs() < 2e-3, "{v}");
    let fine = Mollifier::bump(0.005).unwrap();
    let v = velocity_field(&ens(&[2.0], &[0.0]), &fine).unwrap()[0];
    assert!((v - 4.0 / 6.0).abs() < 2e-3, "{v}");
}

#[test]
fn symmetric_pair_moves_together() {
    for family in [MollifierFamily::Bump, MollifierFamily::Gaussian] {
        let m = Mollifier::new(family, 0.05).unwrap();
        let v = velocity_field(&ens(&[1.0, 1.0], &[-0.4, 0.4]), &m).unwrap();
        assert!((v[0] - v[1]).abs() < 1e-12, "{v:?}");
    }
}

#[test]
fn two_peakons_never_collide() {
    let m = Mollifier::bump(0.05).unwrap();
    let e = ens(&[2.0, 1.0], &[0.0, 1.0]);
    let traj = integrate_regularized(&e, &RegDynConfig::new(m.clone(), 4.0)).unwrap();
    let c = collision_rate(e.m0(), &m);
    let gaps = traj.gaps.as_ref().unwrap();
    for (t, g) in traj.times.iter().zip(gaps) {
        assert!(g[0] > 0.0);
        assert!(g[0] >= (-c * t).exp() * (1.0 - 1e-12), "t {t}: {} < bound", g[0]);
    }
    assert!((traj.t_end() - 4.0).abs() < 1e-12);
    assert!(traj.max_sample_speed() <= 0.5 * e.m0().powi(2) + 1e-9);
}

#[test]
fn one_peakon_moves_on_a_line() {
    let m = Mollifier::bump(0.05).unwrap();
    let e = ens(&[1.5], &[0.3]);
    let v = velocity_field(&e, &m).unwrap()[0];
    let traj = integrate_regularized(&e, &RegDynConfig::new(m, 2.0)).unwrap();
    for (t, x) in traj.times.iter().zip(&traj.positions) {
        assert!((x[0] - 0.3 - v * t).abs() < 1e-10);
    }
}

#[test]
fn step_doubling_gate() {
    let m = Mollifier::bump(0.05).unwrap();
    let e = ens(&[2.0, 1.0, -0.5], &[0.0, 1.0, 1.5]);
    let mut a = RegDynConfig::new(m.clone(), 2.0);
    a.step = StepSize::Fixed(1e-3);
    let mut b = RegDynConfig::new(m, 2.0);
    b.step = StepSize::Fixed(5e-4);
    b.store_every = 2;
    let ta = integrate_regularized(&e, &a).unwrap();
    let tb = integrate_regularized(&e, &b).unwrap();
    assert_eq!(ta.len(), tb.len());
    for k in 0..ta.len() {
        assert!((ta.times[k] - tb.times[k]).abs() < 1e-12);
        for i in 0..3 {
            let d = (ta.positions[k][i] - tb.positions[k][i]).abs();
            assert!(d < 1e-8, "t {}: {d}", ta.times[k]);
        }
    }
}

#[test]
fn adaptive_agrees_with_fixed() {
    let m = Mollifier::bump(0.1).unwrap();
    let e = ens(&[2.0, 1.0], &[0.0, 1.0]);
    let fixed = integrate_regularized(&e, &RegDynConfig::new(m.clone(), 3.0)).unwrap();
    let mut cfg = RegDynConfig::new(m, 3.0);
    cfg.step = StepSize::Adaptive { rtol: 1e-10 };
    let adaptive = integrate_regularized(&e, &cfg).unwrap();
    let d = adaptive.sup_distance(&fixed).unwrap();
    assert!(d < 1e-6, "{d}");
}

#[test]
fn rejects_bad_input() {
    let m = Mollifier::bump(0.05).unwrap();
    let e = ens(&[1.0, 1.0], &[0.0, 0.0]);
    assert!(matches!(
        integrate_regularized(&e, &RegDynConfig::new(m.clone(), 1.0)),
        Err(Error::InvalidInput(_))
    ));
    let mut cfg = RegDynConfig::new(m, 1.0);
    cfg.step = StepSize::Fixed(-1.0);
    assert!(integrate_regularized(&ens(&[1.0], &[0.0]), &cfg).is_err());
}

#[test]
fn oversized_step_aborts() {
    let m = Mollifier::bump(0.01).unwrap();
    let e = ens(&[2.0, 1.0], &[0.0, 0.05]);
    let mut cfg = RegDynConfig::new(m, 2.0);
    cfg.step = StepSize::Fixed(0.5);
    assert!(matches!(
        integrate_regularized(&e, &cfg),
        Err(Error::OrderingViolation { step: 1, index: 1, .. })
    ));
}

#[test]
fn consistency_vanishes_away_from_particles() {
    let m = Mollifier::bump(0.1).unwrap();
    let e = ens(&[2.0, 1.0], &[0.0, 1.0]);
    let traj = integrate_regularized(&e, &RegDynConfig::new(m.clone(), 2.0)).unwrap();
    let far = TestFunction::new(40.0, 1.0, 1.0, 0.5).unwrap();
    assert_eq!(consistency_error(&traj, &far, &m).unwrap(), 0.0);
    let late = TestFunction::new(1.0, 1.0, 2.5, 0.2).unwrap();
    assert!(matches!(consistency_error(&traj, &late, &m), Err(Error::Support(_))));
}

/// `E` for one peakon moving on `x₀ + vt`, straight from its definition.
fn one_peakon_oracle(m: &Mollifier, p: f64, x0: f64, v: f64, phi: &TestFunction) -> f64 {
    let r = oracle::reach(m);
    let (t_lo, t_hi) = phi.t_support();
    let inner = |t: f64| {
        let x = x0 + v * t;
        let at = phi.derivs(x, t);
        let smooth = |y: f64| {
            let (g, gx) = (oracle::g_eps(m, y - x), oracle::gx_eps(m, y - x));
            let u = p * p * (g * g - gx * gx);
            let d = phi.derivs(y, t);
            m.density(x - y) * (d.t + u * (d.x - at.x))
        };
        p * (oracle::integrate_pieces(smooth, &[x - r, x, x + r], 1e-12) - at.t)
    };
    oracle::integrate(inner, t_lo.max(0.0), t_hi, 1e-10)
}

#[test]
fn one_peakon_consistency_matches_oracle() {
    let m = Mollifier::bump(0.1).unwrap();
    let (p, x0) = (1.5, -0.2);
    let e = ens(&[p], &[x0]);
    let v = velocity_field(&e, &m).unwrap()[0];
    let traj = integrate_regularized(&e, &RegDynConfig::new(m.clone(), 2.0)).unwrap();
    for phi in [
        TestFunction::new(0.0, 0.6, 0.8, 0.5).unwrap(),
        TestFunction::new(0.4, 1.0, 1.2, 0.7).unwrap(),
    ] {
        let got = consistency_error(&traj, &phi, &m).unwrap();
        let want = one_peakon_oracle(&m, p, x0, v, &phi);
        assert!((got - want).abs() < 1e-6, "{got:e} vs {want:e}");
    }
}

fn configs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], n),
            prop::collection::vec(0.01f64..1.5, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn velocity_bounded_by_mass((p, steps) in configs(), log_eps in -4.0f64..-1.0) {
        let mut x = Vec::with_capacity(steps.len());
        let mut acc = 0.0;
        for s in steps {
            acc += s;
            x.push(acc);
        }
        let e = ens(&p, &x);
        for family in [MollifierFamily::Bump, MollifierFamily::Gaussian] {
            let m = Mollifier::new(family, log_eps.exp()).unwrap();
            for v in velocity_field(&e, &m).unwrap() {
                prop_assert!(v.abs() <= 0.5 * e.m0().powi(2) + 1e-9);
            }
        }
    }
}
