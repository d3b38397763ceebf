//! The event-driven engine against independent numerical oracles.

mod common;

use common::{check_solver, max_position_error, rk4_positions, GapOracle};
use ogs::engine::{crossing_time, propagate, Engine, GapState, ParticleState};
use ogs::icgen::{generate, IcKind, IcSpec};
use ogs::model::{preset, ModelKind, Snapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRESETS: [ModelKind; 4] = [ModelKind::Quintic, ModelKind::RouetFeix, ModelKind::Frictionless, ModelKind::Newtonian];

#[test]
fn crossing_time_matches_scan_oracle() {
    for (i, kind) in PRESETS.into_iter().enumerate() {
        let params = preset(kind, 1024, 1024.0).unwrap();
        let report = check_solver(&params, 20_000, 100 + i as u64);
        assert_eq!(report.missed, 0, "{kind}: {report:?}");
        assert_eq!(report.spurious, 0, "{kind}: {report:?}");
        assert!(report.with_root > 1000, "{kind}: {report:?}");
        assert!(report.max_error <= common::SOLVER_TOLERANCE, "{kind}: {report:?}");
    }
}

#[test]
fn scan_oracle_finds_known_roots() {
    let params = preset(ModelKind::Newtonian, 4, 8.0).unwrap();
    // y = 1 + t - t^2 closes at the golden ratio.
    let t = GapOracle::new(&params, 1.0, 1.0).first_root(64).unwrap();
    assert!((t - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
    let params = preset(ModelKind::Frictionless, 4, 8.0).unwrap();
    // At equilibrium separation with no relative velocity the gap never closes.
    assert!(GapOracle::new(&params, 2.0, 0.0).first_root(64).is_none());
    // Dipping below zero and recovering: the scan must catch the dip.
    let dip = GapOracle::new(&params, 1e-3, -0.1);
    let t = dip.first_root(8).unwrap();
    assert!(t > 0.0 && t < 0.02);
}

#[test]
fn grazing_and_touching_gaps() {
    let params = preset(ModelKind::Quintic, 64, 64.0).unwrap();
    let touching = GapState { index: 3, y0: 0.0, w0: -1.0, t_ref: 0.0 };
    let t = crossing_time(&touching, &params).unwrap();
    assert!(t.is_none_or(|t| t < 1e-12));
    // Fast enough to escape to the growing mode.
    let separating = GapState { index: 3, y0: 0.0, w0: 5.0, t_ref: 0.0 };
    assert_eq!(crossing_time(&separating, &params).unwrap(), None);
    let negative = GapState { index: 3, y0: -1.0, w0: 1.0, t_ref: 0.0 };
    assert!(crossing_time(&negative, &params).is_err());
}

#[test]
fn propagate_matches_small_step_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for kind in PRESETS {
        let params = preset(kind, 32, 32.0).unwrap();
        for _ in 0..20 {
            let rank = rng.random_range(1..=32);
            let (x0, v0) = (rng.random_range(-16.0..16.0), rng.random_range(-3.0..3.0));
            let dt = rng.random_range(0.0..3.0);
            let start = ParticleState::new(x0, v0, 1.5, rank, &params).unwrap();
            let end = propagate(&start, dt, &params).unwrap();
            let field = params.field_coeff * (33.0 - 2.0 * rank as f64);
            let acc = |x: f64, v: f64| params.beta * x - params.gamma * v + field;
            let steps = 20_000;
            let h = dt / steps as f64;
            let (mut x, mut v) = (x0, v0);
            for _ in 0..steps {
                let (a1, b1) = (v, acc(x, v));
                let (a2, b2) = (v + 0.5 * h * b1, acc(x + 0.5 * h * a1, v + 0.5 * h * b1));
                let (a3, b3) = (v + 0.5 * h * b2, acc(x + 0.5 * h * a2, v + 0.5 * h * b2));
                let (a4, b4) = (v + h * b3, acc(x + h * a3, v + h * b3));
                x += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
                v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            }
            let scale = 1.0 + x.abs() + v.abs();
            assert!((end.x - x).abs() < 1e-9 * scale, "{kind}: x {} vs {x}", end.x);
            assert!((end.v - v).abs() < 1e-9 * scale, "{kind}: v {} vs {v}", end.v);
            assert_eq!(end.t_sync, 1.5 + dt);
        }
        let p = ParticleState::new(0.0, 0.0, 0.0, 1, &params).unwrap();
        assert!(propagate(&p, -1e-3, &params).is_err());
    }
}

#[test]
fn trajectories_match_direct_integration() {
    let params = preset(ModelKind::Quintic, 16, 16.0).unwrap();
    let spec = IcSpec { kind: IcKind::Waterbag, n_particles: 16, box_length: 16.0, velocity_scale: 3.0, seed: 4 };
    let initial = generate(&spec, &params).unwrap();
    let times = [0.5, 1.0, 1.5, 2.0];
    let mut engine = Engine::new(&initial).unwrap();
    let reference = rk4_positions(&initial, &times, 1e-5);
    for (t, want) in times.iter().zip(&reference) {
        engine.advance_to(*t).unwrap();
        let got = engine.snapshot().unwrap();
        let err = max_position_error(&got.positions, want, Some(16.0));
        assert!(err <= 1e-6, "tau={t}: error {err}");
    }
    let stats = engine.stats();
    assert!(stats.crossings > 10 && stats.wraps > 0, "{stats:?}");
}

#[test]
fn centroid_follows_homogeneous_solution() {
    // Isolated, since a wrap displaces the centroid by one spacing and
    // restarts the homogeneous motion from there.
    let n = 64;
    let params = preset(ModelKind::Quintic, n, 64.0).unwrap().with_periodic(false);
    let spec = IcSpec { kind: IcKind::Waterbag, n_particles: n, box_length: 64.0, velocity_scale: 0.5, seed: 2 };
    let base = generate(&spec, &params).unwrap();
    let (dx, dv) = (0.3, 0.05);
    let positions: Vec<f64> = base.positions.iter().map(|x| x + dx).collect();
    let v_mean = base.velocities.iter().sum::<f64>() / n as f64;
    let velocities: Vec<f64> = base.velocities.iter().map(|v| v - v_mean + dv).collect();
    let initial = Snapshot::new(0.0, positions, velocities, params, 2, "offset").unwrap();
    let x0 = initial.positions.iter().sum::<f64>() / n as f64;
    let (lp, lm) = {
        let disc = (params.gamma * params.gamma + 4.0).sqrt();
        ((-params.gamma + disc) / 2.0, (-params.gamma - disc) / 2.0)
    };
    let a = (dv - lm * x0) / (lp - lm);
    let b = x0 - a;
    let mut engine = Engine::new(&initial).unwrap();
    for k in 1..=20 {
        let t = 0.1 * k as f64;
        engine.advance_to(t).unwrap();
        let snap = engine.snapshot().unwrap();
        let centroid = snap.positions.iter().sum::<f64>() / n as f64;
        let want = a * (lp * t).exp() + b * (lm * t).exp();
        assert!((centroid - want).abs() < 1e-6, "tau={t}: {centroid} vs {want}");
    }
    assert!(engine.stats().crossings > 0);
}

#[test]
fn ten_thousand_events_stay_ordered() {
    let n = 256;
    let params = preset(ModelKind::Quintic, n, 256.0).unwrap();
    let spec = IcSpec { kind: IcKind::Waterbag, n_particles: n, box_length: 256.0, velocity_scale: 2.0, seed: 5 };
    let mut engine = Engine::new(&generate(&spec, &params).unwrap()).unwrap();
    let mut last = 0.0;
    while engine.stats().events < 10_000 {
        let t = engine.step().unwrap().expect("event queue ran dry");
        assert!(t >= last, "time went back from {last} to {t}");
        last = t;
        if engine.stats().events % 500 == 0 {
            let snap = engine.snapshot().unwrap();
            snap.validate().unwrap();
            let mut gaps: f64 = snap.positions.windows(2).map(|w| w[1] - w[0]).sum();
            gaps += snap.positions[0] + 128.0 + 128.0 - snap.positions[n - 1];
            assert!((gaps - 256.0).abs() < 1e-9 * 256.0);
        }
    }
    assert!(engine.next_event_time().unwrap() >= last);
}

#[test]
fn wrap_keeps_interior_predictions() {
    let n = 8;
    let params = preset(ModelKind::Quintic, n, 8.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let positions = ogs::icgen::lattice(n, 8.0);
    // Every interior gap closes slowly.
    let mut velocities: Vec<f64> = (0..n).map(|r| -0.02 * r as f64 + rng.random_range(-0.002..0.002)).collect();
    velocities[n - 1] = 3.0;
    let initial = Snapshot::new(0.0, positions, velocities, params, 6, "wrap").unwrap();
    let mut engine = Engine::new(&initial).unwrap();
    let before: Vec<Option<f64>> = (1..=n - 2).map(|r| engine.predicted_crossing(r)).collect();
    assert!(before.iter().all(|p| p.is_some()));
    while engine.stats().wraps == 0 {
        engine.step().unwrap();
    }
    assert_eq!(engine.stats().crossings, 0);
    let after: Vec<Option<f64>> = (2..=n - 1).map(|r| engine.predicted_crossing(r)).collect();
    assert_eq!(before, after);
    let snap = engine.snapshot().unwrap();
    assert!(snap.positions[0] < -3.9 && snap.velocities[0] > 2.0);
}
