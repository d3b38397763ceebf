//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls into the engine's own kinematics.

#![allow(dead_code)]

use ogs::model::{ModelParams, Snapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed-form gap motion `y'' + gamma y' - beta y = -2 delta`, written in
/// `expm1` form so small times keep full relative precision.
#[derive(Debug, Clone, Copy)]
pub struct GapOracle {
    y0: f64,
    w0: f64,
    forcing: f64,
    /// `(l+, l-, C+, C-)` when `beta > 0`.
    modes: Option<(f64, f64, f64, f64)>,
}

impl GapOracle {
    pub fn new(params: &ModelParams, y0: f64, w0: f64) -> Self {
        let forcing = -2.0 * params.box_length / (2.0 * params.n_particles as f64);
        let modes = (params.beta > 0.0).then(|| {
            let disc = (params.gamma * params.gamma + 4.0 * params.beta).sqrt();
            let (lp, lm) = ((-params.gamma + disc) / 2.0, (-params.gamma - disc) / 2.0);
            let d = y0 + forcing / params.beta;
            let cp = (w0 - lm * d) / (lp - lm);
            (lp, lm, cp, d - cp)
        });
        GapOracle { y0, w0, forcing, modes }
    }

    /// `(y, y')` at time `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match self.modes {
            Some((lp, lm, cp, cm)) => (
                self.y0 + cp * (lp * t).exp_m1() + cm * (lm * t).exp_m1(),
                cp * lp * (lp * t).exp() + cm * lm * (lm * t).exp(),
            ),
            None => (self.y0 + self.w0 * t + 0.5 * self.forcing * t * t, self.w0 + self.forcing * t),
        }
    }

    /// Rounding scale of `eval(t).0`.
    pub fn noise(&self, t: f64) -> f64 {
        let scale = match self.modes {
            Some((lp, lm, cp, cm)) => {
                self.y0.abs() + (cp * (lp * t).exp()).abs() + (cm * (lm * t).exp()).abs() + cp.abs() + cm.abs()
            }
            None => self.y0.abs() + (self.w0 * t).abs() + (self.forcing * t * t).abs(),
        };
        8.0 * f64::EPSILON * scale
    }

    /// The one positive time where `y'` vanishes, if any.
    fn turning_point(&self) -> Option<f64> {
        let t = match self.modes {
            Some((lp, lm, cp, cm)) => {
                let ratio = -cm * lm / (cp * lp);
                (ratio > 0.0 && ratio.is_finite()).then(|| ratio.ln() / (lp - lm))?
            }
            None => -self.w0 / self.forcing,
        };
        (t > 0.0).then_some(t)
    }

    /// Time by which the first root, if it exists, has certainly occurred.
    fn horizon(&self) -> f64 {
        let turn = self.turning_point().unwrap_or(0.0);
        let mut t = turn.max(1.0);
        let falls_forever = match self.modes {
            Some((_, _, cp, _)) => cp < 0.0,
            None => true,
        };
        if !falls_forever {
            return turn;
        }
        while self.eval(t).0 > 0.0 && t < 1e4 {
            t *= 2.0;
        }
        t
    }

    /// Earliest sign change of `y` on `(0, inf)` by a dense scan of
    /// `samples` steps up to the horizon (turning point included, so every
    /// sub-interval is monotone), refined by bisection.
    pub fn first_root(&self, samples: usize) -> Option<f64> {
        let horizon = self.horizon();
        if horizon <= 0.0 {
            return None;
        }
        let mut grid: Vec<f64> = (1..=samples).map(|i| horizon * i as f64 / samples as f64).collect();
        if let Some(t) = self.turning_point().filter(|&t| t < horizon) {
            grid.push(t);
            grid.sort_by(f64::total_cmp);
        }
        let mut lo = 0.0;
        for &hi in &grid {
            if self.eval(hi).0 <= 0.0 {
                return Some(self.bisect(lo, hi));
            }
            lo = hi;
        }
        None
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return hi;
            }
            if self.eval(mid).0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
}

/// Random gap states spanning many decades of separation and velocity.
pub fn random_gap(rng: &mut ChaCha8Rng, spacing: f64) -> (f64, f64) {
    let y0 = spacing * 10f64.powf(rng.random_range(-9.0..1.0));
    let speed = spacing * 10f64.powf(rng.random_range(-7.0..1.5));
    let w0 = if rng.random_bool(0.5) { speed } else { -speed };
    (y0, w0)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SolverReport {
    pub states: usize,
    pub with_root: usize,
    pub max_error: f64,
    /// Oracle root earlier than the solver's, or a root the solver missed.
    pub missed: usize,
    /// Solver root where the oracle saw none and `y` is not at zero.
    pub spurious: usize,
    /// Roots whose conditioning is worse than the nominal tolerance.
    pub ill_conditioned: usize,
}

pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Compare `crossing_time` with the scan oracle on `count` random states.
pub fn check_solver(params: &ModelParams, count: usize, seed: u64) -> SolverReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spacing = params.box_length / params.n_particles as f64;
    let mut report = SolverReport { states: count, ..SolverReport::default() };
    for _ in 0..count {
        let (y0, w0) = random_gap(&mut rng, spacing);
        let oracle = GapOracle::new(params, y0, w0);
        let expected = oracle.first_root(512);
        let gap = ogs::engine::GapState { index: 1, y0, w0, t_ref: 0.0 };
        let got = ogs::engine::crossing_time(&gap, params).expect("solver fault");
        match (expected, got) {
            (Some(te), Some(tg)) => {
                report.with_root += 1;
                // Rounding in y limits how well any root can be located.
                let slope = oracle.eval(te).1.abs();
                let conditioning = oracle.noise(te) / slope.max(f64::MIN_POSITIVE);
                let scale = te.max(1.0);
                let tolerance = SOLVER_TOLERANCE * scale;
                if conditioning > tolerance {
                    report.ill_conditioned += 1;
                }
                let allowed = tolerance.max(4.0 * conditioning);
                let err = (tg - te).abs();
                if err <= allowed {
                    report.max_error = report.max_error.max(err / scale);
                } else if tg > te {
                    report.missed += 1;
                } else if oracle.eval(tg).0 > oracle.noise(tg) {
                    report.spurious += 1;
                } else {
                    // The solver found a zero the scan stepped over.
                    report.missed += 1;
                }
            }
            (Some(_), None) => report.missed += 1,
            (None, Some(tg)) => {
                if oracle.eval(tg).0 > oracle.noise(tg) {
                    report.spurious += 1;
                }
            }
            (None, None) => {}
        }
    }
    report
}

/// Direct RK4 integration of the rank-field equations with step `h`.
///
/// The force jumps whenever two sheets swap order or a sheet leaves the
/// cell, and a fixed step straddling such a jump is only first-order
/// accurate. Each step therefore holds the ranks fixed, and a step whose
/// end state shows a swap or an exit is cut back by bisection to the
/// instant just past the first one. Returns sorted positions at `times`.
pub fn rk4_positions(initial: &Snapshot, times: &[f64], h: f64) -> Vec<Vec<f64>> {
    let p = initial.model;
    let n = p.n_particles;
    let half = 0.5 * p.box_length;
    let delta = p.box_length / (2.0 * n as f64);
    let mut x = initial.positions.clone();
    let mut v = initial.velocities.clone();
    let mut t = initial.tau;
    let mut out = Vec::new();
    for &target in times {
        while t < target - 1e-13 {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
            let mut field = vec![0.0; n];
            for (r0, &i) in order.iter().enumerate() {
                field[i] = delta * (n as f64 - 1.0 - 2.0 * r0 as f64);
            }
            let event = |xs: &[f64]| {
                order.windows(2).any(|w| xs[w[1]] < xs[w[0]])
                    || (p.periodic && xs.iter().any(|&y| y >= half || y < -half))
            };
            let dt = h.min(target - t);
            let (mut xn, mut vn) = rk4_step(&x, &v, &field, dt, p.beta, p.gamma);
            let mut taken = dt;
            if event(&xn) {
                let (mut lo, mut hi) = (0.0, dt);
                while hi - lo > 1e-15 * (1.0 + t) {
                    let mid = 0.5 * (lo + hi);
                    if event(&rk4_step(&x, &v, &field, mid, p.beta, p.gamma).0) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                (xn, vn) = rk4_step(&x, &v, &field, hi, p.beta, p.gamma);
                taken = hi;
                if p.periodic {
                    for y in xn.iter_mut() {
                        if *y >= half {
                            *y -= p.box_length;
                        } else if *y < -half {
                            *y += p.box_length;
                        }
                    }
                }
            }
            x = xn;
            v = vn;
            t += taken;
        }
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        out.push(sorted);
    }
    out
}

/// One classical RK4 step of `x'' = beta x - gamma x' + field`.
fn rk4_step(x: &[f64], v: &[f64], field: &[f64], dt: f64, beta: f64, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let acc = |i: usize, xi: f64, vi: f64| beta * xi - gamma * vi + field[i];
    let mut xo = Vec::with_capacity(x.len());
    let mut vo = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let (x1, v1) = (x[i], v[i]);
        let a1 = acc(i, x1, v1);
        let (x2, v2) = (x1 + 0.5 * dt * v1, v1 + 0.5 * dt * a1);
        let a2 = acc(i, x2, v2);
        let (x3, v3) = (x1 + 0.5 * dt * v2, v1 + 0.5 * dt * a2);
        let a3 = acc(i, x3, v3);
        let (x4, v4) = (x1 + dt * v3, v1 + dt * a3);
        let a4 = acc(i, x4, v4);
        xo.push(x1 + dt / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4));
        vo.push(v1 + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4));
    }
    (xo, vo)
}

/// Largest distance between two sorted position lists, matched modulo the
/// box when periodic.
pub fn max_position_error(a: &[f64], b: &[f64], box_length: Option<f64>) -> f64 {
    let n = a.len();
    let dist = |x: f64, y: f64| {
        let d = (x - y).abs();
        box_length.map_or(d, |l| d.min(l - d))
    };
    let shifts: Vec<usize> = if box_length.is_some() { vec![0, 1, n - 1] } else { vec![0] };
    shifts
        .into_iter()
        .map(|s| (0..n).map(|i| dist(a[i], b[(i + s) % n])).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}
