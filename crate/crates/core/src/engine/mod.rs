//! Event-driven exact evolution of the sheet system.
//!
//! Between events every particle follows a closed-form trajectory with a
//! constant rank field, so the only work is at crossings (two neighbours
//! swap order) and, in the periodic case, at wraps (an extreme particle
//! leaves the primitive cell and re-enters on the other side).
//!
//! Storage is indexed by slot. Rank `r` (0-based) lives in slot
//! `(offset + r) % n`; a wrap rotates `offset` instead of moving data. Gaps
//! are indexed by the slot of their left particle, which is stable under
//! that rotation.

mod kinematics;
mod queue;
mod roots;

use std::cmp::Ordering;

pub use kinematics::Kernel;
pub use queue::{Event, EventKind, EventQueue};
pub use roots::{CrossingSolver, NoConvergence};

use crate::error::{EngineFault, Error, FaultKind, Result};
use crate::model::{ModelParams, Snapshot};

/// Events closer than this in time are processed as one batch.
pub const TIE_WINDOW: f64 = 1e-14;
/// Most negative gap tolerated after an update.
pub const GAP_TOLERANCE: f64 = 1e-9;

/// One particle between events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub x: f64,
    pub v: f64,
    pub t_sync: f64,
    /// 1-based rank.
    pub rank: usize,
    /// Cached rank field, constant until the next event touching the particle.
    pub field: f64,
}

impl ParticleState {
    pub fn new(x: f64, v: f64, t_sync: f64, rank: usize, params: &ModelParams) -> Result<Self> {
        let field = crate::model::rank_field(rank, params)?;
        Ok(ParticleState { x, v, t_sync, rank, field })
    }
}

/// Separation of two rank-adjacent particles. `index` is the 1-based rank of
/// the left member; `index = N` denotes the wrap pair `(N, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapState {
    pub index: usize,
    pub y0: f64,
    pub w0: f64,
    pub t_ref: f64,
}

impl GapState {
    /// Constant forcing of every gap, `-2 field_coeff`.
    pub fn forcing(params: &ModelParams) -> f64 {
        -2.0 * params.field_coeff
    }

    /// `(C+, C-, K)` with `y(t) = C+ e^{l+ t} + C- e^{l- t} + K`, or `None`
    /// without background.
    pub fn coefficients(&self, params: &ModelParams) -> Option<(f64, f64, f64)> {
        if params.beta == 0.0 {
            return None;
        }
        let (plus, minus) = params.eigenvalues();
        let k = 2.0 * params.field_coeff / params.beta;
        let d = self.y0 - k;
        let c_plus = (self.w0 - minus * d) / (plus - minus);
        Some((c_plus, d - c_plus, k))
    }

    pub fn propagate(&self, dt: f64, params: &ModelParams) -> Result<GapState> {
        check_step(dt, self.t_ref)?;
        let (y0, w0) = Kernel::new(params).advance(self.y0, self.w0, Self::forcing(params), dt);
        Ok(GapState { y0, w0, t_ref: self.t_ref + dt, ..*self })
    }
}

/// Advance a particle by `dt >= 0` assuming no event touches it meanwhile.
pub fn propagate(state: &ParticleState, dt: f64, params: &ModelParams) -> Result<ParticleState> {
    check_step(dt, state.t_sync)?;
    let (x, v) = Kernel::new(params).advance(state.x, state.v, state.field, dt);
    Ok(ParticleState { x, v, t_sync: state.t_sync + dt, ..*state })
}

fn check_step(dt: f64, tau: f64) -> Result<()> {
    if dt >= 0.0 {
        Ok(())
    } else {
        Err(EngineFault { kind: FaultKind::NegativeStep { dt }, tau, events: 0 }.into())
    }
}

/// Smallest positive time until the gap closes, or `None` if it never does.
pub fn crossing_time(gap: &GapState, params: &ModelParams) -> Result<Option<f64>> {
    if !(gap.y0 >= 0.0) {
        return Err(Error::config(format!("gap {} has negative separation {}", gap.index, gap.y0)));
    }
    CrossingSolver::new(params)
        .first_zero(gap.y0, gap.w0, GapState::forcing(params))
        .map_err(|e| {
            EngineFault {
                kind: FaultKind::SolverDiverged { y0: e.z0, w0: e.w0, forcing: e.g },
                tau: gap.t_ref,
                events: 0,
            }
            .into()
        })
}

/// Event counters of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub crossings: u64,
    pub wraps: u64,
    /// Valid events processed (crossings plus wraps).
    pub events: u64,
    /// Superseded queue entries discarded.
    pub stale: u64,
}

/// Exact event-driven integrator for one system.
#[derive(Debug)]
pub struct Engine {
    params: ModelParams,
    kernel: Kernel,
    solver: CrossingSolver,
    x: Vec<f64>,
    v: Vec<f64>,
    t_sync: Vec<f64>,
    offset: usize,
    now: f64,
    queue: EventQueue,
    batch: Vec<Event>,
    stats: RunStats,
    seed: u64,
    provenance: String,
}

impl Engine {
    pub fn new(initial: &Snapshot) -> Result<Self> {
        initial.validate()?;
        let params = initial.model;
        let n = params.n_particles;
        let mut engine = Engine {
            params,
            kernel: Kernel::new(&params),
            solver: CrossingSolver::new(&params),
            x: initial.positions.clone(),
            v: initial.velocities.clone(),
            t_sync: vec![initial.tau; n],
            offset: 0,
            now: initial.tau,
            queue: EventQueue::new(n),
            batch: Vec::new(),
            stats: RunStats::default(),
            seed: initial.seed,
            provenance: initial.provenance.clone(),
        };
        let t = engine.now;
        for slot in 0..n {
            engine.predict_gap(slot, t)?;
        }
        if params.periodic {
            engine.predict_wraps(t)?;
        }
        Ok(engine)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.now
    }

    pub fn stats(&self) -> RunStats {
        RunStats { stale: self.queue.stale_dropped(), ..self.stats }
    }

    /// Time of the next pending event.
    pub fn next_event_time(&mut self) -> Option<f64> {
        self.queue.peek_time()
    }

    /// Absolute time at which the gap between 1-based ranks `rank` and
    /// `rank + 1` is currently predicted to close.
    pub fn predicted_crossing(&self, rank: usize) -> Option<f64> {
        let n = self.n();
        if rank == 0 || rank >= n {
            return None;
        }
        self.queue.pending_crossing(self.slot_of(rank - 1))
    }

    /// Process every event up to and including `t`, then set the clock to `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if !(t >= self.now) {
            return Err(Error::config(format!("cannot advance from tau={} back to {t}", self.now)));
        }
        while let Some(te) = self.queue.peek_time() {
            if te > t {
                break;
            }
            self.step()?;
        }
        self.now = t;
        Ok(())
    }

    /// Process the next batch of simultaneous events. Returns the batch time,
    /// or `None` when nothing is scheduled.
    pub fn step(&mut self) -> Result<Option<f64>> {
        let mut batch = std::mem::take(&mut self.batch);
        self.queue.pop_batch(TIE_WINDOW, &mut batch);
        batch.sort_by(|a, b| a.order_key().cmp(&b.order_key()).then(a.time.total_cmp(&b.time)));
        let mut outcome = Ok(None);
        for event in &batch {
            if !self.queue.is_current(event) {
                continue;
            }
            let t = event.time.max(self.now);
            self.now = t;
            let handled = match event.kind {
                EventKind::Crossing(slot) => self.handle_crossing(slot, t),
                EventKind::WrapRight => self.handle_wrap_right(t),
                EventKind::WrapLeft => self.handle_wrap_left(t),
            };
            if let Err(e) = handled {
                outcome = Err(e);
                break;
            }
            self.stats.events += 1;
            outcome = Ok(Some(t));
        }
        self.batch = batch;
        outcome
    }

    /// Synchronized state at the current time. Positions are forced strictly
    /// ascending (and inside the cell when periodic) by nudging exact ties
    /// to the next representable value; the engine state is not modified.
    pub fn snapshot(&self) -> Result<Snapshot> {
        let n = self.n();
        let mut positions = Vec::with_capacity(n);
        let mut velocities = Vec::with_capacity(n);
        for rank in 0..n {
            let (x, v) = self.state_at(self.slot_of(rank), self.now);
            if !x.is_finite() || !v.is_finite() {
                return Err(self.fault(FaultKind::NonFinite { rank: rank + 1 }));
            }
            positions.push(x);
            velocities.push(v);
        }
        enforce_order(&mut positions, self.params.periodic.then(|| self.params.half_box()));
        let snap = Snapshot {
            tau: self.now,
            positions,
            velocities,
            model: self.params,
            seed: self.seed,
            provenance: self.provenance.clone(),
        };
        debug_assert!(snap.validate().is_ok());
        Ok(snap)
    }

    fn n(&self) -> usize {
        self.params.n_particles
    }

    fn slot_of(&self, rank: usize) -> usize {
        (self.offset + rank) % self.n()
    }

    fn rank_of(&self, slot: usize) -> usize {
        let n = self.n();
        (slot + n - self.offset) % n
    }

    fn field(&self, slot: usize) -> f64 {
        let n = self.n() as f64;
        self.params.field_coeff * (n - 1.0 - 2.0 * self.rank_of(slot) as f64)
    }

    fn state_at(&self, slot: usize, t: f64) -> (f64, f64) {
        self.kernel.advance(self.x[slot], self.v[slot], self.field(slot), t - self.t_sync[slot])
    }

    fn sync(&mut self, slot: usize, t: f64) {
        let (x, v) = self.state_at(slot, t);
        self.x[slot] = x;
        self.v[slot] = v;
        self.t_sync[slot] = t;
    }

    fn fault(&self, kind: FaultKind) -> Error {
        EngineFault { kind, tau: self.now, events: self.stats.events }.into()
    }

    fn is_interior_gap(&self, slot: usize) -> bool {
        if self.params.periodic {
            slot != self.slot_of(self.n() - 1)
        } else {
            slot + 1 < self.n()
        }
    }

    fn solve(&self, z0: f64, w0: f64, g: f64) -> Result<Option<f64>> {
        self.solver.first_zero(z0, w0, g).map_err(|e| {
            self.fault(FaultKind::SolverDiverged { y0: e.z0, w0: e.w0, forcing: e.g })
        })
    }

    fn predict_gap(&mut self, slot: usize, t: f64) -> Result<()> {
        let kind = EventKind::Crossing(slot);
        if !self.is_interior_gap(slot) {
            self.queue.invalidate(kind);
            return Ok(());
        }
        let right = (slot + 1) % self.n();
        let (xa, va) = self.state_at(slot, t);
        let (xb, vb) = self.state_at(right, t);
        let y = xb - xa;
        if y < -GAP_TOLERANCE {
            return Err(self.fault(FaultKind::NegativeGap { gap: self.rank_of(slot) + 1, y }));
        }
        let dt = self.solve(y, vb - va, GapState::forcing(&self.params))?;
        self.queue.schedule(kind, dt.map(|d| t + d));
        Ok(())
    }

    fn predict_wraps(&mut self, t: f64) -> Result<()> {
        let n = self.n();
        let half = self.params.half_box();
        let beta = self.params.beta;

        let right = self.slot_of(n - 1);
        let (x, v) = self.state_at(right, t);
        let dt = self.solve((half - x).max(0.0), -v, -(self.field(right) + beta * half))?;
        self.queue.schedule(EventKind::WrapRight, dt.map(|d| t + d));

        let left = self.slot_of(0);
        let (x, v) = self.state_at(left, t);
        let dt = self.solve((x + half).max(0.0), v, self.field(left) - beta * half)?;
        self.queue.schedule(EventKind::WrapLeft, dt.map(|d| t + d));
        Ok(())
    }

    fn handle_crossing(&mut self, slot: usize, t: f64) -> Result<()> {
        let n = self.n();
        let right = (slot + 1) % n;
        self.sync(slot, t);
        self.sync(right, t);
        let mid = 0.5 * (self.x[slot] + self.x[right]);
        self.x[slot] = mid;
        self.x[right] = mid;
        self.v.swap(slot, right);
        self.stats.crossings += 1;

        if self.v[right] - self.v[slot] > 0.0 {
            self.predict_gap(slot, t)?;
        } else {
            // Equal velocities at contact: a measure-zero tangency that would
            // otherwise be re-detected at the same instant forever.
            self.queue.invalidate(EventKind::Crossing(slot));
        }
        self.predict_gap((slot + n - 1) % n, t)?;
        self.predict_gap(right, t)?;
        let rank = self.rank_of(slot);
        if self.params.periodic && (rank == 0 || rank + 2 == n) {
            self.predict_wraps(t)?;
        }
        Ok(())
    }

    fn sync_all(&mut self, t: f64) {
        for slot in 0..self.n() {
            self.sync(slot, t);
        }
    }

    fn handle_wrap_right(&mut self, t: f64) -> Result<()> {
        let n = self.n();
        let half = self.params.half_box();
        self.sync_all(t);
        let slot = self.slot_of(n - 1);
        let below = self.slot_of(n - 2);
        if self.x[slot] < self.x[below] - GAP_TOLERANCE {
            return Err(self.fault(FaultKind::NonExtremeWrap { rank: n }));
        }
        self.x[slot] = (self.x[slot] - self.params.box_length).max(-half);
        self.offset = slot;
        self.stats.wraps += 1;
        self.queue.invalidate(EventKind::Crossing(self.slot_of(n - 1)));
        self.predict_gap(slot, t)?;
        self.predict_wraps(t)
    }

    fn handle_wrap_left(&mut self, t: f64) -> Result<()> {
        let n = self.n();
        let half = self.params.half_box();
        self.sync_all(t);
        let slot = self.slot_of(0);
        let above = self.slot_of(1);
        if self.x[slot] > self.x[above] + GAP_TOLERANCE {
            return Err(self.fault(FaultKind::NonExtremeWrap { rank: 1 }));
        }
        self.x[slot] = (self.x[slot] + self.params.box_length).min(half);
        self.offset = (slot + 1) % n;
        self.stats.wraps += 1;
        self.queue.invalidate(EventKind::Crossing(slot));
        self.predict_gap((slot + n - 1) % n, t)?;
        self.predict_wraps(t)
    }
}

/// Make `positions` strictly ascending with the smallest possible moves and,
/// when `half` is given, confine them to `[-half, half)`.
fn enforce_order(positions: &mut [f64], half: Option<f64>) {
    if let Some(half) = half {
        let top = half.next_down();
        for x in positions.iter_mut() {
            *x = x.clamp(-half, top);
        }
    }
    for i in 1..positions.len() {
        if positions[i].partial_cmp(&positions[i - 1]) != Some(Ordering::Greater) {
            positions[i] = positions[i - 1].next_up();
        }
    }
    if let Some(half) = half {
        let mut ceiling = half;
        for x in positions.iter_mut().rev() {
            if *x >= ceiling {
                *x = ceiling.next_down();
            }
            ceiling = *x;
        }
    }
}

/// Evolve `initial` and return one synchronized snapshot per requested time.
pub fn run(initial: &Snapshot, times: &[f64]) -> Result<Vec<Snapshot>> {
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::config("snapshot times must be ascending"));
    }
    let mut engine = Engine::new(initial)?;
    times
        .iter()
        .map(|&t| {
            engine.advance_to(t)?;
            engine.snapshot()
        })
        .collect()
}
