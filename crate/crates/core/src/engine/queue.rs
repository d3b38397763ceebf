//! Min-heap of scheduled events with lazy invalidation.
//!
//! Each schedulable target (a gap, or one of the two cell walls) owns a
//! stamp. Rescheduling a target bumps its stamp; entries whose stamp no
//! longer matches are dropped when they reach the top of the heap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Gap identified by its storage slot (between slot `s` and `s + 1`).
    Crossing(usize),
    WrapLeft,
    WrapRight,
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub stamp: u64,
}

impl Event {
    pub(crate) fn order_key(&self) -> (u8, usize) {
        match self.kind {
            EventKind::Crossing(s) => (0, s),
            EventKind::WrapLeft => (1, 0),
            EventKind::WrapRight => (1, 1),
        }
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    /// Reversed so that `BinaryHeap` pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.order_key().cmp(&self.order_key()))
            .then_with(|| other.stamp.cmp(&self.stamp))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    gap_stamps: Vec<u64>,
    gap_times: Vec<Option<f64>>,
    wrap_stamps: [u64; 2],
    stale: u64,
}

impl EventQueue {
    pub fn new(gaps: usize) -> Self {
        EventQueue {
            heap: BinaryHeap::with_capacity(2 * gaps + 2),
            gap_stamps: vec![0; gaps],
            gap_times: vec![None; gaps],
            ..Default::default()
        }
    }

    fn stamp_mut(&mut self, kind: EventKind) -> &mut u64 {
        match kind {
            EventKind::Crossing(s) => &mut self.gap_stamps[s],
            EventKind::WrapLeft => &mut self.wrap_stamps[0],
            EventKind::WrapRight => &mut self.wrap_stamps[1],
        }
    }

    fn stamp(&self, kind: EventKind) -> u64 {
        match kind {
            EventKind::Crossing(s) => self.gap_stamps[s],
            EventKind::WrapLeft => self.wrap_stamps[0],
            EventKind::WrapRight => self.wrap_stamps[1],
        }
    }

    /// Drop any pending event for `kind`.
    pub fn invalidate(&mut self, kind: EventKind) {
        self.schedule(kind, None);
    }

    /// Replace the pending event for `kind` (if any) with one at `time`.
    pub fn schedule(&mut self, kind: EventKind, time: Option<f64>) {
        if let EventKind::Crossing(s) = kind {
            self.gap_times[s] = time;
        }
        let stamp = self.stamp_mut(kind);
        *stamp += 1;
        let stamp = *stamp;
        if let Some(time) = time {
            self.heap.push(Event { time, kind, stamp });
            if self.heap.len() > 8 * self.gap_stamps.len() + 64 {
                self.compact();
            }
        }
    }

    /// Remove every stale entry, bounding the heap at a small multiple of
    /// the number of targets.
    fn compact(&mut self) {
        let before = self.heap.len();
        let (gap_stamps, wrap_stamps) = (&self.gap_stamps, &self.wrap_stamps);
        self.heap.retain(|e| {
            let current = match e.kind {
                EventKind::Crossing(s) => gap_stamps[s],
                EventKind::WrapLeft => wrap_stamps[0],
                EventKind::WrapRight => wrap_stamps[1],
            };
            current == e.stamp
        });
        self.stale += (before - self.heap.len()) as u64;
    }

    pub fn is_current(&self, event: &Event) -> bool {
        self.stamp(event.kind) == event.stamp
    }

    /// Time of the earliest valid event, discarding stale entries on the way.
    pub fn peek_time(&mut self) -> Option<f64> {
        while let Some(top) = self.heap.peek() {
            if self.is_current(top) {
                return Some(top.time);
            }
            self.heap.pop();
            self.stale += 1;
        }
        None
    }

    /// Pop the earliest valid event.
    pub fn pop(&mut self) -> Option<Event> {
        self.peek_time()?;
        self.heap.pop()
    }

    /// Pop every valid event scheduled within `window` of the earliest one,
    /// ordered by kind and target index.
    pub fn pop_batch(&mut self, window: f64, out: &mut Vec<Event>) {
        out.clear();
        let Some(first) = self.pop() else { return };
        let limit = first.time + window;
        out.push(first);
        while let Some(t) = self.peek_time() {
            if t > limit {
                break;
            }
            out.extend(self.heap.pop());
        }
    }

    /// Pending crossing time of the gap stored at `slot`.
    pub fn pending_crossing(&self, slot: usize) -> Option<f64> {
        self.gap_times[slot]
    }

    pub fn stale_dropped(&self) -> u64 {
        self.stale
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
