//! The event queue: a binary heap ordered by (time, insertion sequence).

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::topology::{DirId, NodeId};
use super::{Packet, SimError};

#[derive(Debug, Clone)]
pub enum EventKind {
    /// An application wakes up to emit its next packet.
    AppSend { app: usize },
    /// A packet reaches the far end of a link.
    Arrival { packet: Packet, node: NodeId },
    /// A link direction finishes serializing its current packet.
    ServiceDone { dir: DirId },
}

#[derive(Debug)]
struct Entry {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.time.total_cmp(&other.time) == Ordering::Equal && self.seq == other.seq
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Future events in (time, seq) order. `seq` increases per insertion, so
/// same-time events pop in the order they were scheduled.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Entry>>,
    next_seq: u64,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current simulation time: the timestamp of the last popped event.
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    /// Insert an event. The past is immutable: `time` must be >= `now()`.
    pub fn schedule(&mut self, time: f64, kind: EventKind) -> Result<(), SimError> {
        if !time.is_finite() || time < self.now {
            return Err(SimError::PastEvent {
                scheduled: time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry { time, seq, kind }));
        Ok(())
    }

    /// Remove and return the earliest event, advancing `now()` to its time.
    pub fn pop(&mut self) -> Option<(f64, EventKind)> {
        let Reverse(entry) = self.heap.pop()?;
        debug_assert!(entry.time >= self.now, "event queue went back in time");
        self.now = entry.time;
        Some((entry.time, entry.kind))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn marker(app: usize) -> EventKind {
        EventKind::AppSend { app }
    }

    fn popped_apps(q: &mut EventQueue) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        while let Some((t, kind)) = q.pop() {
            if let EventKind::AppSend { app } = kind {
                out.push((t, app));
            }
        }
        out
    }

    #[test]
    fn same_time_events_pop_in_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(1.0, marker(0)).unwrap();
        q.schedule(1.0, marker(1)).unwrap();
        assert_eq!(popped_apps(&mut q), vec![(1.0, 0), (1.0, 1)]);
    }

    #[test]
    fn earlier_time_pops_first_regardless_of_insertion() {
        let mut q = EventQueue::new();
        q.schedule(2.0, marker(0)).unwrap();
        q.schedule(1.0, marker(1)).unwrap();
        assert_eq!(popped_apps(&mut q), vec![(1.0, 1), (2.0, 0)]);
    }

    #[test]
    fn rejects_scheduling_into_the_past() {
        let mut q = EventQueue::new();
        q.schedule(5.0, marker(0)).unwrap();
        q.pop().unwrap();
        assert_eq!(q.now(), 5.0);
        assert!(q.schedule(4.9, marker(1)).is_err());
        assert!(q.schedule(5.0, marker(1)).is_ok(), "present is allowed");
        assert!(q.schedule(f64::NAN, marker(2)).is_err());
    }

    #[test]
    fn random_events_pop_sorted() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let mut q = EventQueue::new();
        let mut expect: Vec<(f64, u64)> = Vec::new();
        for seq in 0..10_000u64 {
            // Coarse times force plenty of exact ties.
            let t = f64::from(rng.random_range(0..100u32)) * 0.5;
            q.schedule(t, marker(seq as usize)).unwrap();
            expect.push((t, seq));
        }
        expect.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let got = popped_apps(&mut q);
        let want: Vec<(f64, usize)> = expect.into_iter().map(|(t, s)| (t, s as usize)).collect();
        assert_eq!(got, want);
    }
}
