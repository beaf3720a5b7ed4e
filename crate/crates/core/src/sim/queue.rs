use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SimError;

#[derive(Debug)]
struct Scheduled<K> {
    time: f64,
    seq: u64,
    kind: K,
}

impl<K> PartialEq for Scheduled<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K> Eq for Scheduled<K> {}

impl<K> PartialOrd for Scheduled<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Scheduled<K> {
    // Reversed so the max-heap pops the earliest (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Min-queue on `(time, insertion order)`.
#[derive(Debug)]
pub struct EventQueue<K> {
    heap: BinaryHeap<Scheduled<K>>,
    next_seq: u64,
    now: f64,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: 0.0,
        }
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, time: f64, kind: K) -> Result<(), SimError> {
        if !(time >= self.now) {
            return Err(SimError::PastEvent {
                at: time,
                now: self.now,
            });
        }
        self.heap.push(Scheduled {
            time,
            seq: self.next_seq,
            kind,
        });
        self.next_seq += 1;
        Ok(())
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|s| s.time)
    }

    /// Pops the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<(f64, K)> {
        let s = self.heap.pop()?;
        self.now = s.time;
        Some((s.time, s.kind))
    }

    pub fn pending(&self) -> impl Iterator<Item = &K> {
        self.heap.iter().map(|s| &s.kind)
    }
}
