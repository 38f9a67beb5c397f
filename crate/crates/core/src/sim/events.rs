use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A pending event. Exact time ties fall back to `(index, kind)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Pending<K> {
    pub time: f64,
    pub index: u64,
    pub kind: K,
}

impl<K: Ord> PartialEq for Pending<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K: Ord> Eq for Pending<K> {}

impl<K: Ord> PartialOrd for Pending<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K: Ord> Ord for Pending<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the max-heap pops the earliest event.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.index.cmp(&self.index))
            .then_with(|| other.kind.cmp(&self.kind))
    }
}

/// Min-time priority queue of events.
#[derive(Debug)]
pub(crate) struct EventQueue<K> {
    heap: BinaryHeap<Pending<K>>,
}

impl<K: Ord + Copy> EventQueue<K> {
    pub fn new() -> Self {
        Self { heap: BinaryHeap::new() }
    }

    pub fn push(&mut self, time: f64, index: u64, kind: K) {
        self.heap.push(Pending { time, index, kind });
    }

    pub fn pop(&mut self) -> Option<Pending<K>> {
        self.heap.pop()
    }
}

/// Times `k * step` for `k = 0, 1, ...` up to `horizon`.
pub(crate) fn snapshot_time(k: u64, step: f64) -> f64 {
    k as f64 * step
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_in_time_then_index_then_kind_order() {
        let mut q = EventQueue::new();
        q.push(2.0, 0, 0u8);
        q.push(1.0, 3, 1u8);
        q.push(1.0, 3, 0u8);
        q.push(1.0, 1, 2u8);
        let order: Vec<(f64, u64, u8)> = std::iter::from_fn(|| q.pop().map(|p| (p.time, p.index, p.kind))).collect();
        assert_eq!(order, vec![(1.0, 1, 2), (1.0, 3, 0), (1.0, 3, 1), (2.0, 0, 0)]);
    }
}
