use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Priority of a constraint-tree node; smaller is expanded first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeKey {
    /// Search objective: sum of costs, or total risk for risk-minimising CBS.
    pub cost: f64,
    /// Secondary objective (sum of costs when `cost` is risk, else zero).
    pub tie: f64,
    /// Conflicts among the node's paths.
    pub collisions: usize,
    /// Agents whose budget differs from the parent node.
    pub changed: usize,
}

impl NodeKey {
    pub fn new(cost: f64, collisions: usize, changed: usize) -> Self {
        NodeKey {
            cost,
            tie: 0.0,
            collisions,
            changed,
        }
    }
}

impl Eq for NodeKey {}

impl PartialOrd for NodeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NodeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.tie.total_cmp(&other.tie))
            .then(self.collisions.cmp(&other.collisions))
            .then(self.changed.cmp(&other.changed))
    }
}

struct Entry<T> {
    key: NodeKey,
    seq: u64,
    item: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.seq == other.seq
    }
}

impl<T> Eq for Entry<T> {}

impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Entry<T> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .cmp(&self.key)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Min-priority queue over [`NodeKey`] with FIFO tie-breaking.
pub struct Frontier<T> {
    heap: BinaryHeap<Entry<T>>,
    seq: u64,
}

impl<T> Default for Frontier<T> {
    fn default() -> Self {
        Frontier {
            heap: BinaryHeap::new(),
            seq: 0,
        }
    }
}

impl<T> Frontier<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: NodeKey, item: T) {
        self.heap.push(Entry {
            key,
            seq: self.seq,
            item,
        });
        self.seq += 1;
    }

    pub fn extract_min(&mut self) -> Option<(NodeKey, T)> {
        self.heap.pop().map(|e| (e.key, e.item))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
