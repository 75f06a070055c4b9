//! Round-by-round forwarding with one priority queue per edge.
//!
//! Each round every edge with pending work sends its best item (smallest
//! key). Items delivered in round `t` may enable follow-up items, which join
//! the queues for round `t + 1`. Items may also carry a release round before
//! which they are not eligible.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::instance::EdgeId;

pub(crate) struct EdgeQueues<K: Ord + Copy, T: Ord + Copy> {
    heaps: Vec<BinaryHeap<Reverse<(K, T)>>>,
    active: Vec<u32>,
    is_active: Vec<bool>,
    calendar: BTreeMap<u32, Vec<(EdgeId, K, T)>>,
}

impl<K: Ord + Copy, T: Ord + Copy> EdgeQueues<K, T> {
    pub fn new(edge_count: usize) -> Self {
        EdgeQueues {
            heaps: (0..edge_count).map(|_| BinaryHeap::new()).collect(),
            active: Vec::new(),
            is_active: vec![false; edge_count],
            calendar: BTreeMap::new(),
        }
    }

    /// Eligible from the next round processed.
    pub fn push(&mut self, edge: EdgeId, key: K, item: T) {
        let e = edge.index();
        self.heaps[e].push(Reverse((key, item)));
        if !self.is_active[e] {
            self.is_active[e] = true;
            self.active.push(edge.0);
        }
    }

    /// Eligible from round `release`.
    pub fn push_at(&mut self, release: u32, edge: EdgeId, key: K, item: T) {
        self.calendar.entry(release).or_default().push((edge, key, item));
    }

    /// Runs rounds from 1 until every queue drains. `on_send(round, edge, item,
    /// queues)` is called for each popped item; pushes made from it become
    /// eligible in the following round. Rounds with nothing eligible are
    /// skipped. Returns the last round with a send (0 if none).
    pub fn run(&mut self, mut on_send: impl FnMut(u32, EdgeId, T, &mut Vec<(EdgeId, K, T)>)) -> u32 {
        let mut round = 1u32;
        let mut last = 0u32;
        let mut follow_ups = Vec::new();
        let mut sent = Vec::new();
        loop {
            if let Some(batch) = self.calendar.remove(&round) {
                for (e, k, t) in batch {
                    self.push(e, k, t);
                }
            }
            if self.active.is_empty() {
                match self.calendar.keys().next() {
                    Some(&next) => {
                        round = next;
                        continue;
                    }
                    None => break,
                }
            }
            // Deterministic edge order; each edge's choice is independent of
            // the others within a round.
            self.active.sort_unstable();
            sent.clear();
            for &e in &self.active {
                let Reverse((_, item)) = self.heaps[e as usize].pop().expect("active edges are non-empty");
                sent.push((EdgeId(e), item));
            }
            for &(edge, item) in &sent {
                on_send(round, edge, item, &mut follow_ups);
            }
            last = round;
            let heaps = &self.heaps;
            let is_active = &mut self.is_active;
            self.active.retain(|&e| {
                let keep = !heaps[e as usize].is_empty();
                if !keep {
                    is_active[e as usize] = false;
                }
                keep
            });
            for (e, k, t) in follow_ups.drain(..) {
                self.push(e, k, t);
            }
            round += 1;
        }
        last
    }
}
