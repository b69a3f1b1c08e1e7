use rand::Rng;

use crate::nn::Transition;

/// Fixed-capacity ring of transitions with FIFO eviction.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Stores `tr` and returns the slot it occupies.
    pub fn push(&mut self, tr: Transition) -> usize {
        let slot = self.cursor;
        if self.items.len() < self.capacity {
            self.items.push(tr);
        } else {
            self.items[slot] = tr;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        slot
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.items.get(slot)
    }

    /// Slot of the most recent transition.
    pub fn newest_slot(&self) -> Option<usize> {
        (!self.items.is_empty()).then(|| (self.cursor + self.capacity - 1) % self.capacity)
    }

    /// Slot holding the transition stored right after the one in `slot`, if
    /// that transition is still present.
    pub fn successor_slot(&self, slot: usize) -> Option<usize> {
        (Some(slot) != self.newest_slot()).then(|| (slot + 1) % self.capacity)
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// Draws `batch` slots uniformly with replacement. Empty when the buffer
    /// is empty.
    pub fn sample_slots<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        if self.items.is_empty() {
            return;
        }
        out.extend((0..batch).map(|_| rng.gen_range(0..self.items.len())));
    }

    /// Draws `batch` transitions uniformly with replacement, consuming the
    /// same random numbers as [`sample_slots`](Self::sample_slots).
    pub fn sample<'a, R: Rng + ?Sized>(
        &'a self,
        batch: usize,
        rng: &mut R,
        out: &mut Vec<&'a Transition>,
    ) {
        out.clear();
        if self.items.is_empty() {
            return;
        }
        out.extend((0..batch).map(|_| &self.items[rng.gen_range(0..self.items.len())]));
    }
}
