//! Fixed-capacity circular replay buffer with uniform with-replacement
//! minibatch sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("requested batch of {requested} but buffer holds only {available}")]
    NotEnoughData { requested: usize, available: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    write_head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            capacity,
            storage: Vec::with_capacity(capacity),
            write_head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// FIFO insert; overwrites the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        debug_assert_eq!(t.state.len(), t.next_state.len());
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.write_head] = t;
        }
        self.write_head = (self.write_head + 1) % self.capacity;
    }

    /// Uniform sampling with replacement; deterministic given the stream.
    /// The training loop's own `|D| >= batch` guard is the caller's
    /// responsibility; here any nonempty buffer serves any batch size.
    pub fn sample(
        &self,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<&Transition>, ReplayError> {
        if self.storage.is_empty() {
            return Err(ReplayError::NotEnoughData {
                requested: n,
                available: 0,
            });
        }
        Ok((0..n)
            .map(|_| &self.storage[rng.gen_range(0..self.storage.len())])
            .collect())
    }

    /// Stored transitions, oldest first.
    pub fn iter_fifo(&self) -> impl Iterator<Item = &Transition> {
        let head = if self.storage.len() < self.capacity {
            0
        } else {
            self.write_head
        };
        (0..self.storage.len()).map(move |i| &self.storage[(head + i) % self.storage.len()])
    }
}
