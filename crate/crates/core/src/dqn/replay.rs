use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;

/// Fixed-capacity experience store with first-in first-out eviction.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<E> {
    items: VecDeque<E>,
    capacity: usize,
    inserted: u64,
}

impl<E> ReplayBuffer<E> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { items: VecDeque::with_capacity(capacity.min(1 << 16)), capacity, inserted: 0 }
    }

    pub fn push(&mut self, item: E) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total insertions, including evicted ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &E> {
        self.items.iter()
    }

    pub fn get(&self, i: usize) -> &E {
        &self.items[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut E {
        &mut self.items[i]
    }

    /// `size` distinct positions drawn uniformly, or `None` when the buffer
    /// holds fewer items.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, size: usize) -> Option<Vec<usize>> {
        (self.items.len() >= size).then(|| index::sample(rng, self.items.len(), size).into_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn evicts_oldest() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(i);
        }
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![2, 3, 4]);
        assert_eq!(b.inserted(), 5);
    }

    #[test]
    fn sampling_needs_enough_items() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut b = ReplayBuffer::new(10);
        b.push(1);
        assert!(b.sample_indices(&mut rng, 2).is_none());
        b.push(2);
        let mut idx = b.sample_indices(&mut rng, 2).unwrap();
        idx.sort();
        assert_eq!(idx, vec![0, 1]);
    }
}
