//! Fixed-capacity bit set over dense ids (vertices, edges).
//!
//! Iteration is always in ascending id order, which keeps every consumer
//! deterministic.

/// Bit set over `0..capacity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdSet {
    words: Vec<u64>,
    capacity: usize,
    len: usize,
}

impl IdSet {
    pub fn new(capacity: usize) -> Self {
        IdSet {
            words: vec![0; capacity.div_ceil(64)],
            capacity,
            len: 0,
        }
    }

    pub fn full(capacity: usize) -> Self {
        let mut s = IdSet::new(capacity);
        for i in 0..capacity {
            s.insert(i as u32);
        }
        s
    }

    pub fn from_sorted(capacity: usize, ids: &[u32]) -> Self {
        let mut s = IdSet::new(capacity);
        for &i in ids {
            s.insert(i);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        let id = id as usize;
        id < self.capacity && self.words[id / 64] >> (id % 64) & 1 == 1
    }

    /// Returns true if the id was newly inserted.
    pub fn insert(&mut self, id: u32) -> bool {
        debug_assert!((id as usize) < self.capacity);
        let (w, b) = (id as usize / 64, id as usize % 64);
        let fresh = self.words[w] >> b & 1 == 0;
        if fresh {
            self.words[w] |= 1 << b;
            self.len += 1;
        }
        fresh
    }

    /// Returns true if the id was present.
    pub fn remove(&mut self, id: u32) -> bool {
        let (w, b) = (id as usize / 64, id as usize % 64);
        let had = self.words[w] >> b & 1 == 1;
        if had {
            self.words[w] &= !(1 << b);
            self.len -= 1;
        }
        had
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some(wi as u32 * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn is_subset_of(&self, other: &IdSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn remove_all(&mut self, other: &IdSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
        self.len = self.words.iter().map(|w| w.count_ones() as usize).sum();
    }

    pub fn intersects(&self, other: &IdSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_ops() {
        let mut s = IdSet::new(130);
        assert!(s.insert(0));
        assert!(s.insert(129));
        assert!(!s.insert(0));
        assert_eq!(s.len(), 2);
        assert_eq!(s.to_vec(), vec![0, 129]);
        assert!(s.remove(0));
        assert!(!s.remove(0));
        assert_eq!(s.len(), 1);
    }

    proptest! {
        #[test]
        fn matches_btreeset(ids in proptest::collection::vec(0u32..200, 0..60)) {
            let mut s = IdSet::new(200);
            let mut reference = std::collections::BTreeSet::new();
            for &i in &ids {
                prop_assert_eq!(s.insert(i), reference.insert(i));
            }
            prop_assert_eq!(s.to_vec(), reference.iter().copied().collect::<Vec<_>>());
            prop_assert_eq!(s.len(), reference.len());
        }
    }
}
