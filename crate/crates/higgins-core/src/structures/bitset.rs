//! Fixed-universe bitsets over element indices. Group and loop subobject
//! carriers use these for O(1) membership and cheap saturation at orders up
//! to a few hundred.

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitset {
    universe: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for Bitset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

impl Bitset {
    pub fn new(universe: usize) -> Bitset {
        Bitset {
            universe,
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, i: usize) -> bool {
        debug_assert!(i < self.universe);
        let w = &mut self.words[i / 64];
        let bit = 1u64 << (i % 64);
        let fresh = *w & bit == 0;
        *w |= bit;
        fresh
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.universe && self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union_with(&mut self, other: &Bitset) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_subset(&self, other: &Bitset) -> bool {
        debug_assert_eq!(self.universe, other.universe);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersect(&self, other: &Bitset) -> Bitset {
        debug_assert_eq!(self.universe, other.universe);
        Bitset {
            universe: self.universe,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe).filter(move |&i| self.contains(i))
    }

    pub fn singleton(universe: usize, i: usize) -> Bitset {
        let mut s = Bitset::new(universe);
        s.insert(i);
        s
    }

    pub fn full(universe: usize) -> Bitset {
        let mut s = Bitset::new(universe);
        for i in 0..universe {
            s.insert(i);
        }
        s
    }
}

impl FromIterator<usize> for Bitset {
    /// Only usable when the universe is known; prefer `Bitset::new` + insert.
    /// Collects into the smallest universe holding the maximum element.
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Bitset {
        let items: Vec<usize> = iter.into_iter().collect();
        let universe = items.iter().max().map_or(0, |m| m + 1);
        let mut s = Bitset::new(universe);
        for i in items {
            s.insert(i);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_contains_len() {
        let mut s = Bitset::new(100);
        assert!(s.insert(0));
        assert!(s.insert(99));
        assert!(!s.insert(0));
        assert!(s.contains(0) && s.contains(99) && !s.contains(50));
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 99]);
    }

    #[test]
    fn subset_and_union() {
        let mut a = Bitset::new(10);
        a.insert(1);
        a.insert(3);
        let mut b = a.clone();
        b.insert(7);
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        a.union_with(&b);
        assert_eq!(a, b);
        assert_eq!(a.intersect(&Bitset::singleton(10, 3)).iter().collect::<Vec<_>>(), vec![3]);
    }
}
