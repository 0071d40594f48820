/// Position of the ordered pair (i, j), 1-based with i < j, in the
/// column-major enumeration of strict upper-triangle pairs of a d-by-d
/// antisymmetric index space: p = j - i + (2d - i)(i - 1)/2, also 1-based.
///
/// Panics if i >= j or j > d.
pub fn pair_index(i: usize, j: usize, d: usize) -> usize {
    assert!(
        i >= 1 && i < j && j <= d,
        "pair_index requires 1 <= i < j <= d, got ({i},{j}) with d={d}"
    );
    j - i + (2 * d - i) * (i - 1) / 2
}

/// Bijection between strict pairs (i < j, 0-based) and 0..d(d-1)/2.
#[derive(Clone, Debug)]
pub struct PairIndexMap {
    d: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndexMap {
    pub fn new(d: usize) -> Self {
        let mut pairs = vec![(0, 0); d * (d - 1) / 2];
        for i in 0..d {
            for j in i + 1..d {
                pairs[pair_index(i + 1, j + 1, d) - 1] = (i, j);
            }
        }
        PairIndexMap { d, pairs }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of pairs d(d-1)/2.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// 0-based pair position of 0-based indices i < j.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.d);
        pair_index(i + 1, j + 1, self.d) - 1
    }

    /// The 0-based (i, j) pair at position p.
    pub fn pair(&self, p: usize) -> (usize, usize) {
        self.pairs[p]
    }

    /// Pair position and antisymmetry sign for arbitrary distinct indices:
    /// (p, +1) when i < j, (p, -1) when i > j, None when i == j.
    pub fn signed(&self, i: usize, j: usize) -> Option<(usize, f64)> {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Less => Some((self.index(i, j), 1.0)),
            Ordering::Greater => Some((self.index(j, i), -1.0)),
            Ordering::Equal => None,
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, (usize, usize))> + '_ {
        self.pairs.iter().copied().enumerate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn formula_values() {
        assert_eq!(pair_index(1, 2, 4), 1);
        assert_eq!(pair_index(3, 4, 4), 6);
    }

    #[test]
    fn bijective_over_all_pairs() {
        let d = 4;
        let seen: BTreeSet<usize> = (1..=d)
            .flat_map(|i| (i + 1..=d).map(move |j| pair_index(i, j, d)))
            .collect();
        assert_eq!(seen, (1..=6).collect::<BTreeSet<_>>());
    }

    #[test]
    #[should_panic]
    fn rejects_equal_indices() {
        pair_index(2, 2, 4);
    }

    #[test]
    fn map_round_trip_and_signs() {
        let map = PairIndexMap::new(5);
        assert_eq!(map.len(), 10);
        for p in 0..map.len() {
            let (i, j) = map.pair(p);
            assert_eq!(map.index(i, j), p);
        }
        assert_eq!(map.signed(1, 3), Some((map.index(1, 3), 1.0)));
        assert_eq!(map.signed(3, 1), Some((map.index(1, 3), -1.0)));
        assert_eq!(map.signed(2, 2), None);
    }
}
