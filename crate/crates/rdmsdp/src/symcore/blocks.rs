/// A symmetric permutation exposing block-diagonal structure: `perm[k]` is
/// the original index placed at position k, and consecutive runs of `sizes`
/// are the detected blocks (connected components of the sparsity graph).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    pub perm: Vec<usize>,
    pub sizes: Vec<usize>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // root at the smaller index for deterministic labels
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of a symmetric sparsity pattern (diagonal implicit).
/// Blocks are ordered by descending size (ties by smallest member index) and
/// indices inside each block keep their original ascending order, so the
/// output is reproducible.
pub fn detect_blocks(n: usize, edges: &[(usize, usize)]) -> BlockPartition {
    let mut uf = UnionFind::new(n);
    for &(i, j) in edges {
        debug_assert!(i < n && j < n);
        uf.union(i, j);
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = uf.find(i);
        members[r].push(i);
    }
    let mut comps: Vec<Vec<usize>> = members.into_iter().filter(|c| !c.is_empty()).collect();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    let mut perm = Vec::with_capacity(n);
    let mut sizes = Vec::with_capacity(comps.len());
    for c in comps {
        sizes.push(c.len());
        perm.extend(c);
    }
    BlockPartition { perm, sizes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_pairs() {
        // n=4 with edges {(0,2),(1,3)} -> two blocks of size 2
        let p = detect_blocks(4, &[(0, 2), (1, 3)]);
        assert_eq!(p.sizes, vec![2, 2]);
        assert_eq!(p.perm, vec![0, 2, 1, 3]);
    }

    #[test]
    fn dense_pattern_is_one_block() {
        let n = 5;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        let p = detect_blocks(n, &edges);
        assert_eq!(p.sizes, vec![n]);
        assert_eq!(p.perm, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn no_edges_gives_singletons() {
        let p = detect_blocks(3, &[]);
        assert_eq!(p.sizes, vec![1, 1, 1]);
        assert_eq!(p.perm, vec![0, 1, 2]);
    }

    #[test]
    fn recovers_permuted_block_pattern() {
        // build a known block-diagonal pattern with sizes (5,3,2), scramble it
        // with a random permutation, and check the sizes are recovered
        let sizes = [5usize, 3, 2];
        let n: usize = sizes.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut relabel: Vec<usize> = (0..n).collect();
        relabel.shuffle(&mut rng);

        let mut edges = Vec::new();
        let mut start = 0;
        for &s in &sizes {
            for a in start..start + s {
                for b in a + 1..start + s {
                    edges.push((relabel[a], relabel[b]));
                }
            }
            start += s;
        }
        let p = detect_blocks(n, &edges);
        assert_eq!(p.sizes, vec![5, 3, 2]);

        // the permutation really makes the pattern block-diagonal
        let pos: Vec<usize> = {
            let mut pos = vec![0; n];
            for (k, &orig) in p.perm.iter().enumerate() {
                pos[orig] = k;
            }
            pos
        };
        let boundaries: Vec<usize> = p
            .sizes
            .iter()
            .scan(0, |acc, &s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        let block_of = |k: usize| boundaries.iter().position(|&b| k < b).unwrap();
        for &(i, j) in &edges {
            assert_eq!(block_of(pos[i]), block_of(pos[j]));
        }
    }
}
