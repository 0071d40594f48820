//! Numerical discovery of block structure induced by integral sparsity.
//!
//! Orbitals are grouped into sectors by the coupling pattern of T and V.
//! A y coordinate whose indices mix sectors inconsistently cannot be nonzero
//! at a sector-symmetric optimum, so the block patterns of the condition
//! matrices are taken over the remaining admissible coordinates and then
//! reordered into diagonal blocks.

use super::conditions::{ConditionBlock, YLayout};
use super::IntegralData;
use crate::symcore::{detect_blocks, svec_coord_split, BlockPartition};

/// Sector label per spin orbital: connected components of the coupling
/// graph with edges (i,j) for T_ij != 0 and (i,k), (j,l) for V_{ij,kl} != 0.
pub fn orbital_sectors(data: &IntegralData) -> Vec<usize> {
    let d = data.d();
    let mut edges = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if data.t().get(i, j) != 0.0 {
                edges.push((i, j));
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    if data.v(i, j, k, l) != 0.0 {
                        if i != k {
                            edges.push((i.min(k), i.max(k)));
                        }
                        if j != l {
                            edges.push((j.min(l), j.max(l)));
                        }
                    }
                }
            }
        }
    }
    let part = detect_blocks(d, &edges);
    let mut sector = vec![0usize; d];
    let mut start = 0;
    for (b, &s) in part.sizes.iter().enumerate() {
        for &orb in &part.perm[start..start + s] {
            sector[orb] = b;
        }
        start += s;
    }
    sector
}

/// Whether a y coordinate can be nonzero at a sector-symmetric point:
/// gamma entries need equal sectors, pair-matrix entries need equal sector
/// multisets.
pub(crate) fn admissible(coord: usize, layout: &YLayout, sectors: &[usize]) -> bool {
    if coord < layout.gamma_dim {
        let (a, b) = svec_coord_split(coord);
        sectors[a] == sectors[b]
    } else {
        let (p, q) = svec_coord_split(coord - layout.gamma_dim);
        let (a, b) = layout.map.pair(p);
        let (c, e) = layout.map.pair(q);
        let mut left = [sectors[a], sectors[b]];
        let mut right = [sectors[c], sectors[e]];
        left.sort_unstable();
        right.sort_unstable();
        left == right
    }
}

/// Block partition of one condition matrix over the admissible coordinates.
pub(crate) fn admissible_partition(
    block: &ConditionBlock,
    layout: &YLayout,
    sectors: &[usize],
) -> BlockPartition {
    let mut edges = Vec::new();
    for &(coord, r, c, _) in &block.coeffs {
        if r != c && admissible(coord, layout, sectors) {
            edges.push((r, c));
        }
    }
    for r in 0..block.size {
        for c in r + 1..block.size {
            if block.constant.get(r, c) != 0.0 {
                edges.push((r, c));
            }
        }
    }
    detect_blocks(block.size, &edges)
}
