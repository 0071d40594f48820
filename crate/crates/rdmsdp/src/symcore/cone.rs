use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use super::eig::{spectral_decompose, SpectralDecomp};
use super::mat::{smat, svec_dim, svec_into, SymMatrix};
use crate::{Error, Result};

/// One factor of the product cone the solver works over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Symmetric positive semidefinite block of the given side length.
    Psd(usize),
    /// Symmetric block constrained to 0 <= X <= I.
    Box01(usize),
    /// Componentwise nonnegative vector block.
    Nonneg(usize),
    /// Unconstrained vector block.
    Free(usize),
}

impl BlockKind {
    /// Number of coordinates the block occupies in svec storage.
    pub fn coord_len(&self) -> usize {
        match *self {
            BlockKind::Psd(n) | BlockKind::Box01(n) => svec_dim(n),
            BlockKind::Nonneg(k) | BlockKind::Free(k) => k,
        }
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, BlockKind::Psd(_) | BlockKind::Box01(_))
    }

    /// Matrix side length for matrix blocks, vector length otherwise.
    pub fn side(&self) -> usize {
        match *self {
            BlockKind::Psd(n) | BlockKind::Box01(n) => n,
            BlockKind::Nonneg(k) | BlockKind::Free(k) => k,
        }
    }
}

/// Ordered list of cone blocks together with precomputed coordinate offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeSpec {
    blocks: Vec<BlockKind>,
    offsets: Vec<usize>,
    total: usize,
}

impl ConeSpec {
    pub fn new(blocks: Vec<BlockKind>) -> Arc<Self> {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total = 0;
        for b in &blocks {
            offsets.push(total);
            total += b.coord_len();
        }
        Arc::new(ConeSpec {
            blocks,
            offsets,
            total,
        })
    }

    pub fn nblocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, j: usize) -> BlockKind {
        self.blocks[j]
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    /// Total svec-coordinate dimension of the product space.
    pub fn svec_dim(&self) -> usize {
        self.total
    }

    /// Coordinate range of block j.
    pub fn span(&self, j: usize) -> std::ops::Range<usize> {
        let start = self.offsets[j];
        start..start + self.blocks[j].coord_len()
    }

    pub fn has_box(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b, BlockKind::Box01(_)))
    }
}

/// An element of the product of symmetric-matrix and vector blocks, stored as
/// a flat svec-coordinate vector. Inner products of elements equal the sums
/// of Frobenius/Euclidean inner products of their blocks.
#[derive(Clone, Debug)]
pub struct SymBlockElement {
    spec: Arc<ConeSpec>,
    coords: Vec<f64>,
}

impl SymBlockElement {
    pub fn zeros(spec: &Arc<ConeSpec>) -> Self {
        SymBlockElement {
            spec: spec.clone(),
            coords: vec![0.0; spec.svec_dim()],
        }
    }

    pub fn from_coords(spec: &Arc<ConeSpec>, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != spec.svec_dim() {
            return Err(Error::Shape(format!(
                "coordinate length {} does not match cone dimension {}",
                coords.len(),
                spec.svec_dim()
            )));
        }
        Ok(SymBlockElement {
            spec: spec.clone(),
            coords,
        })
    }

    pub fn spec(&self) -> &Arc<ConeSpec> {
        &self.spec
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn block_coords(&self, j: usize) -> &[f64] {
        &self.coords[self.spec.span(j)]
    }

    pub fn block_coords_mut(&mut self, j: usize) -> &mut [f64] {
        let span = self.spec.span(j);
        &mut self.coords[span]
    }

    /// Materializes a matrix block.
    pub fn block_matrix(&self, j: usize) -> SymMatrix {
        debug_assert!(self.spec.block(j).is_matrix());
        smat(self.block_coords(j)).expect("block span is triangular by construction")
    }

    pub fn set_block_matrix(&mut self, j: usize, m: &SymMatrix) {
        debug_assert_eq!(m.dim(), self.spec.block(j).side());
        let span = self.spec.span(j);
        svec_into(m, &mut self.coords[span]);
    }

    pub fn dot(&self, other: &SymBlockElement) -> f64 {
        debug_assert_eq!(self.coords.len(), other.coords.len());
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Euclidean norm of the coordinates, which equals the Frobenius norm of
    /// the block-diagonal matrix the element represents.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// self += a * other.
    pub fn axpy(&mut self, a: f64, other: &SymBlockElement) {
        debug_assert_eq!(self.coords.len(), other.coords.len());
        for (x, y) in self.coords.iter_mut().zip(other.coords.iter()) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.coords {
            *x *= a;
        }
    }

    pub fn plus(&self, other: &SymBlockElement) -> SymBlockElement {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn minus(&self, other: &SymBlockElement) -> SymBlockElement {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn scaled(&self, a: f64) -> SymBlockElement {
        let mut out = self.clone();
        out.scale(a);
        out
    }
}

static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

/// Shared pool for block-level parallelism; RDMSDP_THREADS caps its size.
/// Per-block work is sequential and results are merged in block order, so
/// outputs do not depend on the thread count.
pub(crate) fn block_pool() -> &'static rayon::ThreadPool {
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Ok(raw) = std::env::var("RDMSDP_THREADS") {
            if let Ok(k) = raw.trim().parse::<usize>() {
                if k >= 1 {
                    builder = builder.num_threads(k);
                }
            }
        }
        builder.build().expect("failed to build block thread pool")
    })
}

/// Spectral decompositions for every matrix block of an element (None for
/// vector blocks). Blocks run in parallel under the shared pool.
pub(crate) fn decompose_blocks(z: &SymBlockElement) -> Result<Vec<Option<SpectralDecomp>>> {
    let spec = z.spec().clone();
    let jobs: Vec<usize> = (0..spec.nblocks()).collect();
    block_pool().install(|| {
        jobs.par_iter()
            .map(|&j| {
                if spec.block(j).is_matrix() {
                    let m = z.block_matrix(j);
                    let dim = m.dim();
                    spectral_decompose(&m)
                        .map(Some)
                        .map_err(|_| Error::EigFailure { block: j, dim })
                } else {
                    Ok(None)
                }
            })
            .collect()
    })
}

pub(crate) fn project_from_decomps(
    z: &SymBlockElement,
    decomps: &[Option<SpectralDecomp>],
) -> SymBlockElement {
    let mut out = z.clone();
    for j in 0..z.spec().nblocks() {
        match z.spec().block(j) {
            BlockKind::Psd(_) => {
                let proj = decomps[j].as_ref().expect("psd block decomp").project_psd();
                out.set_block_matrix(j, &proj);
            }
            BlockKind::Box01(_) => {
                let proj = decomps[j]
                    .as_ref()
                    .expect("box block decomp")
                    .project_box01();
                out.set_block_matrix(j, &proj);
            }
            BlockKind::Nonneg(_) => {
                for x in out.block_coords_mut(j) {
                    if *x < 0.0 {
                        *x = 0.0;
                    }
                }
            }
            BlockKind::Free(_) => {}
        }
    }
    out
}

/// Frobenius-nearest point of the cone: PSD blocks drop negative eigenvalues,
/// box blocks clip eigenvalues to [0,1], nonnegative vector blocks clamp at
/// zero and free blocks pass through.
pub fn project_cone(z: &SymBlockElement) -> Result<SymBlockElement> {
    let decomps = decompose_blocks(z)?;
    Ok(project_from_decomps(z, &decomps))
}
