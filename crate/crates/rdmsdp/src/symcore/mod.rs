//! Dense symmetric-matrix kernel: vectorization, spectral decomposition,
//! cone projections and sparsity-based block detection.

mod blocks;
mod cone;
mod eig;
mod mat;

pub use blocks::{detect_blocks, BlockPartition};
pub use cone::{project_cone, BlockKind, ConeSpec, SymBlockElement};
pub(crate) use cone::{decompose_blocks, project_from_decomps};
pub use eig::{spectral_decompose, SpectralDecomp};
pub use mat::{smat, svec, svec_coord_split, svec_dim, svec_offset, tri_side, Mat, SymMatrix};
