//! File formats: the SDPA sparse exchange format, the integral text format,
//! JSON solution summaries and CSV iteration traces.

mod integrals;
mod sdpa;
mod solution;
mod trace_csv;

pub use integrals::{read_integrals, write_integrals};
pub use sdpa::{read_sdpa, write_sdpa};
pub use solution::Solution;
pub use trace_csv::write_trace_csv;

use std::path::Path;

/// Atomic text write: the content lands in a sibling temporary file which is
/// renamed over the target, so readers never observe a half-written file.
pub fn write_atomic(path: &Path, content: &str) -> crate::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = dir.to_path_buf();
    let base = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    tmp.push(format!(".{base}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Round-trip-safe decimal formatting (17 significant digits).
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
