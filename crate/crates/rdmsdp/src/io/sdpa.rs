//! Sparse SDPA (".dat-s") reader and writer.
//!
//! The file encodes the dual-form data: m scalar variables with objective
//! vector b, block sizes (negative for diagonal blocks), and entry records
//! `matno blockno i j value` where matno 0 is the constant matrix C and
//! matno p the coefficient matrix of y_p. This maps directly onto the
//! solver's standard form; diagonal blocks become nonnegative vector blocks.
//! Free vector blocks and box blocks have no native encoding, so the writer
//! always emits the equivalent split forms.

use std::sync::Arc;

use super::fmt_f64;
use crate::sdpmodel::{convert_box_to_split, OperatorBuilder, SdpProblem};
use crate::symcore::{svec_coord_split, BlockKind, ConeSpec, SymBlockElement};
use crate::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Svec coordinate of a file value v (an off-diagonal matrix entry). The
/// scaling by sqrt(2) is not exactly invertible in floating point, so among
/// the candidates within two ulps of v*sqrt(2) we pick one whose write-back
/// image v' = c / sqrt(2) reproduces v bit-exactly; canonical files then
/// survive read/write cycles unchanged.
fn snap_scaled(value: f64) -> f64 {
    let raw = SQRT2 * value;
    if raw * FRAC_1_SQRT2 == value {
        return raw;
    }
    let mut down = raw;
    let mut up = raw;
    for _ in 0..2 {
        down = down.next_down();
        up = up.next_up();
        for cand in [down, up] {
            if cand * FRAC_1_SQRT2 == value {
                return cand;
            }
        }
    }
    raw
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses SDPA sparse text into a standard-form problem.
pub fn read_sdpa(text: &str) -> Result<SdpProblem> {
    // token stream with line tracking; comment lines start with '*' or '"'
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.starts_with('*') || trimmed.starts_with('"') {
            continue;
        }
        for tok in line.split(|c: char| c.is_whitespace() || ",(){}".contains(c)) {
            if !tok.is_empty() {
                tokens.push((ln + 1, tok));
            }
        }
    }
    fn take<'a>(
        tokens: &[(usize, &'a str)],
        pos: &mut usize,
        what: &str,
    ) -> Result<(usize, &'a str)> {
        let t = tokens
            .get(*pos)
            .copied()
            .ok_or_else(|| parse_err(tokens.last().map_or(0, |t| t.0), format!("missing {what}")))?;
        *pos += 1;
        Ok(t)
    }
    let mut pos = 0usize;

    let (ln, tok) = take(&tokens, &mut pos, "variable count")?;
    let m: usize = tok
        .parse()
        .map_err(|_| parse_err(ln, format!("bad variable count '{tok}'")))?;
    if m == 0 {
        return Err(parse_err(ln, "variable count must be positive"));
    }
    let (ln, tok) = take(&tokens, &mut pos, "block count")?;
    let nblocks: usize = tok
        .parse()
        .map_err(|_| parse_err(ln, format!("bad block count '{tok}'")))?;

    let mut kinds = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let (ln, tok) = take(&tokens, &mut pos, "block size")?;
        let size: i64 = tok
            .parse()
            .map_err(|_| parse_err(ln, format!("bad block size '{tok}'")))?;
        if size == 0 {
            return Err(parse_err(ln, "zero block size"));
        }
        kinds.push(if size > 0 {
            BlockKind::Psd(size as usize)
        } else {
            BlockKind::Nonneg((-size) as usize)
        });
    }
    let cone = ConeSpec::new(kinds);

    let mut b = vec![0.0; m];
    for item in b.iter_mut() {
        let (ln, tok) = take(&tokens, &mut pos, "objective entry")?;
        *item = tok
            .parse()
            .map_err(|_| parse_err(ln, format!("bad objective entry '{tok}'")))?;
    }

    let mut builder = OperatorBuilder::new(&cone, m);
    let mut cost = SymBlockElement::zeros(&cone);
    while pos < tokens.len() {
        let (ln, t0) = take(&tokens, &mut pos, "entry record")?;
        let matno: usize = t0
            .parse()
            .map_err(|_| parse_err(ln, format!("bad constraint number '{t0}'")))?;
        let (ln, t1) = take(&tokens, &mut pos, "block number")?;
        let blk: usize = t1
            .parse()
            .map_err(|_| parse_err(ln, format!("bad block number '{t1}'")))?;
        let (ln, t2) = take(&tokens, &mut pos, "row index")?;
        let i: usize = t2
            .parse()
            .map_err(|_| parse_err(ln, format!("bad row index '{t2}'")))?;
        let (ln, t3) = take(&tokens, &mut pos, "column index")?;
        let j: usize = t3
            .parse()
            .map_err(|_| parse_err(ln, format!("bad column index '{t3}'")))?;
        let (ln, t4) = take(&tokens, &mut pos, "value")?;
        let value: f64 = t4
            .parse()
            .map_err(|_| parse_err(ln, format!("bad value '{t4}'")))?;

        if matno > m {
            return Err(parse_err(ln, format!("constraint number {matno} > m = {m}")));
        }
        if blk == 0 || blk > cone.nblocks() {
            return Err(parse_err(ln, format!("block number {blk} out of range")));
        }
        let kind = cone.block(blk - 1);
        let side = kind.side();
        if i == 0 || j == 0 || i > side || j > side {
            return Err(parse_err(ln, format!("index ({i},{j}) outside block of size {side}")));
        }
        if i > j {
            return Err(parse_err(ln, format!("entries must have i <= j, got ({i},{j})")));
        }
        match kind {
            BlockKind::Psd(_) => {
                let off = crate::symcore::svec_offset(i - 1, j - 1);
                let coord_val = if i == j { value } else { snap_scaled(value) };
                if matno == 0 {
                    let span = cone.span(blk - 1);
                    cost.coords_mut()[span.start + off] += coord_val;
                } else {
                    let coord = cone.span(blk - 1).start + off;
                    builder.add_coord(matno - 1, coord, coord_val);
                }
            }
            BlockKind::Nonneg(_) => {
                if i != j {
                    return Err(parse_err(
                        ln,
                        format!("diagonal block entry must have i == j, got ({i},{j})"),
                    ));
                }
                if matno == 0 {
                    let span = cone.span(blk - 1);
                    cost.coords_mut()[span.start + i - 1] += value;
                } else {
                    builder.add_vector_entry(matno - 1, blk - 1, i - 1, value);
                }
            }
            _ => unreachable!("reader only produces psd and nonneg blocks"),
        }
    }
    for (p, v) in b.into_iter().enumerate() {
        builder.set_rhs(p, v);
    }
    Ok(SdpProblem::new(cone, builder.build(), cost))
}

/// Entry records of one "matrix number" in deterministic order.
fn push_entries(
    out: &mut String,
    matno: usize,
    cone: &Arc<ConeSpec>,
    write_block: &[usize],
    coords_of: impl Fn(usize) -> Vec<(usize, f64)>,
) {
    let mut records: Vec<(usize, usize, usize, f64)> = Vec::new();
    for j in 0..cone.nblocks() {
        let kind = cone.block(j);
        for (off, v) in coords_of(j) {
            if v == 0.0 {
                continue;
            }
            match kind {
                BlockKind::Psd(_) | BlockKind::Box01(_) => {
                    let (r, c) = svec_coord_split(off);
                    let value = if r == c { v } else { FRAC_1_SQRT2 * v };
                    records.push((write_block[j], r + 1, c + 1, value));
                }
                BlockKind::Nonneg(_) | BlockKind::Free(_) => {
                    records.push((write_block[j], off + 1, off + 1, v));
                }
            }
        }
    }
    records.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    for (blk, i, jj, v) in records {
        out.push_str(&format!("{matno} {blk} {i} {jj} {}\n", fmt_f64(v)));
    }
}

/// Serializes a problem to SDPA sparse text. Box blocks are converted to the
/// PSD split first; free vector blocks are emitted as a pair of nonnegative
/// diagonal blocks carrying opposite signs. Output order is deterministic:
/// blocks ascending, entries lexicographic, values with 17 significant
/// digits.
pub fn write_sdpa(problem: &SdpProblem) -> String {
    let problem = if problem.cone.has_box() {
        convert_box_to_split(problem)
    } else {
        problem.clone()
    };
    let cone = &problem.cone;
    let m = problem.m();

    // block layout of the file: free blocks split into +/- nonneg pairs
    let mut sizes: Vec<i64> = Vec::new();
    let mut write_block: Vec<usize> = Vec::new();
    let mut neg_twin: Vec<Option<usize>> = Vec::new();
    for j in 0..cone.nblocks() {
        match cone.block(j) {
            BlockKind::Psd(n) => {
                sizes.push(n as i64);
                write_block.push(sizes.len());
                neg_twin.push(None);
            }
            BlockKind::Nonneg(k) => {
                sizes.push(-(k as i64));
                write_block.push(sizes.len());
                neg_twin.push(None);
            }
            BlockKind::Free(k) => {
                sizes.push(-(k as i64));
                write_block.push(sizes.len());
                sizes.push(-(k as i64));
                neg_twin.push(Some(sizes.len()));
            }
            BlockKind::Box01(_) => unreachable!("box blocks were split above"),
        }
    }

    let mut out = String::new();
    out.push_str(&format!("{m}\n"));
    out.push_str(&format!("{}\n", sizes.len()));
    let size_line: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
    out.push_str(&size_line.join(" "));
    out.push('\n');
    let obj_line: Vec<String> = problem.operator.b.iter().map(|v| fmt_f64(*v)).collect();
    out.push_str(&obj_line.join(" "));
    out.push('\n');

    let cost_of = |j: usize| -> Vec<(usize, f64)> {
        problem
            .cost
            .block_coords(j)
            .iter()
            .enumerate()
            .map(|(off, &v)| (off, v))
            .collect()
    };
    push_entries(&mut out, 0, cone, &write_block, cost_of);
    // mirrored cost on the negative twin of free blocks
    for j in 0..cone.nblocks() {
        if let Some(tw) = neg_twin[j] {
            let mut records: Vec<(usize, f64)> = problem
                .cost
                .block_coords(j)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(off, &v)| (off, -v))
                .collect();
            records.sort_by_key(|r| r.0);
            for (off, v) in records {
                out.push_str(&format!("0 {tw} {} {} {}\n", off + 1, off + 1, fmt_f64(v)));
            }
        }
    }

    let row_coords = |p: usize, j: usize| -> Vec<(usize, f64)> {
        let span = cone.span(j);
        let (cols, vals) = problem.operator.row(p);
        cols.iter()
            .zip(vals.iter())
            .filter(|(c, _)| span.contains(&(**c as usize)))
            .map(|(c, v)| (*c as usize - span.start, *v))
            .collect()
    };
    for p in 0..m {
        push_entries(&mut out, p + 1, cone, &write_block, |j| row_coords(p, j));
        for j in 0..cone.nblocks() {
            if let Some(tw) = neg_twin[j] {
                let mut records: Vec<(usize, f64)> = row_coords(p, j)
                    .into_iter()
                    .map(|(off, v)| (off, -v))
                    .collect();
                records.sort_by_key(|r| r.0);
                for (off, v) in records {
                    out.push_str(&format!(
                        "{} {tw} {} {} {}\n",
                        p + 1,
                        off + 1,
                        off + 1,
                        fmt_f64(v)
                    ));
                }
            }
        }
    }
    out
}

/// Equality of parsed content, used by the round-trip tests.
#[cfg(test)]
pub(crate) fn problems_equal(a: &SdpProblem, b: &SdpProblem) -> bool {
    if a.cone.blocks() != b.cone.blocks() {
        return false;
    }
    if a.operator.b != b.operator.b {
        return false;
    }
    if a.cost.coords() != b.cost.coords() {
        return false;
    }
    if a.m() != b.m() {
        return false;
    }
    for p in 0..a.m() {
        let (ca, va): (&[u32], &[f64]) = a.operator.row(p);
        let (cb, vb) = b.operator.row(p);
        if ca != cb || va != vb {
            return false;
        }
    }
    true
}
