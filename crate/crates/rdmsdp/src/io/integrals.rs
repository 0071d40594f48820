//! Plain-text electron-integral files.
//!
//! Grammar: a header line `RDM-INT v1 d=<int> N=<int>`, then lines
//! `T i j value` and `V i j k l value` with 1-based indices. Unlisted
//! entries are zero; T entries mirror onto (j,i) and V entries onto the
//! Hermitian partner (k,l,i,j).

use super::fmt_f64;
use crate::rdm::IntegralData;
use crate::symcore::SymMatrix;
use crate::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_integrals(text: &str) -> Result<IntegralData> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty integral file"))?;
    let mut d: Option<usize> = None;
    let mut n_elec: Option<usize> = None;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("RDM-INT") || parts.next() != Some("v1") {
        return Err(parse_err(1, "header must start with 'RDM-INT v1'"));
    }
    for part in parts {
        if let Some(v) = part.strip_prefix("d=") {
            d = Some(
                v.parse()
                    .map_err(|_| parse_err(1, format!("bad d value '{v}'")))?,
            );
        } else if let Some(v) = part.strip_prefix("N=") {
            n_elec = Some(
                v.parse()
                    .map_err(|_| parse_err(1, format!("bad N value '{v}'")))?,
            );
        } else {
            return Err(parse_err(1, format!("unexpected header token '{part}'")));
        }
    }
    let d = d.ok_or_else(|| parse_err(1, "header missing d="))?;
    let n_elec = n_elec.ok_or_else(|| parse_err(1, "header missing N="))?;
    if d == 0 {
        return Err(parse_err(1, "d must be positive"));
    }

    let mut t = SymMatrix::zeros(d);
    let mut v = vec![0.0; d * d * d * d];
    let vidx = |i: usize, j: usize, k: usize, l: usize| ((i * d + j) * d + k) * d + l;
    for (ln0, line) in lines {
        let ln = ln0 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let index = |tok: &str| -> Result<usize> {
            let k: usize = tok
                .parse()
                .map_err(|_| parse_err(ln, format!("bad index '{tok}'")))?;
            if k == 0 || k > d {
                return Err(parse_err(ln, format!("index {k} outside 1..={d}")));
            }
            Ok(k - 1)
        };
        match toks.first() {
            Some(&"T") => {
                if toks.len() != 4 {
                    return Err(parse_err(ln, "T lines take 'T i j value'"));
                }
                let i = index(toks[1])?;
                let j = index(toks[2])?;
                let val: f64 = toks[3]
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad value '{}'", toks[3])))?;
                t.set(i, j, val);
            }
            Some(&"V") => {
                if toks.len() != 6 {
                    return Err(parse_err(ln, "V lines take 'V i j k l value'"));
                }
                let i = index(toks[1])?;
                let j = index(toks[2])?;
                let k = index(toks[3])?;
                let l = index(toks[4])?;
                let val: f64 = toks[5]
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad value '{}'", toks[5])))?;
                v[vidx(i, j, k, l)] = val;
                v[vidx(k, l, i, j)] = val;
            }
            Some(other) => {
                return Err(parse_err(ln, format!("unknown record type '{other}'")));
            }
            None => {}
        }
    }
    IntegralData::new(d, n_elec, t, v)
}

/// Canonical serialization: T entries with i <= j ascending, V entries on
/// the lexicographically smaller Hermitian representative, everything in
/// 17-significant-digit decimal.
pub fn write_integrals(data: &IntegralData) -> String {
    let d = data.d();
    let mut out = format!("RDM-INT v1 d={} N={}\n", d, data.n_elec());
    for i in 0..d {
        for j in i..d {
            let v = data.t().get(i, j);
            if v != 0.0 {
                out.push_str(&format!("T {} {} {}\n", i + 1, j + 1, fmt_f64(v)));
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    if (i, j, k, l) > (k, l, i, j) {
                        continue;
                    }
                    let v = data.v(i, j, k, l);
                    if v != 0.0 {
                        out.push_str(&format!(
                            "V {} {} {} {} {}\n",
                            i + 1,
                            j + 1,
                            k + 1,
                            l + 1,
                            fmt_f64(v)
                        ));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn canonical_round_trip_is_bit_exact() {
        let data = instances::random_spin_conserving_integrals(4, 2, 130);
        let text1 = write_integrals(&data);
        let parsed = read_integrals(&text1).unwrap();
        let text2 = write_integrals(&parsed);
        assert_eq!(text1, text2);
        assert_eq!(parsed.d(), 4);
        assert_eq!(parsed.n_elec(), 2);
        assert_eq!(parsed.v_raw(), data.v_raw());
    }

    #[test]
    fn symmetry_completion_on_read() {
        let text = "RDM-INT v1 d=2 N=1\nT 1 2 0.5\nV 1 2 2 1 0.25\n";
        let data = read_integrals(text).unwrap();
        assert_eq!(data.t().get(1, 0), 0.5);
        assert_eq!(data.v(0, 1, 1, 0), 0.25);
        assert_eq!(data.v(1, 0, 0, 1), 0.25);
    }

    #[test]
    fn malformed_lines_report_position() {
        let text = "RDM-INT v1 d=2 N=1\nT 1 nope 0.5\n";
        match read_integrals(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(read_integrals("WRONG v1 d=2 N=1\n").is_err());
        assert!(read_integrals("RDM-INT v1 d=2 N=1\nT 3 1 0.5\n").is_err());
    }
}
