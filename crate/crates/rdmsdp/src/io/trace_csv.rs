use super::fmt_f64;
use crate::trace::TraceRow;

/// Fixed CSV column set for iteration traces. Extra in-memory fields of
/// [`TraceRow`] (mu, per-block ranks) are not part of the file format.
const HEADER: &str = "iter,stage,eta_p,eta_d,eta_g,normF,penalty,lambda,cg_iters,wall_seconds";

pub fn write_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for row in rows {
        let lambda = row.lambda.map(fmt_f64).unwrap_or_default();
        let cg = row.cg_iters.map(|c| c.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.iter,
            row.stage.as_str(),
            fmt_f64(row.eta_p),
            fmt_f64(row.eta_d),
            fmt_f64(row.eta_g),
            fmt_f64(row.norm_f),
            fmt_f64(row.penalty),
            lambda,
            cg,
            fmt_f64(row.wall_seconds),
        ));
    }
    out
}
