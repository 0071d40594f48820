//! Standard-form SDP data over product cones: the constraint operator and
//! its adjoint, row normalization achieving an orthonormal operator, and the
//! optimality diagnostics eta_p / eta_d / eta_g.
//!
//! Primal form: max <C,X> s.t. A X = b, X in cone. Dual: min b'y subject to
//! A* y - C in the dual cone.

use std::sync::Arc;

use crate::symcore::{
    detect_blocks, smat, svec_coord_split, svec_offset, BlockKind, BlockPartition, ConeSpec,
    SymBlockElement, SymMatrix,
};
use crate::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Sparse constraint operator: m rows, each a sparse vector over the global
/// svec coordinates of the cone, together with the right-hand side b.
/// Row p applied to X gives sum_j <A_jp, X_j>.
#[derive(Clone, Debug)]
pub struct ConstraintOperator {
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
    pub b: Vec<f64>,
}

impl ConstraintOperator {
    pub fn nrows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, p: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[p]..self.row_ptr[p + 1];
        (&self.col[r.clone()], &self.val[r])
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// A X: component p is the inner product of row p with svec(X).
    pub fn apply(&self, x: &SymBlockElement) -> Vec<f64> {
        let coords = x.coords();
        let mut out = vec![0.0; self.nrows()];
        for p in 0..self.nrows() {
            let (cols, vals) = self.row(p);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals.iter()) {
                acc += coords[*c as usize] * v;
            }
            out[p] = acc;
        }
        out
    }

    /// A* y = sum_p y_p A_p, scattered back into an element.
    pub fn apply_adjoint(&self, y: &[f64], spec: &Arc<ConeSpec>) -> SymBlockElement {
        debug_assert_eq!(y.len(), self.nrows());
        let mut out = SymBlockElement::zeros(spec);
        let coords = out.coords_mut();
        for (p, &yp) in y.iter().enumerate() {
            if yp == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(p);
            for (c, v) in cols.iter().zip(vals.iter()) {
                coords[*c as usize] += yp * v;
            }
        }
        out
    }

    /// Materializes the coefficient matrix A_jp of one block of one row.
    pub fn coeff_matrix(&self, p: usize, block: usize, spec: &ConeSpec) -> SymMatrix {
        let span = spec.span(block);
        let mut coords = vec![0.0; span.len()];
        let (cols, vals) = self.row(p);
        for (c, v) in cols.iter().zip(vals.iter()) {
            let c = *c as usize;
            if span.contains(&c) {
                coords[c - span.start] = *v;
            }
        }
        smat(&coords).expect("block span is triangular")
    }
}

/// Accumulating builder for [`ConstraintOperator`]. Duplicate entries sum.
pub struct OperatorBuilder {
    spec: Arc<ConeSpec>,
    rows: Vec<Vec<(u32, f64)>>,
    b: Vec<f64>,
}

impl OperatorBuilder {
    pub fn new(spec: &Arc<ConeSpec>, m: usize) -> Self {
        OperatorBuilder {
            spec: spec.clone(),
            rows: vec![Vec::new(); m],
            b: vec![0.0; m],
        }
    }

    pub fn set_rhs(&mut self, p: usize, v: f64) {
        self.b[p] = v;
    }

    /// Adds a symmetric matrix entry: A_jp[i,k] = A_jp[k,i] += v.
    pub fn add_matrix_entry(&mut self, p: usize, block: usize, i: usize, k: usize, v: f64) {
        debug_assert!(self.spec.block(block).is_matrix());
        let (lo, hi) = if i <= k { (i, k) } else { (k, i) };
        let coord = self.spec.span(block).start + svec_offset(lo, hi);
        let scaled = if lo == hi { v } else { SQRT2 * v };
        self.rows[p].push((coord as u32, scaled));
    }

    /// Adds a vector-block coefficient.
    pub fn add_vector_entry(&mut self, p: usize, block: usize, k: usize, v: f64) {
        debug_assert!(!self.spec.block(block).is_matrix());
        let coord = self.spec.span(block).start + k;
        self.rows[p].push((coord as u32, v));
    }

    /// Adds one raw svec coordinate.
    pub fn add_coord(&mut self, p: usize, coord: usize, v: f64) {
        debug_assert!(coord < self.spec.svec_dim());
        self.rows[p].push((coord as u32, v));
    }

    /// Adds raw svec-coordinate coefficients for a whole row.
    pub fn add_svec_row(&mut self, p: usize, coords: &[f64]) {
        debug_assert_eq!(coords.len(), self.spec.svec_dim());
        for (c, &v) in coords.iter().enumerate() {
            if v != 0.0 {
                self.rows[p].push((c as u32, v));
            }
        }
    }

    /// Copies raw sparse coefficients into a row.
    pub fn add_raw(&mut self, p: usize, cols: &[u32], vals: &[f64]) {
        for (c, v) in cols.iter().zip(vals.iter()) {
            self.rows[p].push((*c, *v));
        }
    }

    pub fn build(self) -> ConstraintOperator {
        let mut row_ptr = Vec::with_capacity(self.rows.len() + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                if v != 0.0 {
                    col.push(c);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        ConstraintOperator {
            row_ptr,
            col,
            val,
            b: self.b,
        }
    }
}

/// Detected structure annotation for one cone block.
#[derive(Clone, Debug, Default)]
pub struct BlockInfo {
    pub label: String,
    pub detected: Option<BlockPartition>,
}

/// Standard-form problem data: max <C,X> s.t. A X = b, X in cone.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub cone: Arc<ConeSpec>,
    pub operator: ConstraintOperator,
    pub cost: SymBlockElement,
    /// Optional per-block labels and detected block partitions.
    pub block_info: Vec<BlockInfo>,
}

impl SdpProblem {
    pub fn new(cone: Arc<ConeSpec>, operator: ConstraintOperator, cost: SymBlockElement) -> Self {
        let block_info = (0..cone.nblocks()).map(|_| BlockInfo::default()).collect();
        SdpProblem {
            cone,
            operator,
            cost,
            block_info,
        }
    }

    pub fn m(&self) -> usize {
        self.operator.nrows()
    }

    /// Attaches block partitions detected from the union sparsity pattern of
    /// each block's coefficient and constant matrices.
    pub fn annotate_blocks(&mut self) {
        for j in 0..self.cone.nblocks() {
            if !self.cone.block(j).is_matrix() {
                continue;
            }
            let n = self.cone.block(j).side();
            let span = self.cone.span(j);
            let mut edges = Vec::new();
            let mut push_coord = |c: usize| {
                let (i, k) = svec_coord_split(c);
                if i != k {
                    edges.push((i, k));
                }
            };
            for p in 0..self.m() {
                let (cols, _) = self.operator.row(p);
                for &c in cols {
                    let c = c as usize;
                    if span.contains(&c) {
                        push_coord(c - span.start);
                    }
                }
            }
            for (c, &v) in self.cost.block_coords(j).iter().enumerate() {
                if v != 0.0 {
                    push_coord(c);
                }
            }
            self.block_info[j].detected = Some(detect_blocks(n, &edges));
        }
    }
}

/// Problem with whitened rows: the kept rows of the transformed operator
/// satisfy A A* = I, so the projection onto {A X = b} costs one adjoint
/// application. The transformation is implicit through the stored Cholesky
/// factor of the row Gram matrix.
#[derive(Clone, Debug)]
pub struct NormalizedProblem {
    pub problem: SdpProblem,
    /// Original row indices kept, in pivot order.
    pub keep: Vec<usize>,
    /// Original row indices dropped as linearly dependent.
    pub dropped: Vec<usize>,
    /// Lower-triangular Cholesky factor of the kept-row Gram matrix (row
    /// major, k x k).
    l_factor: Vec<f64>,
    /// Normalized right-hand side L^{-1} b[keep].
    pub b: Vec<f64>,
}

impl NormalizedProblem {
    pub fn m(&self) -> usize {
        self.keep.len()
    }

    pub fn cone(&self) -> &Arc<ConeSpec> {
        &self.problem.cone
    }

    pub fn cost(&self) -> &SymBlockElement {
        &self.problem.cost
    }

    fn forward_solve(&self, mut v: Vec<f64>) -> Vec<f64> {
        let k = self.keep.len();
        for i in 0..k {
            let mut acc = v[i];
            for j in 0..i {
                acc -= self.l_factor[i * k + j] * v[j];
            }
            v[i] = acc / self.l_factor[i * k + i];
        }
        v
    }

    fn back_solve_transposed(&self, y: &[f64]) -> Vec<f64> {
        let k = self.keep.len();
        let mut w = y.to_vec();
        for i in (0..k).rev() {
            let mut acc = w[i];
            for j in i + 1..k {
                acc -= self.l_factor[j * k + i] * w[j];
            }
            w[i] = acc / self.l_factor[i * k + i];
        }
        w
    }

    /// Normalized forward map: L^{-1} (A_keep X).
    pub fn apply(&self, x: &SymBlockElement) -> Vec<f64> {
        let raw = self.problem.operator.apply(x);
        let picked = self.keep.iter().map(|&p| raw[p]).collect();
        self.forward_solve(picked)
    }

    /// Normalized adjoint: A_keep^T L^{-T} y.
    pub fn apply_adjoint(&self, y: &[f64]) -> SymBlockElement {
        let full = self.restore_y(y);
        self.problem
            .operator
            .apply_adjoint(&full, &self.problem.cone)
    }

    /// Lifts a normalized dual vector back to the original row space
    /// (dropped rows get zero).
    pub fn restore_y(&self, y: &[f64]) -> Vec<f64> {
        let w = self.back_solve_transposed(y);
        let mut full = vec![0.0; self.problem.m()];
        for (i, &p) in self.keep.iter().enumerate() {
            full[p] = w[i];
        }
        full
    }
}

/// Whitens the operator rows so that A A* = I on the kept rows. Linearly
/// dependent rows (pivot below 1e-10 of the largest pivot seen during the
/// Gram factorization) are dropped and reported in `dropped`.
pub fn normalize(problem: SdpProblem) -> Result<NormalizedProblem> {
    let m = problem.m();
    if m == 0 {
        return Err(Error::InvalidParam("operator has no rows".into()));
    }
    // dense Gram of the sparse rows
    let dim = problem.cone.svec_dim();
    let mut gram = vec![0.0; m * m];
    let mut dense = vec![0.0; dim];
    for p in 0..m {
        let (cols, vals) = problem.operator.row(p);
        for (c, v) in cols.iter().zip(vals.iter()) {
            dense[*c as usize] = *v;
        }
        for q in p..m {
            let (qcols, qvals) = problem.operator.row(q);
            let mut acc = 0.0;
            for (c, v) in qcols.iter().zip(qvals.iter()) {
                acc += dense[*c as usize] * v;
            }
            gram[p * m + q] = acc;
            gram[q * m + p] = acc;
        }
        for c in cols {
            dense[*c as usize] = 0.0;
        }
    }

    // diagonally pivoted Cholesky with rank filtering; `order` tracks which
    // original row sits at each pivot position and `l` rows follow positions
    let tol = 1e-10;
    let mut order: Vec<usize> = (0..m).collect();
    let mut l = vec![0.0; m * m];
    let mut diag: Vec<f64> = (0..m).map(|p| gram[p * m + p]).collect();
    let mut rank = 0usize;
    let mut max_pivot = 0.0f64;
    for k in 0..m {
        let mut j = k;
        let mut piv = diag[k];
        for (r, &dr) in diag.iter().enumerate().skip(k + 1) {
            if dr > piv {
                piv = dr;
                j = r;
            }
        }
        if piv <= 0.0 || (max_pivot > 0.0 && piv < tol * max_pivot) {
            break;
        }
        max_pivot = max_pivot.max(piv);
        order.swap(k, j);
        diag.swap(k, j);
        for c in 0..k {
            l.swap(k * m + c, j * m + c);
        }
        let lkk = diag[k].sqrt();
        l[k * m + k] = lkk;
        for r in k + 1..m {
            let gp = gram[order[r] * m + order[k]];
            let mut acc = gp;
            for c in 0..k {
                acc -= l[r * m + c] * l[k * m + c];
            }
            let lrk = acc / lkk;
            l[r * m + k] = lrk;
            diag[r] -= lrk * lrk;
        }
        rank += 1;
    }
    if rank == 0 {
        return Err(Error::InvalidParam(
            "operator rows span a zero space".into(),
        ));
    }

    let keep: Vec<usize> = order[..rank].to_vec();
    let mut dropped: Vec<usize> = order[rank..].to_vec();
    dropped.sort_unstable();

    // compact L to rank x rank; rows follow pivot order
    let mut l_factor = vec![0.0; rank * rank];
    for i in 0..rank {
        for j in 0..=i {
            l_factor[i * rank + j] = l[i * m + j];
        }
    }

    let b_kept: Vec<f64> = keep.iter().map(|&p| problem.operator.b[p]).collect();
    let mut norm = NormalizedProblem {
        problem,
        keep,
        dropped,
        l_factor,
        b: b_kept,
    };
    norm.b = norm.forward_solve(norm.b.clone());
    Ok(norm)
}

/// Primal/dual infeasibilities and relative gap.
#[derive(Clone, Copy, Debug)]
pub struct ResidualReport {
    pub eta_p: f64,
    pub eta_d: f64,
    pub eta_g: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
}

impl ResidualReport {
    pub fn max_infeasibility(&self) -> f64 {
        self.eta_p.max(self.eta_d)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual_report(
    ax: &[f64],
    b: &[f64],
    astar_y: &SymBlockElement,
    x: &SymBlockElement,
    s: &SymBlockElement,
    cost: &SymBlockElement,
    y: &[f64],
) -> ResidualReport {
    let mut primal_res = 0.0f64;
    for (a, bb) in ax.iter().zip(b.iter()) {
        primal_res += (a - bb) * (a - bb);
    }
    let eta_p = primal_res.sqrt() / norm2(b).max(1.0);

    let mut dual = astar_y.clone();
    dual.axpy(-1.0, cost);
    dual.axpy(-1.0, s);
    let eta_d = dual.norm() / cost.norm().max(1.0);

    let primal_obj = cost.dot(x);
    let dual_obj = y.iter().zip(b.iter()).map(|(a, bb)| a * bb).sum::<f64>();
    let eta_g = (dual_obj - primal_obj).abs() / primal_obj.abs().max(1.0);
    ResidualReport {
        eta_p,
        eta_d,
        eta_g,
        primal_obj,
        dual_obj,
    }
}

/// Diagnostics in the original row space of a problem.
pub fn residuals(
    x: &SymBlockElement,
    y: &[f64],
    s: &SymBlockElement,
    problem: &SdpProblem,
) -> ResidualReport {
    let ax = problem.operator.apply(x);
    let astar_y = problem.operator.apply_adjoint(y, &problem.cone);
    residual_report(&ax, &problem.operator.b, &astar_y, x, s, &problem.cost, y)
}

/// Diagnostics in the normalized row space (the space the solvers run in).
pub fn residuals_normalized(
    x: &SymBlockElement,
    y: &[f64],
    s: &SymBlockElement,
    norm: &NormalizedProblem,
) -> ResidualReport {
    let ax = norm.apply(x);
    let astar_y = norm.apply_adjoint(y);
    residual_report(&ax, &norm.b, &astar_y, x, s, norm.cost(), y)
}

/// Rewrites box blocks {0 <= X <= I} into the split form the Newton
/// machinery requires: each box block becomes a plain PSD block, a PSD slack
/// block is appended, and new rows enforce X + Y = I.
pub fn convert_box_to_split(problem: &SdpProblem) -> SdpProblem {
    if !problem.cone.has_box() {
        return problem.clone();
    }
    let old = &problem.cone;
    let mut blocks: Vec<BlockKind> = Vec::new();
    let mut slack_of: Vec<Option<usize>> = Vec::new();
    for j in 0..old.nblocks() {
        match old.block(j) {
            BlockKind::Box01(n) => {
                blocks.push(BlockKind::Psd(n));
                slack_of.push(Some(n));
            }
            other => {
                blocks.push(other);
                slack_of.push(None);
            }
        }
    }
    let nold = blocks.len();
    let mut extra_rows = 0;
    for s in slack_of.iter().flatten() {
        blocks.push(BlockKind::Psd(*s));
        extra_rows += s * (s + 1) / 2;
    }
    let cone = ConeSpec::new(blocks);

    let m_old = problem.m();
    let mut builder = OperatorBuilder::new(&cone, m_old + extra_rows);
    for p in 0..m_old {
        let (cols, vals) = problem.operator.row(p);
        builder.add_raw(p, cols, vals);
        builder.set_rhs(p, problem.operator.b[p]);
    }
    // coupling rows: svec(X_box) + svec(Y) = svec(I)
    let mut row = m_old;
    let mut slack_block = nold;
    for (j, s) in slack_of.iter().enumerate() {
        let Some(n) = s else { continue };
        for jj in 0..*n {
            for ii in 0..=jj {
                builder.add_matrix_entry(row, j, ii, jj, 1.0);
                builder.add_matrix_entry(row, slack_block, ii, jj, 1.0);
                builder.set_rhs(row, if ii == jj { 1.0 } else { 0.0 });
                row += 1;
            }
        }
        slack_block += 1;
    }
    let operator = builder.build();

    let mut cost = SymBlockElement::zeros(&cone);
    let old_dim = old.svec_dim();
    cost.coords_mut()[..old_dim].copy_from_slice(problem.cost.coords());
    SdpProblem::new(cone, operator, cost)
}
