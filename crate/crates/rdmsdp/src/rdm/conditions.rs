use super::spin::{self};
use super::{ConditionSet, IntegralData, PairIndexMap};
use crate::sdpmodel::{OperatorBuilder, SdpProblem};
use crate::symcore::{svec, svec_dim, svec_offset, BlockKind, ConeSpec, SymBlockElement, SymMatrix};
use crate::{Error, Result};

const FRAC_1_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Layout of the dual variable y = (svec(gamma), svec(pair Gamma)).
#[derive(Clone, Debug)]
pub(crate) struct YLayout {
    pub map: PairIndexMap,
    pub gamma_dim: usize,
}

impl YLayout {
    pub fn new(d: usize) -> Self {
        YLayout {
            map: PairIndexMap::new(d),
            gamma_dim: svec_dim(d),
        }
    }

    pub fn m(&self) -> usize {
        self.gamma_dim + svec_dim(self.map.len())
    }

    /// y coordinate and scale of gamma_{ab}: off-diagonal svec coordinates
    /// store sqrt(2) times the entry, so the coefficient picks up 1/sqrt(2).
    fn gamma_coord(&self, a: usize, b: usize) -> (usize, f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let scale = if lo == hi { 1.0 } else { FRAC_1_SQRT2 };
        (svec_offset(lo, hi), scale)
    }

    /// y coordinate and scale of the pair-matrix entry (p, q).
    fn pair_coord(&self, p: usize, q: usize) -> (usize, f64) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let scale = if lo == hi { 1.0 } else { FRAC_1_SQRT2 };
        (self.gamma_dim + svec_offset(lo, hi), scale)
    }
}

/// Affine scalar in y: constant + sum of coefficients on y coordinates.
#[derive(Clone, Debug, Default)]
struct AffineEntry {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

impl AffineEntry {
    fn gamma(&mut self, layout: &YLayout, a: usize, b: usize, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let (c, scale) = layout.gamma_coord(a, b);
        self.terms.push((c, coeff * scale));
    }

    /// Two-body tensor element Gamma_{ij,kl}; vanishes when an index pair
    /// coincides, otherwise resolves through the antisymmetry signs to the
    /// pair matrix.
    fn tensor(&mut self, layout: &YLayout, i: usize, j: usize, k: usize, l: usize, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let (Some((p, sp)), Some((q, sq))) = (layout.map.signed(i, j), layout.map.signed(k, l))
        else {
            return;
        };
        let (c, scale) = layout.pair_coord(p, q);
        self.terms.push((c, coeff * sp * sq * scale));
    }
}

/// One positivity block S_j = A_j* y - C_j of the assembled dual problem.
#[derive(Clone, Debug)]
pub struct ConditionBlock {
    pub label: String,
    pub size: usize,
    /// Constant matrix C_j.
    pub constant: SymMatrix,
    /// Sparse coefficients (y coordinate, row, col, value) with row <= col;
    /// the value enters A_{j,p} symmetrically at (row,col) and (col,row).
    pub coeffs: Vec<(usize, usize, usize, f64)>,
}

impl ConditionBlock {
    fn from_entries(
        label: &str,
        size: usize,
        mut entry: impl FnMut(usize, usize) -> AffineEntry,
    ) -> Self {
        let mut constant = SymMatrix::zeros(size);
        let mut coeffs = Vec::new();
        for r in 0..size {
            for c in r..size {
                let e = entry(r, c);
                if e.constant != 0.0 {
                    // S = A* y - C, so the constant part enters negated
                    constant.set(r, c, -e.constant);
                }
                let mut merged = e.terms;
                merged.sort_by_key(|&(coord, _)| coord);
                let mut acc: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
                for (coord, v) in merged {
                    match acc.last_mut() {
                        Some((lc, lv)) if *lc == coord => *lv += v,
                        _ => acc.push((coord, v)),
                    }
                }
                for (coord, v) in acc {
                    if v != 0.0 {
                        coeffs.push((coord, r, c, v));
                    }
                }
            }
        }
        ConditionBlock {
            label: label.to_string(),
            size,
            constant,
            coeffs,
        }
    }

    /// Evaluates S_j at a concrete y vector.
    pub fn evaluate(&self, y: &[f64]) -> SymMatrix {
        let mut s = self.constant.clone();
        s.scale(-1.0);
        for &(coord, r, c, v) in &self.coeffs {
            s.add_to(r, c, v * y[coord]);
        }
        s
    }
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

const PERM3: [([usize; 3], f64); 6] = [
    ([0, 1, 2], 1.0),
    ([1, 2, 0], 1.0),
    ([2, 0, 1], 1.0),
    ([0, 2, 1], -1.0),
    ([1, 0, 2], -1.0),
    ([2, 1, 0], -1.0),
];

/// Builds the positivity blocks for the requested condition set. The block
/// order is: gamma, its complement I - gamma (the box split), P, Q, G and
/// optionally T1, T2.
pub fn assemble_conditions(d: usize, _n_elec: usize, conds: ConditionSet) -> Vec<ConditionBlock> {
    let layout = YLayout::new(d);
    let map = &layout.map;
    let np = map.len();
    let mut blocks = Vec::new();

    blocks.push(ConditionBlock::from_entries("gamma", d, |a, b| {
        let mut e = AffineEntry::default();
        e.gamma(&layout, a, b, 1.0);
        e
    }));

    blocks.push(ConditionBlock::from_entries("gamma-complement", d, |a, b| {
        let mut e = AffineEntry {
            constant: delta(a, b),
            terms: Vec::new(),
        };
        e.gamma(&layout, a, b, -1.0);
        e
    }));

    blocks.push(ConditionBlock::from_entries("P", np, |p, q| {
        let mut e = AffineEntry::default();
        let (c, scale) = layout.pair_coord(p, q);
        e.terms.push((c, scale));
        e
    }));

    blocks.push(ConditionBlock::from_entries("Q", np, |p, q| {
        let (i, j) = map.pair(p);
        let (ip, jp) = map.pair(q);
        let mut e = AffineEntry {
            constant: delta(i, ip) * delta(j, jp) - delta(i, jp) * delta(j, ip),
            terms: Vec::new(),
        };
        if i == ip {
            e.gamma(&layout, j, jp, -1.0);
        }
        if j == jp {
            e.gamma(&layout, i, ip, -1.0);
        }
        if i == jp {
            e.gamma(&layout, j, ip, 1.0);
        }
        if j == ip {
            e.gamma(&layout, i, jp, 1.0);
        }
        e.tensor(&layout, i, j, ip, jp, 1.0);
        e
    }));

    blocks.push(ConditionBlock::from_entries("G", d * d, |r, c| {
        let (i, j) = (r / d, r % d);
        let (ip, jp) = (c / d, c % d);
        let mut e = AffineEntry::default();
        if j == jp {
            e.gamma(&layout, i, ip, 1.0);
        }
        e.tensor(&layout, i, jp, ip, j, -1.0);
        e
    }));

    if conds.t1 {
        let triples: Vec<(usize, usize, usize)> = (0..d)
            .flat_map(|i| {
                (i + 1..d).flat_map(move |j| (j + 1..d).map(move |k| (i, j, k)))
            })
            .collect();
        let n_t1 = triples.len();
        debug_assert_eq!(n_t1, d * (d - 1) * (d - 2) / 6);
        blocks.push(ConditionBlock::from_entries("T1", n_t1, |r, c| {
            let t = [triples[r].0, triples[r].1, triples[r].2];
            let tp = [triples[c].0, triples[c].1, triples[c].2];
            let mut e = AffineEntry::default();
            for (pr, sr) in PERM3 {
                let (i, j, k) = (t[pr[0]], t[pr[1]], t[pr[2]]);
                for (pc, sc) in PERM3 {
                    let (ip, jp, kp) = (tp[pc[0]], tp[pc[1]], tp[pc[2]]);
                    let s = sr * sc;
                    e.constant += s / 6.0 * delta(i, ip) * delta(j, jp) * delta(k, kp);
                    if i == ip && j == jp {
                        e.gamma(&layout, k, kp, -0.5 * s);
                    }
                    if i == ip {
                        e.tensor(&layout, j, k, jp, kp, 0.25 * s);
                    }
                }
            }
            e
        }));
    }

    if conds.t2 {
        let n_t2 = d * np;
        blocks.push(ConditionBlock::from_entries("T2", n_t2, |r, c| {
            let (i, pr_pair) = (r / np, r % np);
            let (ip, pc_pair) = (c / np, c % np);
            let (j0, k0) = map.pair(pr_pair);
            let (jp0, kp0) = map.pair(pc_pair);
            let mut e = AffineEntry::default();
            for (swap_r, sr) in [(false, 1.0), (true, -1.0)] {
                let (j, k) = if swap_r { (k0, j0) } else { (j0, k0) };
                for (swap_c, sc) in [(false, 1.0), (true, -1.0)] {
                    let (jp, kp) = if swap_c { (kp0, jp0) } else { (jp0, kp0) };
                    let s: f64 = sr * sc;
                    if j == jp && k == kp {
                        e.gamma(&layout, i, ip, 0.5 * s);
                    }
                    if i == ip {
                        e.tensor(&layout, jp, kp, j, k, 0.25 * s);
                    }
                    if j == jp {
                        e.tensor(&layout, i, kp, ip, k, -s);
                    }
                }
            }
            e
        }));
    }

    blocks
}

/// One linear equality in y.
#[derive(Clone, Debug)]
pub struct EqualityRow {
    pub label: String,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl EqualityRow {
    pub fn evaluate(&self, y: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(c, v)| v * y[c]).sum()
    }
}

/// Trace and partial-trace equalities: tr(gamma) = N, tr(pair Gamma) =
/// N(N-1)/2, and one row per unordered (i,j) enforcing
/// sum_k Gamma_{ik,jk} = (N-1) gamma_{ij}. That factor follows from the
/// operator ordering of the two-body density; the representable-point tests
/// pin it down.
pub fn assemble_equalities(d: usize, n_elec: usize) -> Vec<EqualityRow> {
    let layout = YLayout::new(d);
    let n = n_elec as f64;
    let mut rows = Vec::new();

    let mut tr_gamma = Vec::new();
    for a in 0..d {
        tr_gamma.push((layout.gamma_coord(a, a).0, 1.0));
    }
    rows.push(EqualityRow {
        label: "tr-gamma".into(),
        coeffs: tr_gamma,
        rhs: n,
    });

    let mut tr_pair = Vec::new();
    for p in 0..layout.map.len() {
        tr_pair.push((layout.pair_coord(p, p).0, 1.0));
    }
    rows.push(EqualityRow {
        label: "tr-pair".into(),
        coeffs: tr_pair,
        rhs: n * (n - 1.0) / 2.0,
    });

    for i in 0..d {
        for j in i..d {
            let mut e = AffineEntry::default();
            for k in 0..d {
                e.tensor(&layout, i, k, j, k, 1.0);
            }
            e.gamma(&layout, i, j, -(n - 1.0));
            let mut merged = e.terms;
            merged.sort_by_key(|&(c, _)| c);
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for (c, v) in merged {
                match acc.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => acc.push((c, v)),
                }
            }
            acc.retain(|&(_, v)| v != 0.0);
            rows.push(EqualityRow {
                label: format!("partial-trace-{i}-{j}"),
                coeffs: acc,
                rhs: 0.0,
            });
        }
    }
    rows
}

/// The objective vector b with b'y equal to the energy for every admissible
/// y: svec(T) on the gamma part and the anti-symmetrized two-electron fold
/// on the pair part.
pub fn energy_vector(data: &IntegralData) -> Vec<f64> {
    let d = data.d();
    let map = PairIndexMap::new(d);
    let mut b = svec(data.t());
    let w = SymMatrix::from_fn(map.len(), |p, q| {
        let (i, j) = map.pair(p);
        let (k, l) = map.pair(q);
        data.v(i, j, k, l) - data.v(j, i, k, l) - data.v(i, j, l, k) + data.v(j, i, l, k)
    });
    b.extend(svec(&w));
    b
}

/// Assembles the full variational problem in the solver's primal standard
/// form: one PSD block per condition (gamma box in split form), a free
/// vector block for the equality multipliers, one constraint row per
/// admissible y coordinate and the energy objective as the right-hand side.
///
/// Coordinates that mix the orbital sectors detected from the integral
/// sparsity cannot be nonzero at a sector-symmetric optimum and carry zero
/// objective, so their rows are dropped: the bound is unchanged while the
/// dual optimal face loses the artificial degeneracy those coordinates
/// would create. For generic integrals there is a single sector and the
/// full coordinate set is kept.
pub fn build_sdp(data: &IntegralData, conds: ConditionSet) -> Result<SdpProblem> {
    let d = data.d();
    if d % 2 != 0 {
        return Err(Error::InvalidParam(format!(
            "spin-orbital count must be even, got {d}"
        )));
    }
    let layout = YLayout::new(d);
    let m_full = layout.m();

    let blocks = assemble_conditions(d, data.n_elec(), conds);
    let equalities_full = assemble_equalities(d, data.n_elec());
    let sectors = spin::orbital_sectors(data);
    let b_full = energy_vector(data);

    // admissible-coordinate remap (identity when one sector)
    let mut coord_map: Vec<Option<usize>> = Vec::with_capacity(m_full);
    let mut kept = 0usize;
    for c in 0..m_full {
        if spin::admissible(c, &layout, &sectors) {
            coord_map.push(Some(kept));
            kept += 1;
        } else {
            debug_assert_eq!(b_full[c], 0.0, "forbidden coordinate carries objective");
            coord_map.push(None);
        }
    }
    let m = kept;
    let equalities: Vec<&EqualityRow> = equalities_full
        .iter()
        .filter(|row| row.coeffs.iter().any(|&(c, _)| coord_map[c].is_some()) || row.rhs != 0.0)
        .collect();

    let mut kinds: Vec<BlockKind> = blocks.iter().map(|b| BlockKind::Psd(b.size)).collect();
    let free_block = kinds.len();
    kinds.push(BlockKind::Free(equalities.len()));
    let cone = ConeSpec::new(kinds);

    let mut builder = OperatorBuilder::new(&cone, m);
    for (j, block) in blocks.iter().enumerate() {
        for &(coord, r, c, v) in &block.coeffs {
            if let Some(p) = coord_map[coord] {
                builder.add_matrix_entry(p, j, r, c, v);
            }
        }
    }
    for (e, row) in equalities.iter().enumerate() {
        for &(coord, v) in &row.coeffs {
            if let Some(p) = coord_map[coord] {
                builder.add_vector_entry(p, free_block, e, v);
            }
        }
    }
    for (c, v) in b_full.into_iter().enumerate() {
        if let Some(p) = coord_map[c] {
            builder.set_rhs(p, v);
        }
    }
    let operator = builder.build();

    let mut cost = SymBlockElement::zeros(&cone);
    for (j, block) in blocks.iter().enumerate() {
        cost.set_block_matrix(j, &block.constant);
    }
    {
        let span = cone.span(free_block);
        let coords = cost.coords_mut();
        for (e, row) in equalities.iter().enumerate() {
            coords[span.start + e] = row.rhs;
        }
    }

    let mut problem = SdpProblem::new(cone, operator, cost);
    for (j, block) in blocks.iter().enumerate() {
        problem.block_info[j].label = block.label.clone();
        problem.block_info[j].detected =
            Some(spin::admissible_partition(block, &layout, &sectors));
    }
    problem.block_info[free_block].label = "equalities".into();
    Ok(problem)
}
