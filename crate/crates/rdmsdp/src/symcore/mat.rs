use crate::{Error, Result};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;
pub const FRAC_1_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Dense row-major matrix. Used for eigenvector bases and scratch products;
/// no aliasing tricks, just a flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// C = A * B.
    pub fn matmul(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.rows);
        let mut c = Mat::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            let crow = c.row_mut(i);
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = b.row(k);
                for (cj, &bkj) in crow.iter_mut().zip(brow.iter()) {
                    *cj += aik * bkj;
                }
            }
        }
        c
    }

    /// C = A^T * B.
    pub fn tr_matmul(&self, b: &Mat) -> Mat {
        assert_eq!(self.rows, b.rows);
        let mut c = Mat::zeros(self.cols, b.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = b.row(k);
            for (i, &aki) in arow.iter().enumerate() {
                if aki == 0.0 {
                    continue;
                }
                let crow = c.row_mut(i);
                for (cj, &bkj) in crow.iter_mut().zip(brow.iter()) {
                    *cj += aki * bkj;
                }
            }
        }
        c
    }

    /// C = A * B^T.
    pub fn matmul_tr(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.cols);
        let mut c = Mat::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let arow = self.row(i);
            let crow = c.row_mut(i);
            for (j, cij) in crow.iter_mut().enumerate() {
                let brow = b.row(j);
                let mut acc = 0.0;
                for (a, bb) in arow.iter().zip(brow.iter()) {
                    acc += a * bb;
                }
                *cij = acc;
            }
        }
        c
    }

    /// y = A * x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for (a, b) in self.row(i).iter().zip(x.iter()) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

/// Dense symmetric matrix with full storage. Writes through [`SymMatrix::set`]
/// keep both triangles identical, so reads of (i,j) and (j,i) always agree.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = SymMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = v;
        }
        m
    }

    /// Builds from an arbitrary generator, symmetrizing via the lower triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entry (i,j) and its mirror (j,i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.set(i, j, self.get(i, j) + v);
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    pub fn axpy(&mut self, a: f64, other: &SymMatrix) {
        assert_eq!(self.n, other.n);
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += a * y;
        }
    }

    pub fn frob_dot(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_dot(self).sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn as_mat(&self) -> Mat {
        Mat::from_rows(self.n, self.n, self.data.clone())
    }

    /// Symmetrized (M + M^T)/2 of a general square matrix.
    pub fn from_mat_symmetrized(m: &Mat) -> Self {
        assert_eq!(m.rows(), m.cols());
        SymMatrix::from_fn(m.rows(), |i, j| 0.5 * (m.get(i, j) + m.get(j, i)))
    }
}

/// Length of the symmetric vectorization of an n-by-n matrix.
#[inline]
pub fn svec_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Side length n with n(n+1)/2 == len, if len is a triangular number.
pub fn tri_side(len: usize) -> Option<usize> {
    let n = ((((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1)) / 2;
    for cand in n.saturating_sub(1)..=n + 1 {
        if cand * (cand + 1) / 2 == len {
            return Some(cand);
        }
    }
    None
}

/// Position of upper-triangle entry (i <= j) in svec ordering, which walks the
/// upper triangle column by column: (0,0), (0,1), (1,1), (0,2), ...
#[inline]
pub fn svec_offset(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Inverse of [`svec_offset`]: the (i, j) pair with i <= j at offset c.
pub fn svec_coord_split(c: usize) -> (usize, usize) {
    let mut j = (((8 * c + 9) as f64).sqrt() as usize + 1) / 2;
    while j * (j + 1) / 2 > c {
        j -= 1;
    }
    while (j + 1) * (j + 2) / 2 <= c {
        j += 1;
    }
    (c - j * (j + 1) / 2, j)
}

/// Vectorizes a symmetric matrix isometrically: off-diagonal entries are
/// scaled by sqrt(2) so that dot products of svec vectors equal Frobenius
/// inner products of the matrices.
pub fn svec(u: &SymMatrix) -> Vec<f64> {
    let n = u.dim();
    let mut v = vec![0.0; svec_dim(n)];
    svec_into(u, &mut v);
    v
}

pub(crate) fn svec_into(u: &SymMatrix, out: &mut [f64]) {
    let n = u.dim();
    debug_assert_eq!(out.len(), svec_dim(n));
    let mut p = 0;
    for j in 0..n {
        for i in 0..j {
            out[p] = SQRT2 * u.get(i, j);
            p += 1;
        }
        out[p] = u.get(j, j);
        p += 1;
    }
}

/// Inverse of [`svec`]. Fails if the length is not a triangular number.
pub fn smat(v: &[f64]) -> Result<SymMatrix> {
    let n = tri_side(v.len())
        .ok_or_else(|| Error::Shape(format!("svec length {} is not triangular", v.len())))?;
    let mut u = SymMatrix::zeros(n);
    let mut p = 0;
    for j in 0..n {
        for i in 0..j {
            u.set(i, j, FRAC_1_SQRT2 * v[p]);
            p += 1;
        }
        u.set(j, j, v[p]);
        p += 1;
    }
    Ok(u)
}
