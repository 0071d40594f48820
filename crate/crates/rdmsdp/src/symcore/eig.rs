use super::mat::{Mat, SymMatrix};
use crate::{Error, Result};

/// Spectral decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order. Indices `0..nonneg` carry the nonnegative eigenvalues
/// (exact zeros included), the rest are strictly negative.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    /// Orthogonal basis; column k is the eigenvector for `lambda[k]`.
    pub q: Mat,
    /// Eigenvalues, descending.
    pub lambda: Vec<f64>,
    nonneg: usize,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Indices of eigenvalues >= 0.
    pub fn alpha(&self) -> std::ops::Range<usize> {
        0..self.nonneg
    }

    /// Indices of strictly negative eigenvalues.
    pub fn alpha_bar(&self) -> std::ops::Range<usize> {
        self.nonneg..self.lambda.len()
    }

    pub fn nonneg_count(&self) -> usize {
        self.nonneg
    }

    /// Q diag(w) Q^T for an arbitrary weight vector.
    pub fn weighted_reconstruct(&self, w: &[f64]) -> SymMatrix {
        let n = self.dim();
        assert_eq!(w.len(), n);
        let mut acc = SymMatrix::zeros(n);
        for k in 0..n {
            let wk = w[k];
            if wk == 0.0 {
                continue;
            }
            for i in 0..n {
                let qi = self.q.get(i, k) * wk;
                if qi == 0.0 {
                    continue;
                }
                for j in 0..=i {
                    let v = acc.get(i, j) + qi * self.q.get(j, k);
                    acc.set(i, j, v);
                }
            }
        }
        acc
    }

    /// Q Lambda Q^T.
    pub fn reconstruct(&self) -> SymMatrix {
        self.weighted_reconstruct(&self.lambda.clone())
    }

    /// Projection onto the PSD cone: negative eigenvalues are dropped.
    pub fn project_psd(&self) -> SymMatrix {
        let w: Vec<f64> = self.lambda.iter().map(|&l| l.max(0.0)).collect();
        self.weighted_reconstruct(&w)
    }

    /// Projection onto {0 <= X <= I}: eigenvalues clipped to [0, 1].
    pub fn project_box01(&self) -> SymMatrix {
        let w: Vec<f64> = self.lambda.iter().map(|&l| l.clamp(0.0, 1.0)).collect();
        self.weighted_reconstruct(&w)
    }
}

/// Full symmetric eigendecomposition: Householder reduction to tridiagonal
/// form followed by implicitly shifted QL sweeps. The total sweep budget is
/// 40n; exceeding it reports a numerical fault.
pub fn spectral_decompose(z: &SymMatrix) -> Result<SpectralDecomp> {
    let n = z.dim();
    if n == 0 {
        return Ok(SpectralDecomp {
            q: Mat::zeros(0, 0),
            lambda: vec![],
            nonneg: 0,
        });
    }
    let mut v = z.as_mat();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut d, &mut e, &mut v, 40 * n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("eigenvalue is NaN"));
    let mut q = Mat::zeros(n, n);
    let mut lambda = vec![0.0; n];
    for (k, &src) in order.iter().enumerate() {
        lambda[k] = d[src];
        for i in 0..n {
            q.set(i, k, v.get(i, src));
        }
    }
    let nonneg = lambda.iter().take_while(|&&l| l >= 0.0).count();
    Ok(SpectralDecomp { q, lambda, nonneg })
}

/// Householder reduction to symmetric tridiagonal form, accumulating the
/// orthogonal transformations in `v`. On exit `d` holds the diagonal and
/// `e[1..]` the subdiagonal.
fn tred2(v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v.get(n - 1, j);
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
                v.set(j, i, 0.0);
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                let f = d[j];
                v.set(j, i, f);
                let mut g = e[j] + v.get(j, j) * f;
                for k in j + 1..i {
                    g += v.get(k, j) * d[k];
                    e[k] += v.get(k, j) * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    let val = v.get(k, j) - (f * e[k] + g * d[k]);
                    v.set(k, j, val);
                }
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v.set(n - 1, i, v.get(i, i));
        v.set(i, i, 1.0);
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                for k in 0..=i {
                    let val = v.get(k, j) - g * d[k];
                    v.set(k, j, val);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, 0.0);
        }
    }
    for j in 0..n {
        d[j] = v.get(n - 1, j);
        v.set(n - 1, j, 0.0);
    }
    v.set(n - 1, n - 1, 1.0);
    e[0] = 0.0;
}

/// Implicitly shifted QL iterations on a symmetric tridiagonal matrix,
/// accumulating the rotations in `v`.
fn tql2(d: &mut [f64], e: &mut [f64], v: &mut Mat, max_sweeps: usize) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    let mut sweeps = 0usize;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        loop {
            let mut m = l;
            while m < n - 1 {
                if e[m].abs() <= eps * tst1 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(Error::NumericalFault(format!(
                    "tridiagonal QL exceeded {max_sweeps} sweeps at eigenvalue {l} of {n}"
                )));
            }

            // implicit shift from the leading 2x2
            let g = d[l];
            let mut p = (d[l + 1] - g) / (2.0 * e[l]);
            let mut r = p.hypot(1.0);
            if p < 0.0 {
                r = -r;
            }
            d[l] = e[l] / (p + r);
            d[l + 1] = e[l] * (p + r);
            let dl1 = d[l + 1];
            let mut h = g - d[l];
            for item in d.iter_mut().take(n).skip(l + 2) {
                *item -= h;
            }
            f += h;

            // QL sweep
            p = d[m];
            let mut c = 1.0;
            let mut c2 = c;
            let mut c3 = c;
            let el1 = e[l + 1];
            let mut s = 0.0;
            let mut s2 = 0.0;
            for i in (l..m).rev() {
                c3 = c2;
                c2 = c;
                s2 = s;
                let g = c * e[i];
                h = c * p;
                r = p.hypot(e[i]);
                e[i + 1] = s * r;
                s = e[i] / r;
                c = p / r;
                p = c * d[i] - s * g;
                d[i + 1] = h + s * (c * g + s * d[i]);
                for k in 0..n {
                    h = v.get(k, i + 1);
                    v.set(k, i + 1, s * v.get(k, i) + c * h);
                    v.set(k, i, c * v.get(k, i) - s * h);
                }
            }
            p = -s * s2 * c3 * el1 * e[l] / dl1;
            e[l] = s * p;
            d[l] = c * p;

            if e[l].abs() <= eps * tst1 {
                break;
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
