//! Symmetric positive-definite banded matrices.
//!
//! Only the lower band is stored: row `i` keeps `A[i][i-k]` for
//! `k = 0..=bandwidth` at offset `i * (bandwidth + 1) + k`. Entries that
//! would fall left of column 0 are unused and kept at zero.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct BandedSpd {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedSpd {
    pub(crate) fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        BandedSpd {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, k: usize) -> usize {
        i * (self.bw + 1) + k
    }

    /// Adds `v` to `A[i][j]` (and its mirror) for `j <= i`.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.bw);
        let at = self.idx(i, i - j);
        self.band[at] += v;
    }

    #[cfg(test)]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.band[self.idx(i, i - j)]
        }
    }

    pub(crate) fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.band[self.idx(i, 0)]).collect()
    }

    pub(crate) fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let base = self.idx(i, 0);
            y[i] += self.band[base] * x[i];
            for k in 1..=self.bw.min(i) {
                let a = self.band[base + k];
                let j = i - k;
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
        y
    }

    /// Banded Cholesky factorization `A = L Lᵀ`, O(n·bw²).
    pub(crate) fn cholesky(&self) -> Result<BandedCholesky> {
        let bw = self.bw;
        let mut l = self.band.clone();
        for i in 0..self.n {
            let row = i * (bw + 1);
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let rj = j * (bw + 1);
                // sum_{m = lo..j} L[i][m] * L[j][m]
                let start = lo.max(j.saturating_sub(bw));
                let mut s = l[row + (i - j)];
                for m in start..j {
                    s -= l[row + (i - m)] * l[rj + (j - m)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::domain(format!(
                            "system matrix is not positive definite at row {i}"
                        )));
                    }
                    l[row] = s.sqrt();
                } else {
                    l[row + (i - j)] = s / l[rj];
                }
            }
        }
        Ok(BandedCholesky { n: self.n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut y = rhs.to_vec();
        for i in 0..self.n {
            let row = i * w;
            let mut s = y[i];
            for k in 1..=self.bw.min(i) {
                s -= self.l[row + k] * y[i - k];
            }
            y[i] = s / self.l[row];
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for k in 1..=self.bw.min(self.n - 1 - i) {
                s -= self.l[(i + k) * w + k] * y[i + k];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn relative_residual(a: &BandedSpd, x: &[f64], b: &[f64], b_norm: f64) -> (Vec<f64>, f64) {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let rel = norm2(&r) / b_norm;
    (r, rel)
}

/// Direct solve with iterative refinement until the relative residual
/// drops to `tol`. Each refinement sweep counts as one iteration.
pub(crate) fn solve_direct(a: &BandedSpd, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; a.size()]);
    }
    let chol = a.cholesky()?;
    let mut x = chol.solve(b);
    let (mut r, mut rel) = relative_residual(a, &x, b, b_norm);
    let mut iterations = 1;
    while rel > tol {
        if iterations >= max_iter {
            return Err(Error::Convergence {
                iterations,
                residual: rel,
            });
        }
        let dx = chol.solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
        let (r_new, rel_new) = relative_residual(a, &candidate, b, b_norm);
        iterations += 1;
        if rel_new >= rel {
            // refinement has stalled at rounding level
            return Err(Error::Convergence {
                iterations,
                residual: rel,
            });
        }
        x = candidate;
        r = r_new;
        rel = rel_new;
    }
    Ok(x)
}

/// Jacobi-preconditioned conjugate gradients.
pub(crate) fn solve_pcg(a: &BandedSpd, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.size();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut rel = 1.0;
    for _ in 0..max_iter {
        let ap = a.mul_vec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        rel = norm2(&r) / b_norm;
        if rel <= tol {
            // confirm against the true residual, the recurrence drifts
            let (_, true_rel) = relative_residual(a, &x, b, b_norm);
            if true_rel <= tol {
                return Ok(x);
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual: rel,
    })
}
