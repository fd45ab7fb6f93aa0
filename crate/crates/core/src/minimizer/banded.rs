//! Symmetric positive definite band matrices and their Cholesky factor.

use crate::error::{HsError, Result};

/// Lower band storage: `band[i * (bw + 1) + d]` holds `A[i][i - d]`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub n: usize,
    pub bw: usize,
    band: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    /// Adds `v` to `A[i][j]` (and, implicitly, `A[j][i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        debug_assert!(d <= self.bw);
        self.band[hi * (self.bw + 1) + d] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            0.0
        } else {
            self.band[hi * (self.bw + 1) + d]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.band[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for d in 1..=self.bw.min(i) {
                let a = row[d];
                if a != 0.0 {
                    y[i] += a * x[i - d];
                    y[i - d] += a * x[i];
                }
            }
        }
        y
    }

    /// Max absolute row sum divided by `diag[i]`: a Gershgorin bound on the
    /// spectrum of `diag^{-1} A`.
    pub fn gershgorin_scaled(&self, diag: &[f64]) -> f64 {
        let mut rows = vec![0.0; self.n];
        let w = self.bw + 1;
        for i in 0..self.n {
            rows[i] += self.band[i * w].abs();
            for d in 1..=self.bw.min(i) {
                let a = self.band[i * w + d].abs();
                rows[i] += a;
                rows[i - d] += a;
            }
        }
        rows.iter().zip(diag).map(|(r, d)| r / d).fold(0.0, f64::max)
    }

    /// In-place Cholesky `A = L L^T`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let l = &mut self.band;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // L[i][j] = (A[i][j] - sum_k L[i][k] L[j][k]) / L[j][j]
                let mut sum = l[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if j == i {
                    if !(sum > 0.0) {
                        return Err(HsError::Consistency {
                            module: "minimizer",
                            msg: format!("band matrix not positive definite at row {i}"),
                        });
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(BandCholesky { m: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    m: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.m.n, self.m.bw);
        let w = bw + 1;
        let l = &self.m.band;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for d in 1..=bw.min(i) {
                s -= l[i * w + d] * y[i - d];
            }
            y[i] = s / l[i * w];
        }
        for i in (0..n).rev() {
            let v = y[i] / l[i * w];
            y[i] = v;
            for d in 1..=bw.min(i) {
                y[i - d] -= l[i * w + d] * v;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 50;
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 4.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let sol = a.cholesky().unwrap().solve(&b);
        for (u, v) in sol.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn solves_wide_band_system() {
        let (n, bw) = (40, 6);
        let mut a = BandMatrix::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 10.0);
            if i >= 1 {
                a.add(i, i - 1, -1.0);
            }
            if i >= bw {
                a.add(i, i - bw, -2.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let sol = a.clone().cholesky().unwrap().solve(&a.mul_vec(&x));
        for (u, v) in sol.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = BandMatrix::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_err());
    }
}
