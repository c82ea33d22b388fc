//! Dense Cholesky factorizations for the small matrices used by the
//! Gaussian fingerprint model and Kriging.
//!
//! Matrices are row-major `Vec`s of size `n * n`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Lower-triangular factor `L` of a Hermitian positive-definite matrix,
/// `A = L L^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianCholesky {
    n: usize,
    lower: Vec<Complex64>,
}

impl HermitianCholesky {
    pub fn factor(a: &[Complex64], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::arg(format!(
                "matrix has {} entries, expected {n}x{n}",
                a.len()
            )));
        }
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = a[j * n + j].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Numeric(format!(
                    "matrix is not positive definite (pivot {j} = {d})"
                )));
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `ln det A`.
    pub fn ln_det(&self) -> f64 {
        2.0 * (0..self.n)
            .map(|i| self.lower[i * self.n + i].re.ln())
            .sum::<f64>()
    }

    /// Solves `L z = b` by forward substitution.
    pub fn forward(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * z[k];
            }
            z[i] = s / self.lower[i * n + i].re;
        }
        z
    }

    /// `b^H A^{-1} b`, computed as `|L^{-1} b|^2`.
    pub fn quad_form(&self, b: &[Complex64]) -> f64 {
        self.forward(b).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i].conj() * x[k];
            }
            x[i] = s / self.lower[i * n + i].re;
        }
        x
    }
}

/// Lower-triangular factor of a real symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::arg(format!(
                "matrix has {} entries, expected {n}x{n}",
                a.len()
            )));
        }
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Numeric(format!(
                    "matrix is not positive definite (pivot {j} = {d})"
                )));
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn ln_det(&self) -> f64 {
        2.0 * (0..self.n)
            .map(|i| self.lower[i * self.n + i].ln())
            .sum::<f64>()
    }

    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * z[k];
            }
            z[i] = s / self.lower[i * n + i];
        }
        z
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_solve_and_det() {
        // A = [[4, 1+i], [1-i, 3]], det = 12 - 2 = 10
        let a = vec![c(4.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)];
        let ch = HermitianCholesky::factor(&a, 2).unwrap();
        assert!((ch.ln_det() - 10f64.ln()).abs() < 1e-12);
        let b = vec![c(1.0, 2.0), c(-1.0, 0.5)];
        let x = ch.solve(&b);
        for i in 0..2 {
            let r: Complex64 = (0..2).map(|k| a[i * 2 + k] * x[k]).sum();
            assert!((r - b[i]).norm() < 1e-12);
        }
        let q: f64 = b.iter().zip(&x).map(|(bi, xi)| (bi.conj() * xi).re).sum();
        assert!((ch.quad_form(&b) - q).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        assert!(Cholesky::factor(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
        assert!(HermitianCholesky::factor(&[c(0.0, 0.0)], 1).is_err());
    }

    #[test]
    fn real_solve() {
        let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let ch = Cholesky::factor(&a, 3).unwrap();
        let x = ch.solve(&[1.0, 0.0, 1.0]);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((ch.ln_det() - 4f64.ln()).abs() < 1e-12);
    }
}
