//! Square band matrices and a banded LDLᵀ solver.
//!
//! Storage layout: a matrix of order `n` with half-bandwidth `p` keeps its
//! `2p + 1` diagonals as arrays of length `n`, with
//! `bands[p + k][i] = A[i][i + k]` for `k ∈ [−p, p]`. Slots whose column
//! index falls outside `0..n` are kept at zero.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite: pivot {pivot} = {value}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    p: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self { n, p, bands: vec![vec![0.0; n]; 2 * p + 1] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self { n: d.len(), p: 0, bands: vec![d.to_vec()] }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.p
    }

    /// The diagonal at offset `k` (`A[i][i+k]` indexed by `i`).
    pub fn band(&self, k: isize) -> &[f64] {
        &self.bands[(self.p as isize + k) as usize]
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) <= self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.bands[(self.p as isize + j as isize - i as isize) as usize][i]
        } else {
            0.0
        }
    }

    /// Adds `v` to `A[i][j]`; panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j) && i < self.n && j < self.n, "({i}, {j}) outside band {}", self.p);
        let k = j as isize - i as isize;
        self.bands[(self.p as isize + k) as usize][i] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let p = self.p as isize;
        (0..self.n)
            .map(|i| {
                let mut acc = 0.0;
                for k in -p..=p {
                    let j = i as isize + k;
                    if j >= 0 && (j as usize) < self.n {
                        acc += self.bands[(p + k) as usize][i] * x[j as usize];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matvec(&vec![1.0; self.n])
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| ((i + 1)..(i + self.p + 1).min(self.n)).all(|j| self.get(i, j) == self.get(j, i)))
    }

    fn widened(&self, p: usize) -> Self {
        if p == self.p {
            return self.clone();
        }
        let mut out = Self::zeros(self.n, p);
        for (b, band) in self.bands.iter().enumerate() {
            out.bands[p - self.p + b].copy_from_slice(band);
        }
        out
    }

    /// `self + a·other`.
    pub fn add_scaled(&self, other: &BandedMatrix, a: f64) -> Self {
        assert_eq!(self.n, other.n);
        let p = self.p.max(other.p);
        let mut out = self.widened(p);
        let shift = p - other.p;
        for (b, band) in other.bands.iter().enumerate() {
            for (o, v) in out.bands[shift + b].iter_mut().zip(band) {
                *o += a * v;
            }
        }
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.bands.iter_mut().flatten().for_each(|v| *v *= a);
        out
    }

    /// `diag(d)·self`.
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for band in &mut out.bands {
            for (v, s) in band.iter_mut().zip(d) {
                *v *= s;
            }
        }
        out
    }

    /// Band product; the result has half-bandwidth `p₁ + p₂`.
    pub fn mul(&self, other: &BandedMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n, self.p + other.p);
        for i in 0..n {
            for k in i.saturating_sub(self.p)..(i + self.p + 1).min(n) {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in k.saturating_sub(other.p)..(k + other.p + 1).min(n) {
                    out.add(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// LDLᵀ factorization of a symmetric positive definite band matrix.
    /// Only the lower band is read.
    pub fn factor_spd(&self) -> Result<BandedLdl, LinalgError> {
        let (n, p) = (self.n, self.p);
        // lower[i][m] = L[i][i - p + m] for m < p
        let mut lower = vec![vec![0.0; p]; n];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..i {
                let mut s = self.get(i, j);
                for k in j0.max(j.saturating_sub(p))..j {
                    s -= lower[i][k + p - i] * lower[j][k + p - j] * diag[k];
                }
                lower[i][j + p - i] = s / diag[j];
            }
            let mut d = self.get(i, i);
            for k in j0..i {
                let l = lower[i][k + p - i];
                d -= l * l * diag[k];
            }
            if !(d > 0.0 && d.is_finite()) {
                return Err(LinalgError::NotPositiveDefinite { pivot: i, value: d });
            }
            diag[i] = d;
        }
        Ok(BandedLdl { p, lower, diag })
    }

    pub fn solve_spd(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.factor_spd()?.solve(rhs)
    }
}

#[derive(Debug, Clone)]
pub struct BandedLdl {
    p: usize,
    lower: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

impl BandedLdl {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.diag.len();
        if rhs.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let p = self.p;
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in i.saturating_sub(p)..i {
                y[i] -= self.lower[i][k + p - i] * y[k];
            }
        }
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            for j in (i + 1)..(i + p + 1).min(n) {
                y[i] -= self.lower[j][i + p - j] * y[j];
            }
        }
        Ok(y)
    }
}

/// `Σ xᵢyᵢ`.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| dot(row, x)).collect()
    }

    fn laplacian(n: usize) -> BandedMatrix {
        let mut a = BandedMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
                a.add(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn tridiagonal_solve_matches_known_solution() {
        // [2 -1 0 0; -1 2 -1 0; 0 -1 2 -1; 0 0 -1 2] x = [1 0 0 1] → x = 1
        let x = laplacian(4).solve_spd(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn storage_layout() {
        let a = laplacian(3);
        assert_eq!(a.band(-1), &[0.0, -1.0, -1.0]);
        assert_eq!(a.band(0), &[2.0, 2.0, 2.0]);
        assert_eq!(a.band(1), &[-1.0, -1.0, 0.0]);
        assert_eq!(a.get(0, 2), 0.0);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = laplacian(5).scaled(-1.0);
        assert!(matches!(a.factor_spd(), Err(LinalgError::NotPositiveDefinite { pivot: 0, .. })));
    }

    #[test]
    fn product_widens_band() {
        let a = laplacian(6);
        let b = a.mul(&a);
        assert_eq!(b.half_bandwidth(), 2);
        let dense = a.to_dense();
        for i in 0..6 {
            for j in 0..6 {
                let expected: f64 = (0..6).map(|k| dense[i][k] * dense[k][j]).sum();
                assert_eq!(b.get(i, j), expected);
            }
        }
    }

    proptest! {
        #[test]
        fn pentadiagonal_spd_solve(
            n in 3usize..40,
            off in proptest::collection::vec(-1.0f64..1.0, 80),
            x in proptest::collection::vec(-5.0f64..5.0, 40),
        ) {
            // diagonally dominant symmetric pentadiagonal matrix
            let mut a = BandedMatrix::zeros(n, 2);
            for i in 0..n {
                a.add(i, i, 5.0);
                for k in 1..=2 {
                    if i + k < n {
                        let v = off[(2 * i + k) % off.len()];
                        a.add(i, i + k, v);
                        a.add(i + k, i, v);
                    }
                }
            }
            let x = &x[..n];
            let b = a.matvec(x);
            prop_assert_eq!(b.clone(), dense_matvec(&a.to_dense(), x));
            let y = a.solve_spd(&b).unwrap();
            for (u, v) in y.iter().zip(x) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
