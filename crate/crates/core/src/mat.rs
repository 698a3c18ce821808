//! Minimal dense complex matrix storage.
//!
//! Subspace bases are tall matrices whose columns are accessed as contiguous
//! slices during pseudo-spectrum evaluation, so storage is column-major.

use num_complex::Complex64;

/// Column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ColMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    /// Build from a function of (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            let col = m.col_mut(j);
            for (i, v) in col.iter_mut().enumerate() {
                *v = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.rows + i]
    }
}

/// Hermitian inner product `a^H b`.
pub fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::ZERO;
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

/// Squared Euclidean norm.
pub fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn col_major_layout() {
        let m = ColMat::from_fn(3, 2, |i, j| Complex64::new(i as f64, j as f64));
        assert_eq!(m.col(1)[2], Complex64::new(2.0, 1.0));
        assert_eq!(m.get(0, 1), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn hdot_conjugates_left() {
        let a = [Complex64::new(0.0, 1.0)];
        let b = [Complex64::new(0.0, 1.0)];
        assert_eq!(hdot(&a, &b), Complex64::new(1.0, 0.0));
    }
}
