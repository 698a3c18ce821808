//! Fourth-order cumulant (trispectrum) and second-order covariance estimation
//! from smoothing realizations.
//!
//! With `Y_r = X_r ⊗ conj(X_r)`, the trispectrum estimate is
//!
//! ```text
//! Ĉ = mean_r[Y_r Y_rᴴ] - mean_r[Y_r]·mean_r[Y_r]ᴴ - mean_r[X_r X_rᴴ] ⊗ conj(mean_r[X_r X_rᴴ])
//! ```
//!
//! All expectations are sample means over the realizations, and the result is
//! symmetrized after assembly. In expectation the trispectrum of Gaussian
//! noise (white or colored) vanishes, which is where the fourth-order
//! estimator gets its noise robustness.
//!
//! Accumulation is partitioned by output row with a fixed realization order,
//! so results are bit-identical across thread counts; the `deterministic`
//! option additionally switches to compensated (Kahan) summation, which keeps
//! more digits when many outer products of magnitude ~‖X‖⁴ are averaged.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::quadratic_steering_into;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Hermitian estimate: dimension L² for the fourth-order matrix, L for the
/// second-order covariance. Row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CumulantMatrix {
    pub fn from_data(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix data has {} entries for dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    /// Relative Frobenius asymmetry ‖A - Aᴴ‖_F / ‖A‖_F.
    pub fn hermitian_residual(&self) -> f64 {
        let mut asym = 0.0f64;
        let mut norm = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                norm += a.norm_sqr();
                asym += (a - self.get(j, i).conj()).norm_sqr();
            }
        }
        if norm == 0.0 {
            0.0
        } else {
            (asym / norm).sqrt()
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    fn symmetrize(&mut self) {
        for i in 0..self.dim {
            let d = self.data[i * self.dim + i];
            self.data[i * self.dim + i] = Complex64::new(d.re, 0.0);
            for j in i + 1..self.dim {
                let upper = self.data[i * self.dim + j];
                let lower = self.data[j * self.dim + i];
                let avg = 0.5 * (upper + lower.conj());
                self.data[i * self.dim + j] = avg;
                self.data[j * self.dim + i] = avg.conj();
            }
        }
    }
}

/// Accumulation controls shared by both estimators.
#[derive(Debug, Clone, Copy, Default)]
pub struct AccumulationOptions {
    /// Use compensated summation in the fixed realization order. Output is
    /// bit-reproducible across thread counts either way; this trades a
    /// constant factor of speed for summation accuracy.
    pub deterministic: bool,
}

#[derive(Clone, Copy)]
enum Exec {
    Serial,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Exec {
    fn auto() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Serial
        }
    }
}

fn validate(realizations: &[Vec<Complex64>]) -> Result<usize> {
    let first = realizations.first().ok_or(Error::EmptyRealizations)?;
    let len = first.len();
    if len == 0 {
        return Err(Error::RealizationLength {
            index: 0,
            got: 0,
            expected: 1,
        });
    }
    for (index, r) in realizations.iter().enumerate() {
        if r.len() != len {
            return Err(Error::RealizationLength {
                index,
                got: r.len(),
                expected: len,
            });
        }
    }
    Ok(len)
}

/// Row-partitioned map over a square matrix buffer.
fn for_each_row<F>(exec: Exec, out: &mut [Complex64], dim: usize, job: F)
where
    F: Fn(usize, &mut [Complex64]) + Sync + Send,
{
    match exec {
        Exec::Serial => {
            for (i, row) in out.chunks_mut(dim).enumerate() {
                job(i, row);
            }
        }
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            out.par_chunks_mut(dim)
                .enumerate()
                .for_each(|(i, row)| job(i, row));
        }
    }
}

/// Accumulate `row[j] += w · conj(col_source[j])` over realizations laid out
/// contiguously in `rows` (stride `dim`), in ascending realization order.
fn accumulate_row(
    row: &mut [Complex64],
    rows: &[Complex64],
    dim: usize,
    i: usize,
    count: usize,
    compensated: bool,
) {
    if compensated {
        let mut comp = vec![Complex64::ZERO; row.len()];
        for r in 0..count {
            let base = &rows[r * dim..(r + 1) * dim];
            let w = base[i];
            for (j, (acc, c)) in row.iter_mut().zip(comp.iter_mut()).enumerate() {
                kahan_add(acc, c, w * base[j].conj());
            }
        }
    } else {
        for r in 0..count {
            let base = &rows[r * dim..(r + 1) * dim];
            let w = base[i];
            for (j, acc) in row.iter_mut().enumerate() {
                *acc += w * base[j].conj();
            }
        }
    }
}

#[inline]
fn kahan_add(sum: &mut Complex64, comp: &mut Complex64, v: Complex64) {
    let y_re = v.re - comp.re;
    let t_re = sum.re + y_re;
    comp.re = (t_re - sum.re) - y_re;
    sum.re = t_re;
    let y_im = v.im - comp.im;
    let t_im = sum.im + y_im;
    comp.im = (t_im - sum.im) - y_im;
    sum.im = t_im;
}

/// Mean of outer products `mean_r[v_r v_rᴴ]` for vectors stored contiguously.
fn mean_outer(
    exec: Exec,
    vectors: &[Complex64],
    dim: usize,
    count: usize,
    compensated: bool,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; dim * dim];
    let inv = 1.0 / count as f64;
    for_each_row(exec, &mut out, dim, |i, row| {
        accumulate_row(row, vectors, dim, i, count, compensated);
        for z in row.iter_mut() {
            *z *= inv;
        }
    });
    out
}

fn mean_vector(vectors: &[Complex64], dim: usize, count: usize, compensated: bool) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; dim];
    let inv = 1.0 / count as f64;
    if compensated {
        let mut comp = vec![Complex64::ZERO; dim];
        for r in 0..count {
            let base = &vectors[r * dim..(r + 1) * dim];
            for (j, (acc, c)) in out.iter_mut().zip(comp.iter_mut()).enumerate() {
                kahan_add(acc, c, base[j]);
            }
        }
    } else {
        for r in 0..count {
            let base = &vectors[r * dim..(r + 1) * dim];
            for (acc, v) in out.iter_mut().zip(base) {
                *acc += v;
            }
        }
    }
    for z in &mut out {
        *z *= inv;
    }
    out
}

fn trispectrum_impl(
    realizations: &[Vec<Complex64>],
    opts: &AccumulationOptions,
    exec: Exec,
) -> Result<CumulantMatrix> {
    let l = validate(realizations)?;
    let r_count = realizations.len();
    let dim = l * l;
    let comp = opts.deterministic;

    // Quadratic extensions Y_r = X_r ⊗ conj(X_r), one row per realization.
    let mut y = vec![Complex64::ZERO; r_count * dim];
    for (r, x) in realizations.iter().enumerate() {
        quadratic_steering_into(&mut y[r * dim..(r + 1) * dim], x);
    }

    let flat_x: Vec<Complex64> = realizations.iter().flatten().copied().collect();
    let cov = mean_outer(exec, &flat_x, l, r_count, comp);
    let mean_y = mean_vector(&y, dim, r_count, comp);

    let mut data = mean_outer(exec, &y, dim, r_count, comp);
    for_each_row(exec, &mut data, dim, |i, row| {
        let (a, b) = (i / l, i % l);
        let my_i = mean_y[i];
        for (j, z) in row.iter_mut().enumerate() {
            let (c, d) = (j / l, j % l);
            *z -= my_i * mean_y[j].conj() + cov[a * l + c] * cov[b * l + d].conj();
        }
    });

    let mut out = CumulantMatrix { dim, data };
    out.symmetrize();
    Ok(out)
}

fn covariance_impl(
    realizations: &[Vec<Complex64>],
    opts: &AccumulationOptions,
    exec: Exec,
) -> Result<CumulantMatrix> {
    let l = validate(realizations)?;
    let flat_x: Vec<Complex64> = realizations.iter().flatten().copied().collect();
    let data = mean_outer(exec, &flat_x, l, realizations.len(), opts.deterministic);
    let mut out = CumulantMatrix { dim: l, data };
    out.symmetrize();
    Ok(out)
}

/// Estimate the fourth-order cumulant matrix (dimension L²) from realization
/// vectors of length L.
pub fn estimate_trispectrum(
    realizations: &[Vec<Complex64>],
    opts: &AccumulationOptions,
) -> Result<CumulantMatrix> {
    trispectrum_impl(realizations, opts, Exec::auto())
}

/// Sequential reference implementation of [`estimate_trispectrum`]; this is
/// the code path used when the `parallel` feature is disabled.
pub fn estimate_trispectrum_serial(
    realizations: &[Vec<Complex64>],
    opts: &AccumulationOptions,
) -> Result<CumulantMatrix> {
    trispectrum_impl(realizations, opts, Exec::Serial)
}

/// Estimate the second-order covariance `mean_r[X_r X_rᴴ]` (dimension L),
/// used by the second-order baseline estimators.
pub fn estimate_covariance(
    realizations: &[Vec<Complex64>],
    opts: &AccumulationOptions,
) -> Result<CumulantMatrix> {
    covariance_impl(realizations, opts, Exec::auto())
}

/// Sequential reference implementation of [`estimate_covariance`].
pub fn estimate_covariance_serial(
    realizations: &[Vec<Complex64>],
    opts: &AccumulationOptions,
) -> Result<CumulantMatrix> {
    covariance_impl(realizations, opts, Exec::Serial)
}
