//! Eigendecomposition of the estimated matrices and the signal/noise
//! subspace split.
//!
//! The full Hermitian eigendecomposition is delegated to `faer`, pinned to
//! its sequential code path: the desk-scale matrices decompose in seconds
//! either way, and a fixed execution plan keeps the whole pipeline
//! bit-reproducible across thread counts.
//!
//! For the second-order covariance (positive semidefinite) eigenvalues are
//! ranked by signed value. The fourth-order cumulant matrix is indefinite —
//! signal directions can carry negative eigenvalues (a constant-modulus path
//! has strictly negative fourth-order cumulant) — so there the split ranks by
//! magnitude; ranking by signed value would push negative signal directions
//! into the noise subspace and break the estimator.

use dyn_stack::{MemBuffer, MemStack};
use faer::diag::Diag;
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::{c64, Mat, Par};

use crate::cumulant::CumulantMatrix;
use crate::error::{Error, Result};
use crate::mat::ColMat;

/// Statistical order of the matrix being decomposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatOrder {
    /// Covariance matrix: signal subspace dimension P.
    Second,
    /// Trispectrum matrix: signal subspace dimension P².
    Fourth,
}

impl StatOrder {
    pub fn signal_dim(&self, paths: usize) -> usize {
        match self {
            StatOrder::Second => paths,
            StatOrder::Fourth => paths * paths,
        }
    }
}

/// Maximum relative Frobenius asymmetry accepted by [`eigensplit`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Signal/noise subspace split of a Hermitian estimate.
#[derive(Debug, Clone)]
pub struct EigenSplit {
    eigenvalues: Vec<f64>,
    signal_basis: ColMat,
    noise_basis: ColMat,
    signal_dim: usize,
    order: StatOrder,
}

impl EigenSplit {
    /// Eigenvalues in split order (signal block first). Ranking is by signed
    /// value for second-order input and by magnitude for fourth-order input.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal columns spanning the signal subspace (dim × signal_dim).
    pub fn signal_basis(&self) -> &ColMat {
        &self.signal_basis
    }

    /// Orthonormal columns spanning the noise subspace (dim × (dim - signal_dim)).
    pub fn noise_basis(&self) -> &ColMat {
        &self.noise_basis
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn order(&self) -> StatOrder {
        self.order
    }
}

/// Full Hermitian eigendecomposition of the estimate, split into signal and
/// noise subspaces for a known path count `paths`.
pub fn eigensplit(matrix: &CumulantMatrix, paths: usize, order: StatOrder) -> Result<EigenSplit> {
    let dim = matrix.dim();
    if paths == 0 {
        return Err(Error::SignalSubspaceTooLarge {
            signal_dim: 0,
            paths,
            dim,
        });
    }
    let signal_dim = order.signal_dim(paths);
    if signal_dim >= dim {
        return Err(Error::SignalSubspaceTooLarge {
            signal_dim,
            paths,
            dim,
        });
    }
    let residual = matrix.hermitian_residual();
    if residual > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian {
            residual,
            tolerance: HERMITIAN_TOLERANCE,
        });
    }

    let a = Mat::<c64>::from_fn(dim, dim, |i, j| matrix.get(i, j));
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();

    let mut idx: Vec<usize> = (0..dim).collect();
    match order {
        // faer returns nondecreasing eigenvalues; stable sorts keep the
        // permutation deterministic under ties.
        StatOrder::Second => idx.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re)),
        StatOrder::Fourth => idx.sort_by(|&a, &b| s[b].re.abs().total_cmp(&s[a].re.abs())),
    }

    let eigenvalues: Vec<f64> = idx.iter().map(|&k| s[k].re).collect();
    let noise_dim = dim - signal_dim;
    let mut signal_basis = ColMat::zeros(dim, signal_dim);
    let mut noise_basis = ColMat::zeros(dim, noise_dim);
    for (pos, &k) in idx.iter().enumerate() {
        let dst = if pos < signal_dim {
            signal_basis.col_mut(pos)
        } else {
            noise_basis.col_mut(pos - signal_dim)
        };
        for (i, v) in dst.iter_mut().enumerate() {
            *v = u[(i, k)];
        }
    }

    Ok(EigenSplit {
        eigenvalues,
        signal_basis,
        noise_basis,
        signal_dim,
        order,
    })
}
