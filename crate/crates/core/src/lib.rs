//! Coherent wideband raypath separation in a double-array configuration.
//!
//! A vertical source array transmits to a vertical receiver array; the
//! received spectra form a (receiver, source, frequency) data cube in which
//! every propagation path appears as one steering direction over (emission
//! angle, reception angle, arrival time). This crate provides:
//!
//! - a multipath synthesizer with seeded white or colored Gaussian noise,
//! - 3D smoothing (sub-arrays × sub-bands) that decorrelates coherent paths,
//! - fourth-order cumulant (trispectrum) and covariance matrix estimation,
//! - MUSIC-type pseudo-spectra: the fourth-order double-array estimator and
//!   two second-order baselines, with peak extraction and truth matching,
//! - scenario configs, a binary cube format, and CSV/PGM grid exports.
//!
//! The hot paths (cumulant accumulation, grid evaluation) run data-parallel
//! via rayon when the default `parallel` feature is enabled and fall back to
//! the sequential reference implementations otherwise.

pub mod config;
pub mod cube_io;
pub mod cumulant;
pub mod error;
pub mod export;
pub mod geometry;
pub mod mat;
pub mod pipeline;
pub mod smoothing;
pub mod spectrum;
pub mod subspace;
pub mod synth;

pub use error::{Error, Result};
