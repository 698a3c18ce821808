//! Double-array configuration, raypath parameterization, and steering vectors.
//!
//! A vertical source array (`N` elements) transmits to a vertical receiver
//! array (`M` elements); each raypath is parameterized by its emission angle,
//! reception angle and arrival time. Received spectra over (receiver, source,
//! frequency) are vectorized receiver-innermost, source-middle,
//! frequency-outermost, and every steering vector in this crate follows that
//! same layout.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Inter-element propagation delay `d·sin(θ)/c` for a plane wave crossing a
/// uniform line array at `theta_deg` from broadside. Odd in the angle.
pub fn delay(theta_deg: f64, spacing_m: f64, sound_speed_mps: f64) -> f64 {
    spacing_m * theta_deg.to_radians().sin() / sound_speed_mps
}

/// Uniform double-array configuration and processing band.
///
/// Reference element indices are 1-based (`1..=M`, `1..=N`) and default to the
/// array midpoint, rounding down. The source spectrum weights every frequency
/// block of the steering vectors and defaults to a flat unit spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    num_receivers: usize,
    num_sources: usize,
    spacing_m: f64,
    ref_receiver: usize,
    ref_source: usize,
    sound_speed_mps: f64,
    frequencies_hz: Vec<f64>,
    source_spectrum: Vec<Complex64>,
}

impl ArrayGeometry {
    pub fn new(
        num_receivers: usize,
        num_sources: usize,
        spacing_m: f64,
        sound_speed_mps: f64,
        frequencies_hz: Vec<f64>,
    ) -> Result<Self> {
        if num_receivers == 0 || num_sources == 0 {
            return Err(Error::InvalidGeometry(
                "element counts must be at least 1".into(),
            ));
        }
        if !(spacing_m > 0.0) || !spacing_m.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be positive, got {spacing_m}"
            )));
        }
        if !(sound_speed_mps > 0.0) || !sound_speed_mps.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "sound speed must be positive, got {sound_speed_mps}"
            )));
        }
        if frequencies_hz.is_empty() {
            return Err(Error::InvalidGeometry("frequency list is empty".into()));
        }
        if frequencies_hz.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite frequency".into()));
        }
        if frequencies_hz.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGeometry(
                "frequencies must be strictly increasing".into(),
            ));
        }
        let num_freqs = frequencies_hz.len();
        Ok(Self {
            num_receivers,
            num_sources,
            spacing_m,
            ref_receiver: midpoint(num_receivers),
            ref_source: midpoint(num_sources),
            sound_speed_mps,
            frequencies_hz,
            source_spectrum: vec![Complex64::ONE; num_freqs],
        })
    }

    /// Override the 1-based reference element indices.
    pub fn with_references(mut self, ref_receiver: usize, ref_source: usize) -> Result<Self> {
        if ref_receiver == 0 || ref_receiver > self.num_receivers {
            return Err(Error::InvalidGeometry(format!(
                "reference receiver {ref_receiver} out of 1..={}",
                self.num_receivers
            )));
        }
        if ref_source == 0 || ref_source > self.num_sources {
            return Err(Error::InvalidGeometry(format!(
                "reference source {ref_source} out of 1..={}",
                self.num_sources
            )));
        }
        self.ref_receiver = ref_receiver;
        self.ref_source = ref_source;
        Ok(self)
    }

    /// Override the source spectrum (one complex weight per frequency).
    pub fn with_source_spectrum(mut self, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != self.frequencies_hz.len() {
            return Err(Error::InvalidGeometry(format!(
                "source spectrum has {} entries for {} frequencies",
                spectrum.len(),
                self.frequencies_hz.len()
            )));
        }
        if spectrum.iter().any(|s| s.norm_sqr() == 0.0 || !s.is_finite()) {
            return Err(Error::InvalidGeometry(
                "source spectrum entries must be finite and nonzero".into(),
            ));
        }
        self.source_spectrum = spectrum;
        Ok(self)
    }

    pub fn num_receivers(&self) -> usize {
        self.num_receivers
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn num_freqs(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    /// 1-based reference receiver index m₀.
    pub fn ref_receiver(&self) -> usize {
        self.ref_receiver
    }

    /// 1-based reference source index n₀.
    pub fn ref_source(&self) -> usize {
        self.ref_source
    }

    pub fn sound_speed_mps(&self) -> f64 {
        self.sound_speed_mps
    }

    pub fn frequencies_hz(&self) -> &[f64] {
        &self.frequencies_hz
    }

    pub fn source_spectrum(&self) -> &[Complex64] {
        &self.source_spectrum
    }

    /// Inter-element delay at the configured spacing and sound speed.
    pub fn delay(&self, theta_deg: f64) -> f64 {
        delay(theta_deg, self.spacing_m, self.sound_speed_mps)
    }

    /// Vectorization layout of the full data cube.
    pub fn layout(&self) -> FlatIndexLayout {
        FlatIndexLayout::new(
            self.num_receivers,
            self.num_sources,
            self.frequencies_hz.len(),
        )
    }
}

fn midpoint(len: usize) -> usize {
    (len + 1) / 2
}

/// One propagation path between the arrays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaypathParams {
    /// Real amplitude; negative values model polarity-inverting reflections.
    pub amplitude: f64,
    pub emission_deg: f64,
    pub reception_deg: f64,
    pub time_s: f64,
}

impl RaypathParams {
    pub fn new(amplitude: f64, emission_deg: f64, reception_deg: f64, time_s: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidRaypath(format!(
                "amplitude must be finite, got {amplitude}"
            )));
        }
        for (name, angle) in [("emission", emission_deg), ("reception", reception_deg)] {
            if !(angle > -90.0 && angle < 90.0) {
                return Err(Error::InvalidRaypath(format!(
                    "{name} angle {angle}° outside (-90°, 90°)"
                )));
            }
        }
        if !(time_s >= 0.0) || !time_s.is_finite() {
            return Err(Error::InvalidRaypath(format!(
                "arrival time must be nonnegative, got {time_s}"
            )));
        }
        Ok(Self {
            amplitude,
            emission_deg,
            reception_deg,
            time_s,
        })
    }
}

/// Flat vectorization contract: receiver index innermost, source index middle,
/// frequency index outermost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatIndexLayout {
    pub sub_receivers: usize,
    pub sub_sources: usize,
    pub sub_freqs: usize,
}

impl FlatIndexLayout {
    pub fn new(sub_receivers: usize, sub_sources: usize, sub_freqs: usize) -> Self {
        Self {
            sub_receivers,
            sub_sources,
            sub_freqs,
        }
    }

    pub fn len(&self) -> usize {
        self.sub_receivers * self.sub_sources * self.sub_freqs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat position of 0-based (receiver, source, frequency) indices.
    pub fn flatten(&self, m: usize, n: usize, f: usize) -> usize {
        debug_assert!(m < self.sub_receivers && n < self.sub_sources && f < self.sub_freqs);
        (f * self.sub_sources + n) * self.sub_receivers + m
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        debug_assert!(idx < self.len());
        let m = idx % self.sub_receivers;
        let rest = idx / self.sub_receivers;
        let n = rest % self.sub_sources;
        let f = rest / self.sub_sources;
        (m, n, f)
    }
}

/// Fill `out` with the steering vector for the given (sub-)array dimensions.
///
/// Entry at flat position (m, n, f):
///   `s_f · exp(-j2πν_f (T + (n+1-n₀)·τ(θe) + (m+1-m₀)·τ(θr)))`
/// with m, n 0-based and the references 1-based. Source index pairs with the
/// emission angle, receiver index with the reception angle.
#[allow(clippy::too_many_arguments)]
pub(crate) fn steering_into(
    out: &mut [Complex64],
    num_receivers: usize,
    num_sources: usize,
    ref_receiver: usize,
    ref_source: usize,
    spacing_m: f64,
    sound_speed_mps: f64,
    frequencies_hz: &[f64],
    source_spectrum: &[Complex64],
    emission_deg: f64,
    reception_deg: f64,
    time_s: f64,
) {
    debug_assert_eq!(
        out.len(),
        num_receivers * num_sources * frequencies_hz.len()
    );
    let tau_e = delay(emission_deg, spacing_m, sound_speed_mps);
    let tau_r = delay(reception_deg, spacing_m, sound_speed_mps);
    let mut idx = 0;
    for (f, &nu) in frequencies_hz.iter().enumerate() {
        let s = source_spectrum[f];
        let w = -TAU * nu;
        for n in 0..num_sources {
            let src_term = (n as f64 + 1.0 - ref_source as f64) * tau_e;
            for m in 0..num_receivers {
                let rcv_term = (m as f64 + 1.0 - ref_receiver as f64) * tau_r;
                let phase = w * (time_s + src_term + rcv_term);
                out[idx] = s * Complex64::from_polar(1.0, phase);
                idx += 1;
            }
        }
    }
}

/// Full-array steering vector of length `M·N·F` for one raypath hypothesis.
pub fn steering_vector(
    geom: &ArrayGeometry,
    emission_deg: f64,
    reception_deg: f64,
    time_s: f64,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; geom.layout().len()];
    steering_into(
        &mut out,
        geom.num_receivers,
        geom.num_sources,
        geom.ref_receiver,
        geom.ref_source,
        geom.spacing_m,
        geom.sound_speed_mps,
        &geom.frequencies_hz,
        &geom.source_spectrum,
        emission_deg,
        reception_deg,
        time_s,
    );
    out
}

/// Kronecker self-conjugate extension `d ⊗ conj(d)` used by the fourth-order
/// estimator; output length is the square of the input length.
pub fn quadratic_steering(d: &[Complex64]) -> Vec<Complex64> {
    assert!(!d.is_empty(), "steering vector must be nonempty");
    let l = d.len();
    let mut out = vec![Complex64::ZERO; l * l];
    quadratic_steering_into(&mut out, d);
    out
}

pub(crate) fn quadratic_steering_into(out: &mut [Complex64], d: &[Complex64]) {
    let l = d.len();
    debug_assert_eq!(out.len(), l * l);
    for (a, &da) in d.iter().enumerate() {
        let row = &mut out[a * l..(a + 1) * l];
        for (b, &db) in d.iter().enumerate() {
            row[b] = da * db.conj();
        }
    }
}
