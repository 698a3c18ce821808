//! Synthetic data cubes: multipath signal model plus seeded Gaussian noise.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{steering_vector, ArrayGeometry, RaypathParams};
use crate::mat::norm_sq;

/// Complex received spectra over (receiver, source, frequency), stored with
/// the crate-wide flat layout (receiver innermost, frequency outermost).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    geom: ArrayGeometry,
    data: Vec<Complex64>,
}

impl SpectralCube {
    pub fn new(geom: ArrayGeometry, data: Vec<Complex64>) -> Result<Self> {
        let expected = geom.layout().len();
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "cube has {} values, geometry wants {expected}",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.is_finite()) {
            return Err(Error::DimensionMismatch("cube contains non-finite values".into()));
        }
        Ok(Self { geom, data })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geom
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Value at 0-based (receiver, source, frequency).
    pub fn get(&self, m: usize, n: usize, f: usize) -> Complex64 {
        self.data[self.geom.layout().flatten(m, n, f)]
    }

    pub fn energy(&self) -> f64 {
        norm_sq(&self.data)
    }

    /// Restrict the cube to the reference source's data, yielding an
    /// M×1×F cube. This is the input of the 2D smoothing-MUSICAL baseline.
    pub fn slice_reference_source(&self) -> Self {
        let m = self.geom.num_receivers();
        let f_count = self.geom.num_freqs();
        let n0 = self.geom.ref_source() - 1;
        let layout = self.geom.layout();
        let mut data = Vec::with_capacity(m * f_count);
        for f in 0..f_count {
            for i in 0..m {
                data.push(self.data[layout.flatten(i, n0, f)]);
            }
        }
        let geom = ArrayGeometry::new(
            m,
            1,
            self.geom.spacing_m(),
            self.geom.sound_speed_mps(),
            self.geom.frequencies_hz().to_vec(),
        )
        .expect("valid geometry stays valid under source restriction")
        .with_references(self.geom.ref_receiver(), 1)
        .expect("reference receiver unchanged")
        .with_source_spectrum(self.geom.source_spectrum().to_vec())
        .expect("spectrum unchanged");
        Self { geom, data }
    }
}

/// Additive noise model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    White,
    /// Autoregressive filtering of white noise along the frequency axis,
    /// independently per (receiver, source) channel.
    Colored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub snr_db: f64,
    /// AR coefficients for [`NoiseKind::Colored`]; must describe a stable filter.
    pub ar_coeffs: Vec<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn white(snr_db: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::White,
            snr_db,
            ar_coeffs: Vec::new(),
            seed,
        }
    }

    pub fn colored(snr_db: f64, ar_coeffs: Vec<f64>, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Colored,
            snr_db,
            ar_coeffs,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidNoise(format!(
                "SNR must be finite, got {}",
                self.snr_db
            )));
        }
        if self.kind == NoiseKind::Colored {
            if self.ar_coeffs.is_empty() {
                return Err(Error::InvalidNoise(
                    "colored noise needs at least one AR coefficient".into(),
                ));
            }
            if !ar_filter_is_stable(&self.ar_coeffs) {
                return Err(Error::InvalidNoise(format!(
                    "AR coefficients {:?} describe an unstable filter",
                    self.ar_coeffs
                )));
            }
        }
        Ok(())
    }
}

/// Stability of the AR recursion `b_f = Σ_k a_k b_(f-k) + w_f` via the
/// Schur-Cohn step-down: stable iff every reflection coefficient produced by
/// the recursion has magnitude strictly below one.
pub fn ar_filter_is_stable(ar_coeffs: &[f64]) -> bool {
    if ar_coeffs.iter().any(|a| !a.is_finite()) {
        return false;
    }
    // A(z) = 1 + c_1 z^-1 + ... + c_p z^-p with c_k = -a_k.
    let mut c: Vec<f64> = ar_coeffs.iter().map(|a| -a).collect();
    while let Some(&k) = c.last() {
        if k.abs() >= 1.0 {
            return false;
        }
        let p = c.len();
        let denom = 1.0 - k * k;
        let prev = c.clone();
        c.truncate(p - 1);
        for i in 0..p - 1 {
            c[i] = (prev[i] - k * prev[p - 2 - i]) / denom;
        }
    }
    true
}

/// Stationary power of the AR output driven by unit-power white noise,
/// computed by iterating the companion-form covariance recursion to its
/// fixed point.
fn ar_stationary_power(ar_coeffs: &[f64]) -> f64 {
    let p = ar_coeffs.len();
    let a = ar_coeffs;
    let mut v = vec![0.0f64; p * p];
    let mut next = vec![0.0f64; p * p];
    // State transition: s_f = A s_(f-1) + e_1 w_f, where the first row of the
    // companion matrix A holds the coefficients and the subdiagonal shifts
    // the state. Iterate V ← A V A^T + e_1 e_1^T to the fixed point.
    for _ in 0..1_000_000 {
        // (A V)_0j = Σ_k a_k V_kj, (A V)_ij = V_(i-1)j for i ≥ 1.
        let av = |i: usize, j: usize| -> f64 {
            if i == 0 {
                (0..p).map(|k| a[k] * v[k * p + j]).sum()
            } else {
                v[(i - 1) * p + j]
            }
        };
        let mut scale = 0.0f64;
        for i in 0..p {
            for j in 0..p {
                let val = if j == 0 {
                    (0..p).map(|k| av(i, k) * a[k]).sum::<f64>()
                        + if i == 0 { 1.0 } else { 0.0 }
                } else {
                    av(i, j - 1)
                };
                scale = scale.max(val.abs());
                next[i * p + j] = val;
            }
        }
        let mut worst = 0.0f64;
        for (old, new) in v.iter().zip(&next) {
            worst = worst.max((old - new).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if worst <= 1e-14 * scale.max(1.0) {
            break;
        }
    }
    v[0]
}

fn draw_unit_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    // Circular complex Gaussian with unit power: each part N(0, 1/2).
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Generate a noise cube of the given (receivers, sources, frequencies) shape
/// with unit average power, deterministically from the spec's seed.
pub fn generate_noise(shape: (usize, usize, usize), spec: &NoiseSpec) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let (m, n, f_count) = shape;
    let len = m * n * f_count;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        NoiseKind::White => Ok((0..len).map(|_| draw_unit_complex(&mut rng)).collect()),
        NoiseKind::Colored => {
            let p = spec.ar_coeffs.len();
            let scale = 1.0 / ar_stationary_power(&spec.ar_coeffs).sqrt();
            let burn_in = 64.max(8 * p);
            let mut out = vec![Complex64::ZERO; len];
            let mut history = vec![Complex64::ZERO; p];
            // Channels in (source, receiver) lexicographic order; the AR
            // recursion runs along the frequency axis of each channel.
            for ch_n in 0..n {
                for ch_m in 0..m {
                    history.fill(Complex64::ZERO);
                    for step in 0..burn_in + f_count {
                        let mut b = draw_unit_complex(&mut rng);
                        for (k, &a) in spec.ar_coeffs.iter().enumerate() {
                            b += a * history[k];
                        }
                        history.rotate_right(1);
                        history[0] = b;
                        if step >= burn_in {
                            let f = step - burn_in;
                            out[(f * n + ch_n) * m + ch_m] = b * scale;
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Total-energy SNR in decibels: `10·log10(‖signal‖² / ‖noisy - signal‖²)`.
/// Returns positive infinity when the cubes coincide.
pub fn measure_snr(signal: &SpectralCube, noisy: &SpectralCube) -> f64 {
    assert_eq!(
        signal.geom.layout(),
        noisy.geom.layout(),
        "cubes must share a shape"
    );
    let sig = signal.energy();
    let noise: f64 = signal
        .data
        .iter()
        .zip(&noisy.data)
        .map(|(s, x)| (x - s).norm_sqr())
        .sum();
    if noise == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (sig / noise).log10()
    }
}

/// Synthesize a cube from the multipath model: the noiseless part is the
/// amplitude-weighted sum of steering vectors (which already carry the source
/// spectrum); optional noise is scaled so the cube-wide SNR matches the spec
/// exactly.
pub fn synthesize(
    geom: &ArrayGeometry,
    paths: &[RaypathParams],
    noise: Option<&NoiseSpec>,
) -> Result<SpectralCube> {
    if paths.is_empty() {
        return Err(Error::InvalidRaypath("path list is empty".into()));
    }
    let len = geom.layout().len();
    let mut data = vec![Complex64::ZERO; len];
    for path in paths {
        let d = steering_vector(geom, path.emission_deg, path.reception_deg, path.time_s);
        for (acc, v) in data.iter_mut().zip(&d) {
            *acc += path.amplitude * v;
        }
    }
    if let Some(spec) = noise {
        let signal_energy = norm_sq(&data);
        if signal_energy == 0.0 {
            return Err(Error::InvalidRaypath(
                "signal energy is zero; SNR scaling is undefined".into(),
            ));
        }
        let shape = (geom.num_receivers(), geom.num_sources(), geom.num_freqs());
        let raw = generate_noise(shape, spec)?;
        let noise_energy = norm_sq(&raw);
        let target = signal_energy / 10f64.powf(spec.snr_db / 10.0);
        let alpha = (target / noise_energy).sqrt();
        for (acc, b) in data.iter_mut().zip(&raw) {
            *acc += alpha * b;
        }
    }
    SpectralCube::new(geom.clone(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_geom() -> ArrayGeometry {
        let freqs: Vec<f64> = (0..8).map(|k| 500.0 + 125.0 * k as f64).collect();
        ArrayGeometry::new(4, 3, 2.5, 1500.0, freqs).unwrap()
    }

    #[test]
    fn single_path_equals_steering() {
        let geom = test_geom();
        let path = RaypathParams::new(1.0, 8.0, -3.0, 0.9).unwrap();
        let cube = synthesize(&geom, &[path], None).unwrap();
        let d = steering_vector(&geom, 8.0, -3.0, 0.9);
        for (c, s) in cube.data().iter().zip(&d) {
            assert!((c - s).norm() <= 1e-14);
        }
    }

    #[test]
    fn two_identical_paths_double_the_cube() {
        let geom = test_geom();
        let path = RaypathParams::new(1.0, 8.0, -3.0, 0.9).unwrap();
        let one = synthesize(&geom, &[path], None).unwrap();
        let two = synthesize(&geom, &[path, path], None).unwrap();
        for (a, b) in one.data().iter().zip(two.data()) {
            assert!((2.0 * a - b).norm() <= 1e-13);
        }
    }

    #[test]
    fn superposition_over_path_sets() {
        let geom = test_geom();
        let a = [
            RaypathParams::new(1.0, 5.0, 2.0, 0.4).unwrap(),
            RaypathParams::new(-0.7, -4.0, 9.0, 0.41).unwrap(),
        ];
        let b = [RaypathParams::new(0.3, 12.0, -8.0, 0.43).unwrap()];
        let both: Vec<_> = a.iter().chain(b.iter()).copied().collect();
        let cube_a = synthesize(&geom, &a, None).unwrap();
        let cube_b = synthesize(&geom, &b, None).unwrap();
        let cube_ab = synthesize(&geom, &both, None).unwrap();
        for ((x, y), z) in cube_a.data().iter().zip(cube_b.data()).zip(cube_ab.data()) {
            assert!((x + y - z).norm() <= 1e-13);
        }
    }

    #[test]
    fn empty_path_list_rejected() {
        let geom = test_geom();
        assert!(matches!(
            synthesize(&geom, &[], None),
            Err(Error::InvalidRaypath(_))
        ));
    }

    #[test]
    fn noise_is_deterministic_given_seed() {
        for spec in [
            NoiseSpec::white(3.0, 42),
            NoiseSpec::colored(3.0, vec![0.5, -0.2], 42),
        ] {
            let a = generate_noise((3, 2, 16), &spec).unwrap();
            let b = generate_noise((3, 2, 16), &spec).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn white_noise_statistics() {
        let spec = NoiseSpec::white(0.0, 7);
        let cube = generate_noise((10, 10, 1000), &spec).unwrap();
        let n = cube.len() as f64;
        let mean = cube.iter().sum::<Complex64>() / n;
        assert!(mean.norm() <= 0.02, "mean magnitude {}", mean.norm());
        let power = norm_sq(&cube) / n;
        assert!((power - 1.0).abs() <= 0.02, "power {power}");
    }

    #[test]
    fn colored_noise_lag_one_autocorrelation() {
        let spec = NoiseSpec::colored(0.0, vec![0.9], 11);
        let cube = generate_noise((1, 1, 4096), &spec).unwrap();
        let num: Complex64 = cube.windows(2).map(|w| w[1] * w[0].conj()).sum();
        let den: f64 = norm_sq(&cube);
        let rho = num.re / den;
        assert!((rho - 0.9).abs() <= 0.05, "lag-1 autocorrelation {rho}");
    }

    #[test]
    fn colored_noise_has_unit_power() {
        let spec = NoiseSpec::colored(0.0, vec![0.8, -0.3], 5);
        let cube = generate_noise((4, 4, 512), &spec).unwrap();
        let power = norm_sq(&cube) / cube.len() as f64;
        assert!((power - 1.0).abs() < 0.05, "power {power}");
    }

    #[test]
    fn unstable_filter_rejected() {
        let spec = NoiseSpec::colored(0.0, vec![1.01], 1);
        assert!(matches!(
            generate_noise((1, 1, 8), &spec),
            Err(Error::InvalidNoise(_))
        ));
        // |roots| = 1 is rejected too.
        assert!(!ar_filter_is_stable(&[1.0]));
        // Stable second-order example.
        assert!(ar_filter_is_stable(&[0.5, -0.4]));
        // a1 = 1.2, a2 = -0.5: roots 0.6 ± 0.374j, |root| < 1.
        assert!(ar_filter_is_stable(&[1.2, -0.5]));
        // a1 = 1.9, a2 = -0.9: root at 1.0 boundary as characteristic
        // polynomial z² - 1.9z + 0.9 has root z = 1? (1 - 1.9 + 0.9 = 0) yes.
        assert!(!ar_filter_is_stable(&[1.9, -0.9]));
    }

    #[test]
    fn snr_sentinel_and_zero_db() {
        let geom = test_geom();
        let path = RaypathParams::new(1.0, 0.0, 0.0, 0.5).unwrap();
        let clean = synthesize(&geom, &[path], None).unwrap();
        assert_eq!(measure_snr(&clean, &clean), f64::INFINITY);

        // Perturb with noise of exactly the signal energy: 0 dB.
        let energy = clean.energy();
        let len = clean.data().len();
        let per_entry = (energy / len as f64).sqrt();
        let noisy_data: Vec<Complex64> = clean
            .data()
            .iter()
            .map(|z| z + Complex64::new(per_entry, 0.0))
            .collect();
        let noisy = SpectralCube::new(geom, noisy_data).unwrap();
        let snr = measure_snr(&clean, &noisy);
        assert!(snr.abs() <= 1e-12, "snr {snr}");
    }

    #[test]
    fn snr_round_trip_is_exact() {
        let geom = test_geom();
        let paths = [
            RaypathParams::new(1.0, 4.0, -2.0, 0.5).unwrap(),
            RaypathParams::new(-0.6, -7.0, 5.0, 0.502).unwrap(),
        ];
        for spec in [
            NoiseSpec::white(2.0, 99),
            NoiseSpec::colored(2.0, vec![0.7], 99),
        ] {
            let clean = synthesize(&geom, &paths, None).unwrap();
            let noisy = synthesize(&geom, &paths, Some(&spec)).unwrap();
            let snr = measure_snr(&clean, &noisy);
            assert!((snr - 2.0).abs() <= 1e-9, "snr {snr}");
        }
    }

    #[test]
    fn ar_stationary_power_matches_closed_form() {
        // AR(1): stationary power 1/(1-a²).
        let got = ar_stationary_power(&[0.9]);
        let want = 1.0 / (1.0 - 0.81);
        assert!((got - want).abs() <= 1e-10 * want, "got {got} want {want}");
    }

    #[test]
    fn reference_source_slice() {
        let geom = test_geom(); // N = 3, n0 = 2
        let paths = [RaypathParams::new(1.0, 6.0, -2.0, 0.7).unwrap()];
        let cube = synthesize(&geom, &paths, None).unwrap();
        let sliced = cube.slice_reference_source();
        assert_eq!(sliced.geometry().num_sources(), 1);
        assert_eq!(sliced.geometry().ref_source(), 1);
        for f in 0..geom.num_freqs() {
            for m in 0..geom.num_receivers() {
                assert_eq!(sliced.get(m, 0, f), cube.get(m, 1, f));
            }
        }
    }
}
