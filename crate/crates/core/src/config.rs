//! Scenario configuration: one TOML file fully determines a synthesis and
//! estimation run.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, RaypathParams};
use crate::smoothing::SmoothingPlan;
use crate::spectrum::{Axis, EstimatorKind, GridSpec};
use crate::synth::{NoiseKind, NoiseSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Default estimator for runs that do not select one explicitly.
    #[serde(default = "default_estimator")]
    pub estimator: String,
    pub geometry: GeometryConfig,
    pub paths: Vec<PathConfig>,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    pub smoothing: SmoothingConfig,
    pub grid: GridConfig,
    /// Recorded but not used by the pipeline (e.g. time-domain sample counts
    /// or source-receiver range from the experiment the scenario mirrors).
    #[serde(default)]
    pub metadata: Option<MetadataConfig>,
}

fn default_estimator() -> String {
    "double4".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub receivers: usize,
    pub sources: usize,
    pub spacing_m: f64,
    pub sound_speed_mps: f64,
    #[serde(default)]
    pub ref_receiver: Option<usize>,
    #[serde(default)]
    pub ref_source: Option<usize>,
    pub band: BandConfig,
}

/// Uniform processing band: `count` frequencies from `start_hz` to `stop_hz`
/// inclusive.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub count: usize,
}

impl BandConfig {
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::InvalidGeometry("band count must be at least 1".into()));
        }
        if self.count == 1 {
            if self.start_hz != self.stop_hz {
                return Err(Error::InvalidGeometry(
                    "a single-frequency band needs start_hz == stop_hz".into(),
                ));
            }
            return Ok(vec![self.start_hz]);
        }
        if !(self.start_hz < self.stop_hz) {
            return Err(Error::InvalidGeometry(format!(
                "band [{}, {}] is not increasing",
                self.start_hz, self.stop_hz
            )));
        }
        let step = (self.stop_hz - self.start_hz) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| self.start_hz + step * i as f64)
            .collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub amplitude: f64,
    pub emission_deg: f64,
    pub reception_deg: f64,
    pub time_s: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: String,
    pub snr_db: f64,
    #[serde(default)]
    pub ar_coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    pub source_subarrays: usize,
    pub receiver_subarrays: usize,
    pub band_subbands: usize,
    #[serde(default)]
    pub probe_offset: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub emission_deg: AxisConfig,
    pub reception_deg: AxisConfig,
    pub time_s: AxisConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetadataConfig {
    #[serde(default)]
    pub time_samples: Option<u64>,
    #[serde(default)]
    pub range_m: Option<f64>,
    #[serde(default)]
    pub note: Option<String>,
}

impl ScenarioConfig {
    pub fn geometry(&self) -> Result<ArrayGeometry> {
        let g = &self.geometry;
        let mut geom = ArrayGeometry::new(
            g.receivers,
            g.sources,
            g.spacing_m,
            g.sound_speed_mps,
            g.band.frequencies()?,
        )?;
        if g.ref_receiver.is_some() || g.ref_source.is_some() {
            let m0 = g.ref_receiver.unwrap_or(geom.ref_receiver());
            let n0 = g.ref_source.unwrap_or(geom.ref_source());
            geom = geom.with_references(m0, n0)?;
        }
        Ok(geom)
    }

    pub fn raypaths(&self) -> Result<Vec<RaypathParams>> {
        self.paths
            .iter()
            .map(|p| RaypathParams::new(p.amplitude, p.emission_deg, p.reception_deg, p.time_s))
            .collect()
    }

    /// Noise spec seeded from the scenario seed (or an override).
    pub fn noise_spec(&self, seed_override: Option<u64>) -> Result<Option<NoiseSpec>> {
        let Some(n) = &self.noise else {
            return Ok(None);
        };
        let kind = match n.kind.as_str() {
            "white" => NoiseKind::White,
            "colored" => NoiseKind::Colored,
            other => {
                return Err(Error::InvalidNoise(format!(
                    "unknown noise kind {other:?} (expected \"white\" or \"colored\")"
                )))
            }
        };
        let spec = NoiseSpec {
            kind,
            snr_db: n.snr_db,
            ar_coeffs: n.ar_coeffs.clone(),
            seed: seed_override.unwrap_or(self.seed),
        };
        spec.validate()?;
        Ok(Some(spec))
    }

    pub fn plan(&self) -> Result<SmoothingPlan> {
        let s = &self.smoothing;
        let plan = SmoothingPlan::new(
            s.source_subarrays,
            s.receiver_subarrays,
            s.band_subbands,
        )?;
        match s.probe_offset {
            Some(offset) => plan.with_probe_offset(offset),
            None => Ok(plan),
        }
    }

    pub fn grid_3d(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(
            Axis::new(
                self.grid.emission_deg.min,
                self.grid.emission_deg.max,
                self.grid.emission_deg.step,
            )?,
            Axis::new(
                self.grid.reception_deg.min,
                self.grid.reception_deg.max,
                self.grid.reception_deg.step,
            )?,
            Axis::new(self.grid.time_s.min, self.grid.time_s.max, self.grid.time_s.step)?,
        ))
    }

    /// Grid for the 2D baseline: the emission axis collapses to a single cell.
    pub fn grid_2d(&self) -> Result<GridSpec> {
        let g3 = self.grid_3d()?;
        Ok(GridSpec::new(Axis::degenerate(0.0), g3.reception, g3.time))
    }

    pub fn estimator(&self) -> Result<EstimatorKind> {
        EstimatorKind::parse(&self.estimator).ok_or_else(|| {
            Error::InvalidGrid(format!(
                "unknown estimator {:?} (expected double4, double2 or smusical)",
                self.estimator
            ))
        })
    }

    /// Validate every block by materializing the domain objects.
    pub fn validate(&self) -> Result<()> {
        let geom = self.geometry()?;
        let paths = self.raypaths()?;
        if paths.is_empty() {
            return Err(Error::InvalidRaypath("scenario has no paths".into()));
        }
        self.noise_spec(None)?;
        let plan = self.plan()?;
        plan.validate_for(&geom)?;
        let sub = plan.sub_layout(&geom)?;
        let l = sub.len();
        let p = paths.len();
        if p * p >= l * l {
            return Err(Error::SignalSubspaceTooLarge {
                signal_dim: p * p,
                paths: p,
                dim: l * l,
            });
        }
        self.grid_3d()?;
        self.estimator()?;
        Ok(())
    }
}

/// Load and validate a scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg: ScenarioConfig = toml::from_str(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate().map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::Config {
            path: PathBuf::from(path),
            message: other.to_string(),
        },
    })?;
    Ok(cfg)
}
