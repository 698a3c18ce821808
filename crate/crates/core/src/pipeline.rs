//! End-to-end orchestration: scenario config → cube → estimator grid.

use crate::config::ScenarioConfig;
use crate::cumulant::{
    estimate_covariance, estimate_trispectrum, AccumulationOptions,
};
use crate::error::Result;
use crate::smoothing::{subcube_vectors, SmoothingPlan};
use crate::spectrum::{
    eval_double2, eval_double4, eval_smoothing_musical, EstimatorKind, PseudoSpectrumGrid,
};
use crate::subspace::{eigensplit, StatOrder};
use crate::synth::{synthesize, SpectralCube};

/// Synthesize the scenario's cube; `seed_override` reseeds the noise without
/// touching the rest of the scenario.
pub fn synthesize_cube(cfg: &ScenarioConfig, seed_override: Option<u64>) -> Result<SpectralCube> {
    let geom = cfg.geometry()?;
    let paths = cfg.raypaths()?;
    let noise = cfg.noise_spec(seed_override)?;
    synthesize(&geom, &paths, noise.as_ref())
}

/// Run one estimator over the scenario's grid.
///
/// The path count for the subspace split is taken from the scenario's paths
/// block. The 2D baseline runs on the reference source's data with source
/// smoothing collapsed.
pub fn estimate_grid(
    cfg: &ScenarioConfig,
    cube: &SpectralCube,
    method: EstimatorKind,
    opts: &AccumulationOptions,
) -> Result<PseudoSpectrumGrid> {
    let plan = cfg.plan()?;
    let paths = cfg.raypaths()?.len();
    match method {
        EstimatorKind::Double4 => {
            let xs = subcube_vectors(cube, &plan)?;
            let c4 = estimate_trispectrum(&xs, opts)?;
            let split = eigensplit(&c4, paths, StatOrder::Fourth)?;
            eval_double4(&split, cube.geometry(), &plan, &cfg.grid_3d()?)
        }
        EstimatorKind::Double2 => {
            let xs = subcube_vectors(cube, &plan)?;
            let c2 = estimate_covariance(&xs, opts)?;
            let split = eigensplit(&c2, paths, StatOrder::Second)?;
            eval_double2(&split, cube.geometry(), &plan, &cfg.grid_3d()?)
        }
        EstimatorKind::SMusical => {
            let sliced = cube.slice_reference_source();
            let plan_2d = SmoothingPlan::new(
                1,
                plan.receiver_subarrays(),
                plan.band_subbands(),
            )?
            .with_probe_offset(plan.probe_offset())?;
            let xs = subcube_vectors(&sliced, &plan_2d)?;
            let c2 = estimate_covariance(&xs, opts)?;
            let split = eigensplit(&c2, paths, StatOrder::Second)?;
            eval_smoothing_musical(&split, sliced.geometry(), &plan_2d, &cfg.grid_2d()?)
        }
    }
}
