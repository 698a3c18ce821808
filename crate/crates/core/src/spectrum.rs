//! MUSIC-type pseudo-spectra over (emission angle, reception angle, arrival
//! time), peak extraction and truth matching.
//!
//! All three estimators share one evaluation core: the grid value is
//! `1 / (probeᴴ U_n U_nᴴ probe)` with the noise projection computed through
//! the signal-subspace complement identity
//!
//! ```text
//! probeᴴ U_n U_nᴴ probe = ‖probe‖² - ‖U_sᴴ probe‖²
//! ```
//!
//! which costs `signal_dim` inner products per grid point instead of a
//! projector application of the full matrix dimension. The denominator is
//! floored at `1e-12·‖probe‖²` to keep values finite where the probe lies in
//! the signal subspace exactly.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{quadratic_steering_into, ArrayGeometry, RaypathParams};
use crate::mat::{hdot, norm_sq};
use crate::smoothing::{smoothed_steering_into, SmoothingPlan};
use crate::subspace::{EigenSplit, StatOrder};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Relative denominator floor of the estimators.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// One uniformly sampled grid axis; `min == max` gives a degenerate axis of
/// length one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    min: f64,
    max: f64,
    step: f64,
}

impl Axis {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "axis step must be positive, got {step}"
            )));
        }
        if !(min <= max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "axis range [{min}, {max}] is invalid"
            )));
        }
        Ok(Self { min, max, step })
    }

    pub fn degenerate(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            step: 1.0,
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    /// Nearest cell index, unclamped: values outside the axis map outside
    /// `0..len`.
    pub fn nearest_cell(&self, v: f64) -> i64 {
        ((v - self.min) / self.step).round() as i64
    }
}

/// Evaluation grid over the three raypath parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub emission: Axis,
    pub reception: Axis,
    pub time: Axis,
}

impl GridSpec {
    pub fn new(emission: Axis, reception: Axis, time: Axis) -> Self {
        Self {
            emission,
            reception,
            time,
        }
    }

    pub fn len(&self) -> usize {
        self.emission.len() * self.reception.len() * self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index with the time axis innermost.
    pub fn flatten(&self, ie: usize, ir: usize, it: usize) -> usize {
        (ie * self.reception.len() + ir) * self.time.len() + it
    }

    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        let it = idx % self.time.len();
        let rest = idx / self.time.len();
        let ir = rest % self.reception.len();
        let ie = rest / self.reception.len();
        (ie, ir, it)
    }
}

/// Which estimator produced a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Fourth-order double-array estimator (3D).
    Double4,
    /// Second-order double-array baseline (3D).
    Double2,
    /// Second-order single-source baseline (2D, reception × time).
    SMusical,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Double4 => "double4",
            EstimatorKind::Double2 => "double2",
            EstimatorKind::SMusical => "smusical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "double4" => Some(EstimatorKind::Double4),
            "double2" => Some(EstimatorKind::Double2),
            "smusical" => Some(EstimatorKind::SMusical),
            _ => None,
        }
    }

    fn order(&self) -> StatOrder {
        match self {
            EstimatorKind::Double4 => StatOrder::Fourth,
            EstimatorKind::Double2 | EstimatorKind::SMusical => StatOrder::Second,
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pseudo-spectrum values over a [`GridSpec`], time axis innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSpectrumGrid {
    grid: GridSpec,
    values: Vec<f64>,
    estimator: EstimatorKind,
}

impl PseudoSpectrumGrid {
    pub fn from_values(grid: GridSpec, values: Vec<f64>, estimator: EstimatorKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} grid values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidGrid(
                "pseudo-spectrum values must be positive and finite".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            estimator,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn estimator(&self) -> EstimatorKind {
        self.estimator
    }

    pub fn value_at(&self, ie: usize, ir: usize, it: usize) -> f64 {
        self.values[self.grid.flatten(ie, ir, it)]
    }

    /// Cell indices of the global maximum (ties resolved lexicographically).
    pub fn argmax(&self) -> (usize, usize, usize) {
        let mut best = 0usize;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        self.grid.unflatten(best)
    }
}

struct Scratch {
    spatial: Vec<Complex64>,
    probe_d: Vec<Complex64>,
    probe_d4: Vec<Complex64>,
}

/// Shared evaluation core: fills the T-row of values for one angle pair.
///
/// The steering vector factors as `d(T) = spatial ∘ band_phase(T)` with the
/// band phase constant per frequency block, so the per-point work is one
/// complex exponential per probe frequency plus the subspace projections.
#[allow(clippy::too_many_arguments)]
fn eval_time_row(
    split: &EigenSplit,
    geom: &ArrayGeometry,
    plan: &SmoothingPlan,
    grid: &GridSpec,
    kind: EstimatorKind,
    emission_deg: f64,
    reception_deg: f64,
    scratch: &mut Scratch,
    row: &mut [f64],
) {
    let sub = plan
        .sub_layout(geom)
        .expect("plan validated before evaluation");
    let l = sub.len();
    let block = sub.sub_receivers * sub.sub_sources;
    let probe_freqs =
        &geom.frequencies_hz()[plan.probe_offset()..plan.probe_offset() + sub.sub_freqs];

    scratch.spatial.resize(l, Complex64::ZERO);
    smoothed_steering_into(
        &mut scratch.spatial,
        geom,
        plan,
        &sub,
        emission_deg,
        reception_deg,
        0.0,
    );
    scratch.probe_d.resize(l, Complex64::ZERO);
    if kind == EstimatorKind::Double4 {
        scratch.probe_d4.resize(l * l, Complex64::ZERO);
    }

    for (it, out) in row.iter_mut().enumerate() {
        let t = grid.time.value(it);
        for (f, &nu) in probe_freqs.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -TAU * nu * t);
            let dst = &mut scratch.probe_d[f * block..(f + 1) * block];
            let src = &scratch.spatial[f * block..(f + 1) * block];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s * phase;
            }
        }
        let (probe, probe_norm): (&[Complex64], f64) = match kind {
            EstimatorKind::Double4 => {
                quadratic_steering_into(&mut scratch.probe_d4, &scratch.probe_d);
                let n = norm_sq(&scratch.probe_d);
                (&scratch.probe_d4, n * n)
            }
            _ => (&scratch.probe_d, norm_sq(&scratch.probe_d)),
        };
        let mut signal_energy = 0.0;
        for s in 0..split.signal_dim() {
            signal_energy += hdot(split.signal_basis().col(s), probe).norm_sqr();
        }
        let denom = (probe_norm - signal_energy).max(DENOMINATOR_FLOOR * probe_norm);
        *out = 1.0 / denom;
    }
}

fn eval_grid_impl(
    split: &EigenSplit,
    geom: &ArrayGeometry,
    plan: &SmoothingPlan,
    grid: &GridSpec,
    kind: EstimatorKind,
    serial: bool,
) -> Result<PseudoSpectrumGrid> {
    let sub = plan.sub_layout(geom)?;
    let l = sub.len();
    if split.order() != kind.order() {
        return Err(Error::DimensionMismatch(format!(
            "{kind} estimator received a {:?}-order subspace split",
            split.order()
        )));
    }
    let expected_dim = match kind.order() {
        StatOrder::Fourth => l * l,
        StatOrder::Second => l,
    };
    if split.dim() != expected_dim {
        return Err(Error::DimensionMismatch(format!(
            "subspace dimension {} does not match the smoothing plan (expected {expected_dim})",
            split.dim()
        )));
    }
    if kind == EstimatorKind::SMusical {
        if geom.num_sources() != 1 {
            return Err(Error::DimensionMismatch(
                "the 2D baseline runs on the reference source's data only (one source)".into(),
            ));
        }
        if grid.emission.len() != 1 {
            return Err(Error::InvalidGrid(
                "the 2D baseline needs a degenerate emission axis".into(),
            ));
        }
    }

    let time_len = grid.time.len();
    let reception_len = grid.reception.len();
    let mut values = vec![0.0f64; grid.len()];

    let job = |pair: usize, scratch: &mut Scratch, row: &mut [f64]| {
        let ie = pair / reception_len;
        let ir = pair % reception_len;
        eval_time_row(
            split,
            geom,
            plan,
            grid,
            kind,
            grid.emission.value(ie),
            grid.reception.value(ir),
            scratch,
            row,
        );
    };

    let new_scratch = || Scratch {
        spatial: Vec::new(),
        probe_d: Vec::new(),
        probe_d4: Vec::new(),
    };

    if serial {
        let mut scratch = new_scratch();
        for (pair, row) in values.chunks_mut(time_len).enumerate() {
            job(pair, &mut scratch, row);
        }
    } else {
        #[cfg(feature = "parallel")]
        {
            values
                .par_chunks_mut(time_len)
                .enumerate()
                .for_each_init(new_scratch, |scratch, (pair, row)| job(pair, scratch, row));
        }
        #[cfg(not(feature = "parallel"))]
        {
            let mut scratch = new_scratch();
            for (pair, row) in values.chunks_mut(time_len).enumerate() {
                job(pair, &mut scratch, row);
            }
        }
    }

    PseudoSpectrumGrid::from_values(*grid, values, kind)
}

/// Fourth-order double-array pseudo-spectrum: probe `d₄ = d ⊗ conj(d)`
/// against the trispectrum's noise subspace.
pub fn eval_double4(
    split: &EigenSplit,
    geom: &ArrayGeometry,
    plan: &SmoothingPlan,
    grid: &GridSpec,
) -> Result<PseudoSpectrumGrid> {
    eval_grid_impl(split, geom, plan, grid, EstimatorKind::Double4, false)
}

/// Second-order double-array baseline (plain smoothed steering probe).
pub fn eval_double2(
    split: &EigenSplit,
    geom: &ArrayGeometry,
    plan: &SmoothingPlan,
    grid: &GridSpec,
) -> Result<PseudoSpectrumGrid> {
    eval_grid_impl(split, geom, plan, grid, EstimatorKind::Double2, false)
}

/// Second-order 2D baseline over (reception angle, arrival time), evaluated
/// on the reference source's receiver × frequency data.
pub fn eval_smoothing_musical(
    split: &EigenSplit,
    geom: &ArrayGeometry,
    plan: &SmoothingPlan,
    grid_2d: &GridSpec,
) -> Result<PseudoSpectrumGrid> {
    eval_grid_impl(split, geom, plan, grid_2d, EstimatorKind::SMusical, false)
}

/// Sequential reference implementations of the grid evaluators; these are the
/// code paths used when the `parallel` feature is disabled.
pub fn eval_grid_serial(
    split: &EigenSplit,
    geom: &ArrayGeometry,
    plan: &SmoothingPlan,
    grid: &GridSpec,
    kind: EstimatorKind,
) -> Result<PseudoSpectrumGrid> {
    eval_grid_impl(split, geom, plan, grid, kind, true)
}

/// One extracted local maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub emission_deg: f64,
    pub reception_deg: f64,
    pub time_s: f64,
    pub value: f64,
    /// 1-based rank by descending value.
    pub rank: usize,
    /// Grid cell (emission, reception, time).
    pub cell: [usize; 3],
}

/// Result of peak extraction.
#[derive(Debug, Clone)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    pub requested: usize,
    /// Set when fewer local maxima exist than were requested.
    pub exhausted: bool,
}

/// Local maxima over the full neighborhood stencil (26 neighbors in 3D, 8 in
/// 2D; boundary cells compare the neighbors that exist), ranked by value with
/// ties broken by lexicographic cell index.
pub fn extract_peaks(ps: &PseudoSpectrumGrid, count: usize) -> PeakSet {
    assert!(count >= 1, "peak count must be at least 1");
    let grid = ps.grid();
    let dims = [grid.emission.len(), grid.reception.len(), grid.time.len()];
    let mut maxima: Vec<[usize; 3]> = Vec::new();
    for idx in 0..grid.len() {
        let (ie, ir, it) = grid.unflatten(idx);
        let v = ps.values()[idx];
        let cell = [ie, ir, it];
        let mut is_max = true;
        'stencil: for de in -1i64..=1 {
            for dr in -1i64..=1 {
                for dt in -1i64..=1 {
                    if de == 0 && dr == 0 && dt == 0 {
                        continue;
                    }
                    let ne = cell[0] as i64 + de;
                    let nr = cell[1] as i64 + dr;
                    let nt = cell[2] as i64 + dt;
                    if ne < 0
                        || nr < 0
                        || nt < 0
                        || ne >= dims[0] as i64
                        || nr >= dims[1] as i64
                        || nt >= dims[2] as i64
                    {
                        continue;
                    }
                    if ps.value_at(ne as usize, nr as usize, nt as usize) > v {
                        is_max = false;
                        break 'stencil;
                    }
                }
            }
        }
        if is_max {
            maxima.push(cell);
        }
    }
    maxima.sort_by(|a, b| {
        let va = ps.value_at(a[0], a[1], a[2]);
        let vb = ps.value_at(b[0], b[1], b[2]);
        vb.total_cmp(&va).then_with(|| a.cmp(b))
    });
    let exhausted = maxima.len() < count;
    maxima.truncate(count);
    let peaks = maxima
        .into_iter()
        .enumerate()
        .map(|(i, cell)| Peak {
            emission_deg: grid.emission.value(cell[0]),
            reception_deg: grid.reception.value(cell[1]),
            time_s: grid.time.value(cell[2]),
            value: ps.value_at(cell[0], cell[1], cell[2]),
            rank: i + 1,
            cell,
        })
        .collect();
    PeakSet {
        peaks,
        requested: count,
        exhausted,
    }
}

/// Per-truth outcome of greedy peak assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthMatch {
    pub truth_index: usize,
    /// Rank of the assigned peak, when one lies within tolerance.
    pub peak_rank: Option<usize>,
    /// Chebyshev cell distance of the assigned peak.
    pub cell_distance: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct MatchReport {
    pub matches: Vec<TruthMatch>,
    pub hits: usize,
}

impl MatchReport {
    pub fn all_hit(&self) -> bool {
        self.hits == self.matches.len()
    }

    pub fn misses(&self) -> usize {
        self.matches.len() - self.hits
    }
}

/// Greedy nearest-cell assignment of peaks to ground-truth raypaths.
///
/// A truth is hit when an unassigned peak lies within `cell_tolerance` cells
/// on every axis; each peak serves at most one truth. On 2D grids the
/// degenerate emission axis contributes no distance, so matching reduces to
/// (reception, time) as intended for the 2D baseline.
pub fn match_to_truth(
    peaks: &[Peak],
    truths: &[RaypathParams],
    grid: &GridSpec,
    cell_tolerance: usize,
) -> MatchReport {
    let truth_cells: Vec<[i64; 3]> = truths
        .iter()
        .map(|p| {
            [
                grid.emission.nearest_cell(p.emission_deg),
                grid.reception.nearest_cell(p.reception_deg),
                grid.time.nearest_cell(p.time_s),
            ]
        })
        .collect();
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new(); // (dist, truth, peak idx)
    for (ti, tc) in truth_cells.iter().enumerate() {
        for (pi, peak) in peaks.iter().enumerate() {
            let d = (0..3)
                .map(|ax| (peak.cell[ax] as i64 - tc[ax]).unsigned_abs() as usize)
                .max()
                .unwrap_or(0);
            if d <= cell_tolerance {
                candidates.push((d, ti, pi));
            }
        }
    }
    // Sort by distance, then truth index, then peak cell for a deterministic,
    // peak-order-invariant assignment.
    candidates.sort_by(|a, b| {
        (a.0, a.1, peaks[a.2].cell)
            .cmp(&(b.0, b.1, peaks[b.2].cell))
    });
    let mut matches: Vec<TruthMatch> = (0..truths.len())
        .map(|i| TruthMatch {
            truth_index: i,
            peak_rank: None,
            cell_distance: None,
        })
        .collect();
    let mut peak_used = vec![false; peaks.len()];
    let mut hits = 0usize;
    for (d, ti, pi) in candidates {
        if matches[ti].peak_rank.is_some() || peak_used[pi] {
            continue;
        }
        matches[ti].peak_rank = Some(peaks[pi].rank);
        matches[ti].cell_distance = Some(d);
        peak_used[pi] = true;
        hits += 1;
    }
    MatchReport { matches, hits }
}
