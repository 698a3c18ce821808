//! Grid export: CSV (the on-disk grid format) and PGM image slices.
//!
//! The CSV carries `#`-prefixed metadata lines (estimator tag and exact axis
//! definitions) above the header row, so a grid file reloads losslessly.
//! Floats are printed with Rust's shortest round-trip formatting, which makes
//! exports byte-deterministic and re-parsing exact.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spectrum::{Axis, EstimatorKind, GridSpec, PseudoSpectrumGrid};

const GRID_HEADER: &str = "theta_e_deg,theta_r_deg,t_s,value";

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Render the CSV (including metadata lines) to a string.
pub fn grid_to_csv(ps: &PseudoSpectrumGrid) -> String {
    let grid = ps.grid();
    let mut out = String::new();
    let _ = writeln!(out, "# raysep grid v1");
    let _ = writeln!(out, "# estimator = {}", ps.estimator());
    for (name, axis) in [
        ("emission_deg", &grid.emission),
        ("reception_deg", &grid.reception),
        ("time_s", &grid.time),
    ] {
        let _ = writeln!(
            out,
            "# axis {name} = {} {} {}",
            axis.min(),
            axis.max(),
            axis.step()
        );
    }
    let _ = writeln!(out, "{GRID_HEADER}");
    for ie in 0..grid.emission.len() {
        let e = grid.emission.value(ie);
        for ir in 0..grid.reception.len() {
            let r = grid.reception.value(ir);
            for it in 0..grid.time.len() {
                let t = grid.time.value(it);
                let _ = writeln!(out, "{e},{r},{t},{}", ps.value_at(ie, ir, it));
            }
        }
    }
    out
}

pub fn write_grid_csv(path: impl AsRef<Path>, ps: &PseudoSpectrumGrid) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(io_err(path))?;
    file.write_all(grid_to_csv(ps).as_bytes())
        .map_err(io_err(path))?;
    Ok(())
}

/// Reload a grid written by [`write_grid_csv`].
pub fn load_grid_csv(path: impl AsRef<Path>) -> Result<PseudoSpectrumGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let fail = |line: usize, message: String| Error::GridFormat {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut estimator: Option<EstimatorKind> = None;
    let mut axes: [Option<Axis>; 3] = [None, None, None];
    let mut header_seen = false;
    let mut values: Vec<f64> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_idx = lineno + 1;
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(tag) = meta.strip_prefix("estimator =") {
                estimator = Some(
                    EstimatorKind::parse(tag.trim())
                        .ok_or_else(|| fail(line_idx, format!("unknown estimator {tag:?}")))?,
                );
            } else if let Some(rest) = meta.strip_prefix("axis ") {
                let (name, nums) = rest
                    .split_once('=')
                    .ok_or_else(|| fail(line_idx, "malformed axis line".into()))?;
                let parts: Vec<f64> = nums
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| fail(line_idx, format!("bad axis number: {e}")))?;
                if parts.len() != 3 {
                    return Err(fail(line_idx, "axis line needs min max step".into()));
                }
                let axis = Axis::new(parts[0], parts[1], parts[2])
                    .map_err(|e| fail(line_idx, e.to_string()))?;
                match name.trim() {
                    "emission_deg" => axes[0] = Some(axis),
                    "reception_deg" => axes[1] = Some(axis),
                    "time_s" => axes[2] = Some(axis),
                    other => return Err(fail(line_idx, format!("unknown axis {other:?}"))),
                }
            }
            continue;
        }
        if !header_seen {
            if line != GRID_HEADER {
                return Err(fail(
                    line_idx,
                    format!("expected header {GRID_HEADER:?}, found {line:?}"),
                ));
            }
            header_seen = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let value_field = line
            .rsplit(',')
            .next()
            .ok_or_else(|| fail(line_idx, "empty row".into()))?;
        let v: f64 = value_field
            .parse()
            .map_err(|e| fail(line_idx, format!("bad value: {e}")))?;
        values.push(v);
    }

    let estimator =
        estimator.ok_or_else(|| fail(0, "missing '# estimator =' metadata line".into()))?;
    let [Some(emission), Some(reception), Some(time)] = axes else {
        return Err(fail(0, "missing '# axis' metadata lines".into()));
    };
    let grid = GridSpec::new(emission, reception, time);
    if values.len() != grid.len() {
        return Err(fail(
            0,
            format!("{} rows for a grid of {} points", values.len(), grid.len()),
        ));
    }
    PseudoSpectrumGrid::from_values(grid, values, estimator)
}

/// Write one grayscale PGM (P5) image per emission-angle slice; rows are
/// reception angles, columns are time cells. Values are log-scaled and
/// normalized to 0..255 over the whole grid; a constant grid maps to
/// mid-gray.
pub fn write_pgm_slices(stem: impl AsRef<Path>, ps: &PseudoSpectrumGrid) -> Result<Vec<PathBuf>> {
    let stem = stem.as_ref();
    let grid = ps.grid();
    let (lo, hi) = ps
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let (llo, lhi) = (lo.log10(), hi.log10());
    let flat = lhi - llo <= 0.0;
    let mut paths = Vec::with_capacity(grid.emission.len());
    for ie in 0..grid.emission.len() {
        let path = stem.with_file_name(format!(
            "{}_e{ie:03}.pgm",
            stem.file_name().unwrap_or_default().to_string_lossy()
        ));
        let width = grid.time.len();
        let height = grid.reception.len();
        let mut bytes: Vec<u8> = Vec::with_capacity(64 + width * height);
        bytes.extend_from_slice(
            format!(
                "P5\n# theta_e_deg = {}\n{width} {height}\n255\n",
                grid.emission.value(ie)
            )
            .as_bytes(),
        );
        for ir in 0..height {
            for it in 0..width {
                let v = ps.value_at(ie, ir, it);
                let px = if flat {
                    128u8
                } else {
                    (255.0 * (v.log10() - llo) / (lhi - llo)).round() as u8
                };
                bytes.push(px);
            }
        }
        let mut file = std::fs::File::create(&path).map_err(io_err(&path))?;
        file.write_all(&bytes).map_err(io_err(&path))?;
        paths.push(path);
    }
    Ok(paths)
}
