//! Command-line surface for the raypath separation pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use raysep_core::config::{load_config, ScenarioConfig};
use raysep_core::cube_io::{load_cube, save_cube};
use raysep_core::cumulant::AccumulationOptions;
use raysep_core::export::{load_grid_csv, write_grid_csv};
use raysep_core::pipeline::{estimate_grid, synthesize_cube};
use raysep_core::spectrum::{
    extract_peaks, match_to_truth, EstimatorKind, MatchReport, Peak, PseudoSpectrumGrid,
};
use raysep_core::synth::measure_snr;
use raysep_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "raysep",
    version,
    about = "Separate coherent wideband raypaths between a source array and a receiver array"
)]
struct Cli {
    /// Override the scenario seed (noise generation).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Bound worker parallelism (0 or absent: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Fixed-order compensated accumulation. Output is bit-reproducible for a
    /// given seed in either mode; this additionally hardens the summation.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the scenario's data cube and write it to a cube file.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one estimator over a cube and write the pseudo-spectrum grid (CSV).
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cube: PathBuf,
        /// double4 | double2 | smusical (default: the scenario's estimator).
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the strongest local maxima from a grid file.
    Peaks {
        #[arg(long)]
        grid: PathBuf,
        /// Number of peaks to report.
        #[arg(long)]
        count: usize,
        /// Scenario file providing ground-truth paths to match against.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Matching tolerance in grid cells per axis.
        #[arg(long, default_value_t = 1)]
        tolerance: usize,
    },
    /// Synthesize one cube, run all three estimators and emit a hit/miss table.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for grid files and the report.
        #[arg(long, default_value = "compare_out")]
        out_dir: PathBuf,
        /// Matching tolerance in grid cells per axis.
        #[arg(long, default_value_t = 1)]
        tolerance: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    #[cfg(feature = "parallel")]
    if let Some(threads) = cli.threads {
        if threads > 0 {
            // Ignore the error if a pool already exists (tests call run twice).
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cli.threads;

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {err}", err.category());
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Stable exit codes per error category (documented in the README).
fn exit_code(err: &Error) -> u8 {
    match err.category() {
        "config" => 2,
        "validation" => 3,
        "format" => 4,
        "io" => 5,
        _ => 6, // estimator
    }
}

fn run(cli: &Cli) -> Result<()> {
    let opts = AccumulationOptions {
        deterministic: cli.deterministic,
    };
    match &cli.command {
        Command::Synth { config, out } => {
            let cfg = load_config(config)?;
            let cube = synthesize_cube(&cfg, cli.seed)?;
            save_cube(out, &cube)?;
            let geom = cube.geometry();
            println!(
                "wrote {} ({}x{}x{} cube, seed {})",
                out.display(),
                geom.num_receivers(),
                geom.num_sources(),
                geom.num_freqs(),
                cli.seed.unwrap_or(cfg.seed),
            );
            if cfg.noise.is_some() {
                let clean = synthesize_cube_noiseless(&cfg)?;
                println!("measured SNR: {:.6} dB", measure_snr(&clean, &cube));
            }
            Ok(())
        }
        Command::Estimate {
            config,
            cube,
            method,
            out,
        } => {
            let cfg = load_config(config)?;
            let kind = resolve_method(&cfg, method.as_deref())?;
            let geom = cfg.geometry()?;
            let raw = load_cube(cube)?;
            let cube = raw.into_cube(&geom)?;
            let ps = estimate_grid(&cfg, &cube, kind, &opts)?;
            write_grid_csv(out, &ps)?;
            println!(
                "wrote {} ({} grid, {} points)",
                out.display(),
                kind,
                ps.values().len()
            );
            Ok(())
        }
        Command::Peaks {
            grid,
            count,
            truth,
            tolerance,
        } => {
            let ps = load_grid_csv(grid)?;
            let peaks = extract_peaks(&ps, (*count).max(1));
            print_peaks(&ps, &peaks.peaks);
            if peaks.exhausted {
                println!(
                    "note: only {} local maxima exist ({} requested)",
                    peaks.peaks.len(),
                    count
                );
            }
            if let Some(truth_path) = truth {
                let cfg = load_config(truth_path)?;
                let truths = cfg.raypaths()?;
                let report = match_to_truth(&peaks.peaks, &truths, ps.grid(), *tolerance);
                print!("{}", report_table(ps.estimator(), &truths, &report));
                println!(
                    "summary: {} hits {}/{}",
                    ps.estimator(),
                    report.hits,
                    truths.len()
                );
            }
            Ok(())
        }
        Command::Compare {
            config,
            out_dir,
            tolerance,
        } => {
            let cfg = load_config(config)?;
            std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
                path: out_dir.clone(),
                source,
            })?;
            let cube = synthesize_cube(&cfg, cli.seed)?;
            let truths = cfg.raypaths()?;
            let mut report_text = String::new();
            report_text.push_str("# raysep compare report\n");
            report_text.push_str(&format!("# seed = {}\n", cli.seed.unwrap_or(cfg.seed)));
            report_text.push_str(&format!("# tolerance_cells = {tolerance}\n"));
            report_text.push_str(
                "estimator,truth_index,emission_deg,reception_deg,time_s,hit,peak_rank,cell_distance\n",
            );
            let mut summary = Vec::new();
            for kind in [
                EstimatorKind::Double4,
                EstimatorKind::Double2,
                EstimatorKind::SMusical,
            ] {
                let ps = estimate_grid(&cfg, &cube, kind, &opts)?;
                write_grid_csv(out_dir.join(format!("{kind}.csv")), &ps)?;
                let peaks = extract_peaks(&ps, truths.len());
                let report = match_to_truth(&peaks.peaks, &truths, ps.grid(), *tolerance);
                report_text.push_str(&report_rows(kind, &truths, &report));
                summary.push(format!("{kind} hits {}/{}", report.hits, truths.len()));
            }
            let summary_line = format!("summary: {}\n", summary.join("; "));
            report_text.push_str(&summary_line);
            let report_path = out_dir.join("report.csv");
            std::fs::write(&report_path, &report_text).map_err(|source| Error::Io {
                path: report_path.clone(),
                source,
            })?;
            print!("{report_text}");
            println!("wrote {}", report_path.display());
            Ok(())
        }
    }
}

fn synthesize_cube_noiseless(cfg: &ScenarioConfig) -> Result<raysep_core::synth::SpectralCube> {
    let geom = cfg.geometry()?;
    let paths = cfg.raypaths()?;
    raysep_core::synth::synthesize(&geom, &paths, None)
}

fn resolve_method(cfg: &ScenarioConfig, method: Option<&str>) -> Result<EstimatorKind> {
    match method {
        Some(name) => EstimatorKind::parse(name).ok_or_else(|| {
            Error::InvalidGrid(format!(
                "unknown method {name:?} (expected double4, double2 or smusical)"
            ))
        }),
        None => cfg.estimator(),
    }
}

fn print_peaks(ps: &PseudoSpectrumGrid, peaks: &[Peak]) {
    println!("rank,theta_e_deg,theta_r_deg,t_s,value");
    let two_d = ps.grid().emission.len() == 1;
    for p in peaks {
        let e = if two_d {
            "-".to_string()
        } else {
            format!("{}", p.emission_deg)
        };
        println!("{},{e},{},{},{:.6e}", p.rank, p.reception_deg, p.time_s, p.value);
    }
}

fn report_rows(
    kind: EstimatorKind,
    truths: &[raysep_core::geometry::RaypathParams],
    report: &MatchReport,
) -> String {
    let mut out = String::new();
    for m in &report.matches {
        let t = &truths[m.truth_index];
        let (hit, rank, dist) = match (m.peak_rank, m.cell_distance) {
            (Some(r), Some(d)) => ("yes", r.to_string(), d.to_string()),
            _ => ("no", "-".to_string(), "-".to_string()),
        };
        out.push_str(&format!(
            "{kind},{},{},{},{},{hit},{rank},{dist}\n",
            m.truth_index, t.emission_deg, t.reception_deg, t.time_s
        ));
    }
    out
}

fn report_table(
    kind: EstimatorKind,
    truths: &[raysep_core::geometry::RaypathParams],
    report: &MatchReport,
) -> String {
    let mut out = String::from(
        "estimator,truth_index,emission_deg,reception_deg,time_s,hit,peak_rank,cell_distance\n",
    );
    out.push_str(&report_rows(kind, truths, report));
    out
}
