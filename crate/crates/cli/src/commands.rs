use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use gammares::analytic::{analytic_dipole, avetissian_correct, full_trip_time, rwa_trajectory};
use gammares::dynamics::{
    dipole_series, round_trip_cycles, write_trajectory_csv, DEFAULT_STEPS_PER_CYCLE,
};
use gammares::resonance::{scan_ratio, write_scan_csv};
use gammares::spectrum::total_spectrum;
use gammares::{
    coherent_spectrum, find_peaks, integrate, model::preset_system, solve_resonance, Corrections,
    IntegrateOptions, Method, Parity, PeakList, PeakOptions, Spectrum64, TimeGrid, Trajectory64,
};
use serde::Serialize;

use crate::config::{Resolved, RunConfig};
use crate::CliError;

/// Samples per cycle for analytic dipoles; Nyquist sits at 32ω₀.
const ANALYTIC_STEPS_PER_CYCLE: usize = 64;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::config(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn warn_about(traj: &Trajectory64) {
    if traj.norm_warning {
        eprintln!(
            "gammares: warning: norm drift {:.2e} above tolerance; consider more steps per cycle",
            traj.max_norm_deviation
        );
    }
    if traj.applicability_warning {
        eprintln!("gammares: warning: effective Rabi frequency above 0.1 ω₀; analytic result is outside its range");
    }
}

fn parity_or_default(order: u32, parity: Option<Parity>) -> Parity {
    parity.unwrap_or(Parity::of(order))
}

pub fn resonance(
    system: &str,
    order: u32,
    parity: Option<Parity>,
    ratio: f64,
    alpha: bool,
) -> Result<(), CliError> {
    let sys = preset_system(system)?;
    let corrections = Corrections {
        coupling: alpha,
        ..Corrections::default()
    };
    let sol = solve_resonance(
        &sys,
        order,
        parity_or_default(order, parity),
        ratio,
        corrections,
    )?;
    let mut out = sink(None)?;
    serde_json::to_writer_pretty(&mut out, &sol)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn scan(
    system: &str,
    order: u32,
    parity: Option<Parity>,
    r_min: f64,
    r_max: f64,
    steps: usize,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let sys = preset_system(system)?;
    let rows = scan_ratio(
        &sys,
        order,
        parity_or_default(order, parity),
        r_min,
        r_max,
        steps,
        Corrections::default(),
    )?;
    let mut out = sink(output.as_deref())?;
    write_scan_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn numeric_options(run: &Resolved, two_level: bool) -> IntegrateOptions<f64> {
    IntegrateOptions {
        drop_third: two_level,
        ..IntegrateOptions::default().with_steps(
            run.config
                .steps_per_cycle
                .unwrap_or(DEFAULT_STEPS_PER_CYCLE),
        )
    }
}

fn numeric_run(run: &Resolved, two_level: bool) -> Result<Trajectory64, CliError> {
    let traj = integrate(&run.system, &run.field, &numeric_options(run, two_level))?;
    warn_about(&traj);
    Ok(traj)
}

fn trajectory(run: &Resolved) -> Result<Trajectory64, CliError> {
    if run.config.method == Method::Numeric {
        return numeric_run(run, run.config.two_level);
    }
    if run.config.two_level {
        return Err(CliError::config(
            "two_level applies to the numeric method only",
        ));
    }
    let params = run.params()?;
    let spc = run
        .config
        .steps_per_cycle
        .unwrap_or(DEFAULT_STEPS_PER_CYCLE);
    let grid = TimeGrid::for_field(&run.field, spc)?;
    let rwa = rwa_trajectory(&params, &run.system, &run.field, grid)?;
    let traj = match run.config.method {
        Method::Avetissian => avetissian_correct(&params, &run.system, &run.field, &rwa)?,
        _ => rwa,
    };
    warn_about(&traj);
    Ok(traj)
}

pub fn simulate(config: &Path, output: Option<PathBuf>) -> Result<(), CliError> {
    let run = RunConfig::load(config)?.resolve()?;
    let traj = trajectory(&run)?;
    let path = output.or_else(|| run.config.output.trajectory.clone());
    let mut out = sink(path.as_deref())?;
    write_trajectory_csv(&traj, &run.system, &mut out)?;
    out.flush()?;
    Ok(())
}

pub struct SpectrumRequest {
    pub analytic: bool,
    pub two_level: bool,
    pub total: bool,
    pub threshold: Option<f64>,
    pub min_separation: Option<usize>,
    pub use_s: bool,
    pub harmonics: Option<f64>,
    pub output: Option<PathBuf>,
    pub peaks: Option<PathBuf>,
}

fn analytic_spectrum(run: &Resolved, omega_max: Option<f64>) -> Result<Spectrum64, CliError> {
    let field = run.square_field()?;
    let params = run.params()?;
    let spc = run
        .config
        .steps_per_cycle
        .unwrap_or(ANALYTIC_STEPS_PER_CYCLE);
    let grid = TimeGrid::for_field(&field, spc)?;
    Ok(coherent_spectrum(
        &analytic_dipole(&params, &run.system, grid)?,
        omega_max,
    )?)
}

fn peak_options(req: &SpectrumRequest, two_level: bool) -> PeakOptions<f64> {
    let base = if two_level {
        PeakOptions {
            rel_threshold: 1e-4,
            min_separation: 2,
            use_s: true,
        }
    } else {
        PeakOptions::default()
    };
    PeakOptions {
        rel_threshold: req.threshold.unwrap_or(base.rel_threshold),
        min_separation: req.min_separation.unwrap_or(base.min_separation),
        use_s: req.use_s || base.use_s,
    }
}

pub fn spectrum(config: &Path, req: SpectrumRequest) -> Result<(), CliError> {
    let run = RunConfig::load(config)?.resolve()?;
    let omega_max = req.harmonics.map(|h| h * run.field.omega0);
    let two_level = req.two_level || run.config.two_level;
    let spectrum = if req.analytic {
        analytic_spectrum(&run, omega_max)?
    } else if req.total {
        total_spectrum(
            &run.system,
            &run.field,
            &numeric_options(&run, two_level),
            omega_max,
        )?
    } else {
        let traj = numeric_run(&run, two_level)?;
        coherent_spectrum(&dipole_series(&traj, &run.system), omega_max)?
    };
    let peaks = find_peaks(&spectrum, &peak_options(&req, two_level && !req.analytic));

    let csv_path = req.output.or_else(|| run.config.output.spectrum.clone());
    let peaks_path = req.peaks.or_else(|| run.config.output.peaks.clone());
    let mut out = sink(csv_path.as_deref())?;
    spectrum.write_csv(&mut out)?;
    out.flush()?;
    drop(out);
    match (peaks_path, csv_path.is_some()) {
        (Some(p), _) => write_peaks(&peaks, Some(&p))?,
        (None, true) => write_peaks(&peaks, None)?,
        (None, false) => eprintln!(
            "gammares: {} peaks found; pass --peaks to save them",
            peaks.len()
        ),
    }
    Ok(())
}

fn write_peaks(peaks: &PeakList<f64>, path: Option<&Path>) -> Result<(), CliError> {
    let mut out = sink(path)?;
    writeln!(out, "{}", peaks.to_json()?)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TripTimes {
    analytic_cycles: f64,
    /// First return of p1 above 0.9 after dropping below 0.1.
    numeric_cycles: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PeakDiff {
    /// Peak positions in units of ω₀.
    numeric: Vec<f64>,
    analytic: Vec<f64>,
    matched: usize,
    only_numeric: Vec<f64>,
    only_analytic: Vec<f64>,
    /// Matching distance, a.u.
    tolerance: f64,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    order: u32,
    parity: Parity,
    omega0: f64,
    e0: f64,
    /// RMS of numeric minus analytic p1 over the first analytic trip (or the
    /// whole run if shorter).
    rms_population_deviation: f64,
    rms_window_cycles: f64,
    trip: TripTimes,
    peaks: PeakDiff,
}

fn peak_diff(
    numeric: &PeakList<f64>,
    analytic: &PeakList<f64>,
    tolerance: f64,
    omega0: f64,
) -> PeakDiff {
    let mut used = vec![false; analytic.peaks.len()];
    let mut matched = 0;
    let mut only_numeric = Vec::new();
    for p in &numeric.peaks {
        let best = analytic
            .peaks
            .iter()
            .enumerate()
            .filter(|(i, q)| !used[*i] && (q.omega - p.omega).abs() <= tolerance)
            .min_by(|a, b| {
                (a.1.omega - p.omega)
                    .abs()
                    .total_cmp(&(b.1.omega - p.omega).abs())
            });
        match best {
            Some((i, _)) => {
                used[i] = true;
                matched += 1;
            }
            None => only_numeric.push(p.omega / omega0),
        }
    }
    let only_analytic = analytic
        .peaks
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(q, _)| q.omega / omega0)
        .collect();
    PeakDiff {
        numeric: numeric.peaks.iter().map(|p| p.omega / omega0).collect(),
        analytic: analytic.peaks.iter().map(|p| p.omega / omega0).collect(),
        matched,
        only_numeric,
        only_analytic,
        tolerance,
    }
}

pub fn compare(config: &Path, output: Option<PathBuf>) -> Result<(), CliError> {
    let run = RunConfig::load(config)?.resolve()?;
    if run.config.two_level {
        return Err(CliError::config(
            "compare runs the three-level model; drop two_level",
        ));
    }
    let params = run.params()?;
    let square = run.square_field()?;

    let numeric = numeric_run(&run, false)?;
    let analytic = rwa_trajectory(&params, &run.system, &square, numeric.grid)?;
    let (_, analytic_trip) = full_trip_time(&params)?;
    let window = analytic_trip.min(run.field.duration_cycles);
    let stop = ((window * run.field.period() / numeric.grid.step) as usize).clamp(1, numeric.len());
    let sq: f64 = (0..stop)
        .map(|i| {
            (numeric.amplitudes[i][0].norm_sqr() - analytic.amplitudes[i][0].norm_sqr()).powi(2)
        })
        .sum();

    let ns = coherent_spectrum(&dipole_series(&numeric, &run.system), None)?;
    let grid = TimeGrid::for_field(&square, ANALYTIC_STEPS_PER_CYCLE)?;
    let asp = coherent_spectrum(&analytic_dipole(&params, &run.system, grid)?, None)?;
    let opts = PeakOptions::default();
    let diff = peak_diff(
        &find_peaks(&ns, &opts),
        &find_peaks(&asp, &opts),
        ns.resolution(),
        run.field.omega0,
    );

    let report = CompareReport {
        order: params.order,
        parity: params.parity,
        omega0: run.field.omega0,
        e0: run.field.e0,
        rms_population_deviation: (sq / stop as f64).sqrt(),
        rms_window_cycles: window,
        trip: TripTimes {
            analytic_cycles: analytic_trip,
            numeric_cycles: round_trip_cycles(&numeric, 0.1, 0.9),
        },
        peaks: diff,
    };
    let path = output.or_else(|| run.config.output.report.clone());
    let mut out = sink(path.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
