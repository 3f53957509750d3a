//! Scattered-light spectra of the induced dipole and peak analysis.
//!
//! The finite-time transform `F(ω) = ∫₀^{t_p} e^{iωt} d(t) dt` is evaluated
//! with trapezoid weights and a zero-padded inverse FFT four times longer than
//! the record, so the frequency grid is `(2π/t_p)/4`. No window is applied.
//! Peak separations and splittings are measured in resolution bins of
//! `2π/t_p`.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    integrate, sci, Amplitudes, DipoleSeries, IntegrateOptions, TimeGrid, Trajectory,
};
use crate::error::{Error, Result};
use crate::model::{DriveField, ThreeLevelSystem};
use crate::scalar::Real;

/// Frequency oversampling relative to `2π/t_p`.
pub const OVERSAMPLING: usize = 4;
/// Default upper frequency, in units of ω₀.
pub const DEFAULT_OMEGA_MAX_HARMONICS: f64 = 12.0;
/// Minimum number of resolution bins a doublet splitting must span.
pub const MIN_RESOLVED_BINS: f64 = 3.0;
/// Peaks closer than this many resolution bins to a harmonic count as its
/// central line.
pub const CENTRAL_LINE_BINS: f64 = 1.0;

pub const SPECTRUM_CSV_HEADER: &str = "omega_au,omega_over_omega0,intensity,intensity_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Spectrum<T: Real> {
    /// `k·Δω` for `k = 1, 2, ...`.
    pub omega_grid: Vec<T>,
    /// `S(ω)/ω⁴ = |F(ω)|²`.
    pub intensity: Vec<T>,
    /// `S(ω) = ω⁴ |F(ω)|²`.
    pub intensity_s: Vec<T>,
    pub t_p: T,
    pub omega0: T,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.omega_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_grid.is_empty()
    }

    /// Natural resolution `2π/t_p`.
    pub fn resolution(&self) -> T {
        T::TAU() / self.t_p
    }

    /// Grid spacing, `resolution / 4`.
    pub fn grid_step(&self) -> T {
        self.resolution() / T::from_count(OVERSAMPLING)
    }

    /// The selected intensity column.
    pub fn values(&self, use_s: bool) -> &[T] {
        if use_s {
            &self.intensity_s
        } else {
            &self.intensity
        }
    }

    /// Pointwise sum of two spectra on the same grid.
    pub fn add(&self, other: &Spectrum<T>) -> Result<Spectrum<T>> {
        if self.len() != other.len() || self.t_p != other.t_p {
            return Err(Error::invalid("spectra are on different grids"));
        }
        let sum = |a: &[T], b: &[T]| a.iter().zip(b).map(|(x, y)| *x + *y).collect();
        Ok(Spectrum {
            omega_grid: self.omega_grid.clone(),
            intensity: sum(&self.intensity, &other.intensity),
            intensity_s: sum(&self.intensity_s, &other.intensity_s),
            t_p: self.t_p,
            omega0: self.omega0,
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SPECTRUM_CSV_HEADER}")?;
        for i in 0..self.len() {
            let w = self.omega_grid[i].to_f64_lossy();
            writeln!(
                out,
                "{},{},{},{}",
                sci(w),
                sci(w / self.omega0.to_f64_lossy()),
                sci(self.intensity[i].to_f64_lossy()),
                sci(self.intensity_s[i].to_f64_lossy())
            )?;
        }
        Ok(())
    }
}

fn omega_limit<T: Real>(omega0: T, omega_max: Option<T>) -> Result<T> {
    let w = omega_max.unwrap_or(omega0 * T::lit(DEFAULT_OMEGA_MAX_HARMONICS));
    if !(w > T::zero()) || !w.is_finite() {
        return Err(Error::invalid("omega_max must be positive"));
    }
    Ok(w)
}

// |∫ e^{iωt} s(t) dt|² on the oversampled grid, k = 1..=kmax
fn transform_power<T: Real>(
    samples: &[Complex<T>],
    grid: TimeGrid<T>,
    omega_max: T,
) -> (Vec<T>, Vec<T>) {
    let n = samples.len();
    let len = OVERSAMPLING * (n - 1);
    let dw = T::TAU() / (T::from_count(len) * grid.step);
    let nyquist = len / 2;
    let kmax = ((omega_max / dw).floor().to_usize().unwrap_or(usize::MAX)).min(nyquist);

    let half = T::lit(0.5);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    for (i, s) in samples.iter().enumerate() {
        let w = if i == 0 || i == n - 1 { half } else { T::one() };
        buf[i] = s * (w * grid.step);
    }
    // the inverse transform carries e^{+i 2π jk/len}
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    let omega = (1..=kmax).map(|k| T::from_count(k) * dw).collect();
    let power = buf[1..=kmax].iter().map(|c| c.norm_sqr()).collect();
    (omega, power)
}

fn assemble<T: Real>(omega: Vec<T>, intensity: Vec<T>, t_p: T, omega0: T) -> Spectrum<T> {
    let intensity_s = omega
        .iter()
        .zip(&intensity)
        .map(|(w, i)| {
            let w2 = *w * *w;
            w2 * w2 * *i
        })
        .collect();
    Spectrum {
        omega_grid: omega,
        intensity,
        intensity_s,
        t_p,
        omega0,
    }
}

/// Coherent spectrum `|∫₀^{t_p} e^{iωt} d(t) dt|²` up to `omega_max`
/// (default 12ω₀).
pub fn coherent_spectrum<T: Real>(
    dipole: &DipoleSeries<T>,
    omega_max: Option<T>,
) -> Result<Spectrum<T>> {
    if dipole.values.len() != dipole.grid.len || dipole.grid.len < 2 {
        return Err(Error::invalid(
            "dipole series needs at least two samples on its grid",
        ));
    }
    let w_max = omega_limit(dipole.omega0, omega_max)?;
    let samples: Vec<_> = dipole
        .values
        .iter()
        .map(|v| Complex::new(*v, T::zero()))
        .collect();
    let (omega, power) = transform_power(&samples, dipole.grid, w_max);
    Ok(assemble(
        omega,
        power,
        dipole.grid.duration(),
        dipole.omega0,
    ))
}

// ⟨Ψ_j|ez|Ψ₁⟩ from the j-th and the first trajectory
fn matrix_element<T: Real>(
    system: &ThreeLevelSystem<T>,
    bj: &Amplitudes<T>,
    b1: &Amplitudes<T>,
) -> Complex<T> {
    (bj[0].conj() * b1[1] + bj[1].conj() * b1[0]) * system.mu12
        + (bj[1].conj() * b1[2] + bj[2].conj() * b1[1]) * system.mu23
}

/// Total spectrum `Σ_j |∫ e^{iωt} ⟨Ψ_j|ez|Ψ₁⟩ dt|²` from three integrations
/// started in each level. `options.initial_state` is ignored.
pub fn total_spectrum<T: Real>(
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
    options: &IntegrateOptions<T>,
    omega_max: Option<T>,
) -> Result<Spectrum<T>> {
    let w_max = omega_limit(field.omega0, omega_max)?;
    let runs: Vec<Trajectory<T>> = (1..=3usize)
        .into_par_iter()
        .map(|j| integrate(system, field, &options.with_initial_state(j)))
        .collect::<Result<_>>()?;
    let first = &runs[0];
    let parts: Vec<(Vec<T>, Vec<T>)> = runs
        .par_iter()
        .map(|run| {
            let samples: Vec<_> = run
                .amplitudes
                .iter()
                .zip(&first.amplitudes)
                .map(|(bj, b1)| matrix_element(system, bj, b1))
                .collect();
            transform_power(&samples, first.grid, w_max)
        })
        .collect();
    let omega = parts[0].0.clone();
    let mut total = vec![T::zero(); omega.len()];
    for (_, power) in &parts {
        for (acc, p) in total.iter_mut().zip(power) {
            *acc += *p;
        }
    }
    Ok(assemble(omega, total, first.grid.duration(), field.omega0))
}

/// Nearest odd multiple of ω₀.
pub fn nearest_odd_harmonic<T: Real>(omega: T, omega0: T) -> i64 {
    let x = (omega / omega0).to_f64_lossy();
    2 * ((x - 1.0) / 2.0).round() as i64 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Peak<T: Real> {
    #[serde(rename = "omega_au")]
    pub omega: T,
    pub height: T,
    #[serde(rename = "harmonic")]
    pub nearest_odd_harmonic: i64,
    /// Index of the doublet partner in the same list.
    #[serde(rename = "partner")]
    pub partner_index: Option<usize>,
}

/// Peaks sorted by height, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PeakList<T: Real> {
    pub peaks: Vec<Peak<T>>,
    /// Resolution bin `2π/t_p` of the source spectrum.
    #[serde(skip)]
    pub resolution: T,
    #[serde(skip)]
    pub omega0: T,
}

impl<T: Real> PeakList<T> {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// JSON array of `{omega_au, harmonic, height, partner}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.peaks)?)
    }

    /// Peaks with a doublet partner.
    pub fn paired(&self) -> impl Iterator<Item = &Peak<T>> {
        self.peaks.iter().filter(|p| p.partner_index.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PeakOptions<T: Real> {
    /// Detection threshold relative to the largest value.
    pub rel_threshold: T,
    /// A peak must dominate this many resolution bins on either side.
    pub min_separation: usize,
    /// Search `intensity_s` instead of `intensity`.
    pub use_s: bool,
}

impl<T: Real> Default for PeakOptions<T> {
    fn default() -> Self {
        PeakOptions {
            rel_threshold: T::lit(1e-3),
            min_separation: 2,
            use_s: false,
        }
    }
}

/// Local maxima above `rel_threshold·max`, each dominating its
/// `±min_separation` neighbourhood, with doublet partners assigned.
pub fn find_peaks<T: Real>(spectrum: &Spectrum<T>, options: &PeakOptions<T>) -> PeakList<T> {
    let values = spectrum.values(options.use_s);
    let resolution = spectrum.resolution();
    let omega0 = spectrum.omega0;
    let top = values.iter().copied().fold(T::zero(), T::max);
    let mut peaks = Vec::new();
    if top > T::zero() {
        let threshold = options.rel_threshold * top;
        let sep = options.min_separation.max(1) * OVERSAMPLING;
        for i in 0..values.len() {
            let v = values[i];
            if v < threshold || v == T::zero() {
                continue;
            }
            let lo = i.saturating_sub(sep);
            let hi = (i + sep).min(values.len() - 1);
            // ties resolve to the leftmost sample
            let dominant = (lo..i).all(|j| values[j] < v) && (i + 1..=hi).all(|j| values[j] <= v);
            if dominant {
                peaks.push(Peak {
                    omega: spectrum.omega_grid[i],
                    height: v,
                    nearest_odd_harmonic: nearest_odd_harmonic(spectrum.omega_grid[i], omega0),
                    partner_index: None,
                });
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.height
            .partial_cmp(&a.height)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    assign_partners(&mut peaks, omega0, resolution);
    PeakList {
        peaks,
        resolution,
        omega0,
    }
}

// Within each harmonic group, a line within CENTRAL_LINE_BINS of hω₀ stays
// single; otherwise the strongest line below pairs with the strongest above.
fn assign_partners<T: Real>(peaks: &mut [Peak<T>], omega0: T, resolution: T) {
    let central = T::lit(CENTRAL_LINE_BINS) * resolution;
    let mut harmonics: Vec<i64> = peaks.iter().map(|p| p.nearest_odd_harmonic).collect();
    harmonics.sort_unstable();
    harmonics.dedup();
    for h in harmonics {
        let center = T::from_i64(h).unwrap_or_else(T::zero) * omega0;
        // peaks are sorted by height, so the first hit on each side is the strongest
        let below = peaks
            .iter()
            .position(|p| p.nearest_odd_harmonic == h && p.omega < center - central);
        let above = peaks
            .iter()
            .position(|p| p.nearest_odd_harmonic == h && p.omega > center + central);
        if let (Some(a), Some(b)) = (below, above) {
            peaks[a].partner_index = Some(b);
            peaks[b].partner_index = Some(a);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Doublet<T: Real> {
    pub harmonic: i64,
    /// `|ω_hi − ω_lo|`, or `None` for a line without partner.
    pub separation: Option<T>,
    pub omega_lo: T,
    pub omega_hi: T,
}

/// Splittings of the paired peaks of every harmonic group holding more than
/// one peak; remaining peaks of such groups are reported without separation.
pub fn doublet_splittings<T: Real>(peaks: &PeakList<T>) -> Vec<Doublet<T>> {
    let mut out = Vec::new();
    for (i, p) in peaks.peaks.iter().enumerate() {
        let group = peaks
            .peaks
            .iter()
            .filter(|q| q.nearest_odd_harmonic == p.nearest_odd_harmonic)
            .count();
        if group < 2 {
            continue;
        }
        match p.partner_index {
            Some(j) if j > i => {
                let q = peaks.peaks[j];
                let (lo, hi) = if p.omega < q.omega {
                    (p.omega, q.omega)
                } else {
                    (q.omega, p.omega)
                };
                out.push(Doublet {
                    harmonic: p.nearest_odd_harmonic,
                    separation: Some(hi - lo),
                    omega_lo: lo,
                    omega_hi: hi,
                });
            }
            Some(_) => {}
            None => out.push(Doublet {
                harmonic: p.nearest_odd_harmonic,
                separation: None,
                omega_lo: p.omega,
                omega_hi: p.omega,
            }),
        }
    }
    out.sort_by(|a, b| {
        (a.harmonic, a.separation.is_none())
            .cmp(&(b.harmonic, b.separation.is_none()))
            .then(
                a.omega_lo
                    .partial_cmp(&b.omega_lo)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
    out
}

/// Refuses doublet analysis when the expected splitting `4|a_K|` spans fewer
/// than three bins of `spectrum`.
pub fn check_resolution<T: Real>(spectrum: &Spectrum<T>, a_k: T) -> Result<()> {
    let splitting = T::lit(4.0) * a_k.abs();
    let bins = (splitting / spectrum.resolution()).to_f64_lossy();
    if bins < MIN_RESOLVED_BINS {
        return Err(Error::Unresolved {
            splitting: splitting.to_f64_lossy(),
            bins,
        });
    }
    Ok(())
}

/// [`doublet_splittings`] behind the resolution guard.
pub fn resolved_doublets<T: Real>(
    spectrum: &Spectrum<T>,
    peaks: &PeakList<T>,
    a_k: T,
) -> Result<Vec<Doublet<T>>> {
    check_resolution(spectrum, a_k)?;
    Ok(doublet_splittings(peaks))
}
