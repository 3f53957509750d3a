//! Resonant drive parameters for a K-photon transition.
//!
//! At fixed `r = M_R/ω₀` the Stark shifts scale linearly with ω₀ and the
//! near-degeneracy shift `Δ` depends on `(ω₃₂, r)` only, so `δ_eff = 0`
//! solves in closed form:
//!
//! ```text
//! ω₀ = (ω_target ± Δ) / (K + σ),   σ = (2Δ_f + Δ_G)/ω₀
//! ```
//!
//! `Δ_H ∝ 1/ω₀²` breaks the linearity and is handled by fixed-point iteration
//! when enabled.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    full_trip_time, neardeg_corrections, stark_shifts, Corrections, Parity, ResonanceParams,
};
use crate::dynamics::sci;
use crate::error::{Error, Result};
use crate::model::{DriveField, Envelope, ThreeLevelSystem};
use crate::scalar::Real;
use crate::units::intensity_w_cm2;

/// Upper bound for `|a_K/ω₀|` and `Ā/ω₀`.
pub const APPLICABILITY_BOUND: f64 = 0.1;
/// Relative distance from the bound inside which a case is flagged.
pub const BOUNDARY_BAND: f64 = 0.2;

const FIXED_POINT_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Applicability<T: Real> {
    pub a_over_omega: T,
    pub rabi_eff_over_omega: T,
    /// Both ratios are at most [`APPLICABILITY_BOUND`].
    pub passed: bool,
    /// `|a_K/ω₀|` lies within [`BOUNDARY_BAND`] of the bound.
    pub near_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ResonanceSolution<T: Real> {
    pub system: ThreeLevelSystem<T>,
    pub order: u32,
    pub parity: Parity,
    /// Signed `M_R/ω₀ = μ₂₃E₀/ω₀`.
    pub ratio_r: T,
    pub omega0: T,
    pub e0: T,
    pub intensity_w_cm2: f64,
    pub params: ResonanceParams<T>,
    pub applicability: Applicability<T>,
}

impl<T: Real> ResonanceSolution<T> {
    /// Drive field at the solved operating point.
    pub fn field(&self, envelope: Envelope<T>, duration_cycles: T) -> Result<DriveField<T>> {
        DriveField::new(self.e0, self.omega0, envelope, duration_cycles)
    }

    /// `π/Ā` in optical cycles.
    pub fn trip_cycles(&self) -> Result<T> {
        full_trip_time(&self.params).map(|(_, c)| c)
    }
}

fn unit_field<T: Real>(system: &ThreeLevelSystem<T>, r: T, omega0: T) -> Result<DriveField<T>> {
    DriveField::new(
        r.abs() * omega0 / system.mu23.abs(),
        omega0,
        Envelope::Square,
        T::one(),
    )
}

/// Solves `δ_eff = 0` for ω₀ at fixed `|r| = |M_R/ω₀|`.
pub fn solve_resonance<T: Real>(
    system: &ThreeLevelSystem<T>,
    order: u32,
    parity: Parity,
    ratio_r: T,
    corrections: Corrections,
) -> Result<ResonanceSolution<T>> {
    system.validate()?;
    parity.check(order)?;
    if !(ratio_r != T::zero()) || !ratio_r.is_finite() {
        return Err(Error::invalid("ratio_r must be finite and nonzero"));
    }
    if system.mu23 == T::zero() {
        return Err(Error::invalid("mu23 = 0 leaves M_R/omega0 undefined"));
    }
    let r = ratio_r.abs();
    let one = T::one();
    let kk = T::from_count(order as usize);

    // everything but Δ_H is evaluated once at ω₀ = 1
    let unit = unit_field(system, r, one)?;
    let sigma = if corrections.avetissian {
        let (sf, sg) = stark_shifts(order, parity, system, &unit, one)?;
        sf + sf + sg
    } else {
        T::zero()
    };
    let denom = kk + sigma;
    if !(denom > T::zero()) {
        return Err(Error::Unphysical(denom.to_f64_lossy()));
    }
    let nd = neardeg_corrections(order, parity, system, &unit, one)?;
    let shift = match (corrections.neardeg, parity) {
        (false, _) => T::zero(),
        (true, Parity::Odd) => nd.delta,
        (true, Parity::Even) => -nd.delta,
    };
    let target = match parity {
        Parity::Odd => system.omega21,
        Parity::Even => system.omega31(),
    };
    let mut omega0 = (target + shift) / denom;
    if corrections.avetissian && corrections.stark_h && system.omega32 != T::zero() {
        // Δ_H(ω₀) = Δ_H(1)/ω₀²
        let h1 = nd.stark_h;
        for _ in 0..FIXED_POINT_ITERATIONS {
            let next = (target + shift + h1 / (omega0 * omega0)) / denom;
            let done = (next - omega0).abs() <= T::epsilon() * next.abs();
            omega0 = next;
            if done {
                break;
            }
        }
    }
    if !(omega0 > T::zero()) || !omega0.is_finite() {
        return Err(Error::Unphysical(omega0.to_f64_lossy()));
    }

    let field = unit_field(system, r, omega0)?;
    let params = ResonanceParams::compute(order, parity, system, &field, corrections)?;
    let applicability = applicability_of(&params);
    Ok(ResonanceSolution {
        system: system.clone(),
        order,
        parity,
        ratio_r: params.ratio_r,
        omega0,
        e0: field.e0,
        intensity_w_cm2: intensity_w_cm2(field.e0.to_f64_lossy()),
        params,
        applicability,
    })
}

fn applicability_of<T: Real>(params: &ResonanceParams<T>) -> Applicability<T> {
    let a = (params.a_k / params.omega0).abs();
    let rabi = (params.rabi_eff / params.omega0).abs();
    let bound = T::lit(APPLICABILITY_BOUND);
    Applicability {
        a_over_omega: a,
        rabi_eff_over_omega: rabi,
        passed: a <= bound && rabi <= bound,
        near_boundary: (a - bound).abs() <= T::lit(BOUNDARY_BAND) * bound,
    }
}

/// `|a_K/ω₀|` and `Ā/ω₀` against the applicability bound.
pub fn applicability<T: Real>(solution: &ResonanceSolution<T>) -> Applicability<T> {
    applicability_of(&solution.params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ScanRow<T: Real> {
    pub r: T,
    pub omega0: T,
    pub e0: T,
    pub intensity_w_cm2: f64,
    pub a_over_omega: T,
    /// Infinite when the coupling vanishes.
    pub trip_cycles: T,
}

pub const SCAN_CSV_HEADER: &str = "r,omega0,e0,intensity_w_cm2,a_over_omega,trip_cycles";

/// One resonance solve per point of the uniform grid `r_min..=r_max`.
pub fn scan_ratio<T: Real>(
    system: &ThreeLevelSystem<T>,
    order: u32,
    parity: Parity,
    r_min: T,
    r_max: T,
    steps: usize,
    corrections: Corrections,
) -> Result<Vec<ScanRow<T>>> {
    if !(r_min > T::zero() && r_max > r_min) {
        return Err(Error::invalid("scan needs 0 < r_min < r_max"));
    }
    if steps < 2 {
        return Err(Error::invalid("scan needs at least two points"));
    }
    let span = r_max - r_min;
    let last = T::from_count(steps - 1);
    (0..steps)
        .into_par_iter()
        .map(|i| {
            let r = r_min + span * T::from_count(i) / last;
            let sol = solve_resonance(system, order, parity, r, corrections)?;
            let trip = match sol.trip_cycles() {
                Ok(c) => c,
                Err(Error::NoResonance) => T::infinity(),
                Err(e) => return Err(e),
            };
            Ok(ScanRow {
                r,
                omega0: sol.omega0,
                e0: sol.e0,
                intensity_w_cm2: sol.intensity_w_cm2,
                a_over_omega: sol.applicability.a_over_omega,
                trip_cycles: trip,
            })
        })
        .collect()
}

pub fn write_scan_csv<T: Real, W: Write>(rows: &[ScanRow<T>], mut out: W) -> Result<()> {
    writeln!(out, "{SCAN_CSV_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            sci(row.r.to_f64_lossy()),
            sci(row.omega0.to_f64_lossy()),
            sci(row.e0.to_f64_lossy()),
            sci(row.intensity_w_cm2),
            sci(row.a_over_omega.to_f64_lossy()),
            sci(row.trip_cycles.to_f64_lossy())
        )?;
    }
    Ok(())
}
