//! Physical system, drive field and the quantities derived from them.
//!
//! Energies use the gauge `ω₁ = 0`, `ω₂ = ω₂₁`, `ω₃ = ω₂₁ + ω₃₂`; everything is
//! in atomic units (ħ = e = mₑ = 1).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Three-level Γ system: ground state |1⟩ dipole-coupled to |2⟩, which is
/// dipole-coupled to the (nearly) degenerate |3⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ThreeLevelSystem<T: Real> {
    pub omega21: T,
    /// Excited-state splitting ω₃ − ω₂; zero for exact degeneracy.
    pub omega32: T,
    pub mu12: T,
    pub mu23: T,
    #[serde(default)]
    pub label: String,
}

/// Built-in parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 1S, 2P, 2S of atomic hydrogen.
    Hydrogen,
    /// Three lowest levels of a 1D A₂⁴⁺ molecular-ion model at R = 3.5 a.u.
    IonA24Plus,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hydrogen" | "h" => Ok(Preset::Hydrogen),
            "ion_a2_4plus" | "ion" | "a2_4plus" => Ok(Preset::IonA24Plus),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Hydrogen => "hydrogen",
            Preset::IonA24Plus => "ion_a2_4plus",
        })
    }
}

/// Looks up a preset by name.
pub fn preset_system<T: Real>(name: &str) -> Result<ThreeLevelSystem<T>> {
    Ok(ThreeLevelSystem::preset(name.parse()?))
}

impl<T: Real> ThreeLevelSystem<T> {
    pub fn new(omega21: T, omega32: T, mu12: T, mu23: T, label: impl Into<String>) -> Result<Self> {
        let sys = ThreeLevelSystem {
            omega21,
            omega32,
            mu12,
            mu23,
            label: label.into(),
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn preset(preset: Preset) -> Self {
        let (w21, w32, m12, m23) = match preset {
            Preset::Hydrogen => (0.375, 0.0, 0.745, -3.0),
            Preset::IonA24Plus => (0.6685, 0.0167, 0.503, 3.033),
        };
        ThreeLevelSystem {
            omega21: T::lit(w21),
            omega32: T::lit(w32),
            mu12: T::lit(m12),
            mu23: T::lit(m23),
            label: preset.to_string(),
        }
    }

    /// Checks the structural invariants. `mu23 = 0` is accepted here; the
    /// integrator only allows it in two-level mode.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega21, self.omega32, self.mu12, self.mu23]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("system parameters must be finite"));
        }
        if self.omega21 <= T::zero() {
            return Err(Error::invalid("omega21 must be positive"));
        }
        if self.omega32.abs() >= self.omega21 {
            return Err(Error::invalid("|omega32| must be smaller than omega21"));
        }
        if self.mu12 == T::zero() {
            return Err(Error::invalid("mu12 must be non-zero"));
        }
        Ok(())
    }

    pub fn omega31(&self) -> T {
        self.omega21 + self.omega32
    }

    /// Level energies `[ω₁, ω₂, ω₃]` in the `ω₁ = 0` gauge.
    pub fn energies(&self) -> [T; 3] {
        [T::zero(), self.omega21, self.omega31()]
    }

    /// Signed ratio `μ₁₂/μ₂₃ = Ω_R/M_R`.
    pub fn mu_ratio(&self) -> T {
        self.mu12 / self.mu23
    }
}

/// Switching function `f(t)` of the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", bound = "")]
pub enum Envelope<T: Real> {
    Square,
    /// `sin²(ω₀t / (4 n_on))` until the argument reaches π/2, then 1.
    #[serde(alias = "sin_sq", alias = "sinsq")]
    SinSqTurnOn {
        turnon_cycles: T,
    },
}

impl<T: Real> Envelope<T> {
    pub fn is_square(&self) -> bool {
        matches!(self, Envelope::Square)
    }

    /// `f(t)` without input validation.
    #[inline]
    pub fn at(&self, omega0: T, t: T) -> T {
        match *self {
            Envelope::Square => T::one(),
            Envelope::SinSqTurnOn { turnon_cycles } => {
                let arg = omega0 * t / (T::lit(4.0) * turnon_cycles);
                if arg >= T::FRAC_PI_2() {
                    T::one()
                } else if arg <= T::zero() {
                    T::zero()
                } else {
                    let s = arg.sin();
                    s * s
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let Envelope::SinSqTurnOn { turnon_cycles } = *self {
            if !(turnon_cycles > T::zero()) || !turnon_cycles.is_finite() {
                return Err(Error::invalid("turnon_cycles must be positive"));
            }
        }
        Ok(())
    }
}

/// `f(t)` for `t >= 0`.
pub fn envelope_value<T: Real>(envelope: &Envelope<T>, omega0: T, t: T) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::invalid("envelope time must be non-negative"));
    }
    Ok(envelope.at(omega0, t))
}

/// Linearly polarized field `E(t) = E₀ f(t) cos ω₀t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DriveField<T: Real> {
    pub e0: T,
    pub omega0: T,
    pub envelope: Envelope<T>,
    pub duration_cycles: T,
}

impl<T: Real> DriveField<T> {
    pub fn new(e0: T, omega0: T, envelope: Envelope<T>, duration_cycles: T) -> Result<Self> {
        let field = DriveField {
            e0,
            omega0,
            envelope,
            duration_cycles,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e0 >= T::zero()) || !self.e0.is_finite() {
            return Err(Error::invalid("e0 must be finite and non-negative"));
        }
        if !(self.omega0 > T::zero()) || !self.omega0.is_finite() {
            return Err(Error::invalid("omega0 must be positive"));
        }
        if !(self.duration_cycles > T::zero()) || !self.duration_cycles.is_finite() {
            return Err(Error::invalid("duration_cycles must be positive"));
        }
        self.envelope.validate()
    }

    /// Optical period `T = 2π/ω₀`.
    pub fn period(&self) -> T {
        T::TAU() / self.omega0
    }

    /// Pulse duration `t_p`.
    pub fn duration(&self) -> T {
        self.duration_cycles * self.period()
    }
}

/// Rabi quantities implied by a system/field pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DerivedDrive<T: Real> {
    /// Ω_R = μ₁₂E₀.
    pub rabi_omega: T,
    /// M_R = μ₂₃E₀.
    pub rabi_m: T,
    /// r = M_R/ω₀.
    pub ratio_r: T,
    /// Ω_R/M_R = μ₁₂/μ₂₃.
    pub mu_ratio: T,
    pub period: T,
}

pub fn derive_drive<T: Real>(
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
) -> DerivedDrive<T> {
    let rabi_m = system.mu23 * field.e0;
    DerivedDrive {
        rabi_omega: system.mu12 * field.e0,
        rabi_m,
        ratio_r: rabi_m / field.omega0,
        mu_ratio: system.mu_ratio(),
        period: field.period(),
    }
}

/// Phase integral `φ(t) = ∫₀ᵗ M(t′) dt′` with the default integrator grid
/// (1024 steps per cycle).
pub fn phase_phi<T: Real>(system: &ThreeLevelSystem<T>, field: &DriveField<T>, t: T) -> Result<T> {
    phase_phi_on_grid(system, field, t, 1024)
}

/// [`phase_phi`] with an explicit grid density. The square envelope uses the
/// closed form `(M_R/ω₀) sin ω₀t`; other envelopes use the trapezoid rule on the
/// grid `h = T/steps_per_cycle`, finishing with a partial step.
pub fn phase_phi_on_grid<T: Real>(
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
    t: T,
    steps_per_cycle: usize,
) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::invalid("phase time must be non-negative"));
    }
    if steps_per_cycle == 0 {
        return Err(Error::invalid("steps_per_cycle must be positive"));
    }
    let m_r = system.mu23 * field.e0;
    let w = field.omega0;
    if field.envelope.is_square() {
        return Ok(m_r / w * (w * t).sin());
    }
    let m = |s: T| m_r * field.envelope.at(w, s) * (w * s).cos();
    let h = field.period() / T::from_count(steps_per_cycle);
    let full = (t / h).floor().to_usize().unwrap_or(0);
    let half = T::lit(0.5);
    let mut acc = T::zero();
    let mut prev = m(T::zero());
    for i in 1..=full {
        let cur = m(T::from_count(i) * h);
        acc += half * h * (prev + cur);
        prev = cur;
    }
    let t_full = T::from_count(full) * h;
    let rest = t - t_full;
    if rest > T::zero() {
        acc += half * rest * (prev + m(t));
    }
    Ok(acc)
}
