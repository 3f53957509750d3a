//! Direct integration of the amplitude equations
//!
//! ```text
//! i ḃ₁ = ω₁ b₁ − Ω(t) b₂
//! i ḃ₂ = ω₂ b₂ − Ω(t) b₁ − M(t) b₃
//! i ḃ₃ = ω₃ b₃ − M(t) b₂
//! ```
//!
//! with `Ω(t) = Ω_R f(t) cos ω₀t`, `M(t) = M_R f(t) cos ω₀t`, by classic
//! fixed-step RK4 on the complex 3-vector.

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DriveField, ThreeLevelSystem};
use crate::scalar::Real;

pub const DEFAULT_STEPS_PER_CYCLE: usize = 1024;
pub const MIN_STEPS_PER_CYCLE: usize = 256;
/// Upper bound on `duration_cycles · steps_per_cycle`.
pub const MAX_TOTAL_STEPS: f64 = 1e9;
/// Norm drift that turns the quality flag into a hard error.
pub const NORM_FAILURE_LIMIT: f64 = 1e-6;

pub type Amplitudes<T> = [Complex<T>; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IntegrateOptions<T: Real> {
    pub steps_per_cycle: usize,
    /// Switch off the 2–3 coupling, leaving state 3 inert (two-level mode).
    pub drop_third: bool,
    /// Initially populated level, 1-based.
    pub initial_state: usize,
    /// Norm deviation above which the trajectory is flagged.
    pub norm_tolerance: T,
    /// Constant added to all three level energies.
    pub energy_offset: T,
}

impl<T: Real> Default for IntegrateOptions<T> {
    fn default() -> Self {
        IntegrateOptions {
            steps_per_cycle: DEFAULT_STEPS_PER_CYCLE,
            drop_third: false,
            initial_state: 1,
            norm_tolerance: T::lit(1e-8),
            energy_offset: T::zero(),
        }
    }
}

impl<T: Real> IntegrateOptions<T> {
    pub fn two_level() -> Self {
        IntegrateOptions {
            drop_third: true,
            ..Default::default()
        }
    }

    pub fn with_steps(mut self, steps_per_cycle: usize) -> Self {
        self.steps_per_cycle = steps_per_cycle;
        self
    }

    pub fn with_initial_state(mut self, level: usize) -> Self {
        self.initial_state = level;
        self
    }
}

/// Uniform grid `t_i = i·step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TimeGrid<T: Real> {
    pub step: T,
    pub len: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(step: T, len: usize) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() || len < 2 {
            return Err(Error::invalid(
                "time grid needs a positive step and at least two points",
            ));
        }
        Ok(TimeGrid { step, len })
    }

    /// Grid covering `[0, field.duration()]` with `steps_per_cycle` points per
    /// optical period (rounded so the last point lands on `t_p`).
    pub fn for_field(field: &DriveField<T>, steps_per_cycle: usize) -> Result<Self> {
        let steps = (field.duration_cycles * T::from_count(steps_per_cycle))
            .round()
            .to_usize()
            .unwrap_or(0)
            .max(1);
        TimeGrid::new(field.duration() / T::from_count(steps), steps + 1)
    }

    #[inline]
    pub fn at(&self, i: usize) -> T {
        T::from_count(i) * self.step
    }

    pub fn duration(&self) -> T {
        self.at(self.len - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len).map(move |i| self.at(i))
    }
}

/// How a trajectory was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Numeric,
    Rwa,
    Avetissian,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub grid: TimeGrid<T>,
    pub amplitudes: Vec<Amplitudes<T>>,
    pub system: ThreeLevelSystem<T>,
    pub field: DriveField<T>,
    pub method: Method,
    /// Options of the numerical run; `None` for analytic trajectories.
    pub options: Option<IntegrateOptions<T>>,
    pub max_norm_deviation: T,
    /// Norm drift exceeded `norm_tolerance` (but stayed below the hard limit).
    pub norm_warning: bool,
    /// Analytic applicability bound (`Ā/ω₀ <= 0.1`) violated.
    pub applicability_warning: bool,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        self.grid.at(i)
    }
}

#[inline]
fn norm_sqr<T: Real>(b: &Amplitudes<T>) -> T {
    b[0].norm_sqr() + b[1].norm_sqr() + b[2].norm_sqr()
}

/// Integrates the three amplitude equations over `[0, t_p]`.
///
/// Classic RK4 with a fixed step of `T/steps_per_cycle`, applied in the
/// interaction picture `c_j = b_j e^{iω_j t}`; stored amplitudes are `b_j`.
pub fn integrate<T: Real>(
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
    options: &IntegrateOptions<T>,
) -> Result<Trajectory<T>> {
    system.validate()?;
    field.validate()?;
    if options.steps_per_cycle < MIN_STEPS_PER_CYCLE {
        return Err(Error::invalid(format!(
            "steps_per_cycle must be at least {MIN_STEPS_PER_CYCLE}"
        )));
    }
    if !(1..=3).contains(&options.initial_state) {
        return Err(Error::invalid("initial_state must be 1, 2 or 3"));
    }
    if system.mu23 == T::zero() && !options.drop_third {
        return Err(Error::invalid("mu23 = 0 is only allowed in two-level mode"));
    }
    let requested = field.duration_cycles.to_f64_lossy() * options.steps_per_cycle as f64;
    if requested > MAX_TOTAL_STEPS {
        return Err(Error::ResourceGuard {
            requested,
            limit: MAX_TOTAL_STEPS,
        });
    }

    let grid = TimeGrid::for_field(field, options.steps_per_cycle)?;
    let h = grid.step;
    let energies = system.energies().map(|e| e + options.energy_offset);
    let w21 = system.omega21;
    let w32 = system.omega32;
    let rabi_omega = system.mu12 * field.e0;
    let rabi_m = if options.drop_third {
        T::zero()
    } else {
        system.mu23 * field.e0
    };
    let omega0 = field.omega0;
    let env = field.envelope;
    let i_unit = Complex::new(T::zero(), T::one());

    // interaction picture c_j = b_j e^{iω_j t}: the diagonal is exact and only
    // the couplings are stepped
    let rhs = |t: T, c: &Amplitudes<T>| -> Amplitudes<T> {
        let drive = env.at(omega0, t) * (omega0 * t).cos();
        let e12 = Complex::from_polar(drive, -w21 * t);
        let e23 = Complex::from_polar(drive, -w32 * t);
        let om = e12 * rabi_omega;
        let m = e23 * rabi_m;
        [
            i_unit * om * c[1],
            i_unit * (om.conj() * c[0] + m * c[2]),
            i_unit * m.conj() * c[1],
        ]
    };
    let axpy = |b: &Amplitudes<T>, s: T, k: &Amplitudes<T>| -> Amplitudes<T> {
        [b[0] + k[0] * s, b[1] + k[1] * s, b[2] + k[2] * s]
    };
    let to_lab = |t: T, c: &Amplitudes<T>| -> Amplitudes<T> {
        [
            c[0] * Complex::from_polar(T::one(), -energies[0] * t),
            c[1] * Complex::from_polar(T::one(), -energies[1] * t),
            c[2] * Complex::from_polar(T::one(), -energies[2] * t),
        ]
    };

    let mut c: Amplitudes<T> = [Complex::new(T::zero(), T::zero()); 3];
    c[options.initial_state - 1] = Complex::new(T::one(), T::zero());

    let mut amplitudes = Vec::with_capacity(grid.len);
    amplitudes.push(c);
    let half = T::lit(0.5);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let mut max_dev = T::zero();
    for i in 0..grid.len - 1 {
        let t = grid.at(i);
        let k1 = rhs(t, &c);
        let k2 = rhs(t + half * h, &axpy(&c, half * h, &k1));
        let k3 = rhs(t + half * h, &axpy(&c, half * h, &k2));
        let k4 = rhs(t + h, &axpy(&c, h, &k3));
        for j in 0..3 {
            c[j] += (k1[j] + k2[j] * two + k3[j] * two + k4[j]) * sixth;
        }
        let dev = (norm_sqr(&c) - T::one()).abs();
        if dev > max_dev {
            max_dev = dev;
        }
        amplitudes.push(to_lab(grid.at(i + 1), &c));
    }

    if max_dev.to_f64_lossy() > NORM_FAILURE_LIMIT {
        return Err(Error::IntegrationQuality {
            max_deviation: max_dev.to_f64_lossy(),
            limit: NORM_FAILURE_LIMIT,
            steps_per_cycle: options.steps_per_cycle,
        });
    }

    Ok(Trajectory {
        grid,
        amplitudes,
        system: system.clone(),
        field: field.clone(),
        method: Method::Numeric,
        options: Some(*options),
        max_norm_deviation: max_dev,
        norm_warning: max_dev > options.norm_tolerance,
        applicability_warning: false,
    })
}

/// `|b_j|²` at every grid point.
pub fn populations<T: Real>(trajectory: &Trajectory<T>) -> Vec<[T; 3]> {
    trajectory
        .amplitudes
        .iter()
        .map(|b| [b[0].norm_sqr(), b[1].norm_sqr(), b[2].norm_sqr()])
        .collect()
}

/// Time, in optical cycles, at which `p1` first climbs back to `recover`
/// after having dropped below `dip`.
pub fn round_trip_cycles<T: Real>(trajectory: &Trajectory<T>, dip: T, recover: T) -> Option<T> {
    let p1 = |i: usize| trajectory.amplitudes[i][0].norm_sqr();
    let first_dip = (0..trajectory.len()).find(|&i| p1(i) < dip)?;
    let back = (first_dip..trajectory.len()).find(|&i| p1(i) >= recover)?;
    Some(trajectory.time(back) / trajectory.field.period())
}

/// Real induced dipole on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleSeries<T: Real> {
    pub grid: TimeGrid<T>,
    pub values: Vec<T>,
    /// Carrier frequency of the drive, used to express spectra in harmonics.
    pub omega0: T,
}

impl<T: Real> DipoleSeries<T> {
    /// Builds a series from explicit sample times, which must start at 0 and
    /// be uniformly spaced.
    pub fn from_samples(times: &[T], values: Vec<T>, omega0: T) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid("times and values differ in length"));
        }
        if times.len() < 2 {
            return Err(Error::invalid("need at least two samples"));
        }
        if times[0].abs() > T::epsilon() {
            return Err(Error::NonUniformGrid { index: 0 });
        }
        let step = times[1] - times[0];
        let tol = step * T::lit(1e-9) * T::from_count(times.len());
        for (i, t) in times.iter().enumerate() {
            if (*t - T::from_count(i) * step).abs() > tol {
                return Err(Error::NonUniformGrid { index: i });
            }
        }
        Ok(DipoleSeries {
            grid: TimeGrid::new(step, times.len())?,
            values,
            omega0,
        })
    }
}

#[inline]
pub(crate) fn dipole_of<T: Real>(system: &ThreeLevelSystem<T>, b: &Amplitudes<T>) -> T {
    let two = T::lit(2.0);
    two * system.mu12 * (b[0].conj() * b[1]).re + two * system.mu23 * (b[1].conj() * b[2]).re
}

/// `d(t) = 2μ₁₂ Re(b₁* b₂) + 2μ₂₃ Re(b₂* b₃)`.
pub fn dipole_series<T: Real>(
    trajectory: &Trajectory<T>,
    system: &ThreeLevelSystem<T>,
) -> DipoleSeries<T> {
    DipoleSeries {
        grid: trajectory.grid,
        values: trajectory
            .amplitudes
            .iter()
            .map(|b| dipole_of(system, b))
            .collect(),
        omega0: trajectory.field.omega0,
    }
}

/// Formats like C's `%.12e` (two-digit, signed exponent).
pub fn sci(x: f64) -> String {
    let s = format!("{x:.12e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

pub const TRAJECTORY_CSV_HEADER: &str = "t_au,re_b1,im_b1,re_b2,im_b2,re_b3,im_b3,p1,p2,p3,dipole";

/// Writes the trajectory CSV (`t_au, re_b1, …, p3, dipole`).
pub fn write_trajectory_csv<T: Real, W: Write>(
    trajectory: &Trajectory<T>,
    system: &ThreeLevelSystem<T>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
    for (i, b) in trajectory.amplitudes.iter().enumerate() {
        let d = dipole_of(system, b);
        let cols = [
            trajectory.time(i),
            b[0].re,
            b[0].im,
            b[1].re,
            b[1].im,
            b[2].re,
            b[2].im,
            b[0].norm_sqr(),
            b[1].norm_sqr(),
            b[2].norm_sqr(),
            d,
        ];
        let line: Vec<String> = cols.iter().map(|v| sci(v.to_f64_lossy())).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
