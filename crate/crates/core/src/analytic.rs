//! Analytic treatment of a K-photon resonance.
//!
//! In the frame obtained from the amplitudes `b_j` by the phase and basis
//! changes `x, y, z`, the couplings become harmonic series in ω₀ whose
//! coefficients are Bessel functions of `r = M_R/ω₀`:
//!
//! ```text
//! F(t) = −ω₀ (Ω_R/M_R) Σ_{n odd}  n J_n(r) (e^{i(nω₀−ω̃₂₁)t} + e^{−i(nω₀+ω̃₂₁)t})
//! G(t) = −ω₀ (Ω_R/M_R) Σ_{p even} p J_p(r) (e^{i(pω₀−ω̃₃₁)t} − e^{−i(pω₀+ω̃₃₁)t})
//! ```
//!
//! For odd K the `n = K` term of `F` is slow and drives `|1⟩ → |2⟩` with the
//! multiphoton coupling `a_K = Kω₀ (Ω_R/M_R) J_K(r)`; for even K the `p = K`
//! term of `G` plays that role. Everything else is fast: averaging products of
//! fast terms yields the dynamic Stark shifts, integrating them term by term
//! yields the small ripples superimposed on the slow solution.
//!
//! All analytic trajectories assume a square envelope (`f = 1`).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Amplitudes, DipoleSeries, Method, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::model::{DriveField, ThreeLevelSystem};
use crate::scalar::Real;
use crate::specfun::{bessel_j_table, MAX_ORDER};

/// Truncation threshold for the Stark-type sums, relative to the partial sum.
pub const SUM_REL_EPS: f64 = 1e-16;
/// Hard cap on the number of terms beyond the resonance order.
pub const SUM_EXTRA_TERMS: u32 = 80;
/// Below this `|r·f|` the small-argument limit of `(Ω_R/M_R) J_n(r f)` is used.
pub const SMALL_RF: f64 = 1e-4;
/// `Ā/ω₀` above which slow solutions are flagged as outside their validity.
pub const APPLICABILITY_LIMIT: f64 = 0.1;
/// `|ω₃₂/ω₀|` above which near-degeneracy corrections are flagged.
pub const NEAR_DEGENERACY_LIMIT: f64 = 0.3;
/// Bessel cutoff for the harmonic sum of the analytic dipole.
pub const DIPOLE_BESSEL_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Odd K: resonance `|1⟩ → |2⟩`, target ω₂₁.
    Odd,
    /// Even K: resonance `|1⟩ → |3⟩`, target ω₃₁.
    Even,
}

impl Parity {
    pub fn of(order: u32) -> Self {
        if order % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        }
    }

    pub fn check(self, order: u32) -> Result<()> {
        if order == 0 || Parity::of(order) != self {
            return Err(Error::ParityMismatch {
                order,
                parity: self.name(),
            });
        }
        Ok(())
    }

    // first index of the complementary (non-resonant) channel
    fn other_start(self) -> u32 {
        match self {
            Parity::Odd => 2,
            Parity::Even => 1,
        }
    }

    fn own_start(self) -> u32 {
        match self {
            Parity::Odd => 1,
            Parity::Even => 2,
        }
    }
}

/// Which approximation tiers enter the effective detuning and coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Corrections {
    /// Shift `±Δ` of the transition frequency from the excited-state splitting.
    pub neardeg: bool,
    /// Dynamic Stark shifts `2Δ_f + Δ_G`.
    pub avetissian: bool,
    /// Add `α_K` to the coupling (only together with `neardeg`).
    pub coupling: bool,
    /// Add the extra shift `Δ_H` (only together with `avetissian`).
    pub stark_h: bool,
}

impl Default for Corrections {
    fn default() -> Self {
        Corrections {
            neardeg: true,
            avetissian: true,
            coupling: false,
            stark_h: false,
        }
    }
}

impl Corrections {
    /// Bare detuning and coupling.
    pub fn rough() -> Self {
        Corrections {
            neardeg: false,
            avetissian: false,
            coupling: false,
            stark_h: false,
        }
    }

    pub fn all() -> Self {
        Corrections {
            neardeg: true,
            avetissian: true,
            coupling: true,
            stark_h: true,
        }
    }
}

// J_n(x) for n = 0..=top, read with signed indices
struct BesselRow<T: Real> {
    values: Vec<T>,
    x: T,
}

impl<T: Real> BesselRow<T> {
    fn new(x: T, top: u32) -> Result<Self> {
        Ok(BesselRow {
            values: bessel_j_table(top.min(MAX_ORDER), x)?,
            x,
        })
    }

    fn get(&self, m: i64) -> T {
        let idx = m.unsigned_abs() as usize;
        let v = self.values.get(idx).copied().unwrap_or_else(T::zero);
        if m < 0 && m % 2 != 0 {
            -v
        } else {
            v
        }
    }
}

// (Ω_R/M_R) J_n(r f) with the M_R → 0 limit handled
struct ScaledBessel<T: Real> {
    row: BesselRow<T>,
    mu_ratio: T,
    // Ω_R f / ω₀, used in the small-argument limit
    omega_over: T,
    small: bool,
}

impl<T: Real> ScaledBessel<T> {
    fn new(system: &ThreeLevelSystem<T>, field: &DriveField<T>, f: T, top: u32) -> Result<Self> {
        let rf = system.mu23 * field.e0 / field.omega0 * f;
        Ok(ScaledBessel {
            row: BesselRow::new(rf, top)?,
            mu_ratio: if system.mu23 == T::zero() {
                T::zero()
            } else {
                system.mu_ratio()
            },
            omega_over: system.mu12 * field.e0 * f / field.omega0,
            small: rf.abs() < T::lit(SMALL_RF),
        })
    }

    fn get(&self, n: u32) -> T {
        if !self.small {
            return self.mu_ratio * self.row.get(n as i64);
        }
        if n == 0 {
            // never used by the sums; J_0 → 1 has no finite limit once divided by M_R
            return T::zero();
        }
        // (Ω_R f / 2ω₀) (r f/2)^{n−1} / n!
        let half_x = self.row.x / T::lit(2.0);
        let mut v = self.omega_over / T::lit(2.0) / T::from_count(n as usize);
        for j in 1..n {
            v = v * half_x / T::from_count(j as usize);
        }
        v
    }
}

fn check_f<T: Real>(f: T) -> Result<()> {
    if !(f >= T::zero() && f <= T::one()) {
        return Err(Error::invalid("envelope value must lie in [0, 1]"));
    }
    Ok(())
}

fn bessel_top(order: u32, x: f64) -> u32 {
    let by_terms = 2 * (order + SUM_EXTRA_TERMS) + 2;
    by_terms.max(x.abs().ceil() as u32 + 2).min(MAX_ORDER)
}

// Σ over idx = start, start+2, ... with the shared truncation policy; `skip`
// excludes one index (the resonant one)
fn truncated_sum<T: Real>(
    start: u32,
    skip: Option<u32>,
    order: u32,
    arg: T,
    term: impl Fn(u32) -> T,
) -> T {
    let eps = T::lit(SUM_REL_EPS);
    let mut sum = T::zero();
    let mut count = 0u32;
    let mut idx = start;
    while count < order + SUM_EXTRA_TERMS && idx <= MAX_ORDER {
        if Some(idx) != skip {
            let v = term(idx);
            sum += v;
            count += 1;
            if T::from_count(idx as usize) > arg.abs() + T::one() && v.abs() <= eps * sum.abs() {
                break;
            }
        }
        idx += 2;
    }
    sum
}

/// Multiphoton coupling `a_K = Kω₀ (Ω_R/M_R) J_K(r f)`.
pub fn multiphoton_coupling<T: Real>(
    order: u32,
    parity: Parity,
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
    f: T,
) -> Result<T> {
    parity.check(order)?;
    check_f(f)?;
    let sb = ScaledBessel::new(system, field, f, order)?;
    Ok(T::from_count(order as usize) * field.omega0 * sb.get(order))
}

/// Dynamic Stark shifts `(Δ_f, Δ_G)`.
///
/// For odd K, `Δ_f` comes from the fast remainder of `F` (odd indices
/// `n ≠ K`) and `Δ_G` from `G` (even indices). For even K the index sets are
/// exchanged: `Δ_f` sums the even indices `p ≠ K` of the resonant channel and
/// `Δ_G` the odd indices of the other one.
pub fn stark_shifts<T: Real>(
    order: u32,
    parity: Parity,
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
    f: T,
) -> Result<(T, T)> {
    parity.check(order)?;
    check_f(f)?;
    let rf = system.mu23 * field.e0 / field.omega0 * f;
    let top = bessel_top(order, rf.to_f64_lossy());
    let sb = ScaledBessel::new(system, field, f, top)?;
    let kk = T::from_count(order as usize);
    let k2 = kk * kk;
    let weight = |idx: u32| {
        let n = T::from_count(idx as usize);
        let s = sb.get(idx);
        n * n / (n * n - k2) * s * s
    };
    let pref = T::lit(2.0) * kk * field.omega0;
    let own = truncated_sum(parity.own_start(), Some(order), order, rf, weight);
    let other = truncated_sum(parity.other_start(), None, order, rf, weight);
    Ok((pref * own, pref * other))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NearDegeneracy<T: Real> {
    /// Static `Δ = (ω₃₂/2)(1 − J₀(2r f))`.
    pub delta: T,
    /// Coupling correction `α_K`.
    pub alpha: T,
    /// Additional Stark shift `Δ_H`.
    pub stark_h: T,
    /// `|ω₃₂/ω₀|` exceeds [`NEAR_DEGENERACY_LIMIT`].
    pub warning: bool,
}

/// Corrections from a small excited-state splitting ω₃₂.
///
/// `α_K = ω₃₂ Σ (Ω_R/M_R) J_p(r f) J_{p−K}(2r f) p/(p−K)` runs over the indices
/// of the non-resonant channel (even p for odd K, odd p for even K).
pub fn neardeg_corrections<T: Real>(
    order: u32,
    parity: Parity,
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
    f: T,
) -> Result<NearDegeneracy<T>> {
    parity.check(order)?;
    check_f(f)?;
    let w32 = system.omega32;
    let warning = (w32 / field.omega0).abs() > T::lit(NEAR_DEGENERACY_LIMIT);
    if w32 == T::zero() {
        return Ok(NearDegeneracy {
            delta: T::zero(),
            alpha: T::zero(),
            stark_h: T::zero(),
            warning,
        });
    }
    let rf = system.mu23 * field.e0 / field.omega0 * f;
    let two_rf = rf + rf;
    let top = bessel_top(order, two_rf.to_f64_lossy());
    let sb = ScaledBessel::new(system, field, f, top)?;
    let double = BesselRow::new(two_rf, top)?;
    let two = T::lit(2.0);

    let delta = w32 / two * (T::one() - double.get(0));

    let kk = order as i64;
    let alpha = w32
        * truncated_sum(parity.other_start(), None, order, two_rf, |p| {
            let pm = p as i64 - kk;
            sb.get(p) * double.get(pm) * T::from_count(p as usize)
                / T::from_count(pm.unsigned_abs() as usize)
                * if pm < 0 { -T::one() } else { T::one() }
        });

    let ratio = w32 / field.omega0;
    let odd_sum = truncated_sum(1, None, order, two_rf, |n| {
        let j = double.get(n as i64);
        let nn = T::from_count(n as usize);
        j * j / (nn * nn)
    });
    let stark_h = -ratio * ratio * w32 * double.get(0) * odd_sum / two;

    Ok(NearDegeneracy {
        delta,
        alpha,
        stark_h,
        warning,
    })
}

/// Complete set of analytic quantities for one K-photon resonance at `f = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ResonanceParams<T: Real> {
    pub order: u32,
    pub parity: Parity,
    pub omega0: T,
    /// `M_R/ω₀` (signed).
    pub ratio_r: T,
    pub a_k: T,
    /// Bare detuning `ω_target − Kω₀`.
    pub delta: T,
    pub stark_f: T,
    pub stark_g: T,
    pub neardeg_delta: T,
    pub alpha_corr: T,
    pub stark_h: T,
    pub a_eff: T,
    pub delta_eff: T,
    /// `Ā = sqrt(a_eff² + (δ_eff/2)²)`.
    pub rabi_eff: T,
    pub corrections: Corrections,
    pub neardeg_warning: bool,
}

impl<T: Real> ResonanceParams<T> {
    pub fn compute(
        order: u32,
        parity: Parity,
        system: &ThreeLevelSystem<T>,
        field: &DriveField<T>,
        corrections: Corrections,
    ) -> Result<Self> {
        parity.check(order)?;
        let one = T::one();
        let a_k = multiphoton_coupling(order, parity, system, field, one)?;
        let (stark_f, stark_g) = stark_shifts(order, parity, system, field, one)?;
        let nd = neardeg_corrections(order, parity, system, field, one)?;
        let target = match parity {
            Parity::Odd => system.omega21,
            Parity::Even => system.omega31(),
        };
        let mut params = ResonanceParams {
            order,
            parity,
            omega0: field.omega0,
            ratio_r: system.mu23 * field.e0 / field.omega0,
            a_k,
            delta: target - T::from_count(order as usize) * field.omega0,
            stark_f,
            stark_g,
            neardeg_delta: nd.delta,
            alpha_corr: nd.alpha,
            stark_h: nd.stark_h,
            a_eff: a_k,
            delta_eff: T::zero(),
            rabi_eff: T::zero(),
            corrections,
            neardeg_warning: nd.warning,
        };
        params.delta_eff = effective_detuning(&params, corrections.neardeg, corrections.avetissian);
        params.a_eff = if corrections.neardeg && corrections.coupling {
            a_k + nd.alpha
        } else {
            a_k
        };
        let half = params.delta_eff / T::lit(2.0);
        params.rabi_eff = (params.a_eff * params.a_eff + half * half).sqrt();
        Ok(params)
    }

    /// Signed shift of the transition frequency from near degeneracy
    /// (`ω̃₂₁ = ω₂₁ + Δ`, `ω̃₃₁ = ω₃₁ − Δ`).
    pub fn degeneracy_shift(&self) -> T {
        match self.parity {
            Parity::Odd => self.neardeg_delta,
            Parity::Even => -self.neardeg_delta,
        }
    }

    /// Combined Stark shift of the slow two-level problem, `2Δ_f + Δ_G − Δ_H`.
    pub fn total_stark(&self, with_h: bool) -> T {
        let base = self.stark_f + self.stark_f + self.stark_g;
        if with_h {
            base - self.stark_h
        } else {
            base
        }
    }
}

/// Effective detuning at the requested approximation tier:
/// `δ (+ ±Δ) (− (2Δ_f + Δ_G − Δ_H))`.
pub fn effective_detuning<T: Real>(
    params: &ResonanceParams<T>,
    include_neardeg: bool,
    include_avetissian: bool,
) -> T {
    let mut d = params.delta;
    if include_neardeg {
        d += params.degeneracy_shift();
    }
    if include_avetissian {
        d -= params.total_stark(params.corrections.stark_h);
    }
    d
}

/// Duration of one full population trip `π/Ā`, in a.u. and in optical cycles.
pub fn full_trip_time<T: Real>(params: &ResonanceParams<T>) -> Result<(T, T)> {
    if !(params.rabi_eff > T::zero()) {
        return Err(Error::NoResonance);
    }
    let t = T::PI() / params.rabi_eff;
    Ok((t, t * params.omega0 / T::TAU()))
}

fn require_square<T: Real>(field: &DriveField<T>) -> Result<()> {
    if !field.envelope.is_square() {
        return Err(Error::NonSquareEnvelope);
    }
    Ok(())
}

// slow two-level factors: c = cos Āt + i δ/(2Ā) sin Āt,  s = (a/Ā) sin Āt
fn slow_factors<T: Real>(params: &ResonanceParams<T>, t: T) -> (Complex<T>, T) {
    let abar = params.rabi_eff;
    if abar == T::zero() {
        return (Complex::new(T::one(), T::zero()), T::zero());
    }
    let (sn, cs) = (abar * t).sin_cos();
    let c = Complex::new(cs, params.delta_eff / (T::lit(2.0) * abar) * sn);
    (c, params.a_eff / abar * sn)
}

fn rwa_amplitudes<T: Real>(
    params: &ResonanceParams<T>,
    system: &ThreeLevelSystem<T>,
    t: T,
) -> Amplitudes<T> {
    let (c, s) = slow_factors(params, t);
    let phi = params.ratio_r * (params.omega0 * t).sin();
    let (sp, cp) = phi.sin_cos();
    let half_delta = params.delta_eff / T::lit(2.0);
    let w2 = system.omega21;
    let kw = T::from_count(params.order as usize) * params.omega0;
    let ph1 = Complex::from_polar(T::one(), (kw + half_delta - w2) * t);
    let ph2 = Complex::from_polar(T::one(), (half_delta - w2) * t);
    let cos_branch = Complex::new(T::zero(), s * cp) * ph2;
    let sin_branch = Complex::new(-s * sp, T::zero()) * ph2;
    match params.parity {
        Parity::Odd => [c * ph1, cos_branch, sin_branch],
        Parity::Even => [c * ph1, sin_branch, cos_branch],
    }
}

/// Slow (rotating-wave) amplitudes on `grid` for a square pulse, with
/// `δ → δ_eff`, `a → a_eff`, `A → Ā`. Even orders swap the roles of
/// states 2 and 3.
pub fn rwa_trajectory<T: Real>(
    params: &ResonanceParams<T>,
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
    grid: TimeGrid<T>,
) -> Result<Trajectory<T>> {
    require_square(field)?;
    let amplitudes: Vec<_> = grid
        .times()
        .map(|t| rwa_amplitudes(params, system, t))
        .collect();
    let max_dev = amplitudes
        .iter()
        .map(|b| (b[0].norm_sqr() + b[1].norm_sqr() + b[2].norm_sqr() - T::one()).abs())
        .fold(T::zero(), T::max);
    Ok(Trajectory {
        grid,
        amplitudes,
        system: system.clone(),
        field: field.clone(),
        method: Method::Rwa,
        options: None,
        max_norm_deviation: max_dev,
        norm_warning: false,
        applicability_warning: params.rabi_eff / params.omega0 > T::lit(APPLICABILITY_LIMIT),
    })
}

/// A finite sum `Σ c_j e^{iν_j t}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HarmonicSeries<T: Real> {
    pub terms: Vec<(Complex<T>, T)>,
}

impl<T: Real> HarmonicSeries<T> {
    pub fn eval(&self, t: T) -> Complex<T> {
        self.terms
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (c, nu)| {
                acc + c * Complex::from_polar(T::one(), *nu * t)
            })
    }

    pub fn conj(&self) -> Self {
        HarmonicSeries {
            terms: self.terms.iter().map(|(c, nu)| (c.conj(), -*nu)).collect(),
        }
    }

    /// Zero-mean antiderivative, term by term.
    pub fn antiderivative(&self) -> Self {
        let i = Complex::new(T::zero(), T::one());
        HarmonicSeries {
            terms: self
                .terms
                .iter()
                .filter(|(_, nu)| *nu != T::zero())
                .map(|(c, nu)| (c / (i * *nu), *nu))
                .collect(),
        }
    }

    pub fn frequencies(&self) -> impl Iterator<Item = T> + '_ {
        self.terms.iter().map(|(_, nu)| *nu)
    }
}

/// Fast parts of the couplings that generate the ripples.
#[derive(Debug, Clone)]
pub struct RippleSeries<T: Real> {
    /// `F(t)` without its slow term (odd K) or all of `F` (even K).
    pub fast_f: HarmonicSeries<T>,
    /// `G(t)` (odd K) or `G` without its slow term (even K).
    pub fast_g: HarmonicSeries<T>,
    /// `H(t)`, empty for exact degeneracy.
    pub h: HarmonicSeries<T>,
    /// Detuning carried by the coupling phases, `ω̃_target − Kω₀`.
    pub frame_detuning: T,
}

/// Builds the harmonic series of `F`, `G` and `H` for a square pulse.
pub fn ripple_series<T: Real>(
    params: &ResonanceParams<T>,
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
) -> Result<RippleSeries<T>> {
    let w0 = field.omega0;
    let r = params.ratio_r;
    let shift = if params.corrections.neardeg {
        params.neardeg_delta
    } else {
        T::zero()
    };
    let w21 = system.omega21 + shift;
    let w31 = system.omega31() - shift;
    let w32_eff = system.omega32 - shift - shift;

    let top = bessel_top(params.order, (r + r).to_f64_lossy());
    let sb = ScaledBessel::new(system, field, T::one(), top)?;
    let double = BesselRow::new(r + r, top)?;
    let cutoff = T::lit(1e-17);

    let mut fast_f = HarmonicSeries::default();
    let mut fast_g = HarmonicSeries::default();
    let mut h = HarmonicSeries::default();
    for idx in 1..=top {
        let n = T::from_count(idx as usize);
        let s = sb.get(idx);
        if s.abs() > cutoff || T::from_count(idx as usize) < r.abs() {
            let c = Complex::new(-w0 * n * s, T::zero());
            if idx % 2 == 1 {
                if !(params.parity == Parity::Odd && idx == params.order) {
                    fast_f.terms.push((c, n * w0 - w21));
                }
                fast_f.terms.push((c, -(n * w0 + w21)));
            } else {
                if !(params.parity == Parity::Even && idx == params.order) {
                    fast_g.terms.push((c, n * w0 - w31));
                }
                fast_g.terms.push((-c, -(n * w0 + w31)));
            }
        }
        if idx % 2 == 1 && system.omega32 != T::zero() {
            let j = double.get(idx as i64);
            let c = Complex::new(-system.omega32 / T::lit(2.0) * j, T::zero());
            h.terms.push((c, n * w0 - w32_eff));
            h.terms.push((-c, -(n * w0 + w32_eff)));
        }
    }
    let target = match params.parity {
        Parity::Odd => w21,
        Parity::Even => w31,
    };
    Ok(RippleSeries {
        fast_f,
        fast_g,
        h,
        frame_detuning: target - T::from_count(params.order as usize) * w0,
    })
}

/// Slow amplitudes plus the fast ripples `β_x, β_y, β_z`.
///
/// The ripples solve `iβ̇_x = ȳF_fast + z̄G_fast`, `iβ̇_y = x̄F_fast* + z̄H`,
/// `iβ̇_z = x̄G_fast* + ȳH*` with the slow amplitudes held constant over a
/// cycle, and are mapped back to `b_j` through the inverse frame
/// transformation. The result is not renormalized.
pub fn avetissian_correct<T: Real>(
    params: &ResonanceParams<T>,
    system: &ThreeLevelSystem<T>,
    field: &DriveField<T>,
    rwa: &Trajectory<T>,
) -> Result<Trajectory<T>> {
    require_square(field)?;
    let series = ripple_series(params, system, field)?;
    let int_f = series.fast_f.antiderivative();
    let int_f_conj = series.fast_f.conj().antiderivative();
    let int_g = series.fast_g.antiderivative();
    let int_g_conj = series.fast_g.conj().antiderivative();
    let int_h = series.h.antiderivative();
    let int_h_conj = series.h.conj().antiderivative();

    let shift = if params.corrections.neardeg {
        params.neardeg_delta
    } else {
        T::zero()
    };
    let two = T::lit(2.0);
    let w32_eff = system.omega32 - shift - shift;
    let sigma_half = (system.omega21 + system.omega31()) / two;
    let minus_i = Complex::new(T::zero(), -T::one());
    let i_unit = Complex::new(T::zero(), T::one());
    let zero = Complex::new(T::zero(), T::zero());

    let mut amplitudes = Vec::with_capacity(rwa.len());
    let mut max_dev = T::zero();
    for (idx, slow_b) in rwa.amplitudes.iter().enumerate() {
        let t = rwa.time(idx);
        let (_, s) = slow_factors(params, t);
        let x_bar = slow_b[0];
        // resonant partner of x in the (x, y, z) frame
        let partner = Complex::new(T::zero(), s)
            * match params.parity {
                Parity::Odd => Complex::from_polar(T::one(), (params.delta_eff / two + shift) * t),
                Parity::Even => Complex::from_polar(
                    T::one(),
                    (params.delta_eff / two + system.omega32 - shift) * t,
                ),
            };
        let (y_bar, z_bar) = match params.parity {
            Parity::Odd => (partner, zero),
            Parity::Even => (zero, partner),
        };

        let beta_x = minus_i * (y_bar * int_f.eval(t) + z_bar * int_g.eval(t));
        let beta_y = minus_i * (x_bar * int_f_conj.eval(t) + z_bar * int_h.eval(t));
        let beta_z = minus_i * (x_bar * int_g_conj.eval(t) + y_bar * int_h_conj.eval(t));

        let phi = params.ratio_r * (params.omega0 * t).sin();
        let (sp, cp) = phi.sin_cos();
        let q = Complex::from_polar(T::one(), w32_eff * t / two);
        let q_inv = q.conj();
        let frame = Complex::from_polar(T::one(), -sigma_half * t);
        let db2 = frame * (q * cp * beta_y + i_unit * q_inv * sp * beta_z);
        let db3 = frame * (q_inv * cp * beta_z + i_unit * q * sp * beta_y);
        let b = [slow_b[0] + beta_x, slow_b[1] + db2, slow_b[2] + db3];
        let dev = (b[0].norm_sqr() + b[1].norm_sqr() + b[2].norm_sqr() - T::one()).abs();
        if dev > max_dev {
            max_dev = dev;
        }
        amplitudes.push(b);
    }
    Ok(Trajectory {
        grid: rwa.grid,
        amplitudes,
        system: system.clone(),
        field: field.clone(),
        method: Method::Avetissian,
        options: None,
        max_norm_deviation: max_dev,
        norm_warning: false,
        applicability_warning: rwa.applicability_warning,
    })
}

/// One cosine component `amplitude · cos(frequency · t)` of the analytic dipole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DipoleLine<T: Real> {
    pub frequency: T,
    pub amplitude: T,
}

/// Cosine components of the analytic induced dipole.
///
/// Odd K: lines at `(K ∓ 2k)ω₀` (weight `δ/Ā`), `(K ∓ 2k)ω₀ − 2Ā` (weight
/// `1 − δ/2Ā`) and `(K ∓ 2k)ω₀ + 2Ā` (weight `−(1 + δ/2Ā)`), scaled by
/// `μ₁₂ a/(2Ā) α_k J_2k(r)` with `α₀ = ½`. Even K uses `J_{2k+1}` with unit
/// `α_k` and flips the sign of the `(K + 2k + 1)` member of each pair.
pub fn dipole_lines<T: Real>(
    params: &ResonanceParams<T>,
    system: &ThreeLevelSystem<T>,
) -> Result<Vec<DipoleLine<T>>> {
    let abar = params.rabi_eff;
    if abar == T::zero() {
        return Ok(Vec::new());
    }
    let r = params.ratio_r;
    let top = (r.abs().to_f64_lossy().ceil() as u32 + 80).min(MAX_ORDER);
    let row = BesselRow::new(r, top)?;
    let two = T::lit(2.0);
    let w0 = params.omega0;
    let kk = T::from_count(params.order as usize);
    let pref = system.mu12 * params.a_eff / (two * abar);
    let ratio = params.delta_eff / abar;
    let weights = [ratio, T::one() - ratio / two, -(T::one() + ratio / two)];
    let shifts = [T::zero(), -two * abar, two * abar];
    let cutoff = T::lit(DIPOLE_BESSEL_CUTOFF);

    let mut lines = Vec::new();
    for k in 0.. {
        let m = match params.parity {
            Parity::Odd => 2 * k,
            Parity::Even => 2 * k + 1,
        };
        if m > top {
            break;
        }
        let j = row.get(m as i64);
        let mm = T::from_count(m as usize);
        if mm > r.abs() && j.abs() < cutoff {
            break;
        }
        let alpha = if params.parity == Parity::Odd && k == 0 {
            T::lit(0.5)
        } else {
            T::one()
        };
        let second_sign = match params.parity {
            Parity::Odd => T::one(),
            Parity::Even => -T::one(),
        };
        let c = pref * alpha * j;
        for (w, s) in weights.iter().zip(shifts.iter()) {
            lines.push(DipoleLine {
                frequency: (kk - mm) * w0 + *s,
                amplitude: c * *w,
            });
            lines.push(DipoleLine {
                frequency: (kk + mm) * w0 + *s,
                amplitude: second_sign * c * *w,
            });
        }
    }
    Ok(lines)
}

/// Analytic induced dipole evaluated on `grid`.
pub fn analytic_dipole<T: Real>(
    params: &ResonanceParams<T>,
    system: &ThreeLevelSystem<T>,
    grid: TimeGrid<T>,
) -> Result<DipoleSeries<T>> {
    let lines = dipole_lines(params, system)?;
    let values = grid
        .times()
        .map(|t| {
            lines.iter().fold(T::zero(), |acc, l| {
                acc + l.amplitude * (l.frequency * t).cos()
            })
        })
        .collect();
    Ok(DipoleSeries {
        grid,
        values,
        omega0: params.omega0,
    })
}
