//! Acceptance suite: one line per criterion.
//!
//! Exits 0 after printing every line so that `cargo test` keeps running the
//! rest of the workspace; set `ACCEPTANCE_STRICT=1` to turn any failure into a
//! non-zero exit code.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use gammares::analytic::{
    analytic_dipole, full_trip_time, neardeg_corrections, rwa_trajectory, stark_shifts,
};
use gammares::dynamics::{dipole_series, populations, round_trip_cycles, Amplitudes};
use gammares::specfun::{bessel_j_table, fourier_bessel_residual};
use gammares::spectrum::resolved_doublets;
use gammares::*;
use proptest::prelude::RngExt;
use proptest::test_runner::{RngAlgorithm, TestRng};

const TURN_ON: f64 = 10.0;
const H_CYCLES: f64 = 450.0;
const ION_CYCLES: f64 = 810.0;
const ANALYTIC_SPC: usize = 64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(x: f64, want: f64, tol: f64) -> bool {
    (x - want).abs() <= tol
}

fn hydrogen() -> System64 {
    System64::preset(Preset::Hydrogen)
}

fn ion() -> System64 {
    System64::preset(Preset::IonA24Plus)
}

fn solve(sys: &System64, order: u32, r: f64) -> Solution64 {
    solve_resonance(sys, order, Parity::Odd, r, Corrections::default()).expect("resonance solve")
}

// shared numerical runs
struct Runs {
    h_sol: Solution64,
    ion_sol: Solution64,
    h: Trajectory64,
    ion: Trajectory64,
    h_two: Trajectory64,
    ion_two: Trajectory64,
}

impl Runs {
    fn new() -> Self {
        let (hs, is) = (hydrogen(), ion());
        let h_sol = solve(&hs, 5, 1.5);
        let ion_sol = solve(&is, 9, 4.0);
        let env = Envelope::SinSqTurnOn {
            turnon_cycles: TURN_ON,
        };
        let hf = h_sol.field(env, H_CYCLES).unwrap();
        let itf = ion_sol.field(env, ION_CYCLES).unwrap();
        let ((h, ion), (h_two, ion_two)) = rayon::join(
            || {
                rayon::join(
                    || integrate(&hs, &hf, &IntegrateOptions::default()).unwrap(),
                    || integrate(&is, &itf, &IntegrateOptions::default()).unwrap(),
                )
            },
            || {
                rayon::join(
                    || integrate(&hs, &hf, &IntegrateOptions::two_level()).unwrap(),
                    || integrate(&is, &itf, &IntegrateOptions::two_level()).unwrap(),
                )
            },
        );
        Runs {
            h_sol,
            ion_sol,
            h,
            ion,
            h_two,
            ion_two,
        }
    }
}

fn criterion_1() -> Outcome {
    let sol = solve(&hydrogen(), 5, 1.5);
    let f = sol.params.stark_f / sol.omega0;
    let g = sol.params.stark_g / sol.omega0;
    outcome(
        within(f, -0.00926, 1e-4) && within(g, -0.00646, 1e-4),
        format!("hydrogen K=5 r=1.5: Df/w0 = {f:.6} (-0.00926 +- 1e-4), DG/w0 = {g:.6} (-0.00646 +- 1e-4)"),
    )
}

fn criterion_2() -> Outcome {
    let h5 = solve(&hydrogen(), 5, 1.5);
    let i9 = solve(&ion(), 9, 4.0);
    let h3 = solve(&hydrogen(), 3, 0.75);
    let w = i9.omega0;
    let checks = [
        within(h5.omega0, 0.0754, 1e-4),
        within(h5.e0, 0.0377, 2e-4),
        within(i9.params.neardeg_delta, 0.0069, 1e-4),
        within(i9.params.stark_f / w, -0.0155, 5e-4),
        within(i9.params.stark_g / w, -0.014, 5e-4),
        within(i9.omega0, 0.0754, 1e-4),
        within(i9.e0, 0.099, 1e-3),
        within(h3.omega0, 0.1255, 2e-4),
        within(h3.e0, 0.0314, 2e-4),
    ];
    outcome(
        checks.iter().all(|c| *c),
        format!(
            "H5 w0={:.5} E0={:.5}; ion9 D={:.5} Df/w0={:.5} DG/w0={:.5} w0={:.5} E0={:.5}; H3 w0={:.5} E0={:.5}",
            h5.omega0,
            h5.e0,
            i9.params.neardeg_delta,
            i9.params.stark_f / w,
            i9.params.stark_g / w,
            i9.omega0,
            i9.e0,
            h3.omega0,
            h3.e0
        ),
    )
}

fn criterion_3() -> Outcome {
    let h = solve(&hydrogen(), 5, 1.5).intensity_w_cm2;
    let i = solve(&ion(), 9, 4.0).intensity_w_cm2;
    let (rh, ri) = (h / 5e13 - 1.0, i / 3.44e14 - 1.0);
    outcome(
        rh.abs() <= 0.02 && ri.abs() <= 0.02,
        format!(
            "hydrogen {h:.4e} W/cm2 ({:+.2}%), ion {i:.4e} W/cm2 ({:+.2}%), tolerance 2%",
            100.0 * rh,
            100.0 * ri
        ),
    )
}

fn criterion_4(runs: &Runs) -> Outcome {
    let (_, analytic) = full_trip_time(&runs.h_sol.params).unwrap();
    let numeric = round_trip_cycles(&runs.h, 0.1, 0.9);
    let ok_num = numeric.is_some_and(|c| within(c, 225.0, 0.15 * 225.0));
    outcome(
        within(analytic, 225.0, 2.0) && ok_num,
        format!("analytic trip {analytic:.2} cycles (225 +- 2); numeric p1 >= 0.9 again at {numeric:.2?} cycles (225 +- 15%)"),
    )
}

fn criterion_5(runs: &Runs) -> Outcome {
    let numeric = round_trip_cycles(&runs.ion, 0.1, 0.9);
    let analytic = runs.ion_sol.trip_cycles().unwrap();
    outcome(
        numeric.is_some_and(|c| within(c, 405.0, 0.15 * 405.0)),
        format!("numeric p1 >= 0.9 again at {numeric:.2?} cycles (405 +- 15%); analytic pi/A = {analytic:.1} cycles"),
    )
}

fn inversion(traj: &Trajectory64) -> (f64, f64) {
    populations(traj)
        .iter()
        .fold((1.0f64, 0.0f64), |(lo, hi), p| {
            (lo.min(p[0]), hi.max(p[1] + p[2]))
        })
}

fn criterion_6(runs: &Runs) -> Outcome {
    let (h_min, h_max) = inversion(&runs.h);
    let (i_min, i_max) = inversion(&runs.ion);
    outcome(
        h_min < 0.05 && h_max > 0.95 && i_min < 0.05 && i_max > 0.95,
        format!("hydrogen min p1 {h_min:.2e} max p2+p3 {h_max:.6}; ion min p1 {i_min:.2e} max p2+p3 {i_max:.6}"),
    )
}

struct Spectra {
    h: Spectrum64,
    ion: Spectrum64,
    h_analytic: Spectrum64,
    ion_analytic: Spectrum64,
}

fn spectra(runs: &Runs) -> Spectra {
    let analytic = |sol: &Solution64, cycles: f64| {
        let field = sol.field(Envelope::Square, cycles).unwrap();
        let grid = TimeGrid::for_field(&field, ANALYTIC_SPC).unwrap();
        let d = analytic_dipole(&sol.params, &sol.system, grid).unwrap();
        coherent_spectrum(&d, None).unwrap()
    };
    Spectra {
        h: coherent_spectrum(&dipole_series(&runs.h, &runs.h_sol.system), None).unwrap(),
        ion: coherent_spectrum(&dipole_series(&runs.ion, &runs.ion_sol.system), None).unwrap(),
        h_analytic: analytic(&runs.h_sol, H_CYCLES),
        ion_analytic: analytic(&runs.ion_sol, ION_CYCLES),
    }
}

fn paired_harmonics(peaks: &PeakList<f64>) -> BTreeMap<i64, usize> {
    let mut m = BTreeMap::new();
    for p in peaks.paired() {
        *m.entry(p.nearest_odd_harmonic).or_insert(0) += 1;
    }
    m
}

// worst |splitting − 4|a_K|| in resolution bins, number of doublets
fn splitting_error(spectrum: &Spectrum64, a_k: f64) -> Result<(f64, usize)> {
    let peaks = find_peaks(spectrum, &PeakOptions::default());
    let doublets = resolved_doublets(spectrum, &peaks, a_k)?;
    let seps: Vec<f64> = doublets.iter().filter_map(|d| d.separation).collect();
    let worst = seps
        .iter()
        .map(|s| (s - 4.0 * a_k.abs()).abs() / spectrum.resolution())
        .fold(0.0, f64::max);
    Ok((worst, seps.len()))
}

fn criterion_7(runs: &Runs, sp: &Spectra) -> Outcome {
    let opts = PeakOptions::default();
    let hp = find_peaks(&sp.h, &opts);
    let ip = find_peaks(&sp.ion, &opts);
    let h_pairs = paired_harmonics(&hp);
    let want: BTreeMap<i64, usize> = [(3, 2), (5, 2), (7, 2)].into_iter().collect();
    let h_ok = h_pairs == want;
    let i_ok = (10..=14).contains(&ip.len());
    let hs = splitting_error(&sp.h_analytic, runs.h_sol.params.a_k);
    let is = splitting_error(&sp.ion_analytic, runs.ion_sol.params.a_k);
    let split_ok = |r: &Result<(f64, usize)>| matches!(r, Ok((e, n)) if *e <= 2.0 && *n >= 3);
    outcome(
        h_ok && i_ok && split_ok(&hs) && split_ok(&is),
        format!(
            "hydrogen doublet components per harmonic {h_pairs:?} ({} peaks in all); ion {} components (12 +- 2); \
             analytic splitting error vs 4|a_K| in bins: hydrogen {hs:.3?}, ion {is:.3?} (<= 2)",
            hp.len(),
            ip.len()
        ),
    )
}

fn two_level_peaks(traj: &Trajectory64, sys: &System64) -> PeakList<f64> {
    let s = coherent_spectrum(&dipole_series(traj, sys), None).unwrap();
    let opts = PeakOptions {
        rel_threshold: 1e-4,
        min_separation: 2,
        use_s: true,
    };
    find_peaks(&s, &opts)
}

fn criterion_8(runs: &Runs) -> Outcome {
    let excited = |t: &Trajectory64| populations(t).iter().map(|p| p[1]).fold(0.0, f64::max);
    let (hx, ix) = (excited(&runs.h_two), excited(&runs.ion_two));
    let hp = two_level_peaks(&runs.h_two, &runs.h_sol.system);
    let ip = two_level_peaks(&runs.ion_two, &runs.ion_sol.system);
    let mut hh: Vec<i64> = hp.peaks.iter().map(|p| p.nearest_odd_harmonic).collect();
    hh.sort();
    let ih: Vec<i64> = ip.peaks.iter().map(|p| p.nearest_odd_harmonic).collect();
    let weaker = hp
        .peaks
        .iter()
        .skip(1)
        .map(|p| p.height / hp.peaks[0].height)
        .fold(0.0, f64::max);
    outcome(
        hx < 0.2 && hh == [1, 3, 5] && ip.len() == 2,
        format!(
            "hydrogen max excited {hx:.4}, harmonics {hh:?} (strongest overtone {weaker:.3} of fundamental in S); \
             ion max excited {ix:.4}, harmonics {ih:?}"
        ),
    )
}

fn criterion_9(runs: &Runs, sp: &Spectra) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut note = |ok: bool, text: String| {
        pass &= ok;
        notes.push(format!("{}{}", if ok { "" } else { "FAILED " }, text));
    };

    let norms = [
        ("H", runs.h.max_norm_deviation),
        ("ion", runs.ion.max_norm_deviation),
        ("H 2-level", runs.h_two.max_norm_deviation),
        ("ion 2-level", runs.ion_two.max_norm_deviation),
    ];
    let worst = norms.iter().map(|n| n.1).fold(0.0, f64::max);
    let listed: Vec<String> = norms.iter().map(|(n, v)| format!("{n} {v:.1e}")).collect();
    note(
        worst <= 1e-8,
        format!("numeric norm [{}] <= 1e-8", listed.join(", ")),
    );

    let mut rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut rwa_worst = 0.0f64;
    for sol in [&runs.h_sol, &runs.ion_sol] {
        let field = sol.field(Envelope::Square, 1000.0).unwrap();
        for _ in 0..1000 {
            let t = rng.random_range(0.0..field.duration());
            let traj = rwa_trajectory(
                &sol.params,
                &sol.system,
                &field,
                TimeGrid::new(t, 2).unwrap(),
            )
            .unwrap();
            let b = traj.amplitudes[1];
            rwa_worst =
                rwa_worst.max((b[0].norm_sqr() + b[1].norm_sqr() + b[2].norm_sqr() - 1.0).abs());
        }
    }
    note(
        rwa_worst <= 1e-12,
        format!("RWA norm {rwa_worst:.1e} <= 1e-12"),
    );

    let sys = hydrogen();
    let field = runs.h_sol.field(Envelope::Square, 20.0).unwrap();
    let end = |spc| {
        *integrate(&sys, &field, &IntegrateOptions::default().with_steps(spc))
            .unwrap()
            .amplitudes
            .last()
            .unwrap()
    };
    let (e256, e512, eref) = (end(256), end(512), end(2048));
    let dist = |a: Amplitudes<f64>| {
        (0..3)
            .map(|j| (a[j] - eref[j]).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let ratio = dist(e256) / dist(e512);
    note(
        (12.0..=20.0).contains(&ratio),
        format!("RK4 halving ratio {ratio:.2} in [12, 20]"),
    );

    let mut rec = 0.0f64;
    let mut norm = 0.0f64;
    for i in 1..=400 {
        let x = 0.1 * i as f64;
        let j = bessel_j_table(200, x).unwrap();
        for n in 1..150 {
            rec = rec.max((j[n - 1] + j[n + 1] - 2.0 * n as f64 / x * j[n]).abs());
        }
        if x <= 20.0 {
            let s = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
            norm = norm.max((s - 1.0).abs());
        }
    }
    note(
        rec < 1e-11 && norm < 1e-11,
        format!("Bessel recurrence {rec:.1e}, normalization {norm:.1e} < 1e-11"),
    );

    let mut fb = 0.0f64;
    for i in 0..=60 {
        for k in 0..=24 {
            let (c, s) =
                fourier_bessel_residual(0.5 * i as f64, -PI + k as f64 * PI / 12.0, 60).unwrap();
            fb = fb.max(c).max(s);
        }
    }
    note(fb < 1e-10, format!("Fourier-Bessel {fb:.1e} < 1e-10"));

    let rabi = sys.omega21 / 40.0;
    let weak = Field64::new(rabi / sys.mu12, sys.omega21, Envelope::Square, 40.0).unwrap();
    let traj = integrate(&sys, &weak, &IntegrateOptions::two_level()).unwrap();
    let rabi_err = populations(&traj)
        .iter()
        .enumerate()
        .map(|(i, p)| (p[1] - (rabi * traj.time(i) / 2.0).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    note(
        rabi_err < 0.02,
        format!("two-level Rabi deviation {rabi_err:.4} < 0.02"),
    );

    let gfield = runs
        .h_sol
        .field(
            Envelope::SinSqTurnOn {
                turnon_cycles: TURN_ON,
            },
            40.0,
        )
        .unwrap();
    let base = integrate(&sys, &gfield, &IntegrateOptions::default()).unwrap();
    let shifted = integrate(
        &sys,
        &gfield,
        &IntegrateOptions {
            energy_offset: 0.37,
            ..Default::default()
        },
    )
    .unwrap();
    let (d0, d1) = (dipole_series(&base, &sys), dipole_series(&shifted, &sys));
    let mut gauge = 0.0f64;
    for i in 0..base.len() {
        for j in 0..3 {
            gauge = gauge.max(
                (base.amplitudes[i][j].norm_sqr() - shifted.amplitudes[i][j].norm_sqr()).abs(),
            );
        }
        gauge = gauge.max((d0.values[i] - d1.values[i]).abs());
    }
    note(gauge <= 1e-9, format!("gauge shift {gauge:.1e} <= 1e-9"));

    let mut even = Vec::new();
    for (name, s) in [
        ("H", &sp.h),
        ("ion", &sp.ion),
        ("H analytic", &sp.h_analytic),
        ("ion analytic", &sp.ion_analytic),
    ] {
        for p in find_peaks(s, &PeakOptions::default()).peaks {
            let n = (p.omega / s.omega0).round() as i64;
            if n >= 2 && n % 2 == 0 {
                even.push(format!("{name} {:.4}", p.omega / s.omega0));
            }
        }
    }
    note(even.is_empty(), format!("even-harmonic peaks {even:?}"));

    outcome(pass, notes.join("; "))
}

// independent J_n: power series when the order exceeds the argument (tiny
// values keep their relative accuracy), otherwise the integral representation
fn oracle_bessel(n: i64, x: f64) -> f64 {
    let m = n.unsigned_abs();
    let sign = if n < 0 && m % 2 == 1 { -1.0 } else { 1.0 };
    if m as f64 > 3.0 * x.abs() + 60.0 {
        return 0.0;
    }
    if m as f64 > x.abs() {
        let half = x / 2.0;
        let mut term = (1..=m).fold(1.0, |t, k| t * half / k as f64);
        let mut sum = term;
        for k in 1..200u64 {
            term *= -half * half / (k as f64 * (k + m) as f64);
            sum += term;
        }
        return sign * sum;
    }
    let steps = 2048;
    let h = PI / steps as f64;
    let mut s = 0.5 * (1.0 + (n as f64 * PI).cos());
    for i in 1..steps {
        let tau = i as f64 * h;
        s += (n as f64 * tau - x * tau.sin()).cos();
    }
    s * h / PI
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn criterion_10() -> Outcome {
    let sys = ion();
    let w0 = 0.0754;
    let ratio = sys.mu12 / sys.mu23;
    let mut worst = 0.0f64;
    let mut at = (0, 0.0);
    for order in [2u32, 3, 5, 8, 9] {
        for r in [0.5, 1.5, 4.0, 7.0] {
            let field = Field64::new(r * w0 / sys.mu23.abs(), w0, Envelope::Square, 1.0).unwrap();
            let parity = Parity::of(order);
            let (sf, sg) = stark_shifts(order, parity, &sys, &field, 1.0).unwrap();
            let nd = neardeg_corrections(order, parity, &sys, &field, 1.0).unwrap();
            let sign_r = r * sys.mu23.signum();

            let k = order as f64;
            let (mut of, mut og, mut oa, mut oh) = (0.0, 0.0, 0.0, 0.0);
            for n in 0..500i64 {
                let nf = n as f64;
                let j = oracle_bessel(n, sign_r);
                let term = nf * nf / (nf * nf - k * k) * j * j;
                if n % 2 == order as i64 % 2 {
                    if n != order as i64 {
                        of += term;
                    }
                } else {
                    og += term;
                    oa += j * oracle_bessel(n - order as i64, 2.0 * sign_r) * nf / (nf - k);
                }
                if n % 2 == 1 {
                    let jj = oracle_bessel(n, 2.0 * sign_r);
                    oh += jj * jj / (nf * nf);
                }
            }
            let pref = 2.0 * k * w0 * ratio * ratio;
            let w32 = sys.omega32;
            let want = [
                pref * of,
                pref * og,
                w32 * ratio * oa,
                -0.5 * (w32 / w0).powi(2) * w32 * oracle_bessel(0, 2.0 * sign_r) * oh,
            ];
            let got = [sf, sg, nd.alpha, nd.stark_h];
            for (g, w) in got.iter().zip(&want) {
                let e = rel(*g, *w);
                if e > worst {
                    worst = e;
                    at = (order, r);
                }
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("worst relative deviation of Df, DG, alpha, DH over 20 (K, r) points: {worst:.2e} at K={} r={} (<= 1e-12)", at.0, at.1),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "stark shifts", criterion_1()),
        (2, "resonance solves", criterion_2()),
        (3, "intensities", criterion_3()),
    ];
    let runs = Runs::new();
    let sp = spectra(&runs);
    results.push((4, "hydrogen trip time", criterion_4(&runs)));
    results.push((5, "ion trip time", criterion_5(&runs)));
    results.push((6, "complete inversion", criterion_6(&runs)));
    results.push((7, "spectral structure", criterion_7(&runs, &sp)));
    results.push((8, "two-level contrast", criterion_8(&runs)));
    results.push((9, "property suites", criterion_9(&runs, &sp)));
    results.push((10, "summation oracles", criterion_10()));

    let mut failed = 0;
    for (id, name, o) in &results {
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v != "0") {
        std::process::exit(1);
    }
}
