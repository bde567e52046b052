//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so every line is printed and the
//! criteria execute sequentially (timings are meaningful on one core).
//! Exits nonzero when any criterion fails.

use std::time::Instant;

use ndarray::Array2;
use vaet_core::dynamics::{convergence_sweep, system_trace, Propagator, TimeGrid};
use vaet_core::fock::mean_occupancy;
use vaet_core::model::{
    build_effective_hamiltonian, preset, CouplingTopology, DissipationSpec, Preset, SystemSpec, TrimerParams,
    VibrationalModeSpec,
};
use vaet_core::perturb::{
    coupling_coefficients, p3_perturbative, symmetric_eigensystem, thermal_average, BosonOp, Mode, ModeCouplings,
    Regime, Sign,
};
use vaet_core::spectra::{classify_samples, scan_points, ClassifierOptions, FeatureKind, ScanSample};
use vaet_core::vibronic::{find_avoided_crossings, sweep_spectrum, AvoidedCrossing, BasisLabel, CrossingOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Symmetric trimer (Δ = 0.5, J = 0.1), κ = 0.01, k_BT = 1.5, N = 15.
fn reference() -> SystemSpec {
    let mode = VibrationalModeSpec::new(0.52, 0.01, 1.5, 15);
    SystemSpec::new(TrimerParams::symmetric(0.5, 0.1), mode, mode)
}

fn maxima(system: &SystemSpec, points: &[(f64, f64)], times: &TimeGrid) -> Vec<f64> {
    scan_points(system, points, times).expect("scan").iter().map(|s| s.max_p3).collect()
}

fn peak(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// ---------------------------------------------------------------- 1

fn zero_coupling_oracle() -> Outcome {
    let p = preset(Preset::IonTrapLine1);
    let system = SystemSpec::new(p.trimer, p.mode_a.with_kappa(0.0), p.mode_b.with_kappa(0.0));
    let step = 0.05;
    let times = TimeGrid::uniform(100.0, step).unwrap();
    let start = Instant::now();
    let trace = system_trace(&system, &times).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let (delta, j) = (0.5f64, 0.1f64);
    let omega = (delta * delta + 2.0 * j * j).sqrt();
    let err = trace
        .times
        .iter()
        .zip(&trace.p3)
        .map(|(t, p)| (p - (j / omega).powi(4) * ((omega * t).cos() - 1.0).powi(2)).abs())
        .fold(0.0, f64::max);

    let top = trace.max_p3;
    let peaks: Vec<f64> = (1..trace.p3.len() - 1)
        .filter(|&k| trace.p3[k] > trace.p3[k - 1] && trace.p3[k] >= trace.p3[k + 1] && trace.p3[k] > 0.5 * top)
        .map(|k| trace.times[k])
        .collect();
    let period = (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64;
    let pass = err < 1e-9 && (period - 12.08).abs() <= step && elapsed < 1.0;
    outcome(
        pass,
        format!(
            "zero-coupling oracle: max |P3 - closed form| = {err:.2e}, period {period:.4} ms (2pi/Omega = {:.4}), runtime {elapsed:.2} s",
            2.0 * std::f64::consts::PI / omega
        ),
    )
}

// ---------------------------------------------------------------- 2

fn phonon_occupancy() -> Outcome {
    let cases = [(0.52, 1.5, 2.4), (1.04, 1.5, 1.0), (1.04, 0.5, 0.143), (0.52, 0.5, 0.548)];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (nu, kbt, stated) in cases {
        let n = mean_occupancy(nu, kbt);
        let rel = (n - stated).abs() / stated;
        worst = worst.max(rel);
        parts.push(format!("n({nu},{kbt}) = {n:.4}"));
    }
    outcome(worst < 0.02, format!("phonon occupancy: {} (worst rel. dev. {:.2}%)", parts.join(", "), 100.0 * worst))
}

// ---------------------------------------------------------------- 3

fn one_phonon_ratio() -> Outcome {
    let system = reference();
    let d = system.delta31().unwrap();
    let times = TimeGrid::standard();
    let offsets: Vec<f64> = (0..13).map(|k| 0.97 + 0.005 * k as f64).collect();
    let along_a: Vec<(f64, f64)> = offsets.iter().map(|&x| (x * d, 0.746 * d)).collect();
    let along_b: Vec<(f64, f64)> = offsets.iter().map(|&y| (0.746 * d, y * d)).collect();
    let peak_a = peak(&maxima(&system, &along_a, &times));
    let peak_b = peak(&maxima(&system, &along_b, &times));
    let ratio = peak_a / peak_b;

    // first-order weak-J terms at ν_a = ν_b = Δ31, where n_a = n_b
    let sys = symmetric_eigensystem(0.5, 0.1).unwrap();
    let coeffs = coupling_coefficients(&sys);
    let mode = VibrationalModeSpec::new(sys.delta31(), 0.01, 1.5, 15);
    let modes = ModeCouplings::from_modes(&mode, &mode);
    let grid = TimeGrid::uniform(100.0, 10.0).unwrap();
    let weak = p3_perturbative(&sys, &coeffs, &modes, &grid, Regime::WeakJ).unwrap();
    let a = weak.term("n_a |W31(-a)|^2").unwrap();
    let b = weak.term("n_b |W31(-b)|^2").unwrap();
    let pert = (1..grid.len()).map(|k| (a.values[k] / b.values[k] - 4.0).abs()).fold(0.0, f64::max);
    let closed = (coeffs.a_jk[0][2] / coeffs.b_jk[0][2]).powi(2);

    let pass = (3.0..=5.0).contains(&ratio) && pert < 1e-12 && (closed - 4.0).abs() < 1e-12;
    outcome(
        pass,
        format!(
            "one-phonon bridge/terminal ratio: exact {peak_a:.4e}/{peak_b:.4e} = {ratio:.3}; perturbative (A13/B13)^2 = {closed:.12}, term ratio off 4 by {pert:.1e}"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn two_phonon_dominance() -> Outcome {
    let times = TimeGrid::standard();
    let mut pass = true;
    let mut parts = Vec::new();
    for kbt in [1.5, 0.5] {
        let system = reference().with_temperatures(kbt, kbt);
        let v = maxima(&system, &[(0.52, 0.776), (1.04, 0.776)], &times);
        pass &= v[0] > v[1];
        parts.push(format!("kBT={kbt}: {:.4e} (0.52) vs {:.4e} (1.04)", v[0], v[1]));
    }
    outcome(pass, format!("two-phonon dominance at nu_b = 0.776: {}", parts.join("; ")))
}

// ---------------------------------------------------------------- 5

const LATTICE: f64 = 0.01;
const HALF_WINDOW: f64 = 0.07;
/// Below this (units of Δ31) thermal occupations outgrow the truncation.
const FLOOR: f64 = 0.12;

/// Lattice points within `HALF_WINDOW` of `centre` along a row (`ν_b` fixed)
/// or a column (`ν_a` fixed), in units of Δ31.
fn window(fixed: f64, centre: f64, row: bool) -> Vec<(f64, f64)> {
    let lo = ((centre - HALF_WINDOW) / LATTICE).ceil() as i64;
    let hi = ((centre + HALF_WINDOW) / LATTICE).floor() as i64;
    (lo.max(1)..=hi)
        .map(|k| k as f64 * LATTICE)
        .map(|u| if row { (u, fixed) } else { (fixed, u) })
        .collect()
}

/// Crossing of `kind` with the line `ν_b = y` (or `ν_a = x` for horizontal loci).
fn crossing(kind: FeatureKind, fixed: f64) -> (f64, f64) {
    match kind {
        FeatureKind::SingleModeA(k) => (1.0 / k as f64, fixed),
        FeatureKind::SingleModeB(k) => (fixed, 1.0 / k as f64),
        FeatureKind::CooperativeSum(m) => (1.0 / m as f64 - fixed, fixed),
        FeatureKind::HeteroDiffAB(m) => (fixed + 1.0 / m as f64, fixed),
        FeatureKind::HeteroDiffBA(m) => (fixed - 1.0 / m as f64, fixed),
    }
}

/// Range of the free coordinate over which the locus stays inside `[lo, hi]²`.
fn extent(kind: FeatureKind, lo: f64, hi: f64) -> (f64, f64) {
    match kind {
        FeatureKind::SingleModeA(_) | FeatureKind::SingleModeB(_) => (lo, hi),
        FeatureKind::CooperativeSum(m) => (lo, 1.0 / m as f64 - lo),
        FeatureKind::HeteroDiffAB(m) => (lo, hi - 1.0 / m as f64),
        FeatureKind::HeteroDiffBA(m) => (lo + 1.0 / m as f64, hi),
    }
}

/// Distance (in bands) from the crossing of `kind` with the lattice line
/// `fixed` to the nearest other candidate locus. For loci parallel to the
/// line this is the line spacing.
fn clearance(kind: FeatureKind, fixed: f64, others: &[FeatureKind], band: f64) -> f64 {
    let (x, y) = crossing(kind, fixed);
    others.iter().map(|k| k.distance(x, y)).fold(f64::INFINITY, f64::min) / band
}

/// Two strips across `kind`, one in each half of its extent, on the lattice
/// line whose crossing is farthest from every other candidate locus.
fn strips_for(kind: FeatureKind, d31: f64, options: &ClassifierOptions) -> Vec<(f64, f64)> {
    let (lo, hi) = (0.02 / d31, 1.30 / d31);
    let (a, b) = extent(kind, lo, hi);
    let others: Vec<FeatureKind> = FeatureKind::all(options.max_order).into_iter().filter(|k| *k != kind).collect();
    let row = !matches!(kind, FeatureKind::SingleModeB(_));
    let mid = 0.5 * (a + b);
    let mut out = Vec::new();
    for (from, to) in [(a, mid), (mid, b)] {
        let centre = 0.5 * (from + to);
        let first = (from / LATTICE).ceil() as i64;
        let last = (to / LATTICE).floor() as i64;
        let best = (first..=last)
            .map(|k| k as f64 * LATTICE)
            .filter(|&s| {
                let (x, y) = crossing(kind, s);
                let free = if row { x } else { y };
                s >= FLOOR && free >= FLOOR && free < hi
            })
            .map(|s| (clearance(kind, s, &others, options.band), s))
            .max_by(|p, q| p.0.total_cmp(&q.0).then((q.1 - centre).abs().total_cmp(&(p.1 - centre).abs())))
            .unwrap_or_else(|| panic!("no lattice line crosses {kind} in [{from:.2}, {to:.2}]"));
        let (x, y) = crossing(kind, best.1);
        if std::env::var("STRIPS").is_ok() {
            println!("{kind}: line {:.2} crossing ({x:.3}, {y:.3}) clearance {:.1} bands", best.1, best.0);
        }
        out.extend(if row { window(y, x, true) } else { window(x, y, false) });
    }
    out
}

fn taxonomy_samples(kappa: f64, kinds: &[FeatureKind], options: &ClassifierOptions) -> (Vec<ScanSample>, f64) {
    let system = reference().with_kappas(kappa, kappa);
    let d = system.delta31().unwrap();
    let mut points: Vec<(i64, i64)> = kinds
        .iter()
        .flat_map(|&k| strips_for(k, d, options))
        .map(|(x, y)| ((x / LATTICE).round() as i64, (y / LATTICE).round() as i64))
        .collect();
    points.sort();
    points.dedup();
    let raw: Vec<(f64, f64)> = points.iter().map(|&(i, j)| (i as f64 * LATTICE * d, j as f64 * LATTICE * d)).collect();
    (scan_points(&system, &raw, &TimeGrid::standard()).expect("scan"), d)
}

fn feature_taxonomy() -> Outcome {
    use FeatureKind::*;
    let options = ClassifierOptions::default();
    let expected = [
        SingleModeA(1),
        SingleModeA(2),
        SingleModeA(4),
        SingleModeB(1),
        SingleModeB(2),
        SingleModeB(4),
        CooperativeSum(1),
        CooperativeSum(2),
        HeteroDiffAB(1),
        HeteroDiffAB(2),
        HeteroDiffBA(2),
    ];
    let absent = HeteroDiffBA(1);
    let mut kinds = expected.to_vec();
    kinds.push(absent);
    let (samples, d) = taxonomy_samples(0.01, &kinds, &options);
    let weak = classify_samples(&samples, d, &options);

    let strong_kinds = [SingleModeA(3), SingleModeA(5), SingleModeA(6)];
    let (strong_samples, d) = taxonomy_samples(0.03, &strong_kinds, &options);
    let strong = classify_samples(&strong_samples, d, &options);

    let describe = |set: &vaet_core::spectra::FeatureSet, k: FeatureKind| match set.get(k) {
        Some(f) => format!("{k}={:.2}{}", f.prominence, if f.detected { "+" } else { "-" }),
        None => format!("{k}=n/a"),
    };
    let missing: Vec<String> = expected.iter().filter(|k| !weak.is_detected(**k)).map(|k| k.to_string()).collect();
    let strong_missing: Vec<String> =
        strong_kinds.iter().filter(|k| !strong.is_detected(**k)).map(|k| k.to_string()).collect();
    let pass = missing.is_empty() && !weak.is_detected(absent) && strong_missing.is_empty();
    let weak_list: Vec<String> = kinds.iter().map(|k| describe(&weak, *k)).collect();
    let strong_list: Vec<String> = strong_kinds.iter().map(|k| describe(&strong, *k)).collect();
    outcome(
        pass,
        format!(
            "feature taxonomy ({} + {} strip samples, threshold {}): kappa=0.01 [{}]; kappa=0.03 [{}]; undetected expected: {:?}{}",
            samples.len(),
            strong_samples.len(),
            options.threshold,
            weak_list.join(" "),
            strong_list.join(" "),
            missing.iter().chain(&strong_missing).collect::<Vec<_>>(),
            if weak.is_detected(absent) { "; HeteroDiffBA(1) wrongly detected" } else { "" }
        ),
    )
}

// ---------------------------------------------------------------- 6

fn perturbation_vs_exact() -> Outcome {
    let sys = symmetric_eigensystem(0.5, 0.1).unwrap();
    let coeffs = coupling_coefficients(&sys);
    let d = sys.delta31();
    let times = TimeGrid::uniform(40.0, 0.1).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for x in [1.0, 0.5] {
        let (nu_a, nu_b) = (x * d, 0.746 * d);
        let system = reference().with_frequencies(nu_a, nu_b);
        let exact = system_trace(&system, &times).unwrap();
        let modes = ModeCouplings::from_modes(&system.mode_a, &system.mode_b);
        let pert = p3_perturbative(&sys, &coeffs, &modes, &times, Regime::StrongJ).unwrap();
        let k = exact.first_local_max().expect("a maximum");
        let rel = (pert.trace.p3[k] - exact.p3[k]).abs() / exact.p3[k];
        pass &= rel < 0.1;
        parts.push(format!("({x}, 0.746): t*={:.1} exact {:.4e} pert {:.4e} rel {:.2e}", exact.times[k], exact.p3[k], pert.trace.p3[k], rel));
    }

    let modes = ModeCouplings::from_modes(
        &VibrationalModeSpec::new(0.5 * d, 0.01, 1.5, 15),
        &VibrationalModeSpec::new(0.746 * d, 0.01, 1.5, 15),
    );
    let grid = TimeGrid::uniform(60.0, 3.0).unwrap();
    let s = 1.7f64;
    let mut worst = 0.0f64;
    for regime in [Regime::WeakJ, Regime::StrongJ, Regime::Complete] {
        let base = p3_perturbative(&sys, &coeffs, &modes, &grid, regime).unwrap();
        let scaled = p3_perturbative(&sys, &coeffs, &modes.scaled(s), &grid, regime).unwrap();
        for (t0, t1) in base.terms.iter().zip(&scaled.terms) {
            let power = match t0.group.as_str() {
                "P3(0)" => 0,
                "P3(1)" | "P3(1,1)" | "P3(1,2)" => 2,
                _ => 4,
            };
            let f = s.powi(power);
            for (a, b) in t0.values.iter().zip(&t1.values) {
                let scale = (f * a).abs();
                if scale > 1e-300 {
                    worst = worst.max((b - f * a).abs() / scale);
                }
            }
        }
    }
    pass &= worst < 1e-10;
    outcome(pass, format!("perturbative vs exact (strong-J terms): {}; kappa^4 scaling rel. dev. {worst:.1e}", parts.join("; ")))
}

// ---------------------------------------------------------------- 7

/// `Tr(ρ ops)` for one mode on an `n_fock`-level space with untruncated Bose weights.
fn fock_trace(signs: &[Sign], nu: f64, kbt: f64, n_fock: usize) -> f64 {
    let mut lower = Array2::<f64>::zeros((n_fock, n_fock));
    for n in 1..n_fock {
        lower[[n - 1, n]] = (n as f64).sqrt();
    }
    let raise = lower.t().to_owned();
    let mut product = Array2::<f64>::eye(n_fock);
    for s in signs {
        product = product.dot(match s {
            Sign::Plus => &raise,
            Sign::Minus => &lower,
        });
    }
    let x = (-nu / kbt).exp();
    (0..n_fock).map(|n| (1.0 - x) * x.powi(n as i32) * product[[n, n]]).sum()
}

fn wick_oracle() -> Outcome {
    use Mode::{A, B};
    use Sign::{Minus, Plus};
    let n_fock = 40;
    let (nu_a, kbt_a, nu_b, kbt_b) = (0.52, 1.5, 1.04, 1.5);
    let (na, nb) = (mean_occupancy(nu_a, kbt_a), mean_occupancy(nu_b, kbt_b));
    let bound = |nu: f64, kbt: f64| {
        let x = (-nu / kbt).exp();
        2.0 * ((n_fock + 1) as f64).powi(2) * x.powi(n_fock as i32 - 2)
    };
    let op = BosonOp::new;
    let sequences: Vec<(&str, Vec<BosonOp>)> = vec![
        ("a+a+aa", vec![op(A, Plus), op(A, Plus), op(A, Minus), op(A, Minus)]),
        ("a+aa+a", vec![op(A, Plus), op(A, Minus), op(A, Plus), op(A, Minus)]),
        ("aa+aa+", vec![op(A, Minus), op(A, Plus), op(A, Minus), op(A, Plus)]),
        ("a+ab+b", vec![op(A, Plus), op(A, Minus), op(B, Plus), op(B, Minus)]),
        ("a+bab+", vec![op(A, Plus), op(B, Minus), op(A, Minus), op(B, Plus)]),
        ("ba+b+a", vec![op(B, Minus), op(A, Plus), op(B, Plus), op(A, Minus)]),
    ];
    let mut pass = true;
    let mut worst = 0.0f64;
    for (_, ops) in &sequences {
        let signs = |m: Mode| ops.iter().filter(|o| o.mode == m).map(|o| o.sign).collect::<Vec<_>>();
        let (sa, sb) = (signs(A), signs(B));
        let brute = fock_trace(&sa, nu_a, kbt_a, n_fock) * fock_trace(&sb, nu_b, kbt_b, n_fock);
        let wick = thermal_average(ops, na, nb);
        let tol = (if sa.is_empty() { 0.0 } else { bound(nu_a, kbt_a) }) + (if sb.is_empty() { 0.0 } else { bound(nu_b, kbt_b) }) + 1e-12;
        let err = (brute - wick).abs();
        worst = worst.max(err / tol);
        pass &= err <= tol * wick.abs().max(1.0);
    }
    let closed = (thermal_average(&sequences[0].1, na, nb) - 2.0 * na * na).abs()
        + (thermal_average(&sequences[1].1, na, nb) - na * (2.0 * na + 1.0)).abs()
        + (thermal_average(&sequences[3].1, na, nb) - na * nb).abs();
    pass &= closed < 1e-12;
    outcome(
        pass,
        format!(
            "Wick factors vs N={n_fock} Fock traces: {} sequences, worst error/tail-bound {worst:.2e}; closed forms 2n^2, n(2n+1), n_a n_b off by {closed:.1e}",
            sequences.len()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn dissipation() -> Outcome {
    let d = reference().delta31().unwrap();
    let system = reference().with_frequencies(0.5 * d, 0.5 * d);
    let times = TimeGrid::standard();
    let mut pass = true;

    let gamma = 0.001;
    let damped = system.with_dissipation(DissipationSpec::uniform(gamma));
    let prop = Propagator::new(&damped.hamiltonian().unwrap()).unwrap();
    let norm = prop.trace_norm(&damped.donor_density().unwrap(), &times).unwrap();
    let norm_err = times.times().iter().zip(&norm).map(|(t, n)| (n - (-gamma * t).exp()).abs()).fold(0.0, f64::max);
    pass &= norm_err < 1e-9;

    let rates = [0.0, 0.0005, 0.001, 0.002];
    let uniform: Vec<f64> = rates
        .iter()
        .map(|&g| system_trace(&system.with_dissipation(DissipationSpec::uniform(g)), &times).unwrap().max_p3)
        .collect();
    pass &= uniform.windows(2).all(|w| w[1] < w[0]);

    let perms = [[0.002, 0.0005, 0.0005], [0.0005, 0.002, 0.0005], [0.0005, 0.0005, 0.002]];
    let mut rows = Vec::new();
    for g in perms {
        let s = system.with_dissipation(DissipationSpec { gamma: g });
        let max = system_trace(&s, &times).unwrap().max_p3;
        let p = Propagator::new(&s.hamiltonian().unwrap()).unwrap();
        let left = *p.trace_norm(&s.donor_density().unwrap(), &times).unwrap().last().unwrap();
        rows.push((max, left));
    }
    let donor_lowest = rows[1..].iter().all(|r| rows[0].0 < r.0 && rows[0].1 < r.1);
    pass &= donor_lowest;
    outcome(
        pass,
        format!(
            "dissipation: trace norm vs exp(-gamma t) {norm_err:.1e}; Max[P3] over gamma {rates:?} = {:?}; permutations (Max[P3], final norm) = {:?}",
            uniform.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>(),
            rows.iter().map(|(m, n)| format!("({m:.4e}, {n:.4})")).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------- 9

fn truncation_convergence() -> Outcome {
    let d = reference().delta31().unwrap();
    let system = reference().with_frequencies(0.5 * d, 0.5 * d);
    let times = TimeGrid::standard();
    let weak = convergence_sweep(&system, &[10, 15, 20], &times).unwrap();
    let d10 = weak.deviation(10, 15).unwrap();
    let d15 = weak.deviation(15, 20).unwrap();
    let strong = convergence_sweep(&system.with_kappas(0.5, 0.5), &[15, 25, 30], &times).unwrap();
    let s15 = strong.deviation(15, 30).unwrap();
    let s25 = strong.deviation(25, 30).unwrap();
    let tol = 5e-3;
    let pass = d10 < tol && s15 > tol && s25 < tol;
    outcome(
        pass,
        format!(
            "truncation convergence: kappa=0.01 max|P3(N=10)-P3(N=15)| = {d10:.3e} (N=15 vs 20: {d15:.3e}); kappa=0.5 N=15 vs 30: {s15:.3e}, N=25 vs 30: {s25:.3e}; tolerance {tol:.0e}"
        ),
    )
}

// ---------------------------------------------------------------- 10

fn label(exciton: usize, n_a: usize, n_b: usize) -> BasisLabel {
    BasisLabel { exciton, n_a, n_b }
}

fn vibronic_crossings(kappa: f64) -> (Vec<AvoidedCrossing>, f64) {
    let mode = VibrationalModeSpec::new(0.52, kappa, 1.5, 3);
    let system = SystemSpec::new(TrimerParams::symmetric(0.5, 0.1), mode, mode);
    let d = system.delta31().unwrap();
    let nu_a: Vec<f64> = (0..=1100).map(|k| 0.1 + 0.001 * k as f64).collect();
    let sweep = sweep_spectrum(&system, &nu_a).unwrap();
    (find_avoided_crossings(&sweep, &CrossingOptions::default()), d)
}

fn avoided_crossings() -> Outcome {
    let start = Instant::now();
    let (weak, _) = vibronic_crossings(0.03);
    let (strong, _) = vibronic_crossings(0.06);
    let elapsed = start.elapsed().as_secs_f64();
    // a crossing is tracked across couplings by its sorted level pair
    let partner = |c: &AvoidedCrossing| {
        strong
            .iter()
            .filter(|s| s.lower == c.lower && s.upper == c.upper && (s.normalized - c.normalized).abs() < 0.03)
            .min_by(|a, b| (a.normalized - c.normalized).abs().total_cmp(&(b.normalized - c.normalized).abs()))
    };
    let mut pass = elapsed < 10.0;
    let mut parts = Vec::new();
    let (mut matched, mut grown) = (0, 0);
    for x in [0.25, 0.5, 1.0] {
        let mut tracked: Vec<(&AvoidedCrossing, &AvoidedCrossing)> = weak
            .iter()
            .filter(|c| (c.normalized - x).abs() < 0.03)
            .filter_map(|c| partner(c).map(|p| (c, p)))
            .collect();
        matched += tracked.len();
        grown += tracked.iter().filter(|(c, p)| p.min_gap > c.min_gap).count();
        tracked.sort_by_key(|(c, _)| c.lower);
        match tracked.first() {
            Some((c, p)) => {
                pass &= p.min_gap > c.min_gap;
                parts.push(format!(
                    "x={:.4} levels {}-{} {}/{} gap {:.3e} -> {:.3e}",
                    c.normalized,
                    c.lower,
                    c.upper,
                    c.pair()[0],
                    c.pair()[1],
                    c.min_gap,
                    p.min_gap
                ));
            }
            None => {
                pass = false;
                parts.push(format!("no tracked crossing near {x}"));
            }
        }
    }
    let one_phonon = weak
        .iter()
        .filter(|c| (c.normalized - 1.0).abs() < 0.03)
        .any(|c| c.mixes(label(1, 1, 0), label(3, 0, 0)));
    pass &= one_phonon;
    outcome(
        pass,
        format!(
            "vibronic avoided crossings (kappa 0.03 -> 0.06), lowest tracked pair per locus: {}; gaps grown in {grown}/{matched} tracked pairs near the loci; |110>/|300> hybrid at the one-phonon crossing: {one_phonon}; {} crossings found at kappa 0.03; runtime {elapsed:.2} s",
            parts.join("; "),
            weak.len()
        ),
    )
}

// ---------------------------------------------------------------- 11

fn neighbours(x: f64, y: f64, h: f64) -> [(f64, f64); 5] {
    [(x, y), (x, y - h), (x, y + h), (x - h, y), (x + h, y)]
}

fn interference() -> Outcome {
    let times = TimeGrid::standard();
    let system = reference();
    let d = system.delta31().unwrap();
    let h = 0.05 * d;
    let v = maxima(&system, &neighbours(0.5 * d, 0.5 * d, h), &times);
    let ordered = |v: &[f64]| v[0] < v[1].min(v[2]) && v[0] > v[3].max(v[4]);
    let symmetric = ordered(&v);
    let mut pass = symmetric;
    let mut parts = vec![format!(
        "symmetric point {:.4e}, nu_b-neighbours {:.4e}/{:.4e}, nu_a-neighbours {:.4e}/{:.4e}",
        v[0], v[1], v[2], v[3], v[4]
    )];
    for w in [[-0.5, 0.0, 0.3], [-0.3, 0.0, 0.5]] {
        let trimer = TrimerParams { omega_tilde: w, j12: 0.1, j23: 0.1, j13: 0.0 };
        let mode = VibrationalModeSpec::new(0.5, 0.01, 0.749, 10);
        let asym = SystemSpec::new(trimer, mode, mode);
        let e = trimer.exciton_energies(asym.topology).unwrap();
        let (g21, g32) = (e[1] - e[0], e[2] - e[1]);
        let (x, y) = (g21, g32);
        let v = maxima(&asym, &neighbours(x, y, 0.05 * (e[2] - e[0])), &times);
        let absent = !ordered(&v);
        pass &= absent;
        parts.push(format!(
            "asymmetric ({x:.3}, {y:.3}): {:.4e} vs nu_b {:.4e}/{:.4e}, nu_a {:.4e}/{:.4e}, ordering absent: {absent}",
            v[0], v[1], v[2], v[3], v[4]
        ));
    }
    outcome(pass, format!("interference signature (offset 0.05 D31): {}", parts.join("; ")))
}

// ---------------------------------------------------------------- 12

fn cross_coupling() -> Outcome {
    let times = TimeGrid::standard();
    let mode = VibrationalModeSpec::new(0.5, 0.01, 0.749, 10);
    let base = SystemSpec::new(TrimerParams::symmetric(0.5, 0.1), mode, mode);
    let d = base.delta31().unwrap();
    let offsets: Vec<f64> = (-4..=4).map(|k| 1.0 + 0.01 * k as f64).collect();
    let points: Vec<(f64, f64)> = offsets.iter().map(|&y| (0.746 * d, y * d)).collect();
    let mut peaks = Vec::new();
    for zeta in [1.0, 0.0] {
        let v = maxima(&base.with_topology(CouplingTopology::Transverse { zeta }), &points, &times);
        let baseline = median(vec![v[0], v[1], v[7], v[8]]);
        peaks.push((peak(&v), peak(&v) - baseline));
    }
    let raw = peaks[0].0 / peaks[1].0;
    let excess = peaks[0].1 / peaks[1].1;

    let build = |zeta: f64| {
        let s = base.with_frequencies(0.52, 0.776).with_topology(CouplingTopology::Transverse { zeta });
        build_effective_hamiltonian(&s.trimer, &s.mode_a, &s.mode_b, s.topology, &s.dissipation).unwrap().matrix
    };
    let (h0, h1) = (build(0.0), build(1.0));
    let mut affine = 0.0f64;
    for zeta in [0.25, 0.5, 0.8] {
        let h = build(zeta);
        let lin = &h0 * num_complex::Complex64::from(1.0 - zeta) + &h1 * num_complex::Complex64::from(zeta);
        affine = affine.max((&h - &lin).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let pass = raw > 1.5 && excess > 2.0 && affine < 1e-12;
    outcome(
        pass,
        format!(
            "cross couplings: one-phonon peak at nu_b = D31 = {d:.4}: zeta=1 {:.4e} vs zeta=0 {:.4e} (ratio {raw:.2}, above-baseline ratio {excess:.2}); affine-in-zeta defect {affine:.1e}",
            peaks[0].0, peaks[1].0
        ),
    )
}

// ---------------------------------------------------------------- 13

/// Peak within ±0.03 and prominence against the ±(0.06, 0.08) flanks of a
/// perpendicular profile through `(x, y)` along `dir` (units of Δ31).
fn line_profile(system: &SystemSpec, d: f64, at: (f64, f64), dir: (f64, f64), times: &TimeGrid) -> (f64, f64) {
    let offsets = [-0.08, -0.06, -0.03, -0.02, -0.01, 0.0, 0.01, 0.02, 0.03, 0.06, 0.08];
    let points: Vec<(f64, f64)> = offsets.iter().map(|u| ((at.0 + u * dir.0) * d, (at.1 + u * dir.1) * d)).collect();
    let v = maxima(system, &points, times);
    let top = peak(&v[2..9]);
    let flank = median(vec![v[0], v[1], v[9], v[10]]);
    (top, top / flank)
}

fn longitudinal() -> Outcome {
    let times = TimeGrid::standard();
    let mode = VibrationalModeSpec::new(0.5, 0.01, 1.5, 15);
    let system =
        SystemSpec::new(TrimerParams::symmetric(0.5, 0.1), mode, mode).with_topology(CouplingTopology::Longitudinal);
    let d = system.delta31().unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // mode a is the anti-correlated mode c, mode b the correlated mode d
    let d_half = line_profile(&system, d, (0.746, 0.5), (0.0, 1.0), &times);
    let d_one = line_profile(&system, d, (0.746, 1.0), (0.0, 1.0), &times);
    let c_half = line_profile(&system, d, (0.5, 0.746), (1.0, 0.0), &times);
    let c_one = line_profile(&system, d, (1.0, 0.746), (1.0, 0.0), &times);
    let anti_upper = line_profile(&system, d, (0.3, 0.7), (s, s), &times);
    let anti_lower = line_profile(&system, d, (0.7, 0.3), (s, s), &times);

    let others = [d_one, c_half, c_one, anti_upper, anti_lower];
    let dominant = others.iter().all(|o| d_half.0 > o.0);
    let c_not_dominant = c_half.0 <= c_one.0;
    let sector = anti_upper.1 >= 1.5 && anti_lower.1 < 1.5;

    // direct c-mode matrix element between the outer excitons
    let e = system.trimer.electronic_matrix(system.topology);
    let (_, v) = vaet_core::linalg::symmetric_eigen(&faer::Mat::from_fn(3, 3, |i, j| e[i][j])).unwrap();
    let pattern = [1.0, 0.0, -1.0];
    let element: f64 = (0..3).map(|k| v[(k, 0)] * pattern[k] * v[(k, 2)]).sum();

    let fmt = |(p, r): (f64, f64)| format!("{p:.3e} (x{r:.2})");
    outcome(
        dominant && c_not_dominant && sector,
        format!(
            "longitudinal modes (D31 = {d:.4}): nu_d=0.5 {} | nu_d=1 {} | nu_c=0.5 {} | nu_c=1 {} | antidiagonal d>c {} d<c {}; nu_d=0.5 dominant: {dominant}; nu_c two-phonon not above one-phonon: {c_not_dominant}; antidiagonal bright only for nu_d>nu_c: {sector}; <e1|X_c|e3> = {element:.1e}",
            fmt(d_half), fmt(d_one), fmt(c_half), fmt(c_one), fmt(anti_upper), fmt(anti_lower)
        ),
    )
}

fn main() {
    // unused-argument tolerance: libtest flags such as --nocapture may be passed
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, fn() -> Outcome); 13] = [
        (1, zero_coupling_oracle),
        (2, phonon_occupancy),
        (3, one_phonon_ratio),
        (4, two_phonon_dominance),
        (5, feature_taxonomy),
        (6, perturbation_vs_exact),
        (7, wick_oracle),
        (8, dissipation),
        (9, truncation_convergence),
        (10, avoided_crossings),
        (11, interference),
        (12, cross_coupling),
        (13, longitudinal),
    ];
    let mut failed = Vec::new();
    for (id, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        println!(
            "criterion {id:>2} {} [{:.1} s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
