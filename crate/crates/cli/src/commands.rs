//! One function per subcommand. Each writes its files through [`Artifacts`]
//! and returns a short summary for stdout.

use rayon::prelude::*;
use serde::Serialize;
use vaet_core::dynamics::{convergence_sweep, Propagator, TransferTrace};
use vaet_core::model::{CouplingTopology, Preset, PresetParams, SystemSpec};
use vaet_core::perturb::{coupling_coefficients, p3_perturbative, symmetric_eigensystem, ModeCouplings};
use vaet_core::spectra::{classify_features, scan_axes};
use vaet_core::vibronic::{find_avoided_crossings, sweep_spectrum};
use vaet_core::{dynamics, VaetError};

use crate::config::{RunConfig, TraceSet};
use crate::error::{CliError, Result};
use crate::output::{field, num, Artifacts};
use crate::svg::Heatmap;

pub fn spectrum2d(cfg: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let system = cfg.system();
    let times = cfg.time_grid()?;
    let d31 = system.delta31()?;
    let scale = cfg.spectrum2d.units.scale(d31);
    let nu_a: Vec<f64> = cfg.spectrum2d.nu_a.values().iter().map(|v| v * scale).collect();
    let nu_b: Vec<f64> = cfg.spectrum2d.nu_b.values().iter().map(|v| v * scale).collect();
    let grid = scan_axes(&system, &nu_a, &nu_b, &times)?;

    let rows = (0..nu_a.len()).flat_map(|i| {
        let grid = &grid;
        (0..grid.nu_b.len()).map(move |j| {
            let (a, b) = (grid.nu_a[i], grid.nu_b[j]);
            vec![num(a), num(b), num(a / d31), num(b / d31), num(grid.max_p3[[i, j]]), num(grid.int_p3[[i, j]])]
        })
    });
    art.csv("spectrum.csv", &["nu_a", "nu_b", "nu_a_over_d31", "nu_b_over_d31", "max_p3", "int_p3"], rows)?;

    let features = classify_features(&grid, &cfg.spectrum2d.classifier);
    art.json("features.json", "features", &features)?;
    if cfg.spectrum2d.svg {
        let svg = Heatmap {
            title: "Max[P3]",
            nu_a: &grid.nu_a,
            nu_b: &grid.nu_b,
            values: &grid.max_p3,
            delta31: d31,
            metadata: art.config_toml(),
        }
        .render();
        art.text("spectrum.svg", &svg)?;
    }
    let detected: Vec<&str> = features.detected().map(|f| f.locus.as_str()).collect();
    art.json(
        "meta.json",
        "meta",
        &serde_json::json!({
            "delta31": d31,
            "grid": { "n_a": nu_a.len(), "n_b": nu_b.len(), "points": nu_a.len() * nu_b.len() },
            "time": { "t_final": cfg.time.t_final, "step": cfg.time.step, "samples": times.len() },
            "detected": detected,
        }),
    )?;
    Ok(format!(
        "spectrum2d: {}x{} grid, Delta31 = {d31:.6}, {} of {} candidate lines detected",
        nu_a.len(),
        nu_b.len(),
        detected.len(),
        features.features.len()
    ))
}

#[derive(Serialize)]
struct TraceSummary {
    label: String,
    system: SystemSpec,
    route: dynamics::Route,
    max_p3: f64,
    int_p3: f64,
    t_at_max: f64,
    final_trace_norm: f64,
}

pub fn trace(cfg: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let base = cfg.system();
    let times = cfg.time_grid()?;
    let sets = if cfg.trace.sets.is_empty() { vec![TraceSet::default()] } else { cfg.trace.sets.clone() };
    let runs: Vec<(TraceSummary, TransferTrace, Vec<f64>)> = sets
        .par_iter()
        .enumerate()
        .map(|(i, set)| -> Result<_> {
            let system = set.apply(&base, cfg.trace.units)?;
            let h = system.hamiltonian()?;
            let init = system.donor_density()?;
            let prop = Propagator::new(&h)?;
            let trace = TransferTrace::new(times.times().to_vec(), prop.site_population(&init, 2, &times)?);
            let norm = prop.trace_norm(&init, &times)?;
            let summary = TraceSummary {
                label: set.label(i),
                system,
                route: prop.route(),
                max_p3: trace.max_p3,
                int_p3: trace.int_p3,
                t_at_max: trace.times[trace.argmax()],
                final_trace_norm: *norm.last().expect("non-empty grid"),
            };
            Ok((summary, trace, norm))
        })
        .collect::<Result<_>>()?;

    let rows = runs.iter().flat_map(|(s, trace, norm)| {
        trace
            .times
            .iter()
            .zip(&trace.p3)
            .zip(norm)
            .map(move |((t, p), n)| vec![field(&s.label), num(*t), num(*p), num(*n)])
    });
    art.csv("trace.csv", &["set", "t_ms", "p3", "trace_norm"], rows)?;
    let summaries: Vec<&TraceSummary> = runs.iter().map(|r| &r.0).collect();
    art.json("meta.json", "sets", &summaries)?;
    let lines: Vec<String> =
        summaries.iter().map(|s| format!("{} max_p3 = {:.6e} at t = {} ms", s.label, s.max_p3, s.t_at_max)).collect();
    Ok(format!("trace: {}", lines.join("; ")))
}

pub fn vibronic(cfg: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let system = cfg.system().with_n_fock(cfg.vibronic.n_fock);
    let d31 = system.delta31()?;
    let scale = cfg.vibronic.units.scale(d31);
    let nu_a: Vec<f64> = cfg.vibronic.nu_a.values().iter().map(|v| v * scale).collect();
    let sweep = sweep_spectrum(&system, &nu_a)?;
    let crossings = find_avoided_crossings(&sweep, &cfg.vibronic.crossing);

    let n_levels = sweep.levels.ncols();
    let mut header = vec!["nu_a".to_string(), "nu_a_over_d31".to_string()];
    header.extend((0..n_levels).map(|k| format!("level_{k}")));
    let rows = sweep.nu_a.iter().enumerate().map(|(i, &nu)| {
        let mut row = vec![num(nu), num(nu / d31)];
        row.extend(sweep.levels.row(i).iter().map(|&e| num(e)));
        row
    });
    art.csv("levels.csv", &header, rows)?;
    art.json("crossings.json", "crossings", &crossings)?;
    art.json(
        "meta.json",
        "meta",
        &serde_json::json!({
            "delta31": d31,
            "nu_b": sweep.nu_b,
            "points": sweep.nu_a.len(),
            "levels": n_levels,
            "crossings": crossings.len(),
        }),
    )?;
    Ok(format!("vibronic: {} levels over {} points, {} avoided crossings", n_levels, nu_a.len(), crossings.len()))
}

pub fn perturb(cfg: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let system = cfg.system();
    let times = cfg.time_grid()?;
    let trimer = system.trimer;
    if !trimer.is_symmetric() || trimer.j13 != 0.0 {
        return Err(VaetError::NotSymmetric("equal site spacing, equal hoppings and j13 = 0 are required".into()).into());
    }
    if system.topology != (CouplingTopology::Transverse { zeta: 1.0 }) {
        return Err(CliError::Config("perturb covers the transverse topology with zeta = 1 only".into()));
    }
    if !system.dissipation.is_zero() {
        return Err(CliError::Config("perturb has no dissipation; set system.gamma to zero".into()));
    }
    let sys = symmetric_eigensystem(trimer.delta(), trimer.hopping())?;
    let coeffs = coupling_coefficients(&sys);
    let modes = ModeCouplings::from_modes(&system.mode_a, &system.mode_b);
    let result = p3_perturbative(&sys, &coeffs, &modes, &times, cfg.perturb.regime)?;

    let rows = result.terms.iter().flat_map(|term| {
        times.times().iter().enumerate().map(move |(k, t)| {
            vec![
                num(*t),
                field(&term.group),
                field(&term.name),
                num(term.amplitude[k].re),
                num(term.amplitude[k].im),
                num(term.thermal_factor),
                num(term.values[k]),
            ]
        })
    });
    art.csv("terms.csv", &["t_ms", "group", "name", "amplitude_re", "amplitude_im", "thermal_factor", "value"], rows)?;

    let exact = if cfg.perturb.compare_exact { Some(dynamics::system_trace(&system, &times)?) } else { None };
    let mut header = vec!["t_ms", "p3_perturbative"];
    if exact.is_some() {
        header.push("p3_exact");
    }
    let rows = (0..times.len()).map(|k| {
        let mut row = vec![num(times.times()[k]), num(result.trace.p3[k])];
        if let Some(e) = &exact {
            row.push(num(e.p3[k]));
        }
        row
    });
    art.csv("trace.csv", &header, rows)?;

    let comparison = exact.as_ref().and_then(|e| {
        let k = e.first_local_max()?;
        Some(serde_json::json!({
            "t_first_max": e.times[k],
            "exact": e.p3[k],
            "perturbative": result.trace.p3[k],
            "relative_error": (result.trace.p3[k] - e.p3[k]).abs() / e.p3[k],
        }))
    });
    art.json(
        "meta.json",
        "meta",
        &serde_json::json!({
            "regime": result.regime,
            "terms": result.terms.len(),
            "warnings": result.warnings,
            "first_maximum": comparison,
        }),
    )?;
    let mut summary = format!("perturb: {} terms, max_p3 = {:.6e}", result.terms.len(), result.trace.max_p3);
    if let Some(c) = comparison {
        summary.push_str(&format!(", relative error at the first maximum {:.3e}", c["relative_error"].as_f64().unwrap_or(f64::NAN)));
    }
    for w in &result.warnings {
        summary.push_str(&format!("\nwarning: {w}"));
    }
    Ok(summary)
}

pub fn convergence(cfg: &RunConfig, art: &mut Artifacts) -> Result<String> {
    let system = cfg.system();
    let times = cfg.time_grid()?;
    let report = convergence_sweep(&system, &cfg.convergence.n_values, &times)?;

    let mut header = vec!["t_ms".to_string()];
    header.extend(report.n_values.iter().map(|n| format!("p3_n{n}")));
    let rows = (0..times.len()).map(|k| {
        let mut row = vec![num(times.times()[k])];
        row.extend(report.traces.iter().map(|t| num(t.p3[k])));
        row
    });
    art.csv("traces.csv", &header, rows)?;

    let n = &report.n_values;
    let rows = (0..n.len())
        .flat_map(|i| (i + 1..n.len()).map(move |j| (i, j)))
        .map(|(i, j)| vec![n[i].to_string(), n[j].to_string(), num(report.deviations[i][j])]);
    art.csv("deviations.csv", &["n_i", "n_j", "max_abs_deviation"], rows)?;
    let largest = report.deviation_from_largest();
    art.json(
        "meta.json",
        "meta",
        &serde_json::json!({ "n_values": n, "deviation_from_largest": largest }),
    )?;
    let parts: Vec<String> = n.iter().zip(&largest).map(|(n, d)| format!("N={n}: {d:.3e}")).collect();
    Ok(format!("convergence: max deviation from N={}: {}", n[n.len() - 1], parts.join(", ")))
}

#[derive(Serialize)]
struct PresetEntry {
    name: &'static str,
    #[serde(flatten)]
    params: PresetParams,
}

/// All presets as TOML (`[[preset]]` tables) or JSON.
pub fn presets(json: bool) -> String {
    let entries: Vec<PresetEntry> =
        Preset::ALL.iter().map(|p| PresetEntry { name: p.name(), params: vaet_core::model::preset(*p) }).collect();
    if json {
        let mut s = serde_json::to_string_pretty(&entries).expect("presets serialize");
        s.push('\n');
        s
    } else {
        #[derive(Serialize)]
        struct Doc<'a> {
            preset: &'a [PresetEntry],
        }
        toml::to_string(&Doc { preset: &entries }).expect("presets serialize")
    }
}
