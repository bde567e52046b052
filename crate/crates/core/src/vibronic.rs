//! Vibronic eigenvalue spectra swept over `ν_a` and their avoided crossings.

use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg;
use crate::model::{BasisIndex, SystemSpec};
use crate::spectra::AxisRange;

/// Uncoupled product state `|exciton, n_a, n_b>`, exciton counted from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisLabel {
    pub exciton: usize,
    pub n_a: usize,
    pub n_b: usize,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}{}{}>", self.exciton, self.n_a, self.n_b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub label: BasisLabel,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// `mode_a.nu` is ignored; every other field is held fixed.
    pub system: SystemSpec,
    pub nu_a: AxisRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VibronicSweep {
    pub nu_a: Vec<f64>,
    pub nu_b: f64,
    pub delta31: f64,
    pub basis: BasisIndex,
    /// `levels[[point, level]]`, ascending along `level`.
    pub levels: Array2<f64>,
    /// Eigenvectors in the uncoupled exciton–Fock basis, one column per level.
    #[serde(skip)]
    pub vectors: Vec<Array2<f64>>,
}

pub fn sweep(config: &SweepConfig) -> Result<VibronicSweep> {
    config.nu_a.validate()?;
    sweep_spectrum(&config.system, &config.nu_a.values())
}

/// Sorted eigenvalues of the Hermitian effective Hamiltonian at each `ν_a`.
pub fn sweep_spectrum(system: &SystemSpec, nu_a: &[f64]) -> Result<VibronicSweep> {
    system.validate()?;
    if !system.dissipation.is_zero() {
        return Err(invalid("gamma", "vibronic spectra need a Hermitian Hamiltonian"));
    }
    if nu_a.is_empty() {
        return Err(invalid("nu_a", "sweep needs at least one point"));
    }
    let e = system.trimer.electronic_matrix(system.topology);
    let (_, excitons) = linalg::symmetric_eigen(&faer::Mat::from_fn(3, 3, |i, j| e[i][j]))?;
    let per_point: Vec<(Vec<f64>, Array2<f64>)> = nu_a
        .par_iter()
        .map(|&nu| {
            let h = system.with_frequencies(nu, system.mode_b.nu).hamiltonian()?;
            let (values, vecs) = linalg::symmetric_eigen(&linalg::real_from_array(&h.real_part()))?;
            let basis = h.basis;
            let per_site = basis.n_a * basis.n_b;
            // rotate the site index into the bare exciton basis
            let rotated = Array2::from_shape_fn((basis.dim(), basis.dim()), |(row, col)| {
                let (j, rest) = (row / per_site, row % per_site);
                (0..3).map(|s| excitons[(s, j)] * vecs[(s * per_site + rest, col)]).sum()
            });
            Ok((values, rotated))
        })
        .collect::<Result<_>>()?;
    let dim = per_point[0].0.len();
    let levels = Array2::from_shape_fn((nu_a.len(), dim), |(p, l)| per_point[p].0[l]);
    Ok(VibronicSweep {
        nu_a: nu_a.to_vec(),
        nu_b: system.mode_b.nu,
        delta31: system.delta31()?,
        basis: BasisIndex { n_a: system.mode_a.n_fock, n_b: system.mode_b.n_fock },
        levels,
        vectors: per_point.into_iter().map(|(_, v)| v).collect(),
    })
}

impl VibronicSweep {
    pub fn n_levels(&self) -> usize {
        self.levels.ncols()
    }

    pub fn label(&self, flat: usize) -> BasisLabel {
        let (s, n_a, n_b) = self.basis.split(flat);
        BasisLabel { exciton: s + 1, n_a, n_b }
    }

    /// Largest `top` components of a level, by probability.
    pub fn composition(&self, point: usize, level: usize, top: usize) -> Vec<Component> {
        let v = self.vectors[point].column(level);
        let mut comps: Vec<Component> = v.iter().enumerate().map(|(i, c)| Component { label: self.label(i), weight: c * c }).collect();
        comps.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        comps.truncate(top);
        comps
    }

    /// `|<v_l(p)|v_k(q)>|²`.
    pub fn overlap(&self, p: usize, l: usize, q: usize, k: usize) -> f64 {
        let d: f64 = self.vectors[p].column(l).dot(&self.vectors[q].column(k));
        d * d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingOptions {
    /// Sweep points on each side used for the local-minimum test.
    pub window: usize,
    /// Gaps above this (rad/ms) are not reported.
    pub max_gap: f64,
    /// Minimum character exchange between the sides of a crossing.
    pub overlap_threshold: f64,
    /// The sides sit where the gap has grown to this multiple of its minimum,
    /// or stopped growing.
    pub side_factor: f64,
    /// Fitted gaps below this count as exact crossings.
    pub exact_tolerance: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self { window: 2, max_gap: 0.1, overlap_threshold: 0.5, side_factor: 4.0, exact_tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidedCrossing {
    pub lower: usize,
    pub upper: usize,
    /// Fitted position of the minimum.
    pub nu_a: f64,
    pub normalized: f64,
    pub min_gap: f64,
    /// True when the fitted gap vanishes (decoupled levels).
    pub exact: bool,
    /// False when the gap closes faster than the sweep step resolves; `min_gap`
    /// is then the smallest sampled gap, an upper bound.
    pub resolved: bool,
    /// Top-2 components of (lower, upper) before the crossing.
    pub before: [Vec<Component>; 2],
    /// Top-2 components of (lower, upper) after it.
    pub after: [Vec<Component>; 2],
    /// Top-2 components of (lower, upper) at the sampled minimum.
    pub hybrid: [Vec<Component>; 2],
}

impl AvoidedCrossing {
    /// Dominant states of the two levels before the crossing, sorted.
    pub fn pair(&self) -> [BasisLabel; 2] {
        let mut l = [self.before[0][0].label, self.before[1][0].label];
        l.sort();
        l
    }

    /// Whether `a` and `b` sit in different levels on one side of the crossing.
    pub fn mixes(&self, a: BasisLabel, b: BasisLabel) -> bool {
        let has = |c: &[Component], x: BasisLabel| c.iter().any(|k| k.label == x);
        [&self.before, &self.after].iter().any(|side| (has(&side[0], a) && has(&side[1], b)) || (has(&side[0], b) && has(&side[1], a)))
    }
}

/// Minimum of the parabola through three `(x, y)` points, if it opens upward.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d12 - d01) / (x[2] - x[0]);
    if !(curvature > 0.0) {
        return None;
    }
    let slope = d01 - curvature * (x[0] + x[1]);
    let xv = -slope / (2.0 * curvature);
    if !(x[0]..=x[2]).contains(&xv) {
        return None;
    }
    let yv = y[1] + (xv - x[1]) * (d01 + curvature * (xv - x[0]));
    Some((xv, yv))
}

/// Walk from `p` in direction `step` while the gap grows, stopping once it
/// reaches `target`.
fn side(gap: &[f64], p: usize, forward: bool, target: f64) -> usize {
    let mut q = p;
    loop {
        let next = if forward { q + 1 } else { q.wrapping_sub(1) };
        if next >= gap.len() || gap[next] < gap[q] {
            return q;
        }
        q = next;
        if gap[q] >= target {
            return q;
        }
    }
}

/// Local minima of adjacent-level gaps where the two levels swap character.
pub fn find_avoided_crossings(sweep: &VibronicSweep, options: &CrossingOptions) -> Vec<AvoidedCrossing> {
    let w = options.window.max(1);
    let points = sweep.nu_a.len();
    if points < 2 * w + 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for l in 0..sweep.n_levels().saturating_sub(1) {
        let gap: Vec<f64> = (0..points).map(|p| sweep.levels[[p, l + 1]] - sweep.levels[[p, l]]).collect();
        let mut p = w;
        while p + w < points {
            let local_min = (p - w..=p + w).all(|q| gap[p] <= gap[q]);
            if !local_min || gap[p] > options.max_gap {
                p += 1;
                continue;
            }
            let target = options.side_factor * gap[p];
            let (left, right) = (side(&gap, p, false, target).min(p - w), side(&gap, p, true, target).max(p + w));
            let exchange = sweep.overlap(left, l, right, l + 1).min(sweep.overlap(left, l + 1, right, l));
            if exchange < options.overlap_threshold {
                p += 1;
                continue;
            }
            let x = [sweep.nu_a[p - 1], sweep.nu_a[p], sweep.nu_a[p + 1]];
            let y = [gap[p - 1].powi(2), gap[p].powi(2), gap[p + 1].powi(2)];
            let (nu, gap_sq) = parabola_vertex(x, y).unwrap_or((x[1], y[1]));
            // a clearly negative vertex means the minimum is narrower than the grid
            let resolved = gap_sq >= -1e-9 * y[1].max(y[0]).max(y[2]);
            // rounding of the eigenvalues puts a floor under the fitted gap²
            let scale = sweep.levels.row(p).iter().fold(0.0f64, |m, e| m.max(e.abs()));
            let floor = 2.0 * gap[p - 1].max(gap[p + 1]) * 64.0 * f64::EPSILON * scale.max(1.0);
            let (nu, min_gap) = if !resolved {
                (x[1], gap[p])
            } else if gap_sq <= floor {
                (nu, 0.0)
            } else {
                (nu, gap_sq.sqrt().min(gap[p]))
            };
            let top2 = |q: usize| [sweep.composition(q, l, 2), sweep.composition(q, l + 1, 2)];
            out.push(AvoidedCrossing {
                lower: l,
                upper: l + 1,
                nu_a: nu,
                normalized: nu / sweep.delta31,
                min_gap,
                exact: resolved && min_gap < options.exact_tolerance,
                resolved,
                before: top2(left),
                after: top2(right),
                hybrid: top2(p),
            });
            // one report per minimum
            p += w + 1;
        }
    }
    out.sort_by(|a, b| a.nu_a.total_cmp(&b.nu_a).then(a.lower.cmp(&b.lower)));
    out
}
