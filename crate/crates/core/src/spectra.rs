//! Two-dimensional VAET spectra: `Max[P₃]` and `Int[P₃]` over a grid of
//! `(ν_a, ν_b)`, slices through it, and a line classifier.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{system_trace, TimeGrid};
use crate::error::{invalid, Result, VaetError};
use crate::model::SystemSpec;

/// Inclusive arithmetic range `start, start + step, …, ≤ stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(invalid("step", format!("must be > 0, got {}", self.step)));
        }
        if !(self.start.is_finite() && self.start > 0.0) {
            return Err(invalid("start", format!("frequencies must be > 0, got {}", self.start)));
        }
        if !(self.stop.is_finite() && self.stop >= self.start) {
            return Err(invalid("stop", format!("range is empty: {} > {}", self.start, self.stop)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        // the small slack keeps `stop` when it is a multiple of `step` up to rounding
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub nu_a: AxisRange,
    pub nu_b: AxisRange,
    /// Everything except the two frequencies, which the scan overwrites.
    pub system: SystemSpec,
    pub t_final: f64,
    pub sample_step: f64,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.nu_a.validate()?;
        self.nu_b.validate()?;
        self.system.validate()?;
        self.time_grid().map(|_| ())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.t_final, self.sample_step)
    }
}

/// One evaluated frequency pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub nu_a: f64,
    pub nu_b: f64,
    pub max_p3: f64,
    pub int_p3: f64,
}

/// Evaluate arbitrary frequency pairs; output order follows `points`.
pub fn scan_points(system: &SystemSpec, points: &[(f64, f64)], times: &TimeGrid) -> Result<Vec<ScanSample>> {
    system.validate()?;
    points
        .par_iter()
        .map(|&(nu_a, nu_b)| {
            let trace = system_trace(&system.with_frequencies(nu_a, nu_b), times)
                .map_err(|e| VaetError::ScanPoint { nu_a, nu_b, source: Box::new(e) })?;
            Ok(ScanSample { nu_a, nu_b, max_p3: trace.max_p3, int_p3: trace.int_p3 })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub nu_a: Vec<f64>,
    pub nu_b: Vec<f64>,
    pub delta31: f64,
    /// Indexed `[i_a, i_b]`.
    pub max_p3: Array2<f64>,
    pub int_p3: Array2<f64>,
}

pub fn scan_2d(config: &ScanConfig) -> Result<SpectrumGrid> {
    config.validate()?;
    scan_axes(&config.system, &config.nu_a.values(), &config.nu_b.values(), &config.time_grid()?)
}

/// Product grid over explicit axis values.
pub fn scan_axes(system: &SystemSpec, nu_a: &[f64], nu_b: &[f64], times: &TimeGrid) -> Result<SpectrumGrid> {
    if nu_a.is_empty() || nu_b.is_empty() {
        return Err(invalid("axes", "both frequency axes need at least one value"));
    }
    let points: Vec<(f64, f64)> = nu_a.iter().flat_map(|&a| nu_b.iter().map(move |&b| (a, b))).collect();
    let samples = scan_points(system, &points, times)?;
    let shape = (nu_a.len(), nu_b.len());
    let max_p3 = Array2::from_shape_fn(shape, |(i, j)| samples[i * shape.1 + j].max_p3);
    let int_p3 = Array2::from_shape_fn(shape, |(i, j)| samples[i * shape.1 + j].int_p3);
    Ok(SpectrumGrid { nu_a: nu_a.to_vec(), nu_b: nu_b.to_vec(), delta31: system.delta31()?, max_p3, int_p3 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceAxis {
    /// Fixed `ν_a`, profile along `ν_b`.
    NuA,
    /// Fixed `ν_b`, profile along `ν_a`.
    NuB,
}

/// 1D cut through a spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    /// Value of the fixed frequency actually used (nearest grid line).
    pub fixed: f64,
    pub coords: Vec<f64>,
    pub normalized: Vec<f64>,
    pub max_p3: Vec<f64>,
    pub int_p3: Vec<f64>,
}

impl Profile {
    /// Largest `max_p3` with normalized coordinate in `[lo, hi]`.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.normalized
            .iter()
            .zip(&self.max_p3)
            .filter(|(x, _)| (lo..=hi).contains(*x))
            .map(|(x, v)| (*x, *v))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

impl SpectrumGrid {
    pub fn normalized_a(&self) -> Vec<f64> {
        self.nu_a.iter().map(|x| x / self.delta31).collect()
    }

    pub fn normalized_b(&self) -> Vec<f64> {
        self.nu_b.iter().map(|x| x / self.delta31).collect()
    }

    /// Same data with the two axes exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            nu_a: self.nu_b.clone(),
            nu_b: self.nu_a.clone(),
            delta31: self.delta31,
            max_p3: self.max_p3.t().to_owned(),
            int_p3: self.int_p3.t().to_owned(),
        }
    }

    /// Cut along the nearest grid line to `at` (raw frequency).
    pub fn slice(&self, axis: SliceAxis, at: f64) -> Result<Profile> {
        let (fixed_axis, free_axis) = match axis {
            SliceAxis::NuA => (&self.nu_a, &self.nu_b),
            SliceAxis::NuB => (&self.nu_b, &self.nu_a),
        };
        let (lo, hi) = (fixed_axis[0], fixed_axis[fixed_axis.len() - 1]);
        let half = if fixed_axis.len() > 1 { 0.5 * (fixed_axis[1] - fixed_axis[0]).abs() } else { 0.0 };
        if !(at >= lo.min(hi) - half && at <= lo.max(hi) + half) {
            return Err(invalid("at", format!("{at} outside [{lo}, {hi}]")));
        }
        let idx = (0..fixed_axis.len()).min_by(|&i, &j| (fixed_axis[i] - at).abs().total_cmp(&(fixed_axis[j] - at).abs())).unwrap_or(0);
        let (max_p3, int_p3) = match axis {
            SliceAxis::NuA => (self.max_p3.row(idx).to_vec(), self.int_p3.row(idx).to_vec()),
            SliceAxis::NuB => (self.max_p3.column(idx).to_vec(), self.int_p3.column(idx).to_vec()),
        };
        Ok(Profile {
            fixed: fixed_axis[idx],
            coords: free_axis.clone(),
            normalized: free_axis.iter().map(|x| x / self.delta31).collect(),
            max_p3,
            int_p3,
        })
    }

    pub fn samples(&self) -> Vec<ScanSample> {
        let mut out = Vec::with_capacity(self.max_p3.len());
        for (i, &a) in self.nu_a.iter().enumerate() {
            for (j, &b) in self.nu_b.iter().enumerate() {
                out.push(ScanSample { nu_a: a, nu_b: b, max_p3: self.max_p3[[i, j]], int_p3: self.int_p3[[i, j]] });
            }
        }
        out
    }
}

/// Spectral line families, in units of `x = ν_a/Δ₃₁`, `y = ν_b/Δ₃₁`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "order")]
pub enum FeatureKind {
    /// `x = 1/k`: k phonons of mode a.
    SingleModeA(u32),
    /// `y = 1/k`.
    SingleModeB(u32),
    /// `x + y = 1/m`: one phonon from each mode per excitation quantum.
    CooperativeSum(u32),
    /// `x - y = 1/m`: mode a drives the transition and excites mode b.
    HeteroDiffAB(u32),
    /// `y - x = 1/m`.
    HeteroDiffBA(u32),
}

impl FeatureKind {
    pub fn all(max_order: u32) -> Vec<Self> {
        (1..=max_order)
            .flat_map(|k| {
                [Self::SingleModeA(k), Self::SingleModeB(k), Self::CooperativeSum(k), Self::HeteroDiffAB(k), Self::HeteroDiffBA(k)]
            })
            .collect()
    }

    fn order(&self) -> u32 {
        match *self {
            Self::SingleModeA(k) | Self::SingleModeB(k) | Self::CooperativeSum(k) | Self::HeteroDiffAB(k) | Self::HeteroDiffBA(k) => k,
        }
    }

    /// Perpendicular distance from `(x, y)` to the locus.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let r = 1.0 / self.order() as f64;
        match self {
            Self::SingleModeA(_) => (x - r).abs(),
            Self::SingleModeB(_) => (y - r).abs(),
            Self::CooperativeSum(_) => (x + y - r).abs() / std::f64::consts::SQRT_2,
            Self::HeteroDiffAB(_) => (x - y - r).abs() / std::f64::consts::SQRT_2,
            Self::HeteroDiffBA(_) => (y - x - r).abs() / std::f64::consts::SQRT_2,
        }
    }

    pub fn locus(&self) -> String {
        let k = self.order();
        match self {
            Self::SingleModeA(_) => format!("nu_a/D31 = 1/{k}"),
            Self::SingleModeB(_) => format!("nu_b/D31 = 1/{k}"),
            Self::CooperativeSum(_) => format!("(nu_a + nu_b)/D31 = 1/{k}"),
            Self::HeteroDiffAB(_) => format!("(nu_a - nu_b)/D31 = 1/{k}"),
            Self::HeteroDiffBA(_) => format!("(nu_b - nu_a)/D31 = 1/{k}"),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Detection knobs. Distances are in units of `Δ₃₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierOptions {
    pub max_order: u32,
    /// Half-width of the on-locus band.
    pub band: f64,
    /// Background ring is `[inner, outer] × band` away from the locus.
    pub background_inner: f64,
    pub background_outer: f64,
    /// Minimum ridge/background ratio for a detection.
    pub threshold: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        Self { max_order: 6, band: 0.012, background_inner: 2.0, background_outer: 5.0, threshold: 1.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub kind: FeatureKind,
    pub locus: String,
    /// Median over crossings of ridge height / local background.
    pub prominence: f64,
    /// Number of crossings the median was taken over.
    pub crossings: usize,
    pub detected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub options: ClassifierOptions,
    /// Every candidate locus that crosses the sampled region.
    pub features: Vec<Feature>,
}

impl FeatureSet {
    pub fn detected(&self) -> impl Iterator<Item = &Feature> {
        self.features.iter().filter(|f| f.detected)
    }

    pub fn get(&self, kind: FeatureKind) -> Option<&Feature> {
        self.features.iter().find(|f| f.kind == kind)
    }

    pub fn is_detected(&self, kind: FeatureKind) -> bool {
        self.get(kind).is_some_and(|f| f.detected)
    }
}

pub fn classify_features(grid: &SpectrumGrid, options: &ClassifierOptions) -> FeatureSet {
    classify_samples(&grid.samples(), grid.delta31, options)
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

/// Classify scattered samples. Each row of constant `ν_b` (constant `ν_a`
/// for horizontal loci) that crosses a locus contributes one ratio of the
/// band maximum to the median of its background ring; points near other
/// candidate loci are left out of both.
pub fn classify_samples(samples: &[ScanSample], delta31: f64, options: &ClassifierOptions) -> FeatureSet {
    let kinds = FeatureKind::all(options.max_order);
    let coords: Vec<(f64, f64)> = samples.iter().map(|s| (s.nu_a / delta31, s.nu_b / delta31)).collect();
    let near_other = |p: (f64, f64), own: FeatureKind| kinds.iter().any(|k| *k != own && k.distance(p.0, p.1) <= options.band);

    let mut features = Vec::new();
    for &kind in &kinds {
        // crossing key -> (band values, background values)
        let mut rows: BTreeMap<u64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for (s, &p) in samples.iter().zip(&coords) {
            let d = kind.distance(p.0, p.1);
            if d > options.background_outer * options.band || near_other(p, kind) {
                continue;
            }
            let key = match kind {
                FeatureKind::SingleModeB(_) => s.nu_a.to_bits(),
                _ => s.nu_b.to_bits(),
            };
            let entry = rows.entry(key).or_default();
            if d <= options.band {
                entry.0.push(s.max_p3);
            } else if d >= options.background_inner * options.band {
                entry.1.push(s.max_p3);
            }
        }
        let ratios: Vec<f64> = rows
            .into_values()
            .filter(|(band, bg)| !band.is_empty() && bg.len() >= 2)
            .filter_map(|(band, bg)| {
                let peak = band.into_iter().fold(f64::NEG_INFINITY, f64::max);
                let level = median(bg);
                (level > 0.0).then(|| peak / level)
            })
            .collect();
        if ratios.is_empty() {
            continue;
        }
        let crossings = ratios.len();
        let prominence = median(ratios);
        features.push(Feature { kind, locus: kind.locus(), prominence, crossings, detected: prominence >= options.threshold });
    }
    FeatureSet { options: *options, features }
}
