//! Run configuration: a strict TOML schema, preset defaults and `--set` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vaet_core::dynamics::TimeGrid;
use vaet_core::model::{
    preset, CouplingTopology, DissipationSpec, Preset, SystemSpec, TrimerParams, VibrationalModeSpec,
};
use vaet_core::perturb::Regime;
use vaet_core::spectra::{AxisRange, ClassifierOptions};
use vaet_core::vibronic::CrossingOptions;

use crate::error::{CliError, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "VAET_WORKERS";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Reserved; the physics is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub spectrum2d: Spectrum2dConfig,
    #[serde(default)]
    pub trace: TraceConfig,
    #[serde(default)]
    pub vibronic: VibronicConfig,
    #[serde(default)]
    pub perturb: PerturbConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A preset plus optional overrides of any of its entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_preset")]
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trimer: Option<TrimerParams>,
    #[serde(default)]
    pub mode_a: ModeConfig,
    #[serde(default)]
    pub mode_b: ModeConfig,
    #[serde(default)]
    pub topology: CouplingTopology,
    /// Site decay rates (donor, bridge, acceptor).
    #[serde(default)]
    pub gamma: [f64; 3],
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            trimer: None,
            mode_a: ModeConfig::default(),
            mode_b: ModeConfig::default(),
            topology: CouplingTopology::default(),
            gamma: [0.0; 3],
        }
    }
}

fn default_preset() -> Preset {
    Preset::IonTrapLine1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kbt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_fock: Option<usize>,
}

impl ModeConfig {
    fn apply(&self, base: VibrationalModeSpec) -> VibrationalModeSpec {
        VibrationalModeSpec {
            nu: self.nu.unwrap_or(base.nu),
            kappa: self.kappa.unwrap_or(base.kappa),
            kbt: self.kbt.unwrap_or(base.kbt),
            n_fock: self.n_fock.unwrap_or(base.n_fock),
        }
    }

    fn full(m: &VibrationalModeSpec) -> Self {
        Self { nu: Some(m.nu), kappa: Some(m.kappa), kbt: Some(m.kbt), n_fock: Some(m.n_fock) }
    }
}

impl SystemConfig {
    pub fn spec(&self) -> SystemSpec {
        let p = preset(self.preset);
        SystemSpec {
            trimer: self.trimer.unwrap_or(p.trimer),
            mode_a: self.mode_a.apply(p.mode_a),
            mode_b: self.mode_b.apply(p.mode_b),
            topology: self.topology,
            dissipation: DissipationSpec { gamma: self.gamma },
        }
    }

    /// Same system with every preset entry written out.
    fn expanded(&self) -> Self {
        let s = self.spec();
        Self {
            preset: self.preset,
            trimer: Some(s.trimer),
            mode_a: ModeConfig::full(&s.mode_a),
            mode_b: ModeConfig::full(&s.mode_b),
            topology: s.topology,
            gamma: s.dissipation.gamma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t_final: default_t_final(), step: default_step() }
    }
}

fn default_t_final() -> f64 {
    400.0
}

fn default_step() -> f64 {
    0.5
}

/// Whether frequencies are absolute (rad/ms) or multiples of `Δ₃₁`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Absolute,
    #[default]
    Delta31,
}

impl Units {
    pub fn scale(self, delta31: f64) -> f64 {
        match self {
            Units::Absolute => 1.0,
            Units::Delta31 => delta31,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectrum2dConfig {
    #[serde(default = "absolute")]
    pub units: Units,
    #[serde(default = "default_axis")]
    pub nu_a: AxisRange,
    #[serde(default = "default_axis")]
    pub nu_b: AxisRange,
    #[serde(default)]
    pub classifier: ClassifierOptions,
    #[serde(default = "yes")]
    pub svg: bool,
}

impl Default for Spectrum2dConfig {
    fn default() -> Self {
        Self {
            units: Units::Absolute,
            nu_a: default_axis(),
            nu_b: default_axis(),
            classifier: ClassifierOptions::default(),
            svg: true,
        }
    }
}

/// 0.02 to 1.30 rad/ms in steps of 0.01, 129 points.
fn default_axis() -> AxisRange {
    AxisRange::new(0.02, 1.30, 0.01)
}

fn absolute() -> Units {
    Units::Absolute
}

fn yes() -> bool {
    true
}

/// One trace of a batch; unset entries fall back to `[system]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kbt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_fock: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    /// Units of `nu_a`/`nu_b` in the sets.
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub sets: Vec<TraceSet>,
}

impl TraceSet {
    pub fn label(&self, index: usize) -> String {
        self.label.clone().unwrap_or_else(|| format!("set{index}"))
    }

    pub fn apply(&self, base: &SystemSpec, units: Units) -> Result<SystemSpec> {
        let scale = units.scale(base.delta31()?);
        let mut s = *base;
        if let Some(nu) = self.nu_a {
            s.mode_a.nu = nu * scale;
        }
        if let Some(nu) = self.nu_b {
            s.mode_b.nu = nu * scale;
        }
        if let Some(k) = self.kappa {
            s = s.with_kappas(k, k);
        }
        if let Some(t) = self.kbt {
            s = s.with_temperatures(t, t);
        }
        if let Some(n) = self.n_fock {
            s = s.with_n_fock(n);
        }
        if let Some(zeta) = self.zeta {
            s.topology = CouplingTopology::Transverse { zeta };
        }
        if let Some(gamma) = self.gamma {
            s.dissipation = DissipationSpec { gamma };
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VibronicConfig {
    #[serde(default)]
    pub units: Units,
    #[serde(default = "default_vibronic_axis")]
    pub nu_a: AxisRange,
    /// Fock levels per mode for the sweep.
    #[serde(default = "default_vibronic_n")]
    pub n_fock: usize,
    #[serde(default)]
    pub crossing: CrossingOptions,
}

impl Default for VibronicConfig {
    fn default() -> Self {
        Self {
            units: Units::Delta31,
            nu_a: default_vibronic_axis(),
            n_fock: default_vibronic_n(),
            crossing: CrossingOptions::default(),
        }
    }
}

fn default_vibronic_axis() -> AxisRange {
    AxisRange::new(0.1, 1.15, 0.001)
}

fn default_vibronic_n() -> usize {
    3
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    #[serde(default = "default_regime")]
    pub regime: Regime,
    /// Add the exact trace as a comparison column.
    #[serde(default = "yes")]
    pub compare_exact: bool,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self { regime: default_regime(), compare_exact: true }
    }
}

fn default_regime() -> Regime {
    Regime::StrongJ
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { n_values: default_n_values() }
    }
}

fn default_n_values() -> Vec<usize> {
    vec![10, 15, 20]
}

fn config_error(origin: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{origin}: {e}"))
}

/// Parse `key.path=value`; the value is read as a TOML literal, or taken as a
/// bare string when it does not parse.
fn parse_override(spec: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| CliError::Config(format!("override `{spec}` is not KEY=VALUE")))?;
    let path: Vec<String> = key.trim().split('.').map(|s| s.trim().to_string()).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override `{spec}` has an empty key segment")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((path, value))
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for key in parents {
        let entry = cur.entry(key.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override path `{}`: `{key}` is not a table", path.join("."))))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    /// Read `path` (or start from defaults) and apply `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let (origin, text) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                (p.display().to_string(), text)
            }
            None => ("<defaults>".to_string(), String::new()),
        };
        // strict parse of the file itself first, so diagnostics point at its lines
        let parsed: RunConfig = toml::from_str(&text).map_err(|e| config_error(&origin, e))?;
        if overrides.is_empty() {
            return Ok(parsed);
        }
        // overrides land on the parsed config with defaults filled in, so a
        // single nested key can be set without spelling out its table
        let mut table = toml::Table::try_from(&parsed).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        for spec in overrides {
            let (key, value) = parse_override(spec)?;
            set_path(&mut table, &key, value)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e| config_error(&format!("{origin} with overrides {overrides:?}"), e))
    }

    pub fn system(&self) -> SystemSpec {
        self.system.spec()
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::uniform(self.time.t_final, self.time.step)?)
    }

    /// Flag, then config, then environment, then every available core.
    pub fn workers(&self, flag: Option<usize>) -> Result<usize> {
        let env = match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                CliError::Config(format!("{WORKERS_ENV}={v:?} is not a non-negative integer"))
            })?),
            Err(_) => None,
        };
        let n = flag.or(self.workers).or(env).unwrap_or(0);
        Ok(if n == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { n })
    }

    /// Check everything the commands will need before any work starts.
    pub fn validate(&self) -> Result<()> {
        let system = self.system();
        system.validate()?;
        self.time_grid()?;
        self.spectrum2d.nu_a.validate()?;
        self.spectrum2d.nu_b.validate()?;
        self.vibronic.nu_a.validate()?;
        if self.vibronic.n_fock == 0 {
            return Err(CliError::Config("vibronic.n_fock must be >= 1".into()));
        }
        let n = &self.convergence.n_values;
        if n.is_empty() || n.windows(2).any(|w| w[1] <= w[0]) || n[0] == 0 {
            return Err(CliError::Config(format!("convergence.n_values must be positive and increasing, got {n:?}")));
        }
        for (i, set) in self.trace.sets.iter().enumerate() {
            set.apply(&system, self.trace.units)?
                .validate()
                .map_err(|e| CliError::Config(format!("trace.sets[{i}] ({}): {e}", set.label(i))))?;
        }
        Ok(())
    }

    /// Configuration with every default and preset value spelled out.
    pub fn resolved(&self, workers: usize, out_dir: &Path) -> Self {
        let mut r = self.clone();
        r.workers = Some(workers);
        r.output.dir = out_dir.to_path_buf();
        r.system = self.system.expanded();
        r
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}
