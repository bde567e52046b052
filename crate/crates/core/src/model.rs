//! Trimer parameters, vibrational modes and the projected single-excitation
//! Hamiltonians built from them.
//!
//! Energies are angular frequencies in rad/ms with ħ = 1, so a phase is just
//! `energy * time` with time in ms.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VaetError};
use crate::fock::{initial_density, thermal_state, DiagonalDensity};
use crate::linalg;

/// Default upper bound on the product-space dimension.
pub const DEFAULT_DIM_CAP: usize = 20_000;

const SYMMETRY_TOL: f64 = 1e-12;

/// Site energies and hoppings of the donor, bridge and acceptor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrimerParams {
    pub omega_tilde: [f64; 3],
    pub j12: f64,
    pub j23: f64,
    #[serde(default)]
    pub j13: f64,
}

impl TrimerParams {
    /// Equally spaced sites `(-delta, 0, delta)` with equal nearest-neighbour hopping.
    pub fn symmetric(delta: f64, j: f64) -> Self {
        Self { omega_tilde: [-delta, 0.0, delta], j12: j, j23: j, j13: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega_tilde[0], self.omega_tilde[1], self.omega_tilde[2], self.j12, self.j23, self.j13];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(invalid("trimer", "all site energies and hoppings must be finite"));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        let [w1, w2, w3] = self.omega_tilde;
        (self.j12 - self.j23).abs() <= SYMMETRY_TOL && ((w2 - w1) - (w3 - w2)).abs() <= SYMMETRY_TOL
    }

    /// Donor-to-bridge site energy gap.
    pub fn delta(&self) -> f64 {
        self.omega_tilde[1] - self.omega_tilde[0]
    }

    /// Nearest-neighbour hopping; meaningful as a single number when symmetric.
    pub fn hopping(&self) -> f64 {
        self.j12
    }

    /// Bare 3x3 electronic block as it enters the Hamiltonian for `topology`.
    pub fn electronic_matrix(&self, topology: CouplingTopology) -> [[f64; 3]; 3] {
        let scale = match topology {
            CouplingTopology::Transverse { .. } => 1.0,
            CouplingTopology::Longitudinal => 0.5,
        };
        let w = self.omega_tilde;
        [
            [scale * w[0], self.j12, self.j13],
            [self.j12, scale * w[1], self.j23],
            [self.j13, self.j23, scale * w[2]],
        ]
    }

    /// Eigenvalues of the electronic block, ascending.
    pub fn exciton_energies(&self, topology: CouplingTopology) -> Result<[f64; 3]> {
        let e = self.electronic_matrix(topology);
        let m = faer::Mat::from_fn(3, 3, |i, j| e[i][j]);
        let w = linalg::symmetric_eigenvalues(&m)?;
        Ok([w[0], w[1], w[2]])
    }

    /// Gap between the highest and lowest exciton.
    pub fn delta31(&self, topology: CouplingTopology) -> Result<f64> {
        let w = self.exciton_energies(topology)?;
        Ok(w[2] - w[0])
    }
}

/// One bosonic mode together with its coupling, temperature and truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VibrationalModeSpec {
    pub nu: f64,
    pub kappa: f64,
    pub kbt: f64,
    pub n_fock: usize,
}

impl VibrationalModeSpec {
    pub fn new(nu: f64, kappa: f64, kbt: f64, n_fock: usize) -> Self {
        Self { nu, kappa, kbt, n_fock }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(invalid("nu", format!("must be finite and > 0, got {}", self.nu)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(invalid("kappa", format!("must be finite and >= 0, got {}", self.kappa)));
        }
        if !(self.kbt.is_finite() && self.kbt >= 0.0) {
            return Err(invalid("kbt", format!("must be finite and >= 0, got {}", self.kbt)));
        }
        if self.n_fock < 2 {
            return Err(invalid("n_fock", format!("must be >= 2, got {}", self.n_fock)));
        }
        Ok(())
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_n_fock(mut self, n_fock: usize) -> Self {
        self.n_fock = n_fock;
        self
    }
}

/// How the two modes couple to the three sites.
///
/// `Transverse { zeta: 1.0 }` is the local coupling produced by projecting
/// transverse spin-mode couplings onto the single-excitation subspace;
/// `zeta = 0` keeps only the excited-state coupling on the attached site.
/// `Longitudinal` is the correlated/anti-correlated mode pair, in which
/// `mode_a` plays the role of the centre-of-mass-like mode `c` and `mode_b`
/// the breathing-like mode `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingTopology {
    Transverse { zeta: f64 },
    Longitudinal,
}

impl Default for CouplingTopology {
    fn default() -> Self {
        CouplingTopology::Transverse { zeta: 1.0 }
    }
}

impl CouplingTopology {
    pub fn validate(&self) -> Result<()> {
        if let CouplingTopology::Transverse { zeta } = *self {
            if !(0.0..=1.0).contains(&zeta) {
                return Err(invalid("zeta", format!("must lie in [0, 1], got {zeta}")));
            }
        }
        Ok(())
    }

    /// Per-site prefactors multiplying `(a + a†)` and `(b + b†)`.
    pub fn site_couplings(&self, kappa_a: f64, kappa_b: f64) -> ([f64; 3], [f64; 3]) {
        match *self {
            CouplingTopology::Transverse { zeta } => (
                [-zeta * kappa_a, kappa_a, -zeta * kappa_a],
                [-zeta * kappa_b, -zeta * kappa_b, kappa_b],
            ),
            CouplingTopology::Longitudinal => (
                [2.0 * kappa_a, 0.0, -2.0 * kappa_a],
                [2.0 * kappa_b, -4.0 * kappa_b, 2.0 * kappa_b],
            ),
        }
    }
}

/// Site-resolved decay rates entering as `-(i/2) γ_j |j><j|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationSpec {
    pub gamma: [f64; 3],
}

impl DissipationSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn uniform(rate: f64) -> Self {
        Self { gamma: [rate; 3] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(invalid("gamma", "decay rates must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.gamma.iter().all(|&g| g == 0.0)
    }

    pub fn uniform_rate(&self) -> Option<f64> {
        let g = self.gamma;
        (g[0] == g[1] && g[1] == g[2]).then_some(g[0])
    }
}

/// Index map for the product basis `|site> ⊗ |n>_a ⊗ |m>_b`.
///
/// `flat = site * n_a * n_b + n * n_b + m` with `site` in `0..3`
/// (0 = donor, 1 = bridge, 2 = acceptor).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisIndex {
    pub n_a: usize,
    pub n_b: usize,
}

impl BasisIndex {
    pub fn new(n_a: usize, n_b: usize) -> Self {
        Self { n_a, n_b }
    }

    pub fn dim(&self) -> usize {
        3 * self.n_a * self.n_b
    }

    pub fn flat(&self, site: usize, n: usize, m: usize) -> usize {
        debug_assert!(site < 3 && n < self.n_a && m < self.n_b);
        site * self.n_a * self.n_b + n * self.n_b + m
    }

    pub fn split(&self, flat: usize) -> (usize, usize, usize) {
        let block = self.n_a * self.n_b;
        (flat / block, (flat % block) / self.n_b, flat % self.n_b)
    }

    /// Flat indices belonging to one site, contiguous by construction.
    pub fn site_range(&self, site: usize) -> std::ops::Range<usize> {
        let block = self.n_a * self.n_b;
        site * block..(site + 1) * block
    }
}

/// Dense effective Hamiltonian on the product space.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    pub matrix: Array2<C64>,
    pub basis: BasisIndex,
    pub is_hermitian: bool,
    pub dissipation: DissipationSpec,
}

impl EffectiveHamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian part as a real matrix (entries are real by construction).
    pub fn real_part(&self) -> Array2<f64> {
        self.matrix.mapv(|z| z.re)
    }
}

/// Build the projected Hamiltonian with the default dimension cap.
pub fn build_effective_hamiltonian(
    trimer: &TrimerParams,
    mode_a: &VibrationalModeSpec,
    mode_b: &VibrationalModeSpec,
    topology: CouplingTopology,
    dissipation: &DissipationSpec,
) -> Result<EffectiveHamiltonian> {
    build_effective_hamiltonian_capped(trimer, mode_a, mode_b, topology, dissipation, DEFAULT_DIM_CAP)
}

/// Build the projected Hamiltonian, refusing dimensions above `cap`.
pub fn build_effective_hamiltonian_capped(
    trimer: &TrimerParams,
    mode_a: &VibrationalModeSpec,
    mode_b: &VibrationalModeSpec,
    topology: CouplingTopology,
    dissipation: &DissipationSpec,
    cap: usize,
) -> Result<EffectiveHamiltonian> {
    trimer.validate()?;
    mode_a.validate()?;
    mode_b.validate()?;
    topology.validate()?;
    dissipation.validate()?;

    let basis = BasisIndex::new(mode_a.n_fock, mode_b.n_fock);
    let dim = basis.dim();
    if dim > cap {
        return Err(VaetError::DimensionTooLarge { dim, cap });
    }

    let elec = trimer.electronic_matrix(topology);
    let (ca, cb) = topology.site_couplings(mode_a.kappa, mode_b.kappa);
    let mut h = Array2::<C64>::zeros((dim, dim));

    for s in 0..3 {
        for n in 0..basis.n_a {
            for m in 0..basis.n_b {
                let i = basis.flat(s, n, m);
                let phonons = mode_a.nu * n as f64 + mode_b.nu * m as f64;
                h[[i, i]] = C64::new(phonons, -0.5 * dissipation.gamma[s]);
                for s2 in 0..3 {
                    if s2 != s {
                        h[[i, basis.flat(s2, n, m)]] += elec[s][s2];
                    } else {
                        h[[i, i]] += elec[s][s];
                    }
                }
                if n + 1 < basis.n_a && ca[s] != 0.0 {
                    let j = basis.flat(s, n + 1, m);
                    let v = ca[s] * ((n + 1) as f64).sqrt();
                    h[[i, j]] += v;
                    h[[j, i]] += v;
                }
                if m + 1 < basis.n_b && cb[s] != 0.0 {
                    let j = basis.flat(s, n, m + 1);
                    let v = cb[s] * ((m + 1) as f64).sqrt();
                    h[[i, j]] += v;
                    h[[j, i]] += v;
                }
            }
        }
    }

    Ok(EffectiveHamiltonian { matrix: h, basis, is_hermitian: dissipation.is_zero(), dissipation: *dissipation })
}

/// Everything needed to build a Hamiltonian and its donor-localized thermal
/// initial state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub trimer: TrimerParams,
    pub mode_a: VibrationalModeSpec,
    pub mode_b: VibrationalModeSpec,
    #[serde(default)]
    pub topology: CouplingTopology,
    #[serde(default)]
    pub dissipation: DissipationSpec,
}

impl SystemSpec {
    pub fn new(trimer: TrimerParams, mode_a: VibrationalModeSpec, mode_b: VibrationalModeSpec) -> Self {
        Self { trimer, mode_a, mode_b, topology: CouplingTopology::default(), dissipation: DissipationSpec::none() }
    }

    pub fn with_topology(mut self, topology: CouplingTopology) -> Self {
        self.topology = topology;
        self
    }

    pub fn with_dissipation(mut self, dissipation: DissipationSpec) -> Self {
        self.dissipation = dissipation;
        self
    }

    pub fn with_frequencies(mut self, nu_a: f64, nu_b: f64) -> Self {
        self.mode_a.nu = nu_a;
        self.mode_b.nu = nu_b;
        self
    }

    pub fn with_kappas(mut self, kappa_a: f64, kappa_b: f64) -> Self {
        self.mode_a.kappa = kappa_a;
        self.mode_b.kappa = kappa_b;
        self
    }

    pub fn with_temperatures(mut self, kbt_a: f64, kbt_b: f64) -> Self {
        self.mode_a.kbt = kbt_a;
        self.mode_b.kbt = kbt_b;
        self
    }

    pub fn with_n_fock(mut self, n: usize) -> Self {
        self.mode_a.n_fock = n;
        self.mode_b.n_fock = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.trimer.validate()?;
        self.mode_a.validate()?;
        self.mode_b.validate()?;
        self.topology.validate()?;
        self.dissipation.validate()
    }

    pub fn hamiltonian(&self) -> Result<EffectiveHamiltonian> {
        build_effective_hamiltonian(&self.trimer, &self.mode_a, &self.mode_b, self.topology, &self.dissipation)
    }

    /// Thermal phonons with the excitation on the donor.
    pub fn donor_density(&self) -> Result<DiagonalDensity> {
        let pa = thermal_state(self.mode_a.nu, self.mode_a.kbt, self.mode_a.n_fock)?;
        let pb = thermal_state(self.mode_b.nu, self.mode_b.kbt, self.mode_b.n_fock)?;
        initial_density(1, &pa, &pb)
    }

    pub fn delta31(&self) -> Result<f64> {
        self.trimer.delta31(self.topology)
    }
}

/// Named parameter rows for the ion-trap, scaled-up and natural-system regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    IonTrapLine1,
    ScaleUpLine2,
    FmoLine3,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::IonTrapLine1, Preset::ScaleUpLine2, Preset::FmoLine3];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::IonTrapLine1 => "ion_trap_line1",
            Preset::ScaleUpLine2 => "scale_up_line2",
            Preset::FmoLine3 => "fmo_line3",
        }
    }
}

/// Unit of every energy in a preset.
///
/// Inverse centimetres convert to angular frequency via
/// `ω [rad/s] = 2π c ṽ` with `c = 2.998e10 cm/s`; presets are never converted
/// silently.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyUnit {
    RadPerMs,
    InverseCm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub trimer: TrimerParams,
    pub mode_a: VibrationalModeSpec,
    pub mode_b: VibrationalModeSpec,
    pub unit: EnergyUnit,
}

/// Fock truncation attached to presets.
pub const PRESET_N_FOCK: usize = 15;

pub fn preset(name: Preset) -> PresetParams {
    let n = PRESET_N_FOCK;
    match name {
        Preset::IonTrapLine1 => {
            let mode = VibrationalModeSpec::new(0.52, 0.1, 0.72, n);
            PresetParams { trimer: TrimerParams::symmetric(0.5, 0.1), mode_a: mode, mode_b: mode, unit: EnergyUnit::RadPerMs }
        }
        Preset::ScaleUpLine2 => {
            let mode = VibrationalModeSpec::new(144.0, 27.72, 200.0, n);
            PresetParams {
                trimer: TrimerParams::symmetric(138.6, 27.72),
                mode_a: mode,
                mode_b: mode,
                unit: EnergyUnit::InverseCm,
            }
        }
        Preset::FmoLine3 => {
            let mode = VibrationalModeSpec::new(180.0, 42.2, 200.0, n);
            PresetParams {
                trimer: TrimerParams { omega_tilde: [-138.6, 0.0, 138.6], j12: -5.9, j23: -13.7, j13: 0.0 },
                mode_a: mode,
                mode_b: mode,
                unit: EnergyUnit::InverseCm,
            }
        }
    }
}
