//! Perturbative expansion of the acceptor population in the site–mode
//! couplings, up to fourth order.
//!
//! In the interaction picture every coupling vertex carries an exciton
//! transition `j -> k`, a phonon operator (`a`, `a†`, `b`, `b†`) and a phase
//! `exp(i (λ_j - λ_k ± ν) t)`. An operator string of length `n` therefore
//! contributes the amplitude
//!
//! `c_s(t) = (-i)^n Σ_paths <3|e_j0> e^{-i λ_j0 t} κ… X_j0j1 … X_jn-1jn I_n(ω; t) <e_jn|1>`
//!
//! and the population terms are thermal pairings `conj(c_s) c_s' <s† s'>`.

mod eigensystem;
pub mod integral;
pub mod wick;

pub use eigensystem::{coupling_coefficients, symmetric_eigensystem, CouplingCoefficients, ExcitonBasis, SymmetricEigenSystem};
pub use wick::{thermal_average, BosonOp, Mode, Sign};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{TimeGrid, TransferTrace};
use crate::error::{Result, VaetError};
use crate::fock::mean_occupancy;
use crate::model::VibrationalModeSpec;

/// Couplings, frequencies and Bose–Einstein occupancies of the two modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeCouplings {
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub nu_a: f64,
    pub nu_b: f64,
    pub n_a: f64,
    pub n_b: f64,
}

impl ModeCouplings {
    pub fn from_modes(a: &VibrationalModeSpec, b: &VibrationalModeSpec) -> Self {
        Self {
            kappa_a: a.kappa,
            kappa_b: b.kappa,
            nu_a: a.nu,
            nu_b: b.nu,
            n_a: mean_occupancy(a.nu, a.kbt),
            n_b: mean_occupancy(b.nu, b.kbt),
        }
    }

    pub fn kappa(&self, mode: Mode) -> f64 {
        match mode {
            Mode::A => self.kappa_a,
            Mode::B => self.kappa_b,
        }
    }

    pub fn nu(&self, mode: Mode) -> f64 {
        match mode {
            Mode::A => self.nu_a,
            Mode::B => self.nu_b,
        }
    }

    /// Both couplings multiplied by `s`.
    pub fn scaled(mut self, s: f64) -> Self {
        self.kappa_a *= s;
        self.kappa_b *= s;
        self
    }
}

fn coupling_matrix(basis: &ExcitonBasis, mode: Mode) -> &[[f64; 3]; 3] {
    match mode {
        Mode::A => &basis.a_jk,
        Mode::B => &basis.b_jk,
    }
}

fn phonon_shift(sign: Sign, nu: f64) -> f64 {
    match sign {
        Sign::Plus => nu,
        Sign::Minus => -nu,
    }
}

/// One vertex: exciton transition `from -> to` (1-based labels) with a phonon operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub mode: Mode,
    pub sign: Sign,
    pub from: usize,
    pub to: usize,
}

impl Leg {
    pub fn new(mode: Mode, sign: Sign, from: usize, to: usize) -> Self {
        Self { mode, sign, from, to }
    }
}

/// Time-ordered amplitude of a chain of vertices, outermost (latest) first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionAmplitude {
    legs: Vec<Leg>,
}

impl InteractionAmplitude {
    pub fn new(legs: Vec<Leg>) -> Result<Self> {
        if legs.is_empty() || legs.len() > 4 {
            return Err(VaetError::Pathway(format!("order must be 1..=4, got {}", legs.len())));
        }
        if legs.iter().any(|l| !(1..=3).contains(&l.from) || !(1..=3).contains(&l.to)) {
            return Err(VaetError::Pathway("exciton labels must be 1, 2 or 3".into()));
        }
        if legs.windows(2).any(|w| w[0].to != w[1].from) {
            return Err(VaetError::Pathway("consecutive legs must share an exciton".into()));
        }
        Ok(Self { legs })
    }

    /// Build from phonon operators and the visited excitons `states[0] -> … -> states[n]`.
    pub fn chain(ops: &[BosonOp], states: &[usize]) -> Result<Self> {
        if states.len() != ops.len() + 1 {
            return Err(VaetError::Pathway("need one more exciton than operators".into()));
        }
        let legs = ops.iter().zip(states.windows(2)).map(|(o, s)| Leg::new(o.mode, o.sign, s[0], s[1])).collect();
        Self::new(legs)
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn order(&self) -> usize {
        self.legs.len()
    }

    /// Frequencies `Δ_jk + q ν` of each vertex.
    pub fn frequencies(&self, basis: &ExcitonBasis, modes: &ModeCouplings) -> Vec<f64> {
        self.legs.iter().map(|l| basis.gap(l.from, l.to) + phonon_shift(l.sign, modes.nu(l.mode))).collect()
    }

    /// Product of couplings and exciton matrix elements.
    pub fn prefactor(&self, basis: &ExcitonBasis, modes: &ModeCouplings) -> f64 {
        self.legs
            .iter()
            .map(|l| modes.kappa(l.mode) * coupling_matrix(basis, l.mode)[l.from - 1][l.to - 1])
            .product()
    }

    /// Full amplitude `(-i)^n κ… X… I_n(ω; t)`.
    pub fn value(&self, t: f64, basis: &ExcitonBasis, modes: &ModeCouplings) -> C64 {
        minus_i_pow(self.order()) * self.bare(t, basis, modes)
    }

    /// Amplitude without the `(-i)^n` factor; the weak-J formulas are written
    /// in this convention, where `W13(+a)` is the conjugate of `W31(-a)`.
    pub fn bare(&self, t: f64, basis: &ExcitonBasis, modes: &ModeCouplings) -> C64 {
        integral::nested_integral(&self.frequencies(basis, modes), t) * self.prefactor(basis, modes)
    }

    pub fn label(&self) -> String {
        let ops: String = self.legs.iter().map(|l| BosonOp::new(l.mode, l.sign).label()).collect();
        let tr: Vec<String> = self.legs.iter().map(|l| format!("{}{}", l.from, l.to)).collect();
        format!("W[{ops}]({})", tr.join(","))
    }
}

/// Evaluate one interaction amplitude at time `t`.
pub fn amplitude(legs: &[Leg], t: f64, basis: &ExcitonBasis, modes: &ModeCouplings) -> Result<C64> {
    Ok(InteractionAmplitude::new(legs.to_vec())?.value(t, basis, modes))
}

/// Which set of terms to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Donor and acceptor identified with the outer excitons; only the
    /// energy-conserving absorption pathways are kept.
    WeakJ,
    /// Exact exciton overlaps; zeroth order, both first-order pieces and the
    /// squared second-order amplitude.
    StrongJ,
    /// `StrongJ` plus the first×third and zeroth×fourth order cross terms,
    /// i.e. the full fourth-order result.
    Complete,
}

/// One named contribution to the population, sampled on the time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbTerm {
    /// Order bucket, e.g. `P3(2,1)`.
    pub group: String,
    pub name: String,
    /// Thermal average multiplying the amplitude product (sign included).
    pub thermal_factor: f64,
    /// Amplitude product before the thermal factor and real part.
    pub amplitude: Vec<C64>,
    /// Real contribution to the population.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbResult {
    pub regime: Regime,
    pub trace: TransferTrace,
    pub terms: Vec<PerturbTerm>,
    pub warnings: Vec<String>,
}

impl PerturbResult {
    /// Sum of all terms in one order bucket.
    pub fn group_total(&self, group: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.trace.times.len()];
        for term in self.terms.iter().filter(|t| t.group == group) {
            for (o, v) in out.iter_mut().zip(&term.values) {
                *o += v;
            }
        }
        out
    }

    pub fn term(&self, name: &str) -> Option<&PerturbTerm> {
        self.terms.iter().find(|t| t.name == name)
    }
}

/// Perturbative population for the symmetric trimer.
pub fn p3_perturbative(
    sys: &SymmetricEigenSystem,
    coeffs: &CouplingCoefficients,
    modes: &ModeCouplings,
    times: &TimeGrid,
    regime: Regime,
) -> Result<PerturbResult> {
    let basis = ExcitonBasis::symmetric(sys, coeffs);
    let mut result = p3_expansion(&basis, modes, times, regime)?;
    if regime == Regime::WeakJ && sys.j.abs() >= sys.delta {
        result.warnings.push(format!("weak-J formulas assume |J| < Δ (J = {}, Δ = {})", sys.j, sys.delta));
    }
    let half_j = 0.5 * sys.j.abs();
    if modes.kappa_a > half_j || modes.kappa_b > half_j {
        result.warnings.push(format!(
            "couplings ({}, {}) exceed J/2 = {half_j}; the expansion may not converge",
            modes.kappa_a, modes.kappa_b
        ));
    }
    Ok(result)
}

/// Perturbative population for any exciton basis.
pub fn p3_expansion(basis: &ExcitonBasis, modes: &ModeCouplings, times: &TimeGrid, regime: Regime) -> Result<PerturbResult> {
    let terms = match regime {
        Regime::WeakJ => weak_terms(basis, modes, times.times())?,
        Regime::StrongJ => pathway_terms(basis, modes, times.times(), false),
        Regime::Complete => pathway_terms(basis, modes, times.times(), true),
    };
    let mut total = vec![0.0; times.len()];
    for term in &terms {
        for (o, v) in total.iter_mut().zip(&term.values) {
            *o += v;
        }
    }
    Ok(PerturbResult { regime, trace: TransferTrace::new(times.times().to_vec(), total), terms, warnings: Vec::new() })
}

/// All operator strings of length `n`, in a fixed order.
fn strings(n: usize) -> Vec<Vec<BosonOp>> {
    let alphabet = [
        BosonOp::new(Mode::A, Sign::Plus),
        BosonOp::new(Mode::A, Sign::Minus),
        BosonOp::new(Mode::B, Sign::Plus),
        BosonOp::new(Mode::B, Sign::Minus),
    ];
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                alphabet.iter().map(move |op| {
                    let mut next = s.clone();
                    next.push(*op);
                    next
                })
            })
            .collect();
    }
    out
}

fn string_label(ops: &[BosonOp]) -> String {
    if ops.is_empty() {
        "1".into()
    } else {
        ops.iter().map(|o| o.label()).collect()
    }
}

/// `c_s(t)`: amplitude of the operator string `ops` summed over exciton paths.
pub fn string_amplitude(ops: &[BosonOp], t: f64, basis: &ExcitonBasis, modes: &ModeCouplings) -> C64 {
    let n = ops.len();
    let mut total = C64::new(0.0, 0.0);
    let mut path = vec![0usize; n + 1];
    let count = 3usize.pow(n as u32 + 1);
    let mut omegas = vec![0.0; n];
    for code in 0..count {
        let mut c = code;
        for p in path.iter_mut() {
            *p = c % 3;
            c /= 3;
        }
        let mut weight = basis.acceptor[path[0]] * basis.donor[path[n]];
        if weight == 0.0 {
            continue;
        }
        for (i, op) in ops.iter().enumerate() {
            let (j, k) = (path[i], path[i + 1]);
            weight *= modes.kappa(op.mode) * coupling_matrix(basis, op.mode)[j][k];
            omegas[i] = basis.lambdas[j] - basis.lambdas[k] + phonon_shift(op.sign, modes.nu(op.mode));
        }
        if weight == 0.0 {
            continue;
        }
        let phase = C64::from_polar(1.0, -basis.lambdas[path[0]] * t);
        total += phase * integral::nested_integral(&omegas, t) * weight;
    }
    total * minus_i_pow(n)
}

fn minus_i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

struct Pairing {
    group: &'static str,
    left: usize,
    right: usize,
    factor: f64,
    /// Adds the conjugate partner, i.e. contributes `2 Re`.
    doubled: bool,
    name: String,
}

fn pathway_terms(basis: &ExcitonBasis, modes: &ModeCouplings, times: &[f64], complete: bool) -> Vec<PerturbTerm> {
    let max_order = if complete { 4 } else { 2 };
    let by_order: Vec<Vec<Vec<BosonOp>>> = (0..=max_order).map(strings).collect();
    // flat index of every string used
    let mut catalogue: Vec<Vec<BosonOp>> = Vec::new();
    let mut offset = Vec::new();
    for group in &by_order {
        offset.push(catalogue.len());
        catalogue.extend(group.iter().cloned());
    }

    let mut pairings = Vec::new();
    let mut pair_orders = vec![("P3(0)", 0usize, 0usize), ("P3(1,1)", 1, 1), ("P3(1,2)", 0, 2), ("P3(2,1)", 2, 2)];
    if complete {
        pair_orders.push(("P3(2,2)", 1, 3));
        pair_orders.push(("P3(2,3)", 0, 4));
    }
    for (group, n, m) in pair_orders {
        for (i, s) in by_order[n].iter().enumerate() {
            for (k, s2) in by_order[m].iter().enumerate() {
                if n == m && k < i {
                    continue;
                }
                let mut ops: Vec<BosonOp> = s.iter().rev().map(|o| o.adjoint()).collect();
                ops.extend(s2.iter().copied());
                let factor = thermal_average(&ops, modes.n_a, modes.n_b);
                if factor == 0.0 {
                    continue;
                }
                let same = n == m && i == k;
                let name = if same {
                    format!("|{}|^2", string_label(s))
                } else {
                    format!("<{}|{}>", string_label(s), string_label(s2))
                };
                pairings.push(Pairing { group, left: offset[n] + i, right: offset[m] + k, factor, doubled: !same, name });
            }
        }
    }

    let mut needed = vec![false; catalogue.len()];
    for p in &pairings {
        needed[p.left] = true;
        needed[p.right] = true;
    }
    let amplitudes: Vec<Vec<C64>> = times
        .par_iter()
        .map(|&t| {
            catalogue
                .iter()
                .zip(&needed)
                .map(|(s, &use_it)| if use_it { string_amplitude(s, t, basis, modes) } else { C64::new(0.0, 0.0) })
                .collect()
        })
        .collect();

    pairings
        .into_iter()
        .map(|p| {
            let amplitude: Vec<C64> = amplitudes.iter().map(|a| a[p.left].conj() * a[p.right]).collect();
            let values = amplitude
                .iter()
                .map(|z| if p.doubled { 2.0 * p.factor * z.re } else { p.factor * z.re })
                .collect();
            PerturbTerm { group: p.group.into(), name: p.name, thermal_factor: p.factor, amplitude, values }
        })
        .collect()
}

fn op(mode: Mode, sign: Sign) -> BosonOp {
    BosonOp::new(mode, sign)
}

/// Weak-hopping formulas: resonant absorption pathways between the outer
/// excitons, with the closed-form thermal factors.
fn weak_terms(basis: &ExcitonBasis, modes: &ModeCouplings, times: &[f64]) -> Result<Vec<PerturbTerm>> {
    use Mode::{A, B};
    use Sign::{Minus, Plus};
    let (na, nb) = (modes.n_a, modes.n_b);
    let w = |ops: &[BosonOp], states: &[usize]| InteractionAmplitude::chain(ops, states);

    let w31a = w(&[op(A, Minus)], &[3, 1])?;
    let w31b = w(&[op(B, Minus)], &[3, 1])?;
    let waa = w(&[op(A, Minus), op(A, Minus)], &[3, 2, 1])?;
    let wbb = w(&[op(B, Minus), op(B, Minus)], &[3, 2, 1])?;
    let wab = w(&[op(A, Minus), op(B, Minus)], &[3, 2, 1])?;
    let wba = w(&[op(B, Minus), op(A, Minus)], &[3, 2, 1])?;
    let three = |a: BosonOp, b: BosonOp, c: BosonOp| w(&[a, b, c], &[3, 1, 3, 1]);
    let w_aaa = three(op(A, Minus), op(A, Plus), op(A, Minus))?;
    let w_bbb = three(op(B, Minus), op(B, Plus), op(B, Minus))?;
    let w_bba = three(op(B, Minus), op(B, Plus), op(A, Minus))?;
    let w_aab = three(op(A, Minus), op(A, Plus), op(B, Minus))?;
    let w_abb = three(op(A, Minus), op(B, Plus), op(B, Minus))?;
    let w_baa = three(op(B, Minus), op(A, Plus), op(A, Minus))?;

    // (group, name, thermal factor, left amplitude, right amplitude, doubled)
    type Spec<'a> = (&'static str, &'static str, f64, &'a InteractionAmplitude, &'a InteractionAmplitude, bool);
    let specs: Vec<Spec> = vec![
        ("P3(1)", "n_a |W31(-a)|^2", na, &w31a, &w31a, false),
        ("P3(1)", "n_b |W31(-b)|^2", nb, &w31b, &w31b, false),
        ("P3(2,1)", "2 n_a^2 |W32,21(-a-a)|^2", 2.0 * na * na, &waa, &waa, false),
        ("P3(2,1)", "2 n_b^2 |W32,21(-b-b)|^2", 2.0 * nb * nb, &wbb, &wbb, false),
        ("P3(2,1)", "n_a n_b |W32,21(-b-a)|^2", na * nb, &wba, &wba, false),
        ("P3(2,1)", "n_a n_b |W32,21(-a-b)|^2", na * nb, &wab, &wab, false),
        ("P3(2,1)", "n_a n_b interference (-a-b)*(-b-a)", na * nb, &wab, &wba, true),
        ("P3(2,2)", "-n_a(2n_a+1) W13(+a) W31,13,31(-a+a-a)", -na * (2.0 * na + 1.0), &w31a, &w_aaa, true),
        ("P3(2,2)", "-n_b(2n_b+1) W13(+b) W31,13,31(-b+b-b)", -nb * (2.0 * nb + 1.0), &w31b, &w_bbb, true),
        ("P3(2,2)", "-n_a(n_b+1) W13(+a) W31,13,31(-b+b-a)", -na * (nb + 1.0), &w31a, &w_bba, true),
        ("P3(2,2)", "-(n_a+1)n_b W13(+b) W31,13,31(-a+a-b)", -(na + 1.0) * nb, &w31b, &w_aab, true),
        ("P3(2,2)", "-n_a n_b W13(+a) W31,13,31(-a+b-b)", -na * nb, &w31a, &w_abb, true),
        ("P3(2,2)", "-n_a n_b W13(+b) W31,13,31(-b+a-a)", -na * nb, &w31b, &w_baa, true),
    ];

    let mut unique: Vec<&InteractionAmplitude> = Vec::new();
    for (_, _, _, l, r, _) in &specs {
        for x in [*l, *r] {
            if !unique.iter().any(|u| *u == x) {
                unique.push(x);
            }
        }
    }
    let values: Vec<Vec<C64>> = times.par_iter().map(|&t| unique.iter().map(|u| u.bare(t, basis, modes)).collect()).collect();

    Ok(specs
        .into_iter()
        .map(|(group, name, factor, l, r, doubled)| {
            let position = |x: &InteractionAmplitude| unique.iter().position(|u| *u == x).expect("registered above");
            let (li, ri) = (position(l), position(r));
            let amplitude: Vec<C64> = values.iter().map(|v| v[li].conj() * v[ri]).collect();
            let vals = amplitude.iter().map(|z| if doubled { 2.0 * factor * z.re } else { factor * z.re }).collect();
            PerturbTerm { group: group.into(), name: name.into(), thermal_factor: factor, amplitude, values: vals }
        })
        .collect())
}

/// Squared cooperative two-phonon pathways and their interference at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CooperativePathways {
    /// `|W32,21(-a-b)|²`: mode a drives 2→3, mode b drives 1→2.
    pub a_then_b: f64,
    /// `|W32,21(-b-a)|²`.
    pub b_then_a: f64,
    /// `2 Re[(W(-a-b))* W(-b-a)]`.
    pub interference: f64,
}

impl CooperativePathways {
    /// `|interference| / (2 |W(-a-b)| |W(-b-a)|)`: 1 for phase-locked pathways, 0 for none.
    pub fn coherence(&self) -> f64 {
        let norm = 2.0 * (self.a_then_b * self.b_then_a).sqrt();
        if norm == 0.0 {
            0.0
        } else {
            self.interference.abs() / norm
        }
    }
}

pub fn cooperative_pathways(basis: &ExcitonBasis, modes: &ModeCouplings, t: f64) -> Result<CooperativePathways> {
    let ab = InteractionAmplitude::chain(&[op(Mode::A, Sign::Minus), op(Mode::B, Sign::Minus)], &[3, 2, 1])?.bare(t, basis, modes);
    let ba = InteractionAmplitude::chain(&[op(Mode::B, Sign::Minus), op(Mode::A, Sign::Minus)], &[3, 2, 1])?.bare(t, basis, modes);
    Ok(CooperativePathways { a_then_b: ab.norm_sqr(), b_then_a: ba.norm_sqr(), interference: 2.0 * (ab.conj() * ba).re })
}
