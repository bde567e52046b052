//! Exact time evolution of the trimer-plus-modes system.
//!
//! The initial state is diagonal in the product basis, so every population
//! is a quadratic form in the phases `exp(-i λ_k t)`:
//!
//! `P_O(t) = Σ_kl conj(u_k(t)) u_l(t) G_kl D_kl`
//!
//! with `G = R† O R` carrying the observable and `D` the initial weights in
//! the eigenbasis. One diagonalization plus two dense products per block of
//! sample times gives the whole trace.

mod rk;

use std::ops::Range;

use faer::Mat;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VaetError};
use crate::fock::DiagonalDensity;
use crate::linalg;
use crate::model::{BasisIndex, EffectiveHamiltonian, SystemSpec};

/// Sample times per parallel work item.
const TIME_BLOCK: usize = 64;

/// Increasing sample times in ms, starting at or after 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// `0, step, 2 step, ...` up to and including `t_final` (within rounding).
    pub fn uniform(t_final: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(VaetError::TimeGrid(format!("step must be > 0, got {step}")));
        }
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(VaetError::TimeGrid(format!("t_final must be >= 0, got {t_final}")));
        }
        let n = (t_final / step + 1e-9).floor() as usize;
        Ok(Self { times: (0..=n).map(|i| i as f64 * step).collect() })
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(VaetError::TimeGrid("no sample times".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times[0] < 0.0 {
            return Err(VaetError::TimeGrid("times must be finite and start at or after 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(VaetError::TimeGrid("times must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// The 0..400 ms window sampled every 0.5 ms.
    pub fn standard() -> Self {
        Self::uniform(400.0, 0.5).expect("constant grid is valid")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Sampled acceptor population with its maximum and time integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferTrace {
    pub times: Vec<f64>,
    pub p3: Vec<f64>,
    pub max_p3: f64,
    pub int_p3: f64,
}

impl TransferTrace {
    pub fn new(times: Vec<f64>, p3: Vec<f64>) -> Self {
        let max_p3 = p3.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let int_p3 = trapezoid(&times, &p3);
        Self { times, p3, max_p3, int_p3 }
    }

    /// Index of the first interior sample that is not below either neighbour.
    pub fn first_local_max(&self) -> Option<usize> {
        (1..self.p3.len().saturating_sub(1)).find(|&k| self.p3[k] > self.p3[k - 1] && self.p3[k] >= self.p3[k + 1])
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.p3.iter().enumerate() {
            if *v > self.p3[best] {
                best = k;
            }
        }
        best
    }
}

pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Numerical knobs for propagator construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorOptions {
    /// Above this 1-norm condition number of the eigenvector matrix the
    /// Runge–Kutta integrator is used instead.
    pub condition_limit: f64,
    /// Largest accepted relative eigen-decomposition residual.
    pub residual_limit: f64,
    /// Absolute and relative tolerance of the Runge–Kutta fallback.
    pub rk_tolerance: f64,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self { condition_limit: 1e8, residual_limit: 1e-8, rk_tolerance: 1e-9 }
    }
}

/// Which evolution strategy a propagator ended up with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Real symmetric Hamiltonian, possibly with one common decay rate.
    Symmetric,
    /// Complex eigen-decomposition of a non-normal Hamiltonian.
    Eigen,
    /// Adaptive Runge–Kutta on the state vectors.
    RungeKutta,
}

enum Engine {
    Symmetric { values: Vec<f64>, vectors: Mat<f64>, decay: f64 },
    Eigen { values: Vec<C64>, right: Mat<C64>, left: Mat<C64> },
    RungeKutta { h: Mat<C64>, tol: f64 },
}

/// Observable whose expectation is tracked.
enum Observable<'a> {
    Rows(Range<usize>),
    Matrix(&'a Array2<C64>),
}

/// `exp(-i H t)` in whichever form suits `H`.
pub struct Propagator {
    basis: BasisIndex,
    engine: Engine,
    condition: f64,
}

impl Propagator {
    pub fn new(h: &EffectiveHamiltonian) -> Result<Self> {
        Self::with_options(h, &PropagatorOptions::default())
    }

    pub fn with_options(h: &EffectiveHamiltonian, opts: &PropagatorOptions) -> Result<Self> {
        let n = h.dim();
        let m = &h.matrix;
        if let Some(decay) = symmetric_with_uniform_decay(m) {
            let real = Mat::from_fn(n, n, |i, j| m[[i, j]].re);
            let (values, vectors) = linalg::symmetric_eigen(&real)?;
            return Ok(Self { basis: h.basis, engine: Engine::Symmetric { values, vectors, decay }, condition: 1.0 });
        }

        let hm = linalg::complex_from_array(m);
        let (values, right) = linalg::general_eigen(&hm)?;
        let hr = linalg::mul_complex(hm.as_ref(), right.as_ref());
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let mut residual = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                residual = residual.max((hr[(i, k)] - right[(i, k)] * values[k]).norm());
            }
        }
        residual /= scale;
        if !(residual <= opts.residual_limit) {
            return Err(VaetError::Eigensolver { residual });
        }
        let left = linalg::inverse(&right);
        let condition = linalg::norm_one(right.as_ref()) * linalg::norm_one(left.as_ref());
        if !(condition <= opts.condition_limit) {
            return Ok(Self { basis: h.basis, engine: Engine::RungeKutta { h: hm, tol: opts.rk_tolerance }, condition });
        }
        Ok(Self { basis: h.basis, engine: Engine::Eigen { values, right, left }, condition })
    }

    /// Force the Runge–Kutta engine regardless of conditioning.
    pub fn runge_kutta(h: &EffectiveHamiltonian, tol: f64) -> Self {
        Self {
            basis: h.basis,
            engine: Engine::RungeKutta { h: linalg::complex_from_array(&h.matrix), tol },
            condition: f64::NAN,
        }
    }

    pub fn route(&self) -> Route {
        match self.engine {
            Engine::Symmetric { .. } => Route::Symmetric,
            Engine::Eigen { .. } => Route::Eigen,
            Engine::RungeKutta { .. } => Route::RungeKutta,
        }
    }

    /// 1-norm condition number of the eigenvector matrix (1 for the symmetric route).
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn basis(&self) -> BasisIndex {
        self.basis
    }

    /// Dense `U(t)`.
    pub fn matrix(&self, t: f64) -> Result<Array2<C64>> {
        let n = self.basis.dim();
        match &self.engine {
            Engine::Symmetric { values, vectors, decay } => {
                let damp = (-0.5 * decay * t).exp();
                let scaled = Mat::from_fn(n, n, |i, k| {
                    vectors[(i, k)] * C64::from_polar(damp, -values[k] * t)
                });
                let vt = Mat::from_fn(n, n, |k, j| C64::new(vectors[(j, k)], 0.0));
                Ok(linalg::complex_to_array(linalg::mul_complex(scaled.as_ref(), vt.as_ref()).as_ref()))
            }
            Engine::Eigen { values, right, left } => {
                let scaled = Mat::from_fn(n, n, |i, k| right[(i, k)] * (C64::new(0.0, -t) * values[k]).exp());
                Ok(linalg::complex_to_array(linalg::mul_complex(scaled.as_ref(), left.as_ref()).as_ref()))
            }
            Engine::RungeKutta { h, tol } => {
                let mut out = Array2::zeros((n, n));
                rk::integrate(h, Mat::identity(n, n), &[t], *tol, |_, y| {
                    out = linalg::complex_to_array(y.as_ref());
                })?;
                Ok(out)
            }
        }
    }

    /// `U(t) ψ0`.
    pub fn evolve(&self, psi0: &Array1<C64>, t: f64) -> Result<Array1<C64>> {
        let n = self.basis.dim();
        match &self.engine {
            Engine::RungeKutta { h, tol } => {
                let y0 = Mat::from_fn(n, 1, |i, _| psi0[i]);
                let mut out = Array1::zeros(n);
                rk::integrate(h, y0, &[t], *tol, |_, y| {
                    out = Array1::from_shape_fn(n, |i| y[(i, 0)]);
                })?;
                Ok(out)
            }
            _ => {
                let u = self.matrix(t)?;
                Ok(u.dot(psi0))
            }
        }
    }

    /// Population of one site (0-based) for the ensemble `init`.
    pub fn site_population(&self, init: &DiagonalDensity, site: usize, times: &TimeGrid) -> Result<Vec<f64>> {
        self.check_basis(init)?;
        self.series(init, Observable::Rows(self.basis.site_range(site)), times.times())
    }

    /// Populations of all three sites.
    pub fn site_populations(&self, init: &DiagonalDensity, times: &TimeGrid) -> Result<[Vec<f64>; 3]> {
        Ok([
            self.site_population(init, 0, times)?,
            self.site_population(init, 1, times)?,
            self.site_population(init, 2, times)?,
        ])
    }

    /// `Tr ρ(t)`.
    pub fn trace_norm(&self, init: &DiagonalDensity, times: &TimeGrid) -> Result<Vec<f64>> {
        self.check_basis(init)?;
        self.series(init, Observable::Rows(0..self.basis.dim()), times.times())
    }

    /// `Tr[ρ(t) O]` for a Hermitian observable `O`.
    pub fn expectation(&self, init: &DiagonalDensity, observable: &Array2<C64>, times: &TimeGrid) -> Result<Vec<f64>> {
        self.check_basis(init)?;
        let n = self.basis.dim();
        if observable.dim() != (n, n) {
            return Err(VaetError::InvalidParameter {
                field: "observable",
                reason: format!("shape {:?} does not match dimension {n}", observable.dim()),
            });
        }
        self.series(init, Observable::Matrix(observable), times.times())
    }

    fn check_basis(&self, init: &DiagonalDensity) -> Result<()> {
        if init.basis != self.basis {
            return Err(VaetError::InvalidParameter {
                field: "init",
                reason: format!("initial state basis {:?} does not match {:?}", init.basis, self.basis),
            });
        }
        Ok(())
    }

    fn series(&self, init: &DiagonalDensity, obs: Observable<'_>, times: &[f64]) -> Result<Vec<f64>> {
        let support = init.support();
        match &self.engine {
            Engine::Symmetric { values, vectors, decay } => Ok(symmetric_series(values, vectors, *decay, init, &support, &obs, times)),
            Engine::Eigen { values, right, left } => Ok(eigen_series(values, right, left, init, &support, &obs, times)),
            Engine::RungeKutta { h, tol } => {
                let n = self.basis.dim();
                let y0 = Mat::from_fn(n, support.len(), |i, c| {
                    if i == support[c] {
                        C64::new(init.weights[i].sqrt(), 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                let mut out = vec![0.0; times.len()];
                rk::integrate(h, y0, times, *tol, |k, y| out[k] = block_expectation(y, &obs))?;
                Ok(out)
            }
        }
    }
}

/// Some(decay rate) when `m` is real symmetric up to a constant `-i γ/2` diagonal.
fn symmetric_with_uniform_decay(m: &Array2<C64>) -> Option<f64> {
    let n = m.nrows();
    let shift = m[[0, 0]].im;
    for i in 0..n {
        if m[[i, i]].im != shift {
            return None;
        }
        for j in 0..n {
            if i != j && (m[[i, j]].im != 0.0 || m[[i, j]].re != m[[j, i]].re) {
                return None;
            }
        }
    }
    (shift <= 0.0).then_some(-2.0 * shift)
}

fn block_expectation(y: &Mat<C64>, obs: &Observable<'_>) -> f64 {
    match obs {
        Observable::Rows(rows) => {
            let mut acc = 0.0;
            for c in 0..y.ncols() {
                for r in rows.clone() {
                    acc += y[(r, c)].norm_sqr();
                }
            }
            acc
        }
        Observable::Matrix(o) => {
            let n = y.nrows();
            let mut acc = 0.0;
            for c in 0..y.ncols() {
                for i in 0..n {
                    let mut oy = C64::new(0.0, 0.0);
                    for j in 0..n {
                        oy += o[[i, j]] * y[(j, c)];
                    }
                    acc += (y[(i, c)].conj() * oy).re;
                }
            }
            acc
        }
    }
}

fn symmetric_series(
    values: &[f64],
    vectors: &Mat<f64>,
    decay: f64,
    init: &DiagonalDensity,
    support: &[usize],
    obs: &Observable<'_>,
    times: &[f64],
) -> Vec<f64> {
    let n = values.len();
    // D = Σ_i w_i v_i v_iᵀ where v_i is row i of the eigenvector matrix
    let ws = Mat::from_fn(support.len(), n, |r, k| init.weights[support[r]].sqrt() * vectors[(support[r], k)]);
    let d = linalg::mul_real(ws.transpose(), ws.as_ref());
    drop(ws);
    let mut f = match obs {
        Observable::Rows(rows) => {
            let vs = vectors.subrows(rows.start, rows.len());
            linalg::mul_real(vs.transpose(), vs)
        }
        Observable::Matrix(o) => {
            let om = Mat::from_fn(n, n, |i, j| o[[i, j]].re);
            let ov = linalg::mul_real(om.as_ref(), vectors.as_ref());
            linalg::mul_real(vectors.transpose(), ov.as_ref())
        }
    };
    for j in 0..n {
        for i in 0..n {
            f[(i, j)] *= d[(i, j)];
        }
    }
    drop(d);

    let blocks: Vec<&[f64]> = times.chunks(TIME_BLOCK).collect();
    let parts: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|block| {
            let c = Mat::from_fn(n, block.len(), |k, j| (values[k] * block[j]).cos());
            let s = Mat::from_fn(n, block.len(), |k, j| (values[k] * block[j]).sin());
            let fc = linalg::mul_real(f.as_ref(), c.as_ref());
            let fs = linalg::mul_real(f.as_ref(), s.as_ref());
            (0..block.len())
                .map(|j| {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += c[(k, j)] * fc[(k, j)] + s[(k, j)] * fs[(k, j)];
                    }
                    acc * (-decay * block[j]).exp()
                })
                .collect()
        })
        .collect();
    parts.concat()
}

fn eigen_series(
    values: &[C64],
    right: &Mat<C64>,
    left: &Mat<C64>,
    init: &DiagonalDensity,
    support: &[usize],
    obs: &Observable<'_>,
    times: &[f64],
) -> Vec<f64> {
    let n = values.len();
    // D_kl = Σ_i w_i conj(L_ki) L_li
    let ld = Mat::from_fn(n, support.len(), |k, c| left[(k, support[c])] * init.weights[support[c]].sqrt());
    let ld_conj = Mat::from_fn(n, support.len(), |k, c| ld[(k, c)].conj());
    let d = linalg::mul_complex(ld_conj.as_ref(), ld.transpose());
    drop((ld, ld_conj));
    let right_adj = Mat::from_fn(n, n, |k, i| right[(i, k)].conj());
    let mut f = match obs {
        Observable::Rows(rows) => {
            let rs = right.subrows(rows.start, rows.len());
            let rs_adj = right_adj.subcols(rows.start, rows.len());
            linalg::mul_complex(rs_adj, rs)
        }
        Observable::Matrix(o) => {
            let om = linalg::complex_from_array(o);
            let or = linalg::mul_complex(om.as_ref(), right.as_ref());
            linalg::mul_complex(right_adj.as_ref(), or.as_ref())
        }
    };
    for j in 0..n {
        for i in 0..n {
            f[(i, j)] *= d[(i, j)];
        }
    }
    drop(d);

    let blocks: Vec<&[f64]> = times.chunks(TIME_BLOCK).collect();
    let parts: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|block| {
            let u = Mat::from_fn(n, block.len(), |k, j| (C64::new(0.0, -block[j]) * values[k]).exp());
            let fu = linalg::mul_complex(f.as_ref(), u.as_ref());
            (0..block.len())
                .map(|j| {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += (u[(k, j)].conj() * fu[(k, j)]).re;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    parts.concat()
}

/// Acceptor population `P3(t)` for the ensemble `init`.
pub fn propagate_trace(h: &EffectiveHamiltonian, init: &DiagonalDensity, times: &TimeGrid) -> Result<TransferTrace> {
    let prop = Propagator::new(h)?;
    let p3 = prop.site_population(init, 2, times)?;
    Ok(TransferTrace::new(times.times().to_vec(), p3))
}

/// Total population `Tr ρ(t)`; identically 1 without dissipation.
pub fn trace_norm_series(h: &EffectiveHamiltonian, init: &DiagonalDensity, times: &TimeGrid) -> Result<Vec<f64>> {
    Propagator::new(h)?.trace_norm(init, times)
}

/// `Tr[ρ(t) H_R]` with `H_R` the Hermitian part of `h`.
pub fn energy_series(h: &EffectiveHamiltonian, init: &DiagonalDensity, times: &TimeGrid) -> Result<Vec<f64>> {
    let hermitian = h.matrix.mapv(|z| C64::new(z.re, 0.0));
    Propagator::new(h)?.expectation(init, &hermitian, times)
}

/// Trace of `system` with the excitation starting on the donor.
pub fn system_trace(system: &SystemSpec, times: &TimeGrid) -> Result<TransferTrace> {
    let h = system.hamiltonian()?;
    let init = system.donor_density()?;
    propagate_trace(&h, &init, times)
}

/// Traces at several Fock truncations and their pairwise deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n_values: Vec<usize>,
    pub traces: Vec<TransferTrace>,
    /// `deviations[i][j] = max_t |p3_i(t) - p3_j(t)|`.
    pub deviations: Vec<Vec<f64>>,
}

impl ConvergenceReport {
    /// Deviation of each trace from the one at the largest truncation.
    pub fn deviation_from_largest(&self) -> Vec<f64> {
        let last = self.n_values.len() - 1;
        self.deviations.iter().map(|row| row[last]).collect()
    }

    pub fn deviation(&self, n_i: usize, n_j: usize) -> Option<f64> {
        let i = self.n_values.iter().position(|&n| n == n_i)?;
        let j = self.n_values.iter().position(|&n| n == n_j)?;
        Some(self.deviations[i][j])
    }
}

/// Recompute `base` at every truncation in `n_values` (both modes).
pub fn convergence_sweep(base: &SystemSpec, n_values: &[usize], times: &TimeGrid) -> Result<ConvergenceReport> {
    if n_values.is_empty() || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VaetError::InvalidParameter {
            field: "n_values",
            reason: "must be nonempty and strictly increasing".into(),
        });
    }
    let traces = n_values
        .iter()
        .map(|&n| system_trace(&base.with_n_fock(n), times))
        .collect::<Result<Vec<_>>>()?;
    let deviations = traces
        .iter()
        .map(|a| {
            traces
                .iter()
                .map(|b| a.p3.iter().zip(&b.p3).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
                .collect()
        })
        .collect();
    Ok(ConvergenceReport { n_values: n_values.to_vec(), traces, deviations })
}
