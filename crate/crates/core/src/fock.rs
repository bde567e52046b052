//! Truncated bosonic operators, thermal phonon distributions and the
//! diagonal initial state.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::BasisIndex;

/// Ladder and number operators on an `n_fock`-level truncated mode.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperators {
    pub n_fock: usize,
    pub annihilate: Array2<f64>,
    pub number: Array2<f64>,
}

impl FockOperators {
    pub fn new(n_fock: usize) -> Self {
        let mut annihilate = Array2::zeros((n_fock, n_fock));
        for n in 1..n_fock {
            annihilate[[n - 1, n]] = (n as f64).sqrt();
        }
        let number = Array2::from_diag(&Array1::from_iter((0..n_fock).map(|n| n as f64)));
        Self { n_fock, annihilate, number }
    }

    pub fn create(&self) -> Array2<f64> {
        self.annihilate.t().to_owned()
    }
}

/// Truncated, renormalized Bose–Einstein populations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub n_fock: usize,
    pub probabilities: Vec<f64>,
}

impl ThermalState {
    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// `p_n ∝ exp(-n nu / kbt)` on `0..n_fock`; `kbt = 0` gives the vacuum.
pub fn thermal_state(nu: f64, kbt: f64, n_fock: usize) -> Result<ThermalState> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(invalid("nu", format!("must be > 0, got {nu}")));
    }
    if !(kbt >= 0.0 && kbt.is_finite()) {
        return Err(invalid("kbt", format!("must be >= 0, got {kbt}")));
    }
    if n_fock < 2 {
        return Err(invalid("n_fock", format!("must be >= 2, got {n_fock}")));
    }
    let mut probabilities = vec![0.0; n_fock];
    if kbt == 0.0 {
        probabilities[0] = 1.0;
    } else {
        let x = (-nu / kbt).exp();
        let mut w = 1.0;
        for p in probabilities.iter_mut() {
            *p = w;
            w *= x;
        }
        let z: f64 = probabilities.iter().sum();
        probabilities.iter_mut().for_each(|p| *p /= z);
    }
    Ok(ThermalState { n_fock, probabilities })
}

/// Untruncated Bose–Einstein occupancy `1 / (exp(nu/kbt) - 1)`; zero at `kbt = 0`.
pub fn mean_occupancy(nu: f64, kbt: f64) -> f64 {
    if kbt <= 0.0 {
        return 0.0;
    }
    1.0 / (nu / kbt).exp_m1()
}

/// Diagonal weights of `|site><site| ⊗ ρ_a ⊗ ρ_b` over the product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalDensity {
    pub basis: BasisIndex,
    pub weights: Array1<f64>,
}

impl DiagonalDensity {
    /// Flat indices with nonzero weight, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, _)| i).collect()
    }

    pub fn total(&self) -> f64 {
        self.weights.sum()
    }
}

/// `site` is 1-based: 1 donor, 2 bridge, 3 acceptor.
pub fn initial_density(site: usize, state_a: &ThermalState, state_b: &ThermalState) -> Result<DiagonalDensity> {
    if !(1..=3).contains(&site) {
        return Err(invalid("site", format!("must be 1, 2 or 3, got {site}")));
    }
    let basis = BasisIndex::new(state_a.n_fock, state_b.n_fock);
    let mut weights = Array1::zeros(basis.dim());
    for (n, pa) in state_a.probabilities.iter().enumerate() {
        for (m, pb) in state_b.probabilities.iter().enumerate() {
            weights[basis.flat(site - 1, n, m)] = pa * pb;
        }
    }
    Ok(DiagonalDensity { basis, weights })
}
