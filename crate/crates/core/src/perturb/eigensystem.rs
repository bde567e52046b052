use serde::{Deserialize, Serialize};

use crate::error::{Result, VaetError};
use crate::model::{CouplingTopology, TrimerParams};

/// Closed-form excitons of the equally spaced trimer with equal hoppings.
///
/// With `Ω = sqrt(Δ² + 2J²)` the energies are `(-Ω, 0, Ω)` measured from the
/// bridge site energy, and the donor and acceptor decompose as
/// `|1> = α e1 - β e2 + γ e3`, `|3> = γ e1 + β e2 + α e3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricEigenSystem {
    pub delta: f64,
    pub j: f64,
    pub omega_cap: f64,
    pub lambdas: [f64; 3],
    pub coef_alpha: f64,
    pub coef_beta: f64,
    pub coef_gamma: f64,
    /// Column `k` is exciton `k + 1` in the site basis: `eigvecs[site][k]`.
    pub eigvecs: [[f64; 3]; 3],
}

/// `K± = J² + Δ(Δ ± Ω)`, with `K-` taken as `J⁴ / K+` to avoid cancellation.
fn k_factors(delta: f64, j: f64, omega: f64) -> (f64, f64) {
    let kp = j * j + delta * (delta + omega);
    (kp, j.powi(4) / kp)
}

pub fn symmetric_eigensystem(delta: f64, j: f64) -> Result<SymmetricEigenSystem> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(VaetError::NotSymmetric(format!("site spacing must be > 0, got {delta}")));
    }
    if !(j != 0.0 && j.is_finite()) {
        return Err(VaetError::NotSymmetric(format!("hopping must be nonzero, got {j}")));
    }
    let omega = (delta * delta + 2.0 * j * j).sqrt();
    let (kp, km) = k_factors(delta, j, omega);
    let r2 = std::f64::consts::SQRT_2;
    let e1 = [
        kp.sqrt() / (r2 * omega),
        -j * (delta + omega) / (r2 * omega * kp.sqrt()),
        j * j / (r2 * omega * kp.sqrt()),
    ];
    let e2 = [-j / omega, -delta / omega, j / omega];
    let e3 = [
        km.sqrt() / (r2 * omega),
        -j * (delta - omega) / (r2 * omega * km.sqrt()),
        j * j / (r2 * omega * km.sqrt()),
    ];
    let mut eigvecs = [[0.0; 3]; 3];
    for s in 0..3 {
        eigvecs[s] = [e1[s], e2[s], e3[s]];
    }
    Ok(SymmetricEigenSystem {
        delta,
        j,
        omega_cap: omega,
        lambdas: [-omega, 0.0, omega],
        coef_alpha: kp.sqrt() / (r2 * omega),
        coef_beta: j / omega,
        coef_gamma: km.sqrt() / (r2 * omega),
        eigvecs,
    })
}

impl SymmetricEigenSystem {
    /// Reject anything that is not an equally spaced, equal-hopping trimer.
    pub fn from_trimer(trimer: &TrimerParams) -> Result<Self> {
        if !trimer.is_symmetric() || trimer.j13 != 0.0 {
            return Err(VaetError::NotSymmetric(format!(
                "omega_tilde = {:?}, j12 = {}, j23 = {}, j13 = {}",
                trimer.omega_tilde, trimer.j12, trimer.j23, trimer.j13
            )));
        }
        symmetric_eigensystem(trimer.delta(), trimer.hopping())
    }

    /// `λ_j - λ_k` with 1-based exciton labels.
    pub fn gap(&self, j: usize, k: usize) -> f64 {
        self.lambdas[j - 1] - self.lambdas[k - 1]
    }

    /// `<e_j|1>` for j = 1, 2, 3.
    pub fn donor_overlaps(&self) -> [f64; 3] {
        [self.coef_alpha, -self.coef_beta, self.coef_gamma]
    }

    /// `<e_j|3>` for j = 1, 2, 3.
    pub fn acceptor_overlaps(&self) -> [f64; 3] {
        [self.coef_gamma, self.coef_beta, self.coef_alpha]
    }

    pub fn delta31(&self) -> f64 {
        2.0 * self.omega_cap
    }
}

/// Exciton-basis matrix elements of the two site-coupling patterns.
///
/// `a_jk = <e_j| (|2><2| - |1><1| - |3><3|) |e_k>`,
/// `b_jk = <e_j| (|3><3| - |1><1| - |2><2|) |e_k>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingCoefficients {
    pub a_jk: [[f64; 3]; 3],
    pub b_jk: [[f64; 3]; 3],
}

pub fn coupling_coefficients(sys: &SymmetricEigenSystem) -> CouplingCoefficients {
    let (d, j, w) = (sys.delta, sys.j, sys.omega_cap);
    let (kp, km) = k_factors(d, j, w);
    let w2 = w * w;
    let a11 = -d * d * (d + w).powi(2) / (2.0 * w2 * kp);
    let a22 = (d * d - 2.0 * j * j) / w2;
    let a33 = -d * d * (d - w).powi(2) / (2.0 * w2 * km);
    let a12 = 2.0 * d * j * (d + w) / (w2 * (2.0 * kp).sqrt());
    let a23 = 2.0 * d * j * (d - w) / (w2 * (2.0 * km).sqrt());
    let a13 = -2.0 * j * j / w2;
    let b11 = -(d * w + j * j) * (d + w).powi(2) / (2.0 * w2 * kp);
    let b22 = -d * d / w2;
    let b33 = (d * w - j * j) * (d - w).powi(2) / (2.0 * w2 * km);
    let b12 = 2.0 * j.powi(3) / (w2 * (2.0 * kp).sqrt());
    let b23 = 2.0 * j.powi(3) / (w2 * (2.0 * km).sqrt());
    let b13 = j * j / w2;
    CouplingCoefficients {
        a_jk: [[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]],
        b_jk: [[b11, b12, b13], [b12, b22, b23], [b13, b23, b33]],
    }
}

/// Exciton energies, overlaps and coupling matrices of any trimer, from a
/// numerical 3x3 diagonalization. The symmetric closed forms feed the same
/// structure through [`ExcitonBasis::symmetric`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitonBasis {
    pub lambdas: [f64; 3],
    pub a_jk: [[f64; 3]; 3],
    pub b_jk: [[f64; 3]; 3],
    pub donor: [f64; 3],
    pub acceptor: [f64; 3],
}

impl ExcitonBasis {
    pub fn symmetric(sys: &SymmetricEigenSystem, coeffs: &CouplingCoefficients) -> Self {
        Self {
            lambdas: sys.lambdas,
            a_jk: coeffs.a_jk,
            b_jk: coeffs.b_jk,
            donor: sys.donor_overlaps(),
            acceptor: sys.acceptor_overlaps(),
        }
    }

    /// Local (fully cross-coupled) transverse pattern for an arbitrary trimer.
    pub fn from_trimer(trimer: &TrimerParams) -> Result<Self> {
        let e = trimer.electronic_matrix(CouplingTopology::Transverse { zeta: 1.0 });
        let m = faer::Mat::from_fn(3, 3, |i, j| e[i][j]);
        let (values, vectors) = crate::linalg::symmetric_eigen(&m)?;
        let v = |s: usize, k: usize| vectors[(s, k)];
        let project = |pattern: [f64; 3]| {
            let mut out = [[0.0; 3]; 3];
            for (j, row) in out.iter_mut().enumerate() {
                for (k, x) in row.iter_mut().enumerate() {
                    *x = (0..3).map(|s| v(s, j) * pattern[s] * v(s, k)).sum();
                }
            }
            out
        };
        Ok(Self {
            lambdas: [values[0], values[1], values[2]],
            a_jk: project([-1.0, 1.0, -1.0]),
            b_jk: project([-1.0, -1.0, 1.0]),
            donor: [v(0, 0), v(0, 1), v(0, 2)],
            acceptor: [v(2, 0), v(2, 1), v(2, 2)],
        })
    }

    /// `λ_j - λ_k` with 1-based labels.
    pub fn gap(&self, j: usize, k: usize) -> f64 {
        self.lambdas[j - 1] - self.lambdas[k - 1]
    }
}
