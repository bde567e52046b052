//! Adaptive Dormand–Prince 5(4) integration of `dψ/dt = -i H ψ` for a block
//! of state vectors. Used when the eigenvector basis is too ill-conditioned.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Result, VaetError};
use crate::linalg::mul_complex;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th- and embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 10_000_000;

/// Right-hand side `-i H Y`.
fn rhs(h: &Mat<C64>, y: &Mat<C64>) -> Mat<C64> {
    let mut out = mul_complex(h.as_ref(), y.as_ref());
    let minus_i = C64::new(0.0, -1.0);
    for j in 0..out.ncols() {
        for i in 0..out.nrows() {
            out[(i, j)] *= minus_i;
        }
    }
    out
}

fn combine(y: &Mat<C64>, h: f64, terms: &[(f64, &Mat<C64>)]) -> Mat<C64> {
    Mat::from_fn(y.nrows(), y.ncols(), |i, j| {
        let mut acc = y[(i, j)];
        for (c, k) in terms {
            if *c != 0.0 {
                acc += k[(i, j)] * (h * c);
            }
        }
        acc
    })
}

/// Integrate the block `y0` and call `observe(sample_index, state)` at each
/// requested time. `times` must be nondecreasing and start at or after 0.
pub fn integrate<F>(h: &Mat<C64>, y0: Mat<C64>, times: &[f64], tol: f64, mut observe: F) -> Result<()>
where
    F: FnMut(usize, &Mat<C64>),
{
    let scale = (0..h.nrows())
        .flat_map(|i| (0..h.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| h[(i, j)].norm())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut y = y0;
    let mut t = 0.0;
    let mut step = 0.1 / scale;
    let mut k1 = rhs(h, &y);
    let mut steps = 0usize;

    for (idx, &target) in times.iter().enumerate() {
        while target - t > 1e-14 * target.abs().max(1.0) {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(VaetError::Integration { t, reason: "step budget exhausted".into() });
            }
            let last = step >= target - t;
            let hs = if last { target - t } else { step };
            let k2 = rhs(h, &combine(&y, hs, &[(A21, &k1)]));
            let k3 = rhs(h, &combine(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(h, &combine(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(h, &combine(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = rhs(h, &combine(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = combine(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = rhs(h, &y_new);

            let mut err = 0.0f64;
            for j in 0..y.ncols() {
                for i in 0..y.nrows() {
                    let e = (k1[(i, j)] * E1
                        + k3[(i, j)] * E3
                        + k4[(i, j)] * E4
                        + k5[(i, j)] * E5
                        + k6[(i, j)] * E6
                        + k7[(i, j)] * E7)
                        * hs;
                    let sc = tol + tol * y[(i, j)].norm().max(y_new[(i, j)].norm());
                    err = err.max(e.norm() / sc);
                }
            }
            if !err.is_finite() {
                return Err(VaetError::Integration { t, reason: "non-finite error estimate".into() });
            }
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = y_new;
                k1 = k7;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) {
                step = hs * factor;
            }
            if step < 1e-14 * scale.recip() {
                return Err(VaetError::Integration { t, reason: "step size underflow".into() });
            }
        }
        observe(idx, &y);
    }
    Ok(())
}
