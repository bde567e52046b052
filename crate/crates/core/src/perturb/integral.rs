//! Time-ordered phase integrals
//! `∫_0^t dt1 ∫_0^t1 dt2 … exp(i ω1 t1) exp(i ω2 t2) …`.
//!
//! Substituting the gaps between consecutive times turns the ordered region
//! into a simplex, so the depth-n integral equals `t^n` times the divided
//! difference of `exp` on the nodes `0, i t S1, …, i t Sn`, where `S_m` are the
//! partial frequency sums. The divided difference is evaluated by the
//! two-point recursion `(e^b - e^a)/(b - a)` on well separated nodes and by a
//! Taylor series on clustered ones, which covers every resonant limit.

use num_complex::Complex64 as C64;

/// Below this `|ω| t` the one-leg integral switches to its series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// Node spread under which the Taylor branch is used.
const CLUSTER: f64 = 1.0;

/// `∫_0^t exp(i ω s) ds`.
pub fn phase_integral(omega: f64, t: f64) -> C64 {
    if (omega * t).abs() < SERIES_THRESHOLD {
        phase_integral_series(omega, t)
    } else {
        phase_integral_closed(omega, t)
    }
}

fn phase_integral_closed(omega: f64, t: f64) -> C64 {
    (C64::new(0.0, omega * t).exp() - 1.0) / C64::new(0.0, omega)
}

fn phase_integral_series(omega: f64, t: f64) -> C64 {
    // t Σ (i ω t)^k / (k+1)!
    let x = C64::new(0.0, omega * t);
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..6 {
        term = term * x / (k + 1) as f64;
        sum += term;
    }
    sum * t
}

/// Nested integral with frequencies ordered from the outermost (latest) time inward.
pub fn nested_integral(omegas: &[f64], t: f64) -> C64 {
    match omegas.len() {
        0 => C64::new(1.0, 0.0),
        1 => phase_integral(omegas[0], t),
        n => {
            let mut nodes = Vec::with_capacity(n + 1);
            let mut partial = 0.0;
            nodes.push(C64::new(0.0, 0.0));
            for w in omegas {
                partial += w;
                nodes.push(C64::new(0.0, partial * t));
            }
            exp_divided_difference(&nodes) * t.powi(n as i32)
        }
    }
}

/// Divided difference `exp[x0, …, xn]`.
pub fn exp_divided_difference(nodes: &[C64]) -> C64 {
    let n = nodes.len();
    if n == 1 {
        return nodes[0].exp();
    }
    let (mut fi, mut fj, mut spread) = (0, 0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = (nodes[i] - nodes[j]).norm();
            if d > spread {
                (fi, fj, spread) = (i, j, d);
            }
        }
    }
    if spread < CLUSTER {
        return clustered(nodes);
    }
    let without = |skip: usize| -> Vec<C64> {
        nodes.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, x)| *x).collect()
    };
    (exp_divided_difference(&without(fj)) - exp_divided_difference(&without(fi))) / (nodes[fi] - nodes[fj])
}

/// Taylor expansion about the centroid:
/// `exp[x] = e^c Σ_m h_m(y) / (m + n)!` with `y = x - c` and `h_m` the
/// complete homogeneous symmetric polynomials.
fn clustered(nodes: &[C64]) -> C64 {
    let order = nodes.len() - 1;
    let c = nodes.iter().sum::<C64>() / nodes.len() as f64;
    let y: Vec<C64> = nodes.iter().map(|x| x - c).collect();
    const TERMS: usize = 40;
    // h[m] accumulates h_m over the nodes processed so far
    let mut h = [C64::new(0.0, 0.0); TERMS];
    h[0] = C64::new(1.0, 0.0);
    for yk in &y {
        for m in 1..TERMS {
            let prev = h[m - 1];
            h[m] += yk * prev;
        }
    }
    let mut factorial = (1..=order).map(|k| k as f64).product::<f64>();
    let mut sum = C64::new(0.0, 0.0);
    for (m, hm) in h.iter().enumerate() {
        if m > 0 {
            factorial *= (m + order) as f64;
        }
        let term = hm / factorial;
        sum += term;
        if m > 4 && term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    c.exp() * sum
}
