//! Thermal averages of bosonic operator strings via Wick pairings.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

/// `Plus` creates a phonon (emission), `Minus` annihilates one (absorption).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BosonOp {
    pub mode: Mode,
    pub sign: Sign,
}

impl BosonOp {
    pub fn new(mode: Mode, sign: Sign) -> Self {
        Self { mode, sign }
    }

    pub fn adjoint(self) -> Self {
        let sign = match self.sign {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
        Self { mode: self.mode, sign }
    }

    pub fn label(&self) -> String {
        let m = match self.mode {
            Mode::A => 'a',
            Mode::B => 'b',
        };
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        format!("{m}{s}")
    }
}

/// `<o1 o2 … on>` in the product of two thermal states with occupancies `n_a`, `n_b`.
pub fn thermal_average(ops: &[BosonOp], n_a: f64, n_b: f64) -> f64 {
    let of_mode = |mode: Mode| -> Vec<Sign> { ops.iter().filter(|o| o.mode == mode).map(|o| o.sign).collect() };
    single_mode(&of_mode(Mode::A), n_a) * single_mode(&of_mode(Mode::B), n_b)
}

fn single_mode(signs: &[Sign], n: f64) -> f64 {
    if signs.is_empty() {
        return 1.0;
    }
    let creations = signs.iter().filter(|s| **s == Sign::Plus).count();
    if 2 * creations != signs.len() {
        return 0.0;
    }
    // pair the first operator with each later one
    let mut total = 0.0;
    for j in 1..signs.len() {
        let contraction = match (signs[0], signs[j]) {
            (Sign::Plus, Sign::Minus) => n,
            (Sign::Minus, Sign::Plus) => n + 1.0,
            _ => continue,
        };
        let rest: Vec<Sign> = signs.iter().enumerate().filter(|(k, _)| *k != 0 && *k != j).map(|(_, s)| *s).collect();
        total += contraction * single_mode(&rest, n);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(spec: &str) -> Vec<BosonOp> {
        // e.g. "A+ A- B-"
        spec.split_whitespace()
            .map(|t| {
                let mode = if t.starts_with('A') { Mode::A } else { Mode::B };
                let sign = if t.ends_with('+') { Sign::Plus } else { Sign::Minus };
                BosonOp::new(mode, sign)
            })
            .collect()
    }

    #[test]
    fn closed_forms() {
        let (na, nb): (f64, f64) = (2.413, 0.7);
        let cases = [
            ("A+ A+ A- A-", 2.0 * na * na),
            ("A+ A- A+ A-", na * (2.0 * na + 1.0)),
            ("A- A- A+ A+", 2.0 * (na + 1.0).powi(2)),
            ("A- A+ A- A+", (na + 1.0) * (2.0 * na + 1.0)),
            ("A+ A- A- A+", 2.0 * na * (na + 1.0)),
            ("A- A+ A+ A-", 2.0 * na * (na + 1.0)),
            ("A- A+ B- B+", (na + 1.0) * (nb + 1.0)),
            ("A+ A- B+ B-", na * nb),
            ("A- A+ B+ B-", (na + 1.0) * nb),
            ("A+ A- B- B+", na * (nb + 1.0)),
            ("A+ B- A- B+", na * (nb + 1.0)),
            ("A+ A-", na),
            ("A- A+", na + 1.0),
            ("A+ A+", 0.0),
            ("A+ B-", 0.0),
            ("A- A+ A-", 0.0),
        ];
        for (s, want) in cases {
            let got = thermal_average(&ops(s), na, nb);
            assert!((got - want).abs() < 1e-12, "{s}: {got} vs {want}");
        }
    }
}
