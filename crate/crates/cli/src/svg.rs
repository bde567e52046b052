//! Heatmap of a 2D spectrum as standalone SVG. Presentation only.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::output::{num, xml_escape};

const STOPS: [(f64, [f64; 3]); 5] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

/// Linear interpolation through a viridis-like set of stops, `t` in [0, 1].
pub fn colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let k = STOPS.iter().position(|s| s.0 >= t).unwrap_or(STOPS.len() - 1).max(1);
    let (t0, c0) = STOPS[k - 1];
    let (t1, c1) = STOPS[k];
    let w = (t - t0) / (t1 - t0);
    let c: Vec<u8> = (0..3).map(|i| (c0[i] + w * (c1[i] - c0[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    /// Axis values (rad/ms) and the value matrix indexed `[i_a, i_b]`.
    pub nu_a: &'a [f64],
    pub nu_b: &'a [f64],
    pub values: &'a Array2<f64>,
    pub delta31: f64,
    pub metadata: &'a str,
}

impl Heatmap<'_> {
    pub fn render(&self) -> String {
        let (left, top, size, bar) = (70.0, 40.0, 480.0, 20.0);
        let width = left + size + 110.0;
        let height = top + size + 60.0;
        let (na, nb) = (self.nu_a.len(), self.nu_b.len());
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let (cw, ch) = (size / na as f64, size / nb as f64);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, "<metadata>{}</metadata>", xml_escape(self.metadata));
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="13">{}</text>"#, left + size / 2.0, xml_escape(self.title));
        for i in 0..na {
            for j in 0..nb {
                let t = (self.values[[i, j]] - lo) / span;
                // ν_b grows upwards
                let x = left + i as f64 * cw;
                let y = top + size - (j + 1) as f64 * ch;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    cw + 0.05,
                    ch + 0.05,
                    colour(t)
                );
            }
        }
        let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="black"/>"#);

        // ticks where the one-mode resonances ν = Δ31/k fall
        let axis = |v: &[f64], nu: f64| -> Option<f64> {
            let (first, last) = (v[0], v[v.len() - 1]);
            if last <= first || nu < first || nu > last {
                return None;
            }
            Some((nu - first) / (last - first))
        };
        for k in 1..=4 {
            let nu = self.delta31 / k as f64;
            let label = if k == 1 { "1".to_string() } else { format!("1/{k}") };
            if let Some(f) = axis(self.nu_a, nu) {
                let x = left + cw / 2.0 + f * (size - cw);
                let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, top + size, top + size + 5.0);
                let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, top + size + 17.0);
            }
            if let Some(f) = axis(self.nu_b, nu) {
                let y = top + size - ch / 2.0 - f * (size - ch);
                let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/>"#, left - 5.0);
                let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, left - 8.0, y + 4.0);
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">nu_a / Delta31</text>"#,
            left + size / 2.0,
            top + size + 40.0
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">nu_b / Delta31</text>"#,
            top + size / 2.0,
            top + size / 2.0
        );

        // colour bar
        let bx = left + size + 25.0;
        let steps = 64;
        for k in 0..steps {
            let t = k as f64 / (steps - 1) as f64;
            let y = top + size - (k + 1) as f64 * size / steps as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{bx}" y="{y:.2}" width="{bar}" height="{:.2}" fill="{}"/>"#,
                size / steps as f64 + 0.05,
                colour(t)
            );
        }
        let _ = writeln!(s, r#"<rect x="{bx}" y="{top}" width="{bar}" height="{size}" fill="none" stroke="black"/>"#);
        for (t, v) in [(0.0, lo), (0.5, 0.5 * (lo + hi)), (1.0, hi)] {
            let y = top + size - t * size;
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}">{}</text>"#, bx + bar + 4.0, y + 4.0, short(v));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn short(v: f64) -> String {
    // three significant digits are enough on a colour bar
    let full = num(v);
    full.parse::<f64>().map(|x| format!("{x:.3e}")).unwrap_or(full)
}
