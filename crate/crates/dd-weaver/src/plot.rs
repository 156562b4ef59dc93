//! Minimal native SVG line plots for sweep results: one polyline per strategy
//! over the repetition axis, with axes, ticks, and a legend.

use crate::experiments::SweepResult;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 32.0;
const MARGIN_B: f64 = 48.0;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders one experiment's strategy series as an SVG document.
pub fn sweeps_to_svg(title: &str, sweeps: &[SweepResult]) -> String {
    let ks: Vec<u32> = sweeps.first().map(|s| s.ks.clone()).unwrap_or_default();
    let (k_min, k_max) = match (ks.first(), ks.last()) {
        (Some(&a), Some(&b)) if b > a => (a as f64, b as f64),
        (Some(&a), _) => (a as f64 - 0.5, a as f64 + 0.5),
        _ => (0.0, 1.0),
    };
    let mut p_min = f64::INFINITY;
    let mut p_max = f64::NEG_INFINITY;
    for s in sweeps {
        for &p in &s.p0 {
            p_min = p_min.min(p);
            p_max = p_max.max(p);
        }
    }
    if !p_min.is_finite() {
        p_min = 0.0;
        p_max = 1.0;
    }
    let pad = ((p_max - p_min) * 0.08).max(0.01);
    let (y_lo, y_hi) = ((p_min - pad).max(0.0), (p_max + pad).min(1.02));

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |k: f64| MARGIN_L + (k - k_min) / (k_max - k_min) * plot_w;
    let y_of = |p: f64| MARGIN_T + (y_hi - p) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        xml_escape(title)
    );

    // Axes.
    let _ = write!(
        svg,
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h,
        MARGIN_T + plot_h
    );
    for &k in &ks {
        let x = x_of(k as f64);
        let _ = write!(
            svg,
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{k}</text>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0,
            MARGIN_T + plot_h + 20.0
        );
    }
    for i in 0..=4 {
        let p = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let y = y_of(p);
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{p:.3}</text>\n",
            MARGIN_L - 5.0,
            MARGIN_L - 9.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">repetitions</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">P(|0&gt;)</text>",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    );

    // Series.
    for (i, sweep) in sweeps.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = sweep
            .ks
            .iter()
            .zip(&sweep.p0)
            .map(|(&k, &p)| format!("{:.2},{:.2}", x_of(k as f64), y_of(p)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.join(" ")
        );
        for (&k, &p) in sweep.ks.iter().zip(&sweep.p0) {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>",
                x_of(k as f64),
                y_of(p)
            );
        }
        let ly = MARGIN_T + 16.0 * i as f64 + 8.0;
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN_R + 12.0,
            WIDTH - MARGIN_R + 36.0,
            WIDTH - MARGIN_R + 42.0,
            ly + 4.0,
            xml_escape(&sweep.strategy)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{SweepMeta, SweepResult};
    use crate::sim::Toggles;

    fn sample_sweep(strategy: &str, p0: Vec<f64>) -> SweepResult {
        SweepResult {
            experiment: "demo".into(),
            strategy: strategy.into(),
            ks: vec![10, 20, 30],
            stderr: vec![0.0; p0.len()],
            p0,
            meta: SweepMeta {
                mapping: vec![0, 1, 2],
                samples: 1,
                seed: 0,
                toggles: Toggles::all_off(),
                noise_step_ns: 150,
                device: String::new(),
            },
        }
    }

    #[test]
    fn svg_contains_polylines_and_legend() {
        let sweeps = vec![
            sample_sweep("baseline", vec![0.9, 0.8, 0.7]),
            sample_sweep("single", vec![0.95, 0.92, 0.9]),
        ];
        let svg = sweeps_to_svg("demo", &sweeps);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("baseline"));
        assert!(svg.contains("single"));
    }
}
