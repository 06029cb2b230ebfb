//! Self-contained SVG line plots: axes, ticks, legend, per-series styles.
//! No external plotting process is invoked and output is byte-deterministic.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];
const DASHES: [&str; 8] = ["", "6,3", "2,2", "8,3,2,3", "4,4", "1,3", "10,4", "3,6"];

/// One polyline to draw.
pub struct Series<'a> {
    pub label: String,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Cap on rendered points per series; longer series are thinned evenly.
const MAX_POINTS: usize = 2000;

fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    if !(max > min) {
        return vec![min];
    }
    let raw = (max - min) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    } * mag;
    let first = (min / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut v = first;
    while v <= max + 0.5 * step {
        // snap tiny float residue to zero for clean labels
        ticks.push(if v.abs() < step * 1e-9 { 0.0 } else { v });
        v += step;
    }
    ticks
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

/// Render a titled line plot into an SVG string.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for (&x, &y) in s.x.iter().zip(s.y) {
            if x.is_finite() && y.is_finite() {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
                ymin = ymin.min(y);
                ymax = ymax.max(y);
            }
        }
    }
    if !xmin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if ymax == ymin {
        let pad = ymin.abs().max(1.0) * 0.1;
        ymin -= pad;
        ymax += pad;
    } else {
        let pad = (ymax - ymin) * 0.05;
        ymin -= pad;
        ymax += pad;
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |x: f64| MARGIN_L + (x - xmin) / (xmax - xmin) * pw;
    let sy = move |y: f64| MARGIN_T + ph - (y - ymin) / (ymax - ymin) * ph;

    let mut svg = String::with_capacity(64 * 1024);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // axes frame
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" \
         stroke=\"#333\" stroke-width=\"1\"/>\n"
    ));
    for tx in nice_ticks(xmin, xmax, 8) {
        let px = sx(tx);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{0:.2}\" x2=\"{px:.2}\" y2=\"{1:.2}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n\
             <text x=\"{px:.2}\" y=\"{2:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{3}</text>\n",
            MARGIN_T,
            MARGIN_T + ph,
            MARGIN_T + ph + 16.0,
            fmt_tick(tx)
        ));
    }
    for ty in nice_ticks(ymin, ymax, 7) {
        let py = sy(ty);
        svg.push_str(&format!(
            "<line x1=\"{0:.2}\" y1=\"{py:.2}\" x2=\"{1:.2}\" y2=\"{py:.2}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n\
             <text x=\"{2:.2}\" y=\"{3:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{4}</text>\n",
            MARGIN_L,
            MARGIN_L + pw,
            MARGIN_L - 6.0,
            py + 4.0,
            fmt_tick(ty)
        ));
    }
    // axis labels
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(y_label)
    ));
    // polylines
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let dash = DASHES[idx % DASHES.len()];
        let stride = (s.x.len() / MAX_POINTS).max(1);
        let mut points = String::new();
        for k in (0..s.x.len()).step_by(stride) {
            if s.x[k].is_finite() && s.y[k].is_finite() {
                points.push_str(&format!("{:.2},{:.2} ", sx(s.x[k]), sy(s.y[k])));
            }
        }
        if let Some(&last_x) = s.x.last() {
            if (s.x.len() - 1) % stride != 0 && last_x.is_finite() {
                points.push_str(&format!("{:.2},{:.2} ", sx(last_x), sy(*s.y.last().unwrap())));
            }
        }
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash_attr} \
             points=\"{}\"/>\n",
            points.trim_end()
        ));
    }
    // legend
    let lx = MARGIN_L + 10.0;
    let mut ly = MARGIN_T + 14.0;
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{0:.1}\" x2=\"{1:.1}\" y2=\"{0:.1}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n\
             <text x=\"{2:.1}\" y=\"{3:.1}\" font-family=\"sans-serif\" font-size=\"12\">{4}</text>\n",
            ly - 4.0,
            lx + 26.0,
            lx + 32.0,
            ly,
            escape(&s.label)
        ));
        ly += 16.0;
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_svg() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.0, 0.5, 2.0];
        let svg = line_plot(
            "demo",
            "t (s)",
            "R (km)",
            &[Series {
                label: "attacker 1".into(),
                x: &x,
                y: &y,
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("attacker 1"));
    }

    #[test]
    fn constant_series_and_empty_input_do_not_panic() {
        let x = [0.0, 1.0];
        let y = [2.0, 2.0];
        let svg = line_plot(
            "flat",
            "t",
            "v",
            &[Series {
                label: "flat".into(),
                x: &x,
                y: &y,
            }],
        );
        assert!(svg.contains("polyline"));
        let empty = line_plot("none", "t", "v", &[]);
        assert!(empty.starts_with("<svg"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let x: Vec<f64> = (0..5000).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 3.0).sin()).collect();
        let s = [Series {
            label: "s".into(),
            x: &x,
            y: &y,
        }];
        assert_eq!(line_plot("d", "x", "y", &s), line_plot("d", "x", "y", &s));
    }
}
