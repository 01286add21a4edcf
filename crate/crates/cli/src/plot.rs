//! Plot data and minimal SVG scatter plots for scan reports.
//!
//! Every fit `log_<y>_vs_log_<x>` of a report becomes one figure: the raw
//! `(x, y)` rows as points on log-log axes and the fitted line. Reports
//! without fits get a single figure of their second column against the
//! first.

use std::fmt::Write as _;

use barylab::lab::{Fit, ScanReport, NOISE_FLOOR};

pub struct Figure {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub log: bool,
    pub fit: Option<Fit>,
}

pub fn figures(report: &ScanReport) -> Vec<Figure> {
    let mut out = Vec::new();
    for (name, fit) in &report.fits {
        let Some((y, x)) = name
            .strip_prefix("log_")
            .and_then(|r| r.split_once("_vs_log_"))
        else {
            continue;
        };
        let (Some(xs), Some(ys)) = (report.column(x), report.column(y)) else {
            continue;
        };
        out.push(Figure {
            name: name.clone(),
            x_label: x.to_string(),
            y_label: y.to_string(),
            points: xs.into_iter().zip(ys).collect(),
            log: true,
            fit: Some(*fit),
        });
    }
    if out.is_empty() && report.columns.len() >= 2 {
        let (x, y) = (&report.columns[0], &report.columns[1]);
        let points: Vec<(f64, f64)> = report
            .column(x)
            .unwrap_or_default()
            .into_iter()
            .zip(report.column(y).unwrap_or_default())
            .collect();
        out.push(Figure {
            name: format!("{y}_vs_{x}"),
            x_label: x.clone(),
            y_label: y.clone(),
            points,
            log: false,
            fit: None,
        });
    }
    out
}

impl Figure {
    /// `x,y,fitted,config_hash,seed` rows; `fitted` is empty without a
    /// fit or for nonpositive `x`.
    pub fn to_csv(&self, hash: &str, seed: u64) -> String {
        let mut s = format!(
            "{},{},fitted,config_hash,seed\n",
            self.x_label, self.y_label
        );
        for &(x, y) in &self.points {
            let fitted = match self.fit {
                Some(f) if x > 0.0 => format!("{:?}", (f.intercept + f.slope * x.ln()).exp()),
                _ => String::new(),
            };
            let _ = writeln!(s, "{x:?},{y:?},{fitted},{hash},{seed}");
        }
        s
    }

    pub fn to_svg(&self) -> String {
        const W: f64 = 480.0;
        const H: f64 = 360.0;
        const M: f64 = 50.0;
        let tf = |v: f64| if self.log { v.ln() } else { v };
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|(x, y)| {
                x.is_finite()
                    && y.is_finite()
                    && (!self.log || (*x >= NOISE_FLOOR && *y >= NOISE_FLOOR))
            })
            .map(|&(x, y)| (tf(x), tf(y)))
            .collect();
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
             <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
        );
        let axis_x = if self.log {
            format!("ln {}", self.x_label)
        } else {
            self.x_label.clone()
        };
        let axis_y = if self.log {
            format!("ln {}", self.y_label)
        } else {
            self.y_label.clone()
        };
        let _ = writeln!(
            svg,
            "<line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
             <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n\
             <text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{}</text>",
            H - M,
            W - M,
            H - M,
            H - M,
            W / 2.0,
            H - 12.0,
            escape(&axis_x),
            H / 2.0,
            H / 2.0,
            escape(&axis_y),
        );
        if pts.is_empty() {
            svg.push_str("</svg>\n");
            return svg;
        }
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in &pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 - x0 <= 0.0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 <= 0.0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
        let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
        let _ = writeln!(
            svg,
            "<text x=\"{M}\" y=\"{}\" font-size=\"10\">{x0:.3}</text>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{x1:.3}</text>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{y0:.3}</text>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{y1:.3}</text>",
            H - M + 14.0,
            W - M,
            H - M + 14.0,
            M - 4.0,
            H - M,
            M - 4.0,
            M + 4.0,
        );
        for &(x, y) in &pts {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>",
                px(x),
                py(y)
            );
        }
        if let Some(f) = self.fit {
            let line = |x: f64| f.intercept + f.slope * x;
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"firebrick\"/>\n\
                 <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">slope {:.4}</text>",
                px(x0),
                py(line(x0)),
                px(x1),
                py(line(x1)),
                W - M,
                M - 10.0,
                f.slope,
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
