//! Merged comparison tables and line plots over the runs in one directory.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::run::SUMMARY_FILE;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Micro,
    Macro,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Micro, Metric::Macro];

    pub fn column(self) -> &'static str {
        match self {
            Self::Micro => "micro_f1",
            Self::Macro => "macro_f1",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Self::Micro => "Micro F1",
            Self::Macro => "Macro F1",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub strategy: String,
    /// `(num_labeled, micro, macro)` in file order.
    pub points: Vec<(usize, f64, f64)>,
}

impl Curve {
    fn value(&self, num_labeled: usize, metric: Metric) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.0 == num_labeled)
            .map(|p| match metric {
                Metric::Micro => p.1,
                Metric::Macro => p.2,
            })
    }
}

fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

pub fn read_summary(path: &Path) -> Result<Vec<(usize, f64, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| data_err(path, e))?;
    let headers = reader.headers().map_err(|e| data_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(path, format!("missing column `{name}`")))
    };
    let (n, mi, ma) = (col("num_labeled")?, col("micro_f1")?, col("macro_f1")?);
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| data_err(path, e))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = field(n).parse::<usize>().map_err(|e| data_err(path, e))?;
        let micro = field(mi).parse::<f64>().map_err(|e| data_err(path, e))?;
        let macro_ = field(ma).parse::<f64>().map_err(|e| data_err(path, e))?;
        points.push((num, micro, macro_));
    }
    Ok(points)
}

/// Every subdirectory with a summary file, sorted by name.
pub fn collect(dir: &Path) -> Result<Vec<Curve>> {
    let entries = fs::read_dir(dir).map_err(|e| data_err(dir, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(SUMMARY_FILE).is_file())
        .collect();
    dirs.sort();
    let curves: Vec<Curve> = dirs
        .iter()
        .map(|d| {
            Ok(Curve {
                strategy: d
                    .file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned(),
                points: read_summary(&d.join(SUMMARY_FILE))?,
            })
        })
        .collect::<Result<_>>()?;
    if curves.is_empty() {
        return Err(data_err(dir, "no runs found"));
    }
    Ok(curves)
}

pub fn merged_csv(curves: &[Curve], metric: Metric) -> String {
    let xs: BTreeSet<usize> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .collect();
    let mut out = String::from("num_labeled");
    for c in curves {
        let name = if c.strategy.contains([',', '"']) {
            format!("\"{}\"", c.strategy.replace('"', "\"\""))
        } else {
            c.strategy.clone()
        };
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    for x in xs {
        let _ = write!(out, "{x}");
        for c in curves {
            out.push(',');
            if let Some(v) = c.value(x, metric) {
                let _ = write!(out, "{v:.6}");
            }
        }
        out.push('\n');
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn line_plot(curves: &[Curve], metric: Metric) -> String {
    let xs: Vec<usize> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .collect();
    let ys: Vec<f64> = curves
        .iter()
        .flat_map(|c| {
            c.points
                .iter()
                .map(move |p| c.value(p.0, metric).unwrap_or(0.0))
        })
        .collect();
    let x_min = xs.iter().copied().min().unwrap_or(0) as f64;
    let mut x_max = xs.iter().copied().max().unwrap_or(1) as f64;
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let mut y_min = (ys.iter().copied().fold(f64::INFINITY, f64::min) * 10.0).floor() / 10.0;
    let mut y_max = (ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) * 10.0).ceil() / 10.0;
    if !y_min.is_finite() || !y_max.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if y_max - y_min < 0.1 {
        y_max = y_min + 0.1;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="13">{} vs labeled samples</text>"#,
        LEFT + plot_w / 2.0,
        metric.title()
    );

    let y_ticks = ((y_max - y_min) / 0.1).round() as usize;
    for i in 0..=y_ticks {
        let v = y_min + i as f64 * (y_max - y_min) / y_ticks as f64;
        let y = py(v);
        let _ = writeln!(
            s,
            "<line x1=\"{LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let x_ticks: BTreeSet<usize> = xs.iter().copied().collect();
    let stride = x_ticks.len().div_ceil(10).max(1);
    for x in x_ticks.iter().step_by(stride) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            px(*x as f64),
            TOP + plot_h + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">labeled samples</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c
            .points
            .iter()
            .filter_map(|p| {
                c.value(p.0, metric)
                    .map(|v| format!("{:.2},{:.2}", px(p.0 as f64), py(v)))
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 10.0 + i as f64 * 18.0;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&c.strategy)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `report_<metric>.csv` and `report_<metric>.svg` into `dir` and
/// returns the written paths.
pub fn report(dir: &Path) -> Result<Vec<PathBuf>> {
    let curves = collect(dir)?;
    let mut written = Vec::new();
    for metric in Metric::ALL {
        for (ext, body) in [
            ("csv", merged_csv(&curves, metric)),
            ("svg", line_plot(&curves, metric)),
        ] {
            let path = dir.join(format!("report_{}.{ext}", metric.column()));
            fs::write(&path, body)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(name: &str, pts: &[(usize, f64)]) -> Curve {
        Curve {
            strategy: name.into(),
            points: pts.iter().map(|&(n, v)| (n, v, v / 2.0)).collect(),
        }
    }

    #[test]
    fn union_of_budgets_leaves_gaps_empty() {
        let a = curve("A", &[(20, 0.5), (40, 0.6)]);
        let b = curve("B", &[(20, 0.4)]);
        assert_eq!(
            merged_csv(&[a, b], Metric::Micro),
            "num_labeled,A,B\n20,0.500000,0.400000\n40,0.600000,\n"
        );
    }

    #[test]
    fn plot_handles_flat_single_point() {
        let svg = line_plot(&[curve("x<y", &[(20, 1.0)])], Metric::Macro);
        assert!(svg.starts_with("<svg") && svg.contains("x&lt;y"));
        assert!(!svg.contains("NaN"));
    }
}
