//! Deterministic artifact writers. Reports use pretty JSON with
//! alphabetized keys, curves use plain CSV, plots use a fixed-layout SVG;
//! none of them embed timestamps or machine state, so identical runs
//! produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use heavytail::{Error, Result};
use serde_json::Value;

fn write_failed(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))
}

/// Writes the artifact kinds selected on the command line into one
/// output directory and remembers what it wrote.
pub struct Emitter {
    dir: PathBuf,
    emit_json: bool,
    emit_csv: bool,
    emit_svg: bool,
    pub written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, json: bool, csv: bool, svg: bool) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| write_failed(dir, e))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            emit_json: json,
            emit_csv: csv,
            emit_svg: svg,
            written: Vec::new(),
        })
    }

    pub fn csv_enabled(&self) -> bool {
        self.emit_csv
    }

    pub fn svg_enabled(&self) -> bool {
        self.emit_svg
    }

    fn put(&mut self, name: &str, bytes: String) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| write_failed(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, report: &Value) -> Result<()> {
        if !self.emit_json {
            return Ok(());
        }
        let mut text =
            serde_json::to_string_pretty(report).expect("report values are tree-shaped");
        text.push('\n');
        self.put(name, text)
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: &[Vec<f64>]) -> Result<()> {
        if !self.emit_csv {
            return Ok(());
        }
        let mut text = String::with_capacity(16 * rows.len());
        text.push_str(header);
        text.push('\n');
        for row in rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    text.push(',');
                }
                let _ = write!(text, "{v}");
            }
            text.push('\n');
        }
        self.put(name, text)
    }

    /// Log-log curve plot. Points with a nonpositive coordinate cannot be
    /// placed on log axes and are dropped from the drawing (the CSVs keep
    /// them).
    pub fn svg(&mut self, name: &str, title: &str, series: &[(&str, &[(f64, f64)])]) -> Result<()> {
        if !self.emit_svg {
            return Ok(());
        }
        self.put(name, render_svg(title, series))
    }
}

const W: f64 = 900.0;
const H: f64 = 540.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn render_svg(title: &str, series: &[(&str, &[(f64, f64)])]) -> String {
    let plottable: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|&(x, y)| (x.log10(), y.log10()))
        .collect();

    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"13\">\n"
    );
    let _ = write!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n");
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        title
    );

    if plottable.is_empty() {
        let _ = write!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">no positive points to plot</text>\n",
            W / 2.0,
            H / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }

    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &plottable {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    // degenerate spans still need a finite viewport
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (W - MARGIN_L - MARGIN_R);
    let py = |y: f64| H - MARGIN_B - (y - y0) / (y1 - y0) * (H - MARGIN_T - MARGIN_B);

    let _ = write!(
        s,
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MARGIN_B,
        W - MARGIN_R,
        H - MARGIN_B
    );
    let _ = write!(
        s,
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MARGIN_B
    );
    let _ = write!(
        s,
        "<text x=\"{MARGIN_L}\" y=\"{}\">1e{:.2}</text>\n",
        H - MARGIN_B + 20.0,
        x0
    );
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">1e{:.2}</text>\n",
        W - MARGIN_R,
        H - MARGIN_B + 20.0,
        x1
    );
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">1e{:.2}</text>\n",
        MARGIN_L - 6.0,
        H - MARGIN_B,
        y0
    );
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">1e{:.2}</text>\n",
        MARGIN_L - 6.0,
        MARGIN_T + 10.0,
        y1
    );

    for (k, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut poly = String::new();
        for &(x, y) in pts.iter() {
            if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
                continue;
            }
            let _ = write!(poly, "{:.2},{:.2} ", px(x.log10()), py(y.log10()));
        }
        if !poly.is_empty() {
            let _ = write!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                poly.trim_end()
            );
        }
        let _ = write!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{label}</text>\n",
            W - MARGIN_R - 180.0,
            MARGIN_T + 18.0 * (k as f64 + 1.0),
        );
    }
    s.push_str("</svg>\n");
    s
}
