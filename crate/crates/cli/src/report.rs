//! CSV artifacts with embedded provenance and minimal static SVG plots.
//!
//! Every artifact starts with `#`-prefixed provenance lines carrying the
//! seed, the config hash and the tool version, so a result file can always
//! be traced back to the exact run that produced it. Writers are plain and
//! deterministic: identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Provenance stamp shared by all artifacts of one preset invocation.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: u64,
    pub preset: String,
}

impl Provenance {
    fn comment_lines(&self) -> String {
        format!(
            "# generator = skan {}\n# preset = {}\n# seed = {}\n# config_hash = {:016x}\n",
            env!("CARGO_PKG_VERSION"),
            self.preset,
            self.seed,
            self.config_hash,
        )
    }
}

/// Buffered CSV builder; call [`CsvFile::finish`] to write the file.
pub struct CsvFile {
    path: PathBuf,
    buffer: String,
}

impl CsvFile {
    pub fn new(dir: &Path, name: &str, provenance: &Provenance, header: &str) -> CsvFile {
        let mut buffer = provenance.comment_lines();
        buffer.push_str(header);
        buffer.push('\n');
        CsvFile { path: dir.join(name), buffer }
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        for (i, field) in fields.iter().enumerate() {
            if i > 0 {
                self.buffer.push(',');
            }
            let _ = write!(self.buffer, "{field}");
        }
        self.buffer.push('\n');
    }

    pub fn finish(self) -> io::Result<PathBuf> {
        fs::write(&self.path, self.buffer.as_bytes())?;
        Ok(self.path)
    }
}

/// One plotted line.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 56.0;

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.abs() >= 1000.0 || v.fract().abs() < 1e-9 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

/// Render a static line/scatter plot straight from in-memory series. The
/// CSVs remain the contract; plots are a convenience rendering of them.
pub fn line_plot(
    dir: &Path,
    name: &str,
    provenance: &Provenance,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> io::Result<PathBuf> {
    let points: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x_lo, mut x_hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
    let (mut y_lo, mut y_hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
    if points.is_empty() {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    if x_hi == x_lo {
        x_hi = x_lo + 1.0;
    }
    if y_hi == y_lo {
        y_hi = y_lo + 1.0;
    }
    let y_pad = (y_hi - y_lo) * 0.06;
    let (y_lo, y_hi) = (y_lo - y_pad, y_hi + y_pad);
    let sx = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let sy = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        "<!-- generator = skan {}; preset = {}; seed = {}; config_hash = {:016x} -->",
        env!("CARGO_PKG_VERSION"),
        provenance.preset,
        provenance.seed,
        provenance.config_hash
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        title
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_L}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{:.1}" stroke="black"/>"#,
        HEIGHT - MARGIN_B
    );
    for tick in nice_ticks(x_lo, x_hi) {
        let x = sx(tick);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 18.0,
            fmt_tick(tick)
        );
    }
    for tick in nice_ticks(y_lo, y_hi) {
        let y = sy(tick);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{MARGIN_L}" y2="{y:.1}" stroke="black"/>"#,
            MARGIN_L - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_L - 8.0,
            y + 4.0,
            fmt_tick(tick)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 14.0,
        x_label
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        y_label
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.points.len() > 1 {
            let mut d = String::new();
            for (j, &(x, y)) in s.points.iter().enumerate() {
                let _ = write!(d, "{}{:.1},{:.1}", if j == 0 { "M" } else { " L" }, sx(x), sy(y));
            }
            let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.6"/>"#);
        }
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="2.6" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="12" height="4" fill="{color}"/>"#,
            WIDTH - MARGIN_R - 150.0,
            ly - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
            WIDTH - MARGIN_R - 132.0,
            s.name
        );
    }
    let _ = writeln!(svg, "</svg>");
    let path = dir.join(name);
    fs::write(&path, svg.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provenance() -> Provenance {
        Provenance { seed: 7, config_hash: 0xabcd, preset: "test".into() }
    }

    #[test]
    fn csv_has_provenance_and_rows() {
        let dir = std::env::temp_dir();
        let mut csv = CsvFile::new(&dir, "report_test.csv", &provenance(), "a,b");
        csv.row(&[&1, &2.5]);
        let path = csv.finish().unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# generator = skan "));
        assert!(text.contains("# seed = 7\n"));
        assert!(text.contains("# config_hash = 000000000000abcd\n"));
        assert!(text.ends_with("a,b\n1,2.5\n"));
        let _ = fs::remove_file(path);
    }

    #[test]
    fn plot_is_valid_svg_with_series() {
        let dir = std::env::temp_dir();
        let series = [Series {
            name: "x".into(),
            points: vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)],
        }];
        let path = line_plot(&dir, "report_test.svg", &provenance(), "t", "x", "y", &series)
            .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("<path"));
        assert!(text.contains("config_hash = 000000000000abcd"));
        let _ = fs::remove_file(path);
    }
}
