//! File formats: measure CSV, JSON specs and sequence files, SVG charts.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`) so that equal
//! values always produce equal bytes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::OperatorSpec;
use crate::spectra::{AtomicMeasure, GriddedMeasure, SpectralMeasure};
use crate::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), fmt_f64)
}

/// Writes a CSV with the given header; every row must match its length.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `x,weight` rows for atomic measures, `x,density` rows for gridded ones.
pub fn write_measure_csv(path: &Path, mu: &SpectralMeasure) -> Result<()> {
    match mu {
        SpectralMeasure::Atomic(a) => {
            write_csv(path, &["x", "weight"], a.atoms().map(|(x, w)| vec![fmt_f64(x), fmt_f64(w)]))
        }
        SpectralMeasure::Gridded(g) => write_csv(
            path,
            &["x", "density"],
            g.nodes().zip(g.density()).map(|(x, &d)| vec![fmt_f64(x), fmt_f64(d)]),
        ),
    }
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidMeasure(format!("line {line}: `{field}` is not a number")))
}

/// Reads a measure CSV written by [`write_measure_csv`]. Gridded files must
/// have equally spaced nodes; their density is renormalized.
pub fn read_measure_csv(path: &Path) -> Result<SpectralMeasure> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::InvalidMeasure(format!("line {}: expected 2 fields", i + 2)));
        }
        xs.push(parse_number(&rec[0], i + 2)?);
        ys.push(parse_number(&rec[1], i + 2)?);
    }
    match header.get(1).map(String::as_str) {
        Some("weight") => Ok(SpectralMeasure::Atomic(AtomicMeasure::new(xs.into_iter().zip(ys))?)),
        Some("density") => {
            if xs.len() < 2 {
                return Err(Error::InvalidMeasure("a gridded measure needs at least two nodes".into()));
            }
            let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
            let uneven = xs.iter().enumerate().any(|(i, &x)| (x - (xs[0] + step * i as f64)).abs() > 1e-9 * step.abs().max(1.0));
            if !(step > 0.0) || uneven {
                return Err(Error::InvalidMeasure("gridded nodes must be increasing and equally spaced".into()));
            }
            Ok(SpectralMeasure::Gridded(GriddedMeasure::normalized(xs[0], step, ys)?))
        }
        _ => Err(Error::InvalidMeasure(format!("unrecognized header {header:?}; expected x,weight or x,density"))),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// A JSON array of operator specs.
pub fn read_specs(path: &Path) -> Result<Vec<OperatorSpec>> {
    read_json(path)
}

/// Tokens, positions and a sequence of token labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub vocab: Vec<OperatorSpec>,
    pub positions: Vec<OperatorSpec>,
    pub sequence: Vec<String>,
    #[serde(default)]
    pub symmetrize_positions: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = HEIGHT - MARGIN,
        x2 = WIDTH - MARGIN
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axis_labels(s: &mut String, lo: f64, hi: f64) {
    let y = HEIGHT - MARGIN + 16.0;
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{y}" font-family="sans-serif" font-size="11">{lo:.3}</text>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="end">{hi:.3}</text>"#,
        WIDTH - MARGIN
    );
}

/// Histogram of an atomic measure (mass per bin) or the curve of a gridded one.
pub fn measure_svg(mu: &SpectralMeasure, title: &str) -> String {
    let (lo, hi) = mu.support();
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.5 * MARGIN;
    let base = HEIGHT - MARGIN;
    let mut s = svg_open(title);
    match mu {
        SpectralMeasure::Atomic(a) => {
            const BINS: usize = 50;
            let mut mass = [0.0; BINS];
            for (x, w) in a.atoms() {
                let b = (((x - lo) / (hi - lo)) * BINS as f64).floor().clamp(0.0, (BINS - 1) as f64) as usize;
                mass[b] += w;
            }
            let top = mass.iter().copied().fold(0.0, f64::max);
            let bw = plot_w / BINS as f64;
            for (b, &m) in mass.iter().enumerate() {
                if m > 0.0 {
                    let h = plot_h * m / top;
                    let _ = writeln!(
                        s,
                        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4a7ab5"/>"##,
                        MARGIN + bw * b as f64,
                        base - h,
                        bw * 0.9,
                        h
                    );
                }
            }
        }
        SpectralMeasure::Gridded(g) => {
            let top = g.density().iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let pts: Vec<String> = g
                .nodes()
                .zip(g.density())
                .map(|(x, &d)| format!("{:.2},{:.2}", MARGIN + plot_w * (x - lo) / (hi - lo), base - plot_h * d / top))
                .collect();
            let _ = writeln!(s, r##"<polyline fill="none" stroke="#4a7ab5" points="{}"/>"##, pts.join(" "));
        }
    }
    axis_labels(&mut s, lo, hi);
    s.push_str("</svg>\n");
    s
}

/// Line chart of several series over shared x values; NaN points are skipped.
pub fn line_chart_svg(xs: &[f64], series: &[(&str, Vec<f64>)], title: &str) -> String {
    const COLORS: [&str; 4] = ["#4a7ab5", "#c0504d", "#9bbb59", "#8064a2"];
    let finite = |v: &f64| v.is_finite();
    let (x0, x1) = xs.iter().filter(|v| finite(v)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let ys = series.iter().flat_map(|(_, v)| v.iter()).filter(|v| finite(v));
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let span = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
    let ((x0, x1), (y0, y1)) = (span(x0, x1), span(y0, y1));
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.5 * MARGIN;
    let base = HEIGHT - MARGIN;
    let mut s = svg_open(title);
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", MARGIN + plot_w * (x - x0) / (x1 - x0), base - plot_h * (y - y0) / (y1 - y0)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            40.0 + 14.0 * k as f64,
            escape(name)
        );
    }
    axis_labels(&mut s, x0, x1);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let a = SpectralMeasure::atomic([(0.1, 0.3), (1.0 / 3.0, 0.7)]).unwrap();
        write_measure_csv(&p, &a).unwrap();
        assert_eq!(read_measure_csv(&p).unwrap(), a);
        let g = SpectralMeasure::semicircle(1.0, 101).unwrap();
        write_measure_csv(&p, &g).unwrap();
        let back = read_measure_csv(&p).unwrap();
        assert!(crate::spectra::measure_distance(&g, &back).wasserstein1 < 1e-12);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("x,density\n-2.0000000000000000e0,"));
    }

    #[test]
    fn bad_measure_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "x,weight\n0,0.5\n1,0.2\n").unwrap();
        assert!(matches!(read_measure_csv(&p), Err(Error::InvalidMeasure(_))));
        std::fs::write(&p, "x,density\n0,1\n0.5,1\n2,1\n").unwrap();
        assert!(matches!(read_measure_csv(&p), Err(Error::InvalidMeasure(_))));
        std::fs::write(&p, "a,b\n0,1\n").unwrap();
        assert!(read_measure_csv(&p).is_err());
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let a = SpectralMeasure::atomic([(0.0, 0.8), (1.0, 0.2)]).unwrap();
        let s = measure_svg(&a, "chases <X>");
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("&lt;X&gt;"));
        let l = line_chart_svg(&[0.0, 1.0, 2.0], &[("w1", vec![0.0, f64::NAN, 0.1])], "depth");
        assert_eq!(l.matches("<polyline").count(), 1);
    }
}
