//! CSV tables with JSON mirrors, and plain SVG line plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// A table of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
    }

    /// Rows as objects; cells that parse as numbers become numbers, `inf`
    /// and empty cells become strings and null.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(k, v)| (k.clone(), cell_json(v)))
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

fn cell_json(v: &str) -> serde_json::Value {
    if v.is_empty() {
        return serde_json::Value::Null;
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => serde_json::Number::from_f64(x).map_or_else(|| v.into(), serde_json::Value::Number),
        _ => match v {
            "true" => true.into(),
            "false" => false.into(),
            _ => v.into(),
        },
    }
}

/// Shortest round-trip formatting.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes `stem.csv`, plus `stem.json` when asked; returns the paths.
pub fn write_table(dir: &Path, stem: &str, table: &Table, json: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Invalid(format!("cannot create {}: {e}", dir.display())))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    write_file(&csv_path, table.to_csv()?.as_bytes())?;
    let mut out = vec![csv_path];
    if json {
        let p = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&table.to_json()).map_err(|e| Error::Invalid(e.to_string()))?;
        write_file(&p, text.as_bytes())?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    write_file(path, text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}

const W: f64 = 800.0;
const H: f64 = 600.0;
const PAD: f64 = 60.0;

/// 800×600 SVG line plot of the finite points.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="18">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (v, anchor, x, y) in [
        (x0, "start", PAD, H - PAD + 20.0),
        (x1, "end", W - PAD, H - PAD + 20.0),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="12">{}</text>"#,
            fmt_tick(v)
        );
    }
    for (v, y) in [(y0, H - PAD), (y1, PAD + 12.0)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="12">{}</text>"#,
            PAD - 6.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        W / 2.0,
        H - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 20 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    if !pts.is_empty() {
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue"/>"#, sx(x), sy(y));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0) * 1e-3;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn fmt_tick(v: f64) -> String {
    format!("{v:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(&["q", "T", "flag"]);
        t.push(vec![num(-1.0), num(f64::INFINITY), "infinite".into()]);
        t.push(vec![num(0.5), num(0.25), String::new()]);
        assert_eq!(t.to_csv().unwrap(), "q,T,flag\n-1,inf,infinite\n0.5,0.25,\n");
        let j = t.to_json();
        assert_eq!(j[0]["T"], "inf");
        assert_eq!(j[1]["T"], 0.25);
        assert!(j[1]["flag"].is_null());
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, -5.78e-19, 123456.789] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn svg_has_fixed_size() {
        let s = svg_plot("p", "t", "p(t)", &[(0.0, 1.0), (1.0, 0.0), (2.0, f64::NAN)]);
        assert!(s.starts_with("<svg") && s.contains(r#"width="800""#) && s.contains(r#"height="600""#));
        assert_eq!(s.matches("<circle").count(), 2);
    }
}
