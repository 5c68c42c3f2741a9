//! CSV, JSON and SVG output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{BenchRecord, BenchStatus, Profile};

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: record {row}: {reason}", path.display())]
    Parse { path: PathBuf, row: usize, reason: String },
}

/// Column order of record tables.
pub const RECORD_COLUMNS: [&str; 11] = [
    "name",
    "nvar",
    "f",
    "grad_norm",
    "iter",
    "neval_f",
    "neval_grad",
    "neval_hvp",
    "elapsed_seconds",
    "status",
    "solver",
];

/// Serde helpers writing finite floats as numbers and the rest as strings.
pub(crate) mod float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&super::format_float(*v))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => super::parse_float(&s).ok_or_else(|| {
                serde::de::Error::custom(format!("`{s}` is not a number"))
            }),
        }
    }
}

/// 17 significant digits, enough to round-trip any double.
pub(crate) fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

pub(crate) fn parse_float(s: &str) -> Option<f64> {
    match s.trim() {
        "NaN" | "nan" => Some(f64::NAN),
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

fn record_row(r: &BenchRecord) -> [String; 11] {
    [
        r.name.clone(),
        r.nvar.to_string(),
        format_float(r.f),
        format_float(r.grad_norm),
        r.iter.to_string(),
        r.neval_f.to_string(),
        r.neval_grad.to_string(),
        r.neval_hvp.to_string(),
        format_float(r.elapsed_seconds),
        r.status.as_str().to_owned(),
        r.solver.clone(),
    ]
}

/// Renders records as CSV text with a header row.
pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_COLUMNS).expect("in-memory write");
    for r in records {
        w.write_record(record_row(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> EmitError + '_ {
    move |source| EmitError::Io { path: path.to_owned(), source }
}

pub fn write_records_csv(records: &[BenchRecord], path: &Path) -> Result<(), EmitError> {
    fs::write(path, records_to_csv(records)).map_err(io_err(path))
}

pub fn read_records_csv(path: &Path) -> Result<Vec<BenchRecord>, EmitError> {
    let mut rd = csv::Reader::from_path(path)
        .map_err(|source| EmitError::Csv { path: path.to_owned(), source })?;
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|source| EmitError::Csv { path: path.to_owned(), source })?;
        let bad = |reason: String| EmitError::Parse { path: path.to_owned(), row: row + 1, reason };
        if rec.len() != RECORD_COLUMNS.len() {
            return Err(bad(format!("{} fields, expected {}", rec.len(), RECORD_COLUMNS.len())));
        }
        let int = |i: usize| rec[i].parse::<usize>().map_err(|e| bad(format!("{}: {e}", RECORD_COLUMNS[i])));
        let float = |i: usize| parse_float(&rec[i]).ok_or_else(|| bad(format!("{}: `{}`", RECORD_COLUMNS[i], &rec[i])));
        out.push(BenchRecord {
            name: rec[0].to_owned(),
            nvar: int(1)?,
            f: float(2)?,
            grad_norm: float(3)?,
            iter: int(4)?,
            neval_f: int(5)?,
            neval_grad: int(6)?,
            neval_hvp: int(7)?,
            elapsed_seconds: float(8)?,
            status: BenchStatus::parse(&rec[9]).ok_or_else(|| bad(format!("status `{}`", &rec[9])))?,
            solver: rec[10].to_owned(),
        });
    }
    Ok(out)
}

pub fn write_records_json(records: &[BenchRecord], path: &Path) -> Result<(), EmitError> {
    let text = serde_json::to_string_pretty(records)
        .map_err(|source| EmitError::Json { path: path.to_owned(), source })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_records_json(path: &Path) -> Result<Vec<BenchRecord>, EmitError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| EmitError::Json { path: path.to_owned(), source })
}

/// One `solver,tau,rho` row per breakpoint.
pub fn write_curves_csv(profile: &Profile, path: &Path) -> Result<(), EmitError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["solver", "tau", "rho"]).expect("in-memory write");
    for c in &profile.curves {
        for (t, r) in c.taus.iter().zip(&c.rho) {
            w.write_record([c.solver.clone(), format_float(*t), format_float(*r)])
                .expect("in-memory write");
        }
    }
    fs::write(path, w.into_inner().expect("in-memory flush")).map_err(io_err(path))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders the profile as a static step plot over `log₂ τ`. Each curve stops
/// at its largest finite ratio.
pub fn render_svg(profile: &Profile) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 60.0, 150.0, 30.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let max_log = profile
        .curves
        .iter()
        .flat_map(|c| c.taus.iter())
        .map(|t| t.log2())
        .fold(0.0_f64, f64::max)
        .max(1.0)
        .ceil();
    let sx = |lt: f64| left + pw * lt / max_log;
    let sy = |r: f64| top + ph * (1.0 - r);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle">performance profile: {}</text>"#,
        left + pw / 2.0,
        profile.metric
    );
    let _ = writeln!(
        s,
        r#"<g stroke="black" fill="none"><line x1="{left}" y1="{}" x2="{}" y2="{}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{}"/></g>"#,
        top + ph,
        left + pw,
        top + ph,
        top + ph
    );
    for i in 0..=max_log as usize {
        let x = sx(i as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{i}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 18.0
        );
    }
    for i in 0..=4 {
        let r = i as f64 / 4.0;
        let y = sy(r);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{r:.2}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">log2(tau)</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">fraction of problems</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (ci, c) in profile.curves.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        let mut pts = Vec::new();
        let mut prev = 0.0;
        for (t, r) in c.taus.iter().zip(&c.rho) {
            let x = sx(t.log2());
            pts.push(format!("{x:.2},{:.2}", sy(prev)));
            pts.push(format!("{x:.2},{:.2}", sy(*r)));
            prev = *r;
        }
        if !c.taus.is_empty() {
            pts.push(format!("{:.2},{:.2}", sx(max_log), sy(prev)));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 20.0 * ci as f64 + 10.0;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            xml_escape(&c.solver)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn write_curves_svg(profile: &Profile, path: &Path) -> Result<(), EmitError> {
    fs::write(path, render_svg(profile)).map_err(io_err(path))
}
