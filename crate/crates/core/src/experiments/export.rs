use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::Summary;
use crate::io_util::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Svg,
}

impl ExportFormat {
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Self::Csv),
            "svg" => Some(Self::Svg),
            _ => None,
        }
    }
}

pub const CSV_HEADER: [&str; 4] = ["round", "policy", "regret_mean", "regret_std"];

/// Rows are ordered by round, then by policy in configuration order. Rounds
/// are numbered from 1.
pub fn summary_csv(summary: &Summary) -> Result<Vec<u8>> {
    if summary.policies.is_empty() {
        return Err(Error::NothingToExport);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for t in 0..summary.horizon {
        for p in &summary.policies {
            w.write_record([
                (t + 1).to_string(),
                p.label.clone(),
                p.mean[t].to_string(),
                p.std[t].to_string(),
            ])?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// Parses a regret CSV back into `policy → [(mean, std)]` by round.
pub fn read_csv(bytes: &[u8]) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("bad numeric field {j}"),
                })
        };
        out.entry(rec.get(1).unwrap_or_default().to_string())
            .or_default()
            .push((field(2)?, field(3)?));
    }
    Ok(out)
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Mean cumulative regret against round, one polyline per policy.
pub fn summary_svg(summary: &Summary) -> Result<String> {
    if summary.policies.is_empty() {
        return Err(Error::NothingToExport);
    }
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 20.0, 20.0, 50.0);
    let x_max = summary.horizon.max(1) as f64;
    let y_max = summary
        .policies
        .iter()
        .flat_map(|p| p.mean.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let sx = |t: f64| left + (w - left - right) * t / x_max;
    let sy = |v: f64| h - bottom - (h - top - bottom) * v / y_max;
    // Long traces are thinned to at most ~600 vertices per series.
    let stride = (summary.horizon / 600).max(1);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (sx(0.0), sy(0.0), sx(x_max), sy(y_max));
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let (tx, ty) = (sx(frac * x_max), sy(frac * y_max));
        let _ = writeln!(
            s,
            r#"<text x="{tx:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
            y0 + 16.0,
            frac * x_max
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            x0 - 6.0,
            ty + 4.0,
            frac * y_max
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">round</text>"#,
        (x0 + x1) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">cumulative regret</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (i, p) in summary.policies.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        let mut t = 0;
        while t < p.mean.len() {
            let _ = write!(pts, "{:.2},{:.2} ", sx((t + 1) as f64), sy(p.mean[t]));
            t += stride;
        }
        if let Some(&last) = p.mean.last() {
            let _ = write!(pts, "{:.2},{:.2}", sx(p.mean.len() as f64), sy(last));
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.trim_end()
        );
        let ly = top + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            x0 + 12.0,
            x0 + 32.0,
            x0 + 38.0,
            ly + 4.0,
            p.label
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn export_results(summary: &Summary, path: &Path, format: ExportFormat) -> Result<()> {
    let bytes = match format {
        ExportFormat::Csv => summary_csv(summary)?,
        ExportFormat::Svg => summary_svg(summary)?.into_bytes(),
    };
    write_atomic(path, &bytes)
}
