//! CSV, JSON and SVG artifacts.
//!
//! Numbers are written with Rust's `Display` for `f64`: the shortest
//! decimal that round-trips, with a dot separator and no grouping, so files
//! are byte-identical across runs and locales.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::experiments::{OracleRow, RunRecord};
use crate::AppError;

pub const SERIES_HEADER: [&str; 5] = ["t", "kl", "l1", "fisher", "mean_dist"];
pub const ORACLE_HEADER: [&str; 9] =
    ["t", "mean_0", "mean_1", "cov_00", "cov_01", "cov_11", "kl_exact", "kl_binned", "fisher_exact"];

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Result<String, AppError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| AppError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

/// The run's time series with header `t,kl,l1,fisher,mean_dist`; missing
/// observers leave blank cells.
pub fn series_csv(record: &RunRecord) -> Result<String, AppError> {
    to_csv(
        SERIES_HEADER,
        record.rows.iter().map(|r| [r.t.to_string(), cell(r.kl), cell(r.l1), cell(r.fisher), cell(r.mean_dist)]),
    )
}

pub fn oracle_csv(rows: &[OracleRow]) -> Result<String, AppError> {
    to_csv(
        ORACLE_HEADER,
        rows.iter().map(|o| {
            [
                o.t.to_string(),
                o.mean[0].to_string(),
                o.mean[1].to_string(),
                o.cov[0][0].to_string(),
                o.cov[0][1].to_string(),
                o.cov[1][1].to_string(),
                o.kl_exact.to_string(),
                cell(o.kl_binned),
                cell(o.fisher_exact),
            ]
        }),
    )
}

#[derive(Serialize)]
struct VerdictFile<'a> {
    scenario: &'a str,
    seed: u64,
    passed: bool,
    checks: &'a [crate::experiments::Check],
    fit: &'a Option<fisher_anneal_core::measure::DecayFit>,
    tkl_fit: &'a Option<fisher_anneal_core::measure::DecayFit>,
    rows: usize,
    last: Option<&'a crate::experiments::Row>,
}

pub fn verdict_json(record: &RunRecord) -> Result<String, AppError> {
    let v = VerdictFile {
        scenario: &record.scenario,
        seed: record.seed,
        passed: record.verdict.passed,
        checks: &record.verdict.checks,
        fit: &record.fit,
        tkl_fit: &record.tkl_fit,
        rows: record.rows.len(),
        last: record.rows.last(),
    };
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), AppError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| AppError::io(path, e))
}

/// Paths written for a run named `name` under `dir`.
pub struct ArtifactPaths {
    pub series: PathBuf,
    pub verdict: PathBuf,
    pub plot: PathBuf,
    pub oracle: PathBuf,
}

impl ArtifactPaths {
    pub fn new(dir: &Path, name: &str) -> Self {
        ArtifactPaths {
            series: dir.join(format!("{name}_series.csv")),
            verdict: dir.join(format!("{name}_verdict.json")),
            plot: dir.join(format!("{name}.svg")),
            oracle: dir.join(format!("{name}_oracle.csv")),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

/// Log-log plot of the KL series with a dotted `t⁻¹` guide through the
/// first plotted point. Returns `None` when fewer than two positive KL
/// values are available.
pub fn kl_plot_svg(record: &RunRecord) -> Option<String> {
    let pts: Vec<(f64, f64)> = record
        .kl_series()
        .into_iter()
        .filter(|&(t, k)| t > 0.0 && k > 0.0)
        .map(|(t, k)| (t.log10(), k.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let guide: Vec<(f64, f64)> = [x0, x1].iter().map(|&x| (x, pts[0].1 - (x - pts[0].0))).collect();
    let (y0, y1) =
        pts.iter().chain(&guide).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let sx = |x: f64| MARGIN + (x - x0) / span(x0, x1) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / span(y0, y1) * (HEIGHT - 2.0 * MARGIN);
    let poly =
        |ps: &[(f64, f64)]| ps.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect::<Vec<_>>().join(" ");

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{m},{m} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, poly(&pts));
    let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="gray" stroke-dasharray="4 4"/>"#, poly(&guide));
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">log10 t</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">log10 KL</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (x, y, label) in [(x0, y0, format!("{x0:.3}")), (x1, y0, format!("{x1:.3}"))] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{label}</text>"#,
            sx(x),
            sy(y) + 14.0
        );
    }
    for (y, label) in [(y0, format!("{y0:.2}")), (y1, format!("{y1:.2}"))] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{label}</text>"#,
            MARGIN - 4.0,
            sy(y) + 3.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-size="13" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        record.scenario
    );
    svg.push_str("</svg>\n");
    Some(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Row, Verdict};

    fn record(kl: &[Option<f64>]) -> RunRecord {
        let rows = kl
            .iter()
            .enumerate()
            .map(|(i, &k)| Row {
                step: i as u64,
                t: 1.0 + i as f64,
                kl: k,
                l1: None,
                fisher: None,
                mean_dist: Some(0.5),
                pinsker_ok: None,
                dist_blocks: vec![],
            })
            .collect();
        RunRecord {
            scenario: "demo".into(),
            seed: 1,
            rows,
            fit: None,
            tkl_fit: None,
            verdict: Verdict { passed: true, checks: vec![] },
        }
    }

    #[test]
    fn series_has_exact_header_and_blank_cells() {
        let csv = series_csv(&record(&[Some(0.25), None])).unwrap();
        assert_eq!(csv, "t,kl,l1,fisher,mean_dist\n1,0.25,,,0.5\n2,,,,0.5\n");
    }

    #[test]
    fn plot_needs_two_points() {
        assert!(kl_plot_svg(&record(&[Some(0.1)])).is_none());
        let svg = kl_plot_svg(&record(&[Some(0.1), Some(0.05), Some(0.02)])).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("stroke-dasharray"));
    }
}
