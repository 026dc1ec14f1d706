//! CSV and SVG renderings of reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use tindex_core::features::FeatureTable;
use tindex_core::stats::linalg::Matrix;
use tindex_core::stats::ols;

use crate::commands::eval::BinaryEvalPayload;
use crate::commands::human::{DisagreementPayload, PairwiseEvalPayload, PointwiseEvalPayload};
use crate::commands::qe::QeCorrelationPayload;
use crate::commands::shifts::ShiftPayload;
use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::{EvalReport, ReportKind};

/// Formats a number with at most six significant digits, trailing zeros
/// dropped. Scientific notation outside [1e-5, 1e6).
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    // Rounding can carry into the next power of ten, so read the exponent
    // back from the rounded scientific form.
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV of UTF-8 fields")
    }
}

/// The report's main table as CSV, with a fixed column order per kind.
pub fn report_csv(report: &EvalReport) -> CliResult<String> {
    let table = match report.kind {
        ReportKind::BinaryEval => {
            let p: BinaryEvalPayload = report.payload(report.kind)?;
            let mut t =
                Table::new(&["method", "domain", "run", "accuracy", "auroc", "threshold", "n_pos", "n_neg", "skipped"]);
            for row in &p.rows {
                for c in &row.cells {
                    for (i, r) in c.runs.iter().enumerate() {
                        t.push(vec![
                            row.method.to_string(),
                            c.domain.clone(),
                            i.to_string(),
                            sig6(r.accuracy),
                            sig6(r.auroc),
                            sig6(r.threshold),
                            r.n_pos.to_string(),
                            r.n_neg.to_string(),
                            r.skipped.to_string(),
                        ]);
                    }
                }
            }
            t
        }
        ReportKind::PairwiseEval => {
            let p: PairwiseEvalPayload = report.payload(report.kind)?;
            let mut t = Table::new(&["method", "agreement_count", "n", "correct", "accuracy", "ties"]);
            for row in &p.rows {
                for b in &row.table.buckets {
                    t.push(vec![
                        row.method.to_string(),
                        b.agreement_count.to_string(),
                        b.n.to_string(),
                        b.correct.to_string(),
                        opt(b.accuracy),
                        String::new(),
                    ]);
                }
                let o = &row.table.overall;
                t.push(vec![
                    row.method.to_string(),
                    "all".into(),
                    o.n.to_string(),
                    o.correct.to_string(),
                    opt(o.accuracy),
                    row.table.ties.to_string(),
                ]);
            }
            t
        }
        ReportKind::PointwiseEval => {
            let p: PointwiseEvalPayload = report.payload(report.kind)?;
            let mut t = Table::new(&["method", "n", "r", "p"]);
            for row in &p.rows {
                let c = &row.correlation;
                t.push(vec![row.method.to_string(), c.n.to_string(), sig6(c.r), sig6(c.p)]);
            }
            t
        }
        ReportKind::CorpusStats => {
            let p: FeatureTable = report.payload(report.kind)?;
            let mut t = Table::new(&["feature", "low", "high", "t", "df", "p_value", "expected", "observed"]);
            for r in &p.rows {
                t.push(vec![
                    r.feature.as_str().to_string(),
                    sig6(r.low),
                    sig6(r.high),
                    sig6(r.t),
                    sig6(r.df),
                    sig6(r.p_value),
                    r.expected.to_string(),
                    r.observed.to_string(),
                ]);
            }
            t
        }
        ReportKind::ShiftReport => {
            let p: ShiftPayload = report.payload(report.kind)?;
            let reg = &p.regression;
            let mut t = Table::new(&["term", "coefficient", "std_error", "t_value", "p_value", "vif"]);
            let offset = reg.names.len() - reg.vif.len();
            for (i, name) in reg.names.iter().enumerate() {
                let vif = if reg.vif.is_empty() || i < offset { String::new() } else { sig6(reg.vif[i - offset]) };
                t.push(vec![
                    name.clone(),
                    sig6(reg.coefficients[i]),
                    sig6(reg.std_errors[i]),
                    sig6(reg.t_values[i]),
                    sig6(reg.p_values[i]),
                    vif,
                ]);
            }
            t
        }
        ReportKind::QeCorrelation => {
            let p: QeCorrelationPayload = report.payload(report.kind)?;
            let mut t = Table::new(&["metric", "condition", "n", "r", "p"]);
            for c in &p.cells {
                t.push(vec![
                    c.metric.clone(),
                    c.condition.to_string(),
                    c.n.to_string(),
                    opt(c.correlation.map(|x| x.r)),
                    opt(c.correlation.map(|x| x.p)),
                ]);
            }
            t
        }
        ReportKind::Disagreement => {
            let p: DisagreementPayload = report.payload(report.kind)?;
            let mut t = Table::new(&["agreement_count", "n", "mean_bleu", "mean_delta_tindex"]);
            for b in &p.analysis.buckets {
                t.push(vec![
                    b.agreement_count.to_string(),
                    b.n.to_string(),
                    opt(b.mean_bleu),
                    opt(b.mean_delta_tindex),
                ]);
            }
            t
        }
    };
    Ok(table.to_csv())
}

/// Scatter plot with axes, labels and the least-squares line (when one can
/// be fitted).
pub fn scatter_svg(points: &[[f64; 2]], title: &str, x_label: &str, y_label: &str) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const L: f64 = 64.0;
    const R: f64 = 16.0;
    const T: f64 = 36.0;
    const B: f64 = 52.0;
    let range = |vals: Vec<f64>| -> (f64, f64) {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo == 0.0 {
            (lo - 1.0, hi + 1.0)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = range(points.iter().map(|p| p[0]).collect());
    let (y0, y1) = range(points.iter().map(|p| p[1]).collect());
    let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
    let py = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);
    let (left, right, top, bottom) = (L, W - R, T, H - B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{left}" y="{top}" width="{}" height="{}"/></clipPath></defs>"#,
        right - left,
        bottom - top
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<line class="axis" x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#);
    for (v, anchor, x) in [(x0, "start", left), (x1, "end", right)] {
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="{anchor}">{}</text>"#, bottom + 14.0, sig6(v));
    }
    for (v, y) in [(y0, bottom), (y1, top + 8.0)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#, left - 4.0, sig6(v));
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{cy}" text-anchor="middle" transform="rotate(-90 16 {cy})">{}</text>"#,
        escape(y_label),
        cy = (top + bottom) / 2.0
    );
    for p in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue" fill-opacity="0.7"/>"#,
            px(p[0]),
            py(p[1])
        );
    }
    if let Some((intercept, slope)) = fit_line(points) {
        let _ = writeln!(
            s,
            r#"<line class="fit" data-intercept="{}" data-slope="{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" clip-path="url(#plot)"/>"#,
            intercept,
            slope,
            px(x0),
            py(intercept + slope * x0),
            px(x1),
            py(intercept + slope * x1)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fit_line(points: &[[f64; 2]]) -> Option<(f64, f64)> {
    let x = Matrix::from_columns(&[points.iter().map(|p| p[0]).collect()]);
    let y: Vec<f64> = points.iter().map(|p| p[1]).collect();
    let fit = ols(&x, &y, true, None).ok()?;
    Some((fit.coefficients[0], fit.coefficients[1]))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One scatter per (metric, condition) cell, named `<metric>_<condition>.svg`.
pub fn report_svgs(report: &EvalReport) -> CliResult<Vec<(String, String)>> {
    if report.kind != ReportKind::QeCorrelation {
        return Err(CliError::validation(format!(
            "svg output is only available for qe_correlation reports, not {}",
            report.kind.as_str()
        )));
    }
    let p: QeCorrelationPayload = report.payload(report.kind)?;
    Ok(p.cells
        .iter()
        .map(|c| {
            let r = c.correlation.map(|x| format!(" (r = {})", sig6(x.r))).unwrap_or_default();
            let name: String = c
                .metric
                .chars()
                .map(|ch| if ch.is_ascii_alphanumeric() || ch == '-' || ch == '_' { ch } else { '_' })
                .collect();
            (
                format!("{name}_{}.svg", c.condition),
                scatter_svg(&c.points, &format!("{} / {}{r}", c.metric, c.condition), &p.method.to_string(), &c.metric),
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(format!("format must be json, csv or svg, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Report JSON produced by another subcommand.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value = "json")]
    pub format: Format,
    /// Output file (json, csv) or directory (svg); stdout for json and csv
    /// when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Renders a stored report. Returns the files written.
pub fn cmd_report(args: &ReportArgs) -> CliResult<Vec<PathBuf>> {
    let report = EvalReport::read(&args.report)?;
    let out = args.out.as_deref();
    match args.format {
        Format::Json => io::emit(out, &report.to_json()).map(|_| out.map(Path::to_path_buf).into_iter().collect()),
        Format::Csv => io::emit(out, &report_csv(&report)?).map(|_| out.map(Path::to_path_buf).into_iter().collect()),
        Format::Svg => {
            let dir = out.ok_or_else(|| CliError::validation("svg output needs --out DIR"))?;
            let files = report_svgs(&report)?;
            let mut written = Vec::with_capacity(files.len());
            for (name, body) in files {
                let p = dir.join(name);
                io::emit(Some(&p), &body)?;
                written.push(p);
            }
            Ok(written)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commands::qe::{QeCell, QeCondition};
    use tindex_core::scoring::Method;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(0.123456789), "0.123457");
        assert_eq!(sig6(-12.5), "-12.5");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.000012345678), "0.0000123457");
        assert_eq!(sig6(1.5e-7), "1.5e-7");
        assert_eq!(sig6(f64::INFINITY), "inf");
        assert_eq!(sig6(2.0 / 3.0), "0.666667");
    }

    fn qe_report(cells: Vec<QeCell>) -> EvalReport {
        EvalReport::new(ReportKind::QeCorrelation, "h".into(), &QeCorrelationPayload { method: Method::Tindex, cells })
            .unwrap()
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(report_csv(&qe_report(vec![])).unwrap(), "metric,condition,n,r,p\n");
    }

    #[test]
    fn scatter_line_matches_least_squares() {
        // Three points; slope and intercept from the normal equations:
        // x̄ = 1, ȳ = 2, Sxy = 3, Sxx = 2 → slope 1.5, intercept 0.5.
        let pts = [[0.0, 0.0], [1.0, 3.0], [2.0, 3.0]];
        let svg = scatter_svg(&pts, "t", "x", "y");
        let attr = |name: &str| -> f64 {
            let key = format!("{name}=\"");
            let start = svg.find(&key).unwrap() + key.len();
            svg[start..start + svg[start..].find('"').unwrap()].parse().unwrap()
        };
        assert!((attr("data-slope") - 1.5).abs() < 1e-12);
        assert!((attr("data-intercept") - 0.5).abs() < 1e-12);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("class=\"axis\"").count(), 2);
        assert_eq!(svg, scatter_svg(&pts, "t", "x", "y"));
    }

    #[test]
    fn svg_only_for_qe() {
        let r = EvalReport::new(ReportKind::CorpusStats, "h".into(), &serde_json::json!({})).unwrap();
        assert!(report_svgs(&r).is_err());
        let cell = QeCell {
            metric: "comet/da".into(),
            condition: QeCondition::Standard,
            n: 2,
            correlation: None,
            error: Some("too few".into()),
            points: vec![[0.0, 1.0], [1.0, 2.0]],
        };
        let files = report_svgs(&qe_report(vec![cell])).unwrap();
        assert_eq!(files[0].0, "comet_da_standard.svg");
        // Two points cannot support a fitted line with residual degrees of freedom.
        assert!(!files[0].1.contains("class=\"fit\""));
    }
}
