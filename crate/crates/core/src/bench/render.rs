use std::fmt::Write as _;
use std::str::FromStr;

use crate::bench::{mean_tenths, BenchError, BenchReport, Cell, PublishedReference, ReportKind, ReportRow};
use crate::types::Gwei;

const MISSING: &str = "—";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(BenchError::UnknownFormat(s.to_string())),
        }
    }
}

pub fn format_tenths(tenths: u128) -> String {
    format!("{}.{}", tenths / 10, tenths % 10)
}

fn signed_tenths(v: i128) -> String {
    let sign = if v < 0 { "-" } else { "+" };
    format!("{sign}{}", format_tenths(v.unsigned_abs()))
}

fn signed_fee(measured: Gwei, reference: Gwei) -> String {
    let diff = measured.as_wei() as i128 - reference.as_wei() as i128;
    let sign = if diff < 0 { "-" } else { "+" };
    format!("{sign}{}", Gwei::from_wei(diff.unsigned_abs()).to_fixed(2))
}

/// "37955.6" or "4020" to tenths.
fn parse_tenths(s: &str) -> Option<u128> {
    let (int, frac) = s.split_once('.').unwrap_or((s, "0"));
    let first = frac.chars().next().unwrap_or('0').to_digit(10)? as u128;
    Some(int.parse::<u128>().ok()? * 10 + first)
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Fee { fee, .. } => fee.to_fixed(2),
        Cell::Latency(ms) => format!("{ms}.0"),
        Cell::Missing(_) => MISSING.to_string(),
        Cell::Error(_) => "ERROR".to_string(),
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: Vec<String>,
}

fn average_cell(row: &ReportRow, notes: &mut Vec<String>) -> (String, Option<u128>) {
    let lat = row.latencies();
    match mean_tenths(&lat) {
        Ok(t) => {
            let mut text = format_tenths(t);
            if lat.len() < row.cells.len() {
                text.push('*');
                notes.push(format!("* {}: average over {} of {} trials", row.network, lat.len(), row.cells.len()));
            }
            (text, Some(t))
        }
        Err(_) => (MISSING.to_string(), None),
    }
}

fn build(report: &BenchReport, compare: Option<&PublishedReference>) -> Table {
    let latency = report.kind.is_latency();
    let mut header = vec!["Network".to_string()];
    header.extend(report.columns.iter().cloned());
    if latency {
        header.push("Average".into());
    }

    let fee_ref = compare.map(|r| match report.kind {
        ReportKind::DeployGas => &r.deploy_fee,
        _ => &r.function_fee,
    });
    let lat_ref = compare.map(|r| match report.kind {
        ReportKind::BuyLatency => &r.buy_latency,
        _ => &r.deploy_latency,
    });
    if compare.is_some() {
        if latency {
            header.push("Reference Average".into());
            header.push("Δ Average".into());
        } else {
            header.extend(report.columns.iter().map(|c| format!("Δ {c}")));
        }
    }

    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for row in &report.rows {
        let mut line = vec![row.network.clone()];
        line.extend(row.cells.iter().map(cell_text));
        for (col, c) in report.columns.iter().zip(&row.cells) {
            match c {
                Cell::Error(msg) => notes.push(format!("{} / {col}: {msg}", row.network)),
                Cell::Missing(why) => notes.push(format!("{} / {col}: missing ({why})", row.network)),
                _ => {}
            }
        }
        if latency {
            let (avg_text, avg) = average_cell(row, &mut notes);
            line.push(avg_text);
            if let Some(table) = lat_ref {
                let reference = table.rows.iter().find(|r| r.network == row.network);
                let ref_tenths = reference.and_then(|r| parse_tenths(&r.average));
                line.push(ref_tenths.map_or_else(|| MISSING.to_string(), format_tenths));
                line.push(match (avg, ref_tenths) {
                    (Some(a), Some(r)) => signed_tenths(a as i128 - r as i128),
                    _ => MISSING.to_string(),
                });
            }
        } else if let Some(table) = fee_ref {
            let reference = table.rows.iter().find(|r| r.network == row.network);
            for (i, c) in row.cells.iter().enumerate() {
                let r = reference.and_then(|r| r.values.get(i));
                line.push(match (c.fee(), r) {
                    (Some(m), Some(r)) => signed_fee(m, *r),
                    _ => MISSING.to_string(),
                });
            }
        }
        rows.push(line);
    }
    Table { header, rows, notes }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders a report. Rows keep report order; output is a pure function of
/// the report, so equal reports give equal bytes.
pub fn render(report: &BenchReport, format: Format, compare: Option<&PublishedReference>) -> String {
    let t = build(report, compare);
    let mut out = String::new();
    match format {
        Format::Csv => {
            let line = |cells: &[String]| cells.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",");
            writeln!(out, "{}", line(&t.header)).unwrap();
            for r in &t.rows {
                writeln!(out, "{}", line(r)).unwrap();
            }
            for n in &t.notes {
                writeln!(out, "# {n}").unwrap();
            }
        }
        Format::Markdown => {
            writeln!(out, "### {}\n", report.kind.title()).unwrap();
            writeln!(out, "| {} |", t.header.join(" | ")).unwrap();
            let sep: Vec<String> =
                t.header.iter().enumerate().map(|(i, _)| if i == 0 { ":--" } else { "--:" }.to_string()).collect();
            writeln!(out, "|{}|", sep.join("|")).unwrap();
            for r in &t.rows {
                writeln!(out, "| {} |", r.join(" | ")).unwrap();
            }
            if !t.notes.is_empty() {
                out.push('\n');
                for n in &t.notes {
                    writeln!(out, "- {n}").unwrap();
                }
            }
            let m = &report.meta;
            write!(out, "\nseed {}, profiles sha256 {}", m.seed, m.profile_sha256).unwrap();
            if let Some(ts) = &m.timestamp {
                write!(out, ", generated {ts}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Flat per-sample CSV with gas, price and fee kept apart.
pub fn render_samples(report: &BenchReport) -> String {
    let mut out = String::from(SAMPLES_HEADER);
    out.push('\n');
    let opt = |v: Option<String>| v.unwrap_or_default();
    for (s, cell) in report.samples().into_iter().zip(report.rows.iter().flat_map(|r| r.cells.iter())) {
        let status = match cell {
            Cell::Fee { .. } | Cell::Latency(_) => "ok",
            Cell::Missing(_) => "missing",
            Cell::Error(_) => "error",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{status}",
            csv_field(&s.network),
            csv_field(&s.operation),
            s.trial_index,
            opt(s.gas_used.map(|g| g.to_string())),
            opt(s.gas_price.map(|p| p.to_string())),
            opt(s.fee.map(|f| f.to_string())),
            opt(s.latency_ms.map(|l| l.to_string())),
        )
        .unwrap();
    }
    out
}

const SAMPLES_HEADER: &str = "network,operation,trial,gas_used,gas_price_gwei,fee_gwei,latency_ms,status";

/// Inverse of [`render_samples`]. Error and missing messages are not kept.
pub fn parse_samples(kind: ReportKind, text: &str) -> Result<BenchReport, BenchError> {
    let bad = |line: usize, why: &str| BenchError::Reference(format!("samples line {line}: {why}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SAMPLES_HEADER => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    let mut report = BenchReport::empty(kind, Vec::new());
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(i + 1, "expected 8 fields"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad(i + 1, "bad number"));
        let cell = match f[7] {
            "missing" => Cell::Missing("timeout".into()),
            "error" => Cell::Error("error".into()),
            "ok" if kind.is_latency() => Cell::Latency(num(f[6])?),
            "ok" => Cell::Fee {
                gas_used: num(f[3])?,
                gas_price: f[4].parse().map_err(|_| bad(i + 1, "bad price"))?,
                fee: f[5].parse().map_err(|_| bad(i + 1, "bad fee"))?,
            },
            _ => return Err(bad(i + 1, "unknown status")),
        };
        let column = if kind.is_latency() { crate::bench::ordinal(num(f[2])? as usize) } else { f[1].to_string() };
        if !report.columns.contains(&column) {
            report.columns.push(column);
        }
        match report.rows.iter_mut().find(|r| r.network == f[0]) {
            Some(r) => r.cells.push(cell),
            None => report.rows.push(ReportRow { network: f[0].to_string(), cells: vec![cell] }),
        }
    }
    Ok(report)
}
