use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;

use super::campaign::{CampaignSummary, Row};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "markdown-table" | "md" => Ok(Format::Markdown),
            _ => Err(Error::InvalidParameter(format!("unknown report format `{s}`"))),
        }
    }
}

/// Serializes a summary. JSON keys are sorted; CSV holds the per-seed rows.
pub fn emit_report(summary: &CampaignSummary, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&serde_json::to_value(summary)?)? + "\n"),
        Format::Csv => rows_to_csv(&summary.columns, &summary.rows),
        Format::Markdown => Ok(markdown(summary)),
    }
}

/// Strings that would read back as another JSON value, or as an absent key
/// when empty, are written quoted, so a CSV cell always parses back to the
/// value it came from.
fn cell(v: &Value) -> String {
    match v {
        Value::String(s) if !s.is_empty() && serde_json::from_str::<Value>(s).is_err() => s.clone(),
        other => other.to_string(),
    }
}

fn parse_cell(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}

pub fn rows_to_csv(columns: &[String], rows: &[Row]) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(columns)?;
    for row in rows {
        wr.write_record(columns.iter().map(|c| row.get(c).map(cell).unwrap_or_default()))?;
    }
    let bytes = wr.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Inverse of [`rows_to_csv`]. Empty cells are treated as absent keys.
pub fn rows_from_csv(text: &str) -> Result<(Vec<String>, Vec<Row>)> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let columns: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let row: Row = columns
            .iter()
            .zip(rec.iter())
            .filter(|(_, v)| !v.is_empty())
            .map(|(c, v)| (c.clone(), parse_cell(v)))
            .collect();
        rows.push(row);
    }
    Ok((columns, rows))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

fn markdown(s: &CampaignSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} campaign\n", s.experiment);
    let p = &s.provenance;
    let _ = writeln!(
        out,
        "master seed {}, {} seeds, config {}, version {}\n",
        p.master_seed, p.seeds, p.config_hash, p.code_version
    );
    if let Some(beta) = s.statistics.get("beta_hat") {
        out.push_str("| beta_hat (median) | q1 | q3 | beta_vol | beta_target |\n|---|---|---|---|---|\n");
        let _ = writeln!(
            out,
            "| {:.6} | {:.6} | {:.6} | {} | {} |\n",
            beta.median,
            beta.q1,
            beta.q3,
            fmt_opt(s.reference.get("beta_vol").copied()),
            fmt_opt(s.reference.get("beta_target").copied()),
        );
    }
    if !s.statistics.is_empty() {
        out.push_str("| statistic | median | q1 | q3 | count |\n|---|---|---|---|---|\n");
        for (name, sp) in &s.statistics {
            let _ = writeln!(out, "| {name} | {:.6} | {:.6} | {:.6} | {} |", sp.median, sp.q1, sp.q3, sp.count);
        }
        out.push('\n');
    }
    if !s.reference.is_empty() {
        out.push_str("| reference | value |\n|---|---|\n");
        for (name, v) in &s.reference {
            let _ = writeln!(out, "| {name} | {v:.6} |");
        }
        out.push('\n');
    }
    out.push_str("| check | result | detail |\n|---|---|---|\n");
    for c in &s.checks {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.detail.replace('|', "\\|")
        );
    }
    for w in &s.warnings {
        let _ = writeln!(out, "\nwarning: {w}");
    }
    let _ = writeln!(out, "\n{} rows", s.rows.len());
    out
}

/// Writes `summary.json`, `rows.csv`, `report.md` and every artifact into
/// `dir`, returning the written paths.
pub fn write_outputs(summary: &CampaignSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![
        ("summary.json".to_string(), emit_report(summary, Format::Json)?),
        ("rows.csv".to_string(), emit_report(summary, Format::Csv)?),
        ("report.md".to_string(), emit_report(summary, Format::Markdown)?),
    ];
    files.extend(summary.artifacts.iter().map(|a| (a.name.clone(), a.content.clone())));
    let mut written = Vec::with_capacity(files.len());
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

pub fn load_summary(path: &Path) -> Result<CampaignSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::campaign::Provenance;
    use proptest::prelude::*;
    use serde_json::json;

    fn provenance() -> Provenance {
        Provenance {
            config_hash: "abc".into(),
            code_version: "0".into(),
            master_seed: 1,
            seeds: 0,
        }
    }

    #[test]
    fn empty_campaign() {
        let s = CampaignSummary::empty("decay", provenance());
        for f in [Format::Json, Format::Csv, Format::Markdown] {
            let doc = emit_report(&s, f).unwrap();
            assert!(!doc.is_empty() || f == Format::Csv);
        }
        let json: Value = serde_json::from_str(&emit_report(&s, Format::Json).unwrap()).unwrap();
        assert_eq!(json["rows"], json!([]));
        assert!(emit_report(&s, Format::Markdown).unwrap().contains("0 rows"));
        assert!("pdf".parse::<Format>().is_err());
    }

    #[test]
    fn json_keys_sorted() {
        let s = CampaignSummary::empty("decay", provenance());
        let doc = emit_report(&s, Format::Json).unwrap();
        let keys = ["checks", "columns", "experiment", "provenance", "reference", "rows", "statistics", "warnings"];
        let pos: Vec<usize> = keys.iter().map(|k| doc.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn markdown_compares_betas() {
        let mut s = CampaignSummary::empty("fup-discrete", provenance());
        s.statistics.insert("beta_hat".into(), crate::stats::Spread::of(&[0.3]).unwrap());
        s.reference.insert("beta_vol".into(), 1.0 / 6.0);
        s.reference.insert("beta_target".into(), 0.24);
        let md = emit_report(&s, Format::Markdown).unwrap();
        assert!(md.contains("| 0.300000 | 0.300000 | 0.300000 | 0.166667 | 0.240000 |"));
    }

    #[test]
    fn tricky_cells_round_trip() {
        let row: Row = [
            ("a", json!("12")),
            ("b", json!("plain text, with comma")),
            ("c", json!(1.0)),
            ("d", json!(3)),
            ("e", json!(true)),
            ("f", json!(["1", "2"])),
            ("g", json!("\"quoted\"")),
            ("h", json!(null)),
            ("i", json!("true")),
            ("j", json!("")),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let cols: Vec<String> = row.keys().cloned().collect();
        let text = rows_to_csv(&cols, std::slice::from_ref(&row)).unwrap();
        let (c2, rows) = rows_from_csv(&text).unwrap();
        assert_eq!(c2, cols);
        assert_eq!(rows, vec![row]);
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        prop_oneof![
            any::<f64>().prop_filter("finite", |x| x.is_finite()).prop_map(|x| json!(x)),
            any::<i64>().prop_map(|x| json!(x)),
            any::<bool>().prop_map(|x| json!(x)),
            ".*".prop_map(|s: String| json!(s)),
            proptest::collection::vec(any::<i32>(), 0..4).prop_map(|v| json!(v)),
        ]
    }

    proptest! {
        #[test]
        fn json_csv_json_is_lossless(rows in proptest::collection::vec(
            proptest::collection::btree_map("[a-z]{1,6}", arb_value(), 1..5), 0..5)
        ) {
            let mut cols: Vec<String> = rows.iter().flat_map(|r| r.keys().cloned()).collect();
            cols.sort();
            cols.dedup();
            let json_text = serde_json::to_string(&rows).unwrap();
            let rows: Vec<Row> = serde_json::from_str(&json_text).unwrap();
            let csv_text = rows_to_csv(&cols, &rows).unwrap();
            let (_, back) = rows_from_csv(&csv_text).unwrap();
            prop_assert_eq!(serde_json::to_string(&back).unwrap(), json_text);
        }
    }
}
