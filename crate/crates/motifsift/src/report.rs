//! CSV and markdown reports of benchmark records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use motifsift_core::bench::{aggregate, row_label, BenchmarkRecord};
use motifsift_core::deform::DeformationKind;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "class,kind,level,threshold,template_features,query_features,positive_matches,retained_pct,ransac_inliers,seed";

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    class: String,
    kind: String,
    level: u8,
    threshold: f64,
    template_features: usize,
    query_features: usize,
    positive_matches: usize,
    retained_pct: f64,
    ransac_inliers: Option<usize>,
    seed: u64,
}

pub fn write_csv(path: &Path, records: &[BenchmarkRecord]) -> Result<()> {
    crate::io::create_parent(path)?;
    fs::write(path, to_csv(records)?).map_err(|e| Error::input(path, e))
}

pub fn to_csv(records: &[BenchmarkRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(CsvRow {
            class: r.class_name.clone(),
            kind: r.kind.label().into(),
            level: r.level,
            threshold: r.threshold,
            template_features: r.template_features,
            query_features: r.query_features,
            positive_matches: r.positive_matches,
            retained_pct: r.retained_pct,
            ransac_inliers: r.ransac_inliers,
            seed: r.seed,
        })
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    let mut text = String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))?;
    if records.is_empty() {
        text = format!("{CSV_HEADER}\n");
    }
    Ok(text)
}

pub fn read_csv(path: &Path) -> Result<Vec<BenchmarkRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
    parse_csv(&text).map_err(|e| match e {
        Error::Data(m) => Error::input(path, m),
        other => other,
    })
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchmarkRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::Data(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Data(format!(
            "unexpected CSV header, expected `{CSV_HEADER}`"
        )));
    }
    rd.deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::Data(e.to_string()))?;
            let kind: DeformationKind = row
                .kind
                .parse()
                .map_err(|e: motifsift_core::Error| Error::Data(e.to_string()))?;
            Ok(BenchmarkRecord {
                class_name: row.class,
                kind,
                level: row.level,
                threshold: row.threshold,
                template_features: row.template_features,
                query_features: row.query_features,
                positive_matches: row.positive_matches,
                retained_pct: row.retained_pct,
                ransac_inliers: row.ransac_inliers,
                seed: row.seed,
            })
        })
        .collect()
}

/// Per-class tables with rows labelled `<Kind>-<level>_sift <threshold>`,
/// followed by the mean over classes for every cell.
pub fn markdown(records: &[BenchmarkRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Data("no records to report".into()));
    }
    let mut out = String::from("# % of retained positive matches\n");
    let mut classes: Vec<&str> = Vec::new();
    for r in records {
        if !classes.contains(&r.class_name.as_str()) {
            classes.push(&r.class_name);
        }
    }
    for class in &classes {
        let _ = write!(
            out,
            "\n## {class}\n\n| Deformation | Retained |\n|---|---|\n"
        );
        for r in records.iter().filter(|r| r.class_name == *class) {
            let _ = writeln!(out, "| {} | {:.2}% |", r.row_label(), r.retained_pct);
        }
    }
    let mut cells: BTreeMap<(DeformationKind, u8, u64), f64> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.kind, r.level, r.threshold.to_bits()))
            .or_insert(r.threshold);
    }
    out.push_str("\n## Mean over classes\n\n| Deformation | Retained |\n|---|---|\n");
    for (&(kind, level, _), &threshold) in &cells {
        let mean = aggregate(records, kind, threshold, level)?;
        let _ = writeln!(
            out,
            "| {} | {:.2}% |",
            row_label(kind, level, threshold),
            mean
        );
    }
    Ok(out)
}

pub fn write_markdown(path: &Path, records: &[BenchmarkRecord]) -> Result<()> {
    crate::io::create_parent(path)?;
    fs::write(path, markdown(records)?).map_err(|e| Error::input(path, e))
}
