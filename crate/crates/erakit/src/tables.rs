//! CSV tables: features, peaks, projections and the variance summary.
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! which parses back to the identical `f64`.

use erakit_core::era::{EraProjection, VarianceSummary};
use erakit_core::features::{ClipRef, FeatureKind, FeatureRow, FeatureVector};

use crate::error::{Error, Result};
use crate::extract::{sort_rows, PeakRow};

/// Width of the value block in the features table.
pub const MAX_DIM: usize = 156;

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_number(s: &str, line: u64) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("{s:?} is not a number"),
    })
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub fn features_header() -> Vec<String> {
    let mut header: Vec<String> = ["label", "source", "sample_id", "kind", "dim"]
        .map(String::from)
        .to_vec();
    header.extend((0..MAX_DIM).map(|i| format!("v{i}")));
    header
}

/// `label,source,sample_id,kind,dim,v0..v155`, rows sorted by
/// `(label, source, sample_id, kind)`. Short vectors leave trailing cells empty.
pub fn emit_features_csv(rows: &[FeatureRow]) -> Result<String> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut w = writer();
    w.write_record(features_header())?;
    for row in &sorted {
        let dim = row.vector.dim();
        if dim > MAX_DIM {
            return Err(Error::Data(format!(
                "{} {} vector has {dim} values, table holds {MAX_DIM}",
                row.clip, row.vector.kind
            )));
        }
        let mut record = vec![
            row.clip.label.clone(),
            row.clip.source.clone(),
            row.clip.sample_id.clone(),
            row.vector.kind.to_string(),
            dim.to_string(),
        ];
        record.extend(row.vector.values.iter().map(|&v| format_number(v)));
        record.resize(5 + MAX_DIM, String::new());
        w.write_record(&record)?;
    }
    finish(w)
}

pub fn read_features_csv(text: &str) -> Result<Vec<FeatureRow>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != features_header() {
        let missing = features_header()
            .into_iter()
            .find(|h| !header.contains(h))
            .unwrap_or_else(|| "column order".into());
        return Err(Error::MissingColumn(missing));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let kind: FeatureKind =
            record[3]
                .parse()
                .map_err(|e: erakit_core::Error| Error::Parse {
                    line,
                    reason: e.to_string(),
                })?;
        let dim: usize = record[4].parse().map_err(|_| Error::Parse {
            line,
            reason: format!("dim {:?} is not an integer", &record[4]),
        })?;
        if dim > MAX_DIM {
            return Err(Error::Parse {
                line,
                reason: format!("dim {dim} exceeds {MAX_DIM}"),
            });
        }
        let values = (0..dim)
            .map(|i| parse_number(&record[5 + i], line))
            .collect::<Result<Vec<_>>>()?;
        if record.iter().skip(5 + dim).any(|c| !c.is_empty()) {
            return Err(Error::Parse {
                line,
                reason: format!("values beyond dim {dim}"),
            });
        }
        let vector = FeatureVector::new(kind, values).map_err(|e| Error::Parse {
            line,
            reason: e.to_string(),
        })?;
        rows.push(FeatureRow {
            clip: ClipRef::new(&record[0], &record[1], &record[2]),
            vector,
        });
    }
    Ok(rows)
}

pub fn emit_peaks_csv(rows: &[PeakRow]) -> Result<String> {
    let mut w = writer();
    w.write_record([
        "label",
        "source",
        "sample_id",
        "peak_time_s",
        "relative_magnitude",
    ])?;
    for r in rows {
        w.write_record([
            r.clip.label.as_str(),
            &r.clip.source,
            &r.clip.sample_id,
            &format_number(r.metrics.peak_time_s),
            &format_number(r.metrics.relative_magnitude),
        ])?;
    }
    finish(w)
}

pub fn read_peaks_csv(text: &str) -> Result<Vec<PeakRow>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 5 {
            return Err(Error::Parse {
                line,
                reason: format!("expected 5 fields, found {}", record.len()),
            });
        }
        rows.push(PeakRow {
            clip: ClipRef::new(&record[0], &record[1], &record[2]),
            metrics: erakit_core::features::PeakMetrics {
                peak_time_s: parse_number(&record[3], line)?,
                relative_magnitude: parse_number(&record[4], line)?,
            },
        });
    }
    Ok(rows)
}

pub fn emit_projection_csv(p: &EraProjection) -> Result<String> {
    let mut w = writer();
    w.write_record(["label", "kind", "source", "sample_id", "pc1", "pc2"])?;
    for q in &p.points {
        w.write_record([
            p.label.as_str(),
            p.kind.as_str(),
            &q.source,
            &q.sample_id,
            &format_number(q.pc1),
            &format_number(q.pc2),
        ])?;
    }
    finish(w)
}

/// `source,kind,normalized_total_variance`, one row per source and kind plus
/// a `mean` row per source. Unavailable values are left empty.
pub fn emit_variance_csv(summary: &VarianceSummary) -> Result<String> {
    let mut w = writer();
    w.write_record(["source", "kind", "normalized_total_variance"])?;
    let cell = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    for source in summary.sources() {
        for kind in FeatureKind::ALL {
            if summary.cells.iter().any(|c| c.kind == kind) {
                w.write_record([source, kind.as_str(), &cell(summary.get(source, kind))])?;
            }
        }
        w.write_record([source, "mean", &cell(summary.source_mean(source))])?;
    }
    finish(w)
}

/// Parses a variance table into `(source, kind, value)` triples.
pub fn read_variance_csv(text: &str) -> Result<Vec<(String, String, Option<f64>)>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let value = match &record[2] {
            "" => None,
            s => Some(parse_number(s, line)?),
        };
        out.push((record[0].to_string(), record[1].to_string(), value));
    }
    Ok(out)
}
