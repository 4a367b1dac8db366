//! CSV schemas.
//!
//! * per-frame scores: `video_id,frame_index,score`
//! * video scores: `video_id,score`
//! * evaluation: `video_id,score_before,score_after`
//! * reports: partition counts, threshold rows, cumulative-mean curves and
//!   range summaries, one file each.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Curve, EvaluationRecord, Partition, RangeRow, ThresholdRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameScoreRow {
    pub video_id: String,
    pub frame_index: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoScoreRow {
    pub video_id: String,
    pub score: f64,
}

#[derive(Serialize, Deserialize)]
struct EvaluationRow {
    video_id: String,
    score_before: f64,
    score_after: f64,
}

fn read_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::malformed_input(path, format!("{other:?}")),
    })?;
    let found = reader.headers().map_err(|e| Error::malformed_input(path, e))?.clone();
    if found.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(Error::malformed_input(
            path,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::malformed_input(path, e)))
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::malformed_input(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| Error::malformed_input(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_frame_scores(path: &Path) -> Result<Vec<FrameScoreRow>> {
    read_rows(path, &["video_id", "frame_index", "score"])
}

pub fn write_frame_scores(path: &Path, rows: &[FrameScoreRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_video_scores(path: &Path) -> Result<Vec<VideoScoreRow>> {
    let rows: Vec<VideoScoreRow> = read_rows(path, &["video_id", "score"])?;
    if let Some(r) = rows.iter().find(|r| !(0.0..=1.0).contains(&r.score)) {
        return Err(Error::malformed_input(path, format!("score {} for `{}` outside [0, 1]", r.score, r.video_id)));
    }
    Ok(rows)
}

pub fn write_video_scores(path: &Path, rows: &[VideoScoreRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_evaluation(path: &Path) -> Result<Vec<EvaluationRecord>> {
    let rows: Vec<EvaluationRow> = read_rows(path, &["video_id", "score_before", "score_after"])?;
    rows.into_iter()
        .map(|r| {
            for v in [r.score_before, r.score_after] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::malformed_input(path, format!("score {v} for `{}` outside [0, 1]", r.video_id)));
                }
            }
            Ok(EvaluationRecord::new(r.video_id, r.score_before, r.score_after))
        })
        .collect()
}

pub fn write_evaluation(path: &Path, records: &[EvaluationRecord]) -> Result<()> {
    write_rows(
        path,
        records.iter().map(|r| EvaluationRow {
            video_id: r.video_id.clone(),
            score_before: r.score_before,
            score_after: r.score_after,
        }),
    )
}

/// Join before and after video scores on `video_id`, ordered by id.
pub fn join_scores(before: &[VideoScoreRow], after: &[VideoScoreRow]) -> Result<Vec<EvaluationRecord>> {
    let mut after_by_id = std::collections::BTreeMap::new();
    for row in after {
        if after_by_id.insert(row.video_id.as_str(), row.score).is_some() {
            return Err(Error::invalid(format!("duplicate after-score for `{}`", row.video_id)));
        }
    }
    let mut records = Vec::with_capacity(before.len());
    for row in before {
        let after = after_by_id
            .remove(row.video_id.as_str())
            .ok_or_else(|| Error::invalid(format!("no after-score for `{}`", row.video_id)))?;
        records.push(EvaluationRecord::new(&row.video_id, row.score, after));
    }
    if let Some(extra) = after_by_id.keys().next() {
        return Err(Error::invalid(format!("no before-score for `{extra}`")));
    }
    records.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    Ok(records)
}

#[derive(Serialize)]
struct PartitionRow {
    improved: usize,
    decreased: usize,
    unchanged: usize,
    total: usize,
}

pub fn write_partition(path: &Path, p: &Partition) -> Result<()> {
    write_rows(
        path,
        [PartitionRow {
            improved: p.improved,
            decreased: p.decreased,
            unchanged: p.unchanged,
            total: p.improved + p.decreased + p.unchanged,
        }],
    )
}

#[derive(Serialize)]
struct ThresholdCsvRow {
    threshold: f64,
    improved_fraction: f64,
    population: usize,
}

pub fn write_thresholds(path: &Path, rows: &[ThresholdRow]) -> Result<()> {
    write_rows(
        path,
        rows.iter().map(|r| ThresholdCsvRow {
            threshold: r.threshold,
            improved_fraction: r.improved_fraction,
            population: r.population,
        }),
    )
}

#[derive(Serialize)]
struct CurveRow<'a> {
    series: &'a str,
    position: usize,
    cumulative_mean: f64,
}

pub fn write_curves(path: &Path, curves: &[Curve]) -> Result<()> {
    write_rows(
        path,
        curves.iter().flat_map(|c| {
            c.positions.iter().zip(&c.values).map(move |(p, v)| CurveRow {
                series: &c.label,
                position: *p,
                cumulative_mean: *v,
            })
        }),
    )
}

#[derive(Serialize)]
struct RangeCsvRow {
    crop_fraction: f64,
    p05: f64,
    median: f64,
    p95: f64,
    count: usize,
}

pub fn write_range_summary(path: &Path, rows: &[RangeRow]) -> Result<()> {
    write_rows(
        path,
        rows.iter().map(|r| RangeCsvRow {
            crop_fraction: r.crop_fraction,
            p05: r.p05,
            median: r.median,
            p95: r.p95,
            count: r.count,
        }),
    )
}
