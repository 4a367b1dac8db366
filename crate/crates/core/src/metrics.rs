//! Evaluation metrics over before/after memorability scores.

use crate::error::{Error, Result};

/// Table 1 style thresholds on the original score.
pub const DEFAULT_THRESHOLDS: [f64; 6] = [0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationRecord {
    pub video_id: String,
    pub score_before: f64,
    pub score_after: f64,
    pub delta: f64,
}

impl EvaluationRecord {
    pub fn new(video_id: impl Into<String>, score_before: f64, score_after: f64) -> Self {
        EvaluationRecord {
            video_id: video_id.into(),
            score_before,
            score_after,
            delta: score_after - score_before,
        }
    }
}

/// Values in a recorded order, e.g. deltas sorted by ascending original score.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSeries {
    pub ordering: String,
    pub values: Vec<f64>,
}

pub const ORDER_BY_SCORE_BEFORE: &str = "score_before_ascending";

impl ScoreSeries {
    /// Deltas ordered by ascending original score; ties keep video id order.
    pub fn deltas_by_score_before(records: &[EvaluationRecord]) -> Self {
        let mut sorted: Vec<&EvaluationRecord> = records.iter().collect();
        sorted.sort_by(|a, b| {
            a.score_before
                .total_cmp(&b.score_before)
                .then_with(|| a.video_id.cmp(&b.video_id))
        });
        ScoreSeries {
            ordering: ORDER_BY_SCORE_BEFORE.to_string(),
            values: sorted.iter().map(|r| r.delta).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Partition {
    pub improved: usize,
    pub decreased: usize,
    pub unchanged: usize,
}

pub fn improvement_partition(records: &[EvaluationRecord]) -> Partition {
    records.iter().fold(Partition::default(), |mut p, r| {
        if r.delta > 0.0 {
            p.improved += 1;
        } else if r.delta < 0.0 {
            p.decreased += 1;
        } else {
            p.unchanged += 1;
        }
        p
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub improved_fraction: f64,
    pub population: usize,
}

/// For each threshold `t`, the share of videos with `score_before ≥ t` that improved.
pub fn threshold_table(records: &[EvaluationRecord], thresholds: &[f64]) -> Result<Vec<ThresholdRow>> {
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("thresholds must be sorted ascending"));
    }
    Ok(thresholds
        .iter()
        .map(|&t| {
            let (population, improved) = records
                .iter()
                .filter(|r| r.score_before >= t)
                .fold((0usize, 0usize), |(n, k), r| (n + 1, k + usize::from(r.delta > 0.0)));
            ThresholdRow {
                threshold: t,
                improved_fraction: if population > 0 {
                    improved as f64 / population as f64
                } else {
                    0.0
                },
                population,
            }
        })
        .collect())
}

/// Running mean: `out[i]` is the mean of the first `i + 1` values.
pub fn cumulative_mean(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("cumulative mean of an empty series"));
    }
    let mut sum = 0.0;
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect())
}

/// Quantile by linear interpolation between order statistics at position
/// `p·(n−1)` of the sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Inclusive bounds `[Q1 − 1.5·IQR, Q3 + 1.5·IQR]`.
pub fn iqr_bounds(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 4 {
        return Err(Error::invalid(format!(
            "IQR filtering needs at least 4 values, got {}",
            values.len()
        )));
    }
    let sorted = sorted_copy(values);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    Ok((q1 - 1.5 * iqr, q3 + 1.5 * iqr))
}

/// Drop values outside the IQR fences, keeping the rest in order.
pub fn iqr_filter(values: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = iqr_bounds(values)?;
    Ok(values.iter().copied().filter(|v| (lo..=hi).contains(v)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeRow {
    pub crop_fraction: f64,
    pub p05: f64,
    pub p95: f64,
    pub median: f64,
    pub count: usize,
}

/// 5th/95th percentile and median of the after-crop scores of each group.
pub fn range_summary(groups: &[(f64, Vec<f64>)]) -> Result<Vec<RangeRow>> {
    groups
        .iter()
        .map(|(fraction, scores)| {
            if scores.is_empty() {
                return Err(Error::invalid(format!("crop fraction {fraction} has no scores")));
            }
            let sorted = sorted_copy(scores);
            Ok(RangeRow {
                crop_fraction: *fraction,
                p05: quantile_sorted(&sorted, 0.05),
                p95: quantile_sorted(&sorted, 0.95),
                median: quantile_sorted(&sorted, 0.5),
                count: sorted.len(),
            })
        })
        .collect()
}

/// A cumulative-mean curve; `positions` index the retained points in the
/// original series.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub label: String,
    pub positions: Vec<usize>,
    pub values: Vec<f64>,
}

/// IQR-filter the series (when it has at least 4 values), then take the
/// cumulative mean.
pub fn cumulative_mean_curve(label: &str, series: &ScoreSeries) -> Result<Curve> {
    let kept: Vec<(usize, f64)> = if series.values.len() >= 4 {
        let (lo, hi) = iqr_bounds(&series.values)?;
        series
            .values
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| (lo..=hi).contains(v))
            .collect()
    } else {
        series.values.iter().copied().enumerate().collect()
    };
    let values: Vec<f64> = kept.iter().map(|(_, v)| *v).collect();
    Ok(Curve {
        label: label.to_string(),
        positions: kept.iter().map(|(i, _)| *i).collect(),
        values: cumulative_mean(&values)?,
    })
}

/// Cumulative-mean curves of two runs over the same videos.
pub fn compare_runs(series_fixed: &ScoreSeries, series_variable: &ScoreSeries) -> Result<(Curve, Curve)> {
    if series_fixed.values.len() != series_variable.values.len() {
        return Err(Error::invalid(format!(
            "series lengths differ: {} vs {}",
            series_fixed.values.len(),
            series_variable.values.len()
        )));
    }
    if series_fixed.ordering != series_variable.ordering {
        return Err(Error::invalid("series use different orderings"));
    }
    Ok((
        cumulative_mean_curve("fixed", series_fixed)?,
        cumulative_mean_curve("variable", series_variable)?,
    ))
}
