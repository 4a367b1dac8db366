//! Crop trajectory planning.
//!
//! Three strategies:
//!
//! * [`Strategy::Center`]: a fixed window at the frame centre, scaled per axis
//!   by `crop_fraction`.
//! * [`Strategy::FixedTrack`]: one window size for the whole video, large enough
//!   for every frame's padded salient bounding box, following the saliency
//!   centroid.
//! * [`Strategy::VariableTrack`]: the window follows the centroid and its linear
//!   size follows a least-squares line through `√area` of the thresholded
//!   salient region. Only videos whose fit is tight and clearly sloped are
//!   zoomed; the rest fall back to the fixed-size plan.
//!
//! All windows keep the source aspect ratio and are clamped inside the frame.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{clamp_rect, CropRect, CropTrajectory, RectRequest, TrajectoryMeta};
use crate::saliency::{
    binarize, region_stats, saliency_centroid, thresholded_centroid, Centroid, CentroidSource,
    RegionStats, SaliencyMap,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Center,
    FixedTrack,
    VariableTrack,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Center => "center",
            Strategy::FixedTrack => "fixed_track",
            Strategy::VariableTrack => "variable_track",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(Strategy::Center),
            "fixed_track" => Ok(Strategy::FixedTrack),
            "variable_track" => Ok(Strategy::VariableTrack),
            other => Err(Error::invalid(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
    Neither,
}

/// Least-squares line through `√area` against sample position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoomFit {
    /// √pixels per sample step.
    pub slope: f64,
    /// √pixels at sample 0.
    pub intercept: f64,
    pub rmse: f64,
    pub direction: Direction,
    /// Mean of `√area`, the scale relative tolerances are measured against.
    pub mean_sqrt_area: f64,
}

impl ZoomFit {
    pub fn predict(&self, position: usize) -> f64 {
        self.intercept + self.slope * position as f64
    }
}

/// A tolerance either in absolute √pixels or relative to the mean `√area`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
}

impl Tolerance {
    pub fn resolve(self, mean_sqrt_area: f64) -> f64 {
        match self {
            Tolerance::Absolute(v) => v,
            Tolerance::Relative(f) => f * mean_sqrt_area,
        }
    }

    fn value(self) -> f64 {
        match self {
            Tolerance::Absolute(v) | Tolerance::Relative(v) => v,
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Absolute(v) => write!(f, "abs:{v}"),
            Tolerance::Relative(v) => write!(f, "{v}"),
        }
    }
}

/// `0.15` is relative to the mean `√area`; `abs:3.5` is absolute.
impl FromStr for Tolerance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("invalid tolerance `{s}`"));
        match s.strip_prefix("abs:") {
            Some(v) => v.trim().parse().map(Tolerance::Absolute).map_err(|_| bad()),
            None => s.trim().parse().map(Tolerance::Relative).map_err(|_| bad()),
        }
    }
}

pub const DEFAULT_PADDING_FRACTION: f64 = 0.10;
pub const DEFAULT_ZOOM_RMSE_MAX: Tolerance = Tolerance::Relative(0.15);
pub const DEFAULT_SLOPE_EPSILON: Tolerance = Tolerance::Relative(0.01);
pub const MIN_CROP_SIDE: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct PlanConfig {
    pub strategy: Strategy,
    /// Per-axis fraction kept by the centre strategy, in `(0, 1]`.
    pub crop_fraction: f64,
    /// `k` in the `mean + k·std` saliency threshold.
    pub threshold_k: f64,
    /// Padded size is `(1 + padding_fraction)` times the salient size on each axis.
    pub padding_fraction: f64,
    pub zoom_rmse_max: Tolerance,
    pub slope_epsilon: Tolerance,
    /// Odd centred moving-average window over centroids; 1 disables smoothing.
    pub smoothing_window: usize,
    pub centroid_source: CentroidSource,
    pub min_crop_side: u32,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            strategy: Strategy::FixedTrack,
            crop_fraction: 0.5,
            threshold_k: 1.0,
            padding_fraction: DEFAULT_PADDING_FRACTION,
            zoom_rmse_max: DEFAULT_ZOOM_RMSE_MAX,
            slope_epsilon: DEFAULT_SLOPE_EPSILON,
            smoothing_window: 1,
            centroid_source: CentroidSource::Raw,
            min_crop_side: MIN_CROP_SIDE,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.crop_fraction > 0.0 && self.crop_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "crop_fraction must be in (0, 1], got {}",
                self.crop_fraction
            )));
        }
        if !(self.threshold_k >= 0.0 && self.threshold_k.is_finite()) {
            return Err(Error::invalid("threshold_k must be a finite value >= 0"));
        }
        if !(self.padding_fraction >= 0.0 && self.padding_fraction.is_finite()) {
            return Err(Error::invalid("padding_fraction must be a finite value >= 0"));
        }
        if self.zoom_rmse_max.value().is_nan() || self.zoom_rmse_max.value() <= 0.0 {
            return Err(Error::invalid("zoom_rmse_max must be > 0"));
        }
        if self.slope_epsilon.value().is_nan() || self.slope_epsilon.value() < 0.0 {
            return Err(Error::invalid("slope_epsilon must be >= 0"));
        }
        if self.smoothing_window == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "smoothing_window must be odd and >= 1, got {}",
                self.smoothing_window
            )));
        }
        if self.min_crop_side == 0 {
            return Err(Error::invalid("min_crop_side must be >= 1"));
        }
        Ok(())
    }
}

/// Per-frame saliency measurements of one video, aligned with `frame_indices`.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoAnalysis {
    pub video_id: String,
    pub src_width: u32,
    pub src_height: u32,
    pub frame_indices: Vec<usize>,
    pub centroids: Vec<Centroid>,
    pub stats: Vec<RegionStats>,
    /// Thresholded salient area per sampled frame.
    pub areas: Vec<f64>,
}

impl VideoAnalysis {
    /// Measure the maps of the sampled frames `frame_indices`.
    pub fn from_maps(
        video_id: impl Into<String>,
        frame_indices: Vec<usize>,
        maps: &[SaliencyMap],
        threshold_k: f64,
        centroid_source: CentroidSource,
    ) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::invalid("video analysis needs at least one map"))?;
        if maps.len() != frame_indices.len() {
            return Err(Error::invalid(format!(
                "{} maps for {} sampled frames",
                maps.len(),
                frame_indices.len()
            )));
        }
        let (src_width, src_height) = first.dims();
        let mut centroids = Vec::with_capacity(maps.len());
        let mut stats = Vec::with_capacity(maps.len());
        for map in maps {
            if map.dims() != first.dims() {
                return Err(Error::DimensionMismatch {
                    expected: first.dims(),
                    found: map.dims(),
                });
            }
            centroids.push(match centroid_source {
                CentroidSource::Raw => saliency_centroid(map),
                CentroidSource::Thresholded => thresholded_centroid(map, threshold_k),
            });
            stats.push(region_stats(&binarize(map, threshold_k)));
        }
        let areas = stats.iter().map(|s| s.area as f64).collect();
        Ok(VideoAnalysis {
            video_id: video_id.into(),
            src_width,
            src_height,
            frame_indices,
            centroids,
            stats,
            areas,
        })
    }

    fn check(&self) -> Result<()> {
        let n = self.frame_indices.len();
        if n == 0 {
            return Err(Error::invalid("no sampled frames to plan over"));
        }
        if self.centroids.len() != n || self.stats.len() != n {
            return Err(Error::invalid(format!(
                "{} centroids and {} region stats for {n} sampled frames",
                self.centroids.len(),
                self.stats.len()
            )));
        }
        Ok(())
    }
}

/// Centred window with `crop_fraction` of the source size on each axis.
pub fn center_crop_plan(
    video_id: &str,
    src_w: u32,
    src_h: u32,
    frame_indices: &[usize],
    crop_fraction: f64,
) -> Result<CropTrajectory> {
    if !(crop_fraction > 0.0 && crop_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "crop_fraction must be in (0, 1], got {crop_fraction}"
        )));
    }
    let req = RectRequest::new(
        src_w as f64 / 2.0,
        src_h as f64 / 2.0,
        crop_fraction * src_w as f64,
        crop_fraction * src_h as f64,
    );
    let rect = clamp_rect(req, src_w, src_h)?;
    CropTrajectory::new(
        video_id,
        src_w,
        src_h,
        TrajectoryMeta {
            strategy: Strategy::Center,
            fallback: false,
        },
        frame_indices.iter().map(|&i| (i, rect)).collect(),
    )
}

/// Ordinary least squares of `√aᵢ` against `i = 0..n`.
pub fn fit_linear_zoom(areas: &[f64], slope_epsilon: Tolerance) -> Result<ZoomFit> {
    if areas.len() < 2 {
        return Err(Error::invalid(format!(
            "zoom fit needs at least 2 samples, got {}",
            areas.len()
        )));
    }
    if let Some(a) = areas.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(Error::invalid(format!("invalid salient area {a}")));
    }
    let roots: Vec<f64> = areas.iter().map(|a| a.sqrt()).collect();
    let n = roots.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = roots.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in roots.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = roots
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let r = y - (intercept + slope * i as f64);
            r * r
        })
        .sum();
    let eps = slope_epsilon.resolve(y_mean);
    let direction = if slope > eps {
        Direction::Increasing
    } else if slope < -eps {
        Direction::Decreasing
    } else {
        Direction::Neither
    };
    Ok(ZoomFit {
        slope,
        intercept,
        rmse: (sse / n).sqrt(),
        direction,
        mean_sqrt_area: y_mean,
    })
}

/// A video is zoomed when its fit is tight and it actually grows or shrinks.
pub fn select_for_zoom(fit: &ZoomFit, zoom_rmse_max: f64) -> bool {
    fit.rmse <= zoom_rmse_max && fit.direction != Direction::Neither
}

/// Centred moving average, truncated at the ends.
pub fn smooth_centroids(centroids: &[Centroid], window: usize) -> Result<Vec<Centroid>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "smoothing window must be odd and >= 1, got {window}"
        )));
    }
    let half = window / 2;
    Ok((0..centroids.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(centroids.len());
            let span = &centroids[lo..hi];
            let n = span.len() as f64;
            Centroid {
                x: span.iter().map(|c| c.x).sum::<f64>() / n,
                y: span.iter().map(|c| c.y).sum::<f64>() / n,
            }
        })
        .collect())
}

/// Fraction of the source linear size, limited to `[min_crop_side, source]`.
fn clamp_scale(scale: f64, src_w: u32, src_h: u32, min_side: u32) -> f64 {
    let lower = (min_side as f64 / src_w as f64)
        .max(min_side as f64 / src_h as f64)
        .min(1.0);
    if scale.is_nan() {
        return lower;
    }
    scale.clamp(lower, 1.0)
}

fn place_all(
    analysis: &VideoAnalysis,
    cfg: &PlanConfig,
    meta: TrajectoryMeta,
    scale_at: impl Fn(usize) -> f64,
) -> Result<CropTrajectory> {
    let (sw, sh) = (analysis.src_width, analysis.src_height);
    let centres = smooth_centroids(&analysis.centroids, cfg.smoothing_window)?;
    let rects = analysis
        .frame_indices
        .iter()
        .zip(&centres)
        .enumerate()
        .map(|(pos, (&idx, c))| {
            let t = scale_at(pos);
            let req = RectRequest::new(c.x, c.y, t * sw as f64, t * sh as f64);
            clamp_rect(req, sw, sh).map(|r| (idx, r))
        })
        .collect::<Result<Vec<_>>>()?;
    CropTrajectory::new(&analysis.video_id, sw, sh, meta, rects)
}

/// Padded salient box of one frame; an empty mask stands for the whole frame.
fn padded_box(stats: &RegionStats, pad: f64, src_w: u32, src_h: u32) -> (f64, f64) {
    let bbox = stats.bbox.unwrap_or(CropRect::full(src_w, src_h));
    (bbox.w as f64 * (1.0 + pad), bbox.h as f64 * (1.0 + pad))
}

/// One window size for the whole video: the largest padded salient box over
/// the sampled frames, grown to the source aspect ratio.
pub fn fixed_track_plan(analysis: &VideoAnalysis, cfg: &PlanConfig) -> Result<CropTrajectory> {
    fixed_track_with_meta(
        analysis,
        cfg,
        TrajectoryMeta {
            strategy: Strategy::FixedTrack,
            fallback: false,
        },
    )
}

fn fixed_track_with_meta(
    analysis: &VideoAnalysis,
    cfg: &PlanConfig,
    meta: TrajectoryMeta,
) -> Result<CropTrajectory> {
    analysis.check()?;
    let (sw, sh) = (analysis.src_width, analysis.src_height);
    let (w, h) = analysis
        .stats
        .iter()
        .map(|s| padded_box(s, cfg.padding_fraction, sw, sh))
        .fold((0.0_f64, 0.0_f64), |(mw, mh), (w, h)| (mw.max(w), mh.max(h)));
    // The aspect-corrected box is scale·source on both axes.
    let scale = clamp_scale((w / sw as f64).max(h / sh as f64), sw, sh, cfg.min_crop_side);
    place_all(analysis, cfg, meta, |_| scale)
}

/// Window whose linear size follows the zoom fit, padded and kept at the
/// source aspect ratio.
pub fn variable_track_plan(
    analysis: &VideoAnalysis,
    fit: &ZoomFit,
    cfg: &PlanConfig,
) -> Result<CropTrajectory> {
    analysis.check()?;
    if fit.direction == Direction::Neither {
        return Err(Error::invalid(
            "variable-size plan needs an increasing or decreasing zoom fit",
        ));
    }
    let (sw, sh) = (analysis.src_width, analysis.src_height);
    let src_side = (sw as f64 * sh as f64).sqrt();
    let pad = 1.0 + cfg.padding_fraction;
    place_all(
        analysis,
        cfg,
        TrajectoryMeta {
            strategy: Strategy::VariableTrack,
            fallback: false,
        },
        |pos| clamp_scale(fit.predict(pos) * pad / src_side, sw, sh, cfg.min_crop_side),
    )
}

/// Plan a trajectory with the configured strategy.
///
/// A variable-size plan falls back to the fixed-size plan, flagged in the
/// trajectory metadata, when the zoom fit is not selected or cannot be made.
pub fn plan(analysis: &VideoAnalysis, cfg: &PlanConfig) -> Result<CropTrajectory> {
    cfg.validate()?;
    analysis.check()?;
    match cfg.strategy {
        Strategy::Center => center_crop_plan(
            &analysis.video_id,
            analysis.src_width,
            analysis.src_height,
            &analysis.frame_indices,
            cfg.crop_fraction,
        ),
        Strategy::FixedTrack => fixed_track_plan(analysis, cfg),
        Strategy::VariableTrack => {
            let fallback = TrajectoryMeta {
                strategy: Strategy::VariableTrack,
                fallback: true,
            };
            if analysis.areas.len() < 2 {
                return fixed_track_with_meta(analysis, cfg, fallback);
            }
            let fit = fit_linear_zoom(&analysis.areas, cfg.slope_epsilon)?;
            if select_for_zoom(&fit, cfg.zoom_rmse_max.resolve(fit.mean_sqrt_area)) {
                variable_track_plan(analysis, &fit, cfg)
            } else {
                fixed_track_with_meta(analysis, cfg, fallback)
            }
        }
    }
}
