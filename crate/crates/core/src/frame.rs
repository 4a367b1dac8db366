//! Raster frames, crop geometry and frame sampling.
//!
//! Coordinates: `x` is the column (grows rightward), `y` the row (grows
//! downward), origin at the top-left pixel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plan::Strategy;

/// One 8-bit RGB frame, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::invalid(format!(
                "pixel buffer has {} bytes, expected {expected} for {width}x{height} RGB",
                pixels.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            pixels,
        })
    }

    /// A frame filled with one colour.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        let pixels = rgb.iter().copied().cycle().take(n * 3).collect();
        Frame::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Integer Rec.601 luma of every pixel, in `[0, 255]`.
    pub fn luma(&self) -> Vec<f64> {
        self.pixels
            .chunks_exact(3)
            .map(|p| (299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32) as f64 / 1000.0)
            .collect()
    }
}

/// The frames of one video, all sharing the same dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSequence {
    video_id: String,
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(video_id: impl Into<String>, frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("a frame sequence needs at least one frame"))?;
        let dims = first.dims();
        if let Some(bad) = frames.iter().find(|f| f.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: bad.dims(),
            });
        }
        Ok(FrameSequence {
            video_id: video_id.into(),
            frames,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (u32, u32) {
        self.frames[0].dims()
    }
}

/// Axis-aligned crop window in integer pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropRect {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl CropRect {
    pub const fn new(x: i64, y: i64, w: i64, h: i64) -> Self {
        CropRect { x, y, w, h }
    }

    pub fn full(width: u32, height: u32) -> Self {
        CropRect::new(0, 0, width as i64, height as i64)
    }

    /// Check that the rect has positive size and lies inside a `width × height` frame.
    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        if self.w < 1 || self.h < 1 {
            return Err(Error::invalid(format!("crop {self:?} has non-positive size")));
        }
        if self.x < 0
            || self.y < 0
            || self.x + self.w > width as i64
            || self.y + self.h > height as i64
        {
            return Err(Error::invalid(format!(
                "crop {self:?} does not fit inside {width}x{height}"
            )));
        }
        Ok(())
    }

    pub fn is_within(&self, width: u32, height: u32) -> bool {
        self.validate(width, height).is_ok()
    }

    /// Real-valued centre, the inverse of the placement used by [`clamp_rect`].
    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn area(&self) -> i64 {
        self.w * self.h
    }
}

/// A crop window requested by centre and size, before rounding and clamping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectRequest {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl RectRequest {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        RectRequest { cx, cy, w, h }
    }
}

pub(crate) fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Round a requested rect to integers and move it the minimum distance
/// needed to lie inside the frame. Size is preserved.
pub fn clamp_rect(req: RectRequest, frame_w: u32, frame_h: u32) -> Result<CropRect> {
    if !(req.cx.is_finite() && req.cy.is_finite() && req.w.is_finite() && req.h.is_finite()) {
        return Err(Error::invalid(format!("non-finite crop request {req:?}")));
    }
    let w = round_half_up(req.w);
    let h = round_half_up(req.h);
    if w < 1 || h < 1 {
        return Err(Error::invalid(format!("crop size {w}x{h} rounds below 1 pixel")));
    }
    if w > frame_w as i64 || h > frame_h as i64 {
        return Err(Error::invalid(format!(
            "crop size {w}x{h} exceeds frame {frame_w}x{frame_h}"
        )));
    }
    let x = round_half_up(req.cx - w as f64 / 2.0).clamp(0, frame_w as i64 - w);
    let y = round_half_up(req.cy - h as f64 / 2.0).clamp(0, frame_h as i64 - h);
    Ok(CropRect { x, y, w, h })
}

/// `[0, stride, 2·stride, …]` below `frame_count`.
pub fn sample_frame_indices(frame_count: usize, stride: usize) -> Result<Vec<usize>> {
    sample_frame_indices_from(frame_count, stride, 0)
}

/// Like [`sample_frame_indices`] but starting at `offset`.
pub fn sample_frame_indices_from(
    frame_count: usize,
    stride: usize,
    offset: usize,
) -> Result<Vec<usize>> {
    if frame_count < 1 {
        return Err(Error::invalid("frame count must be at least 1"));
    }
    if stride < 1 {
        return Err(Error::invalid("sampling stride must be at least 1"));
    }
    if offset >= frame_count {
        return Err(Error::invalid(format!(
            "sampling offset {offset} is past the last frame ({frame_count} frames)"
        )));
    }
    Ok((offset..frame_count).step_by(stride).collect())
}

/// Which planning branch produced a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub strategy: Strategy,
    /// `true` when a variable-size plan fell back to a fixed-size one.
    pub fallback: bool,
}

/// Per-frame crop windows for one video, defined on sampled frame indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CropTrajectory {
    video_id: String,
    src_width: u32,
    src_height: u32,
    meta: TrajectoryMeta,
    rects: Vec<(usize, CropRect)>,
}

impl CropTrajectory {
    pub fn new(
        video_id: impl Into<String>,
        src_width: u32,
        src_height: u32,
        meta: TrajectoryMeta,
        rects: Vec<(usize, CropRect)>,
    ) -> Result<Self> {
        if src_width == 0 || src_height == 0 {
            return Err(Error::invalid("trajectory source dimensions must be positive"));
        }
        if rects.is_empty() {
            return Err(Error::invalid("a trajectory needs at least one rect"));
        }
        for pair in rects.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::invalid(format!(
                    "trajectory frame indices not strictly increasing at {}",
                    pair[1].0
                )));
            }
        }
        for (_, rect) in &rects {
            rect.validate(src_width, src_height)?;
        }
        Ok(CropTrajectory {
            video_id: video_id.into(),
            src_width,
            src_height,
            meta,
            rects,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn src_dims(&self) -> (u32, u32) {
        (self.src_width, self.src_height)
    }

    pub fn meta(&self) -> TrajectoryMeta {
        self.meta
    }

    pub fn rects(&self) -> &[(usize, CropRect)] {
        &self.rects
    }

    /// The crop for any frame index.
    ///
    /// Between sampled indices the centre and size are interpolated linearly,
    /// then rounded and clamped; outside the sampled range the nearest end
    /// rect is held.
    pub fn rect_at(&self, frame_index: usize) -> CropRect {
        let pos = self.rects.partition_point(|(i, _)| *i < frame_index);
        if pos < self.rects.len() && self.rects[pos].0 == frame_index {
            return self.rects[pos].1;
        }
        if pos == 0 {
            return self.rects[0].1;
        }
        if pos == self.rects.len() {
            return self.rects[pos - 1].1;
        }
        let (i0, a) = self.rects[pos - 1];
        let (i1, b) = self.rects[pos];
        let t = (frame_index - i0) as f64 / (i1 - i0) as f64;
        let lerp = |p: f64, q: f64| p + (q - p) * t;
        let (acx, acy) = a.center();
        let (bcx, bcy) = b.center();
        let req = RectRequest::new(
            lerp(acx, bcx),
            lerp(acy, bcy),
            lerp(a.w as f64, b.w as f64),
            lerp(a.h as f64, b.h as f64),
        );
        // Both ends fit, so the interpolated size does too.
        clamp_rect(req, self.src_width, self.src_height).unwrap_or(a)
    }
}
