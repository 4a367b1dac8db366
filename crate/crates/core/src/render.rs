//! Applying crop trajectories to frames.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::{CropRect, CropTrajectory, Frame, FrameSequence};
use crate::par::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Interpolation {
    Nearest,
    #[default]
    Bilinear,
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpolation::Nearest => "nearest",
            Interpolation::Bilinear => "bilinear",
        })
    }
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Interpolation::Nearest),
            "bilinear" => Ok(Interpolation::Bilinear),
            other => Err(Error::invalid(format!("unknown interpolation `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RenderConfig {
    /// Scale every crop back up to the source dimensions.
    pub resize_to_source: bool,
    pub interpolation: Interpolation,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            resize_to_source: true,
            interpolation: Interpolation::Bilinear,
        }
    }
}

/// Copy the pixels under `rect`, bit-exact.
pub fn crop_frame(frame: &Frame, rect: CropRect) -> Result<Frame> {
    rect.validate(frame.width(), frame.height())?;
    let src_stride = frame.width() as usize * 3;
    let row_bytes = rect.w as usize * 3;
    let mut out = Vec::with_capacity(row_bytes * rect.h as usize);
    for y in rect.y as usize..(rect.y + rect.h) as usize {
        let start = y * src_stride + rect.x as usize * 3;
        out.extend_from_slice(&frame.pixels()[start..start + row_bytes]);
    }
    Frame::new(rect.w as u32, rect.h as u32, out)
}

/// Source coordinate of output sample `i` when mapping `src` samples onto `dst`,
/// aligning pixel centres.
fn source_coord(i: u32, src: u32, dst: u32) -> f64 {
    (2 * i as u64 + 1) as f64 * src as f64 / (2 * dst as u64) as f64 - 0.5
}

/// Resample to `out_w × out_h`.
///
/// Nearest rounds the source coordinate half-up; bilinear samples with edge
/// clamping. Same-size resampling is the identity in both modes.
pub fn resize_frame(frame: &Frame, out_w: u32, out_h: u32, interpolation: Interpolation) -> Result<Frame> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid(format!(
            "output dimensions must be positive, got {out_w}x{out_h}"
        )));
    }
    if frame.dims() == (out_w, out_h) {
        return Ok(frame.clone());
    }
    let (sw, sh) = frame.dims();
    let px = frame.pixels();
    let mut out = Vec::with_capacity(out_w as usize * out_h as usize * 3);
    match interpolation {
        Interpolation::Nearest => {
            let pick = |i: u32, src: u32, dst: u32| {
                ((source_coord(i, src, dst) + 0.5).floor().max(0.0) as usize).min(src as usize - 1)
            };
            let cols: Vec<usize> = (0..out_w).map(|u| pick(u, sw, out_w)).collect();
            for v in 0..out_h {
                let row = pick(v, sh, out_h) * sw as usize;
                for &c in &cols {
                    let i = (row + c) * 3;
                    out.extend_from_slice(&px[i..i + 3]);
                }
            }
        }
        Interpolation::Bilinear => {
            let taps = |i: u32, src: u32, dst: u32| {
                let s = source_coord(i, src, dst).clamp(0.0, (src - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(src as usize - 1);
                (i0, i1, s - i0 as f64)
            };
            let cols: Vec<_> = (0..out_w)
                .map(|u| {
                    let (c0, c1, fx) = taps(u, sw, out_w);
                    (c0 * 3, c1 * 3, fx)
                })
                .collect();
            let stride = sw as usize * 3;
            for v in 0..out_h {
                let (r0, r1, fy) = taps(v, sh, out_h);
                let top_row = &px[r0 * stride..(r0 + 1) * stride];
                let bottom_row = &px[r1 * stride..(r1 + 1) * stride];
                for &(c0, c1, fx) in &cols {
                    for ch in 0..3 {
                        let (a, b) = (top_row[c0 + ch] as f64, top_row[c1 + ch] as f64);
                        let (c, d) = (bottom_row[c0 + ch] as f64, bottom_row[c1 + ch] as f64);
                        let top = a + (b - a) * fx;
                        let bottom = c + (d - c) * fx;
                        // Non-negative, so truncation is round-half-up; the cast saturates at 255.
                        out.push((top + (bottom - top) * fy + 0.5) as u8);
                    }
                }
            }
        }
    }
    Frame::new(out_w, out_h, out)
}

/// Crop every frame by the trajectory (interpolated between sampled
/// indices) and optionally resize back to the source dimensions.
pub fn render_video(seq: &FrameSequence, traj: &CropTrajectory, cfg: &RenderConfig) -> Result<FrameSequence> {
    render_video_with(seq, traj, cfg, Execution::Sequential)
}

pub fn render_video_with(
    seq: &FrameSequence,
    traj: &CropTrajectory,
    cfg: &RenderConfig,
    exec: Execution,
) -> Result<FrameSequence> {
    if seq.video_id() != traj.video_id() {
        return Err(Error::invalid(format!(
            "trajectory is for `{}`, video is `{}`",
            traj.video_id(),
            seq.video_id()
        )));
    }
    if seq.dims() != traj.src_dims() {
        return Err(Error::DimensionMismatch {
            expected: traj.src_dims(),
            found: seq.dims(),
        });
    }
    let (sw, sh) = seq.dims();
    let frames = exec
        .map_range(seq.len(), |i| {
            let cropped = crop_frame(&seq.frames()[i], traj.rect_at(i))?;
            if cfg.resize_to_source {
                resize_frame(&cropped, sw, sh, cfg.interpolation)
            } else {
                Ok(cropped)
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(seq.video_id(), frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::TrajectoryMeta;
    use crate::plan::{center_crop_plan, Strategy};

    fn gradient(w: u32, h: u32) -> Frame {
        let px = (0..w * h)
            .flat_map(|i| [(i % 251) as u8, (i * 7 % 256) as u8, (i / w) as u8])
            .collect();
        Frame::new(w, h, px).unwrap()
    }

    #[test]
    fn crop_examples() {
        let f = gradient(6, 5);
        assert_eq!(crop_frame(&f, CropRect::full(6, 5)).unwrap(), f);

        let two = Frame::new(2, 2, vec![1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4]).unwrap();
        let right = crop_frame(&two, CropRect::new(1, 0, 1, 2)).unwrap();
        assert_eq!(right.pixels(), &[2, 2, 2, 4, 4, 4]);
        let tl = crop_frame(&two, CropRect::new(0, 0, 1, 1)).unwrap();
        assert_eq!(tl.pixels(), &[1, 1, 1]);

        assert!(crop_frame(&two, CropRect::new(1, 1, 2, 1)).is_err());
    }

    #[test]
    fn crop_pixels_match_source() {
        let f = gradient(17, 11);
        let r = CropRect::new(3, 4, 9, 5);
        let c = crop_frame(&f, r).unwrap();
        for v in 0..5 {
            for u in 0..9 {
                assert_eq!(c.pixel(u, v), f.pixel(3 + u, 4 + v));
            }
        }
    }

    #[test]
    fn resize_examples() {
        let f = gradient(9, 7);
        for mode in [Interpolation::Nearest, Interpolation::Bilinear] {
            assert_eq!(resize_frame(&f, 9, 7, mode).unwrap(), f);
        }
        let bw = Frame::new(2, 1, vec![0, 0, 0, 255, 255, 255]).unwrap();
        let up = resize_frame(&bw, 4, 1, Interpolation::Nearest).unwrap();
        assert_eq!(up.pixels(), &[0, 0, 0, 0, 0, 0, 255, 255, 255, 255, 255, 255]);

        let flat = Frame::filled(5, 3, [12, 200, 77]).unwrap();
        for mode in [Interpolation::Nearest, Interpolation::Bilinear] {
            for (w, h) in [(1, 1), (13, 2), (4, 9)] {
                let r = resize_frame(&flat, w, h, mode).unwrap();
                assert_eq!(r, Frame::filled(w, h, [12, 200, 77]).unwrap());
            }
        }
        assert!(resize_frame(&flat, 0, 3, Interpolation::Nearest).is_err());
    }

    #[test]
    fn bilinear_midpoint() {
        let bw = Frame::new(2, 1, vec![0, 0, 0, 200, 200, 200]).unwrap();
        let up = resize_frame(&bw, 4, 1, Interpolation::Bilinear).unwrap();
        // source coords -0.25, 0.25, 0.75, 1.25 -> 0, 50, 150, 200
        assert_eq!(up.pixels(), &[0, 0, 0, 50, 50, 50, 150, 150, 150, 200, 200, 200]);
    }

    fn video(n: usize, w: u32, h: u32) -> FrameSequence {
        FrameSequence::new("vid", (0..n).map(|_| gradient(w, h)).collect()).unwrap()
    }

    #[test]
    fn identity_render() {
        let seq = video(12, 20, 16);
        let idx: Vec<usize> = (0..12).step_by(5).collect();
        let t = center_crop_plan("vid", 20, 16, &idx, 1.0).unwrap();
        assert_eq!(render_video(&seq, &t, &RenderConfig::default()).unwrap(), seq);
    }

    #[test]
    fn constant_rect_without_resize() {
        let seq = video(3, 100, 80);
        let t = center_crop_plan("vid", 100, 80, &[0, 2], 0.5).unwrap();
        let cfg = RenderConfig {
            resize_to_source: false,
            ..RenderConfig::default()
        };
        let out = render_video(&seq, &t, &cfg).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.frames().iter().all(|f| f.dims() == (50, 40)));
    }

    #[test]
    fn varying_rects_resized_to_source() {
        let seq = video(2, 30, 20);
        let meta = TrajectoryMeta {
            strategy: Strategy::VariableTrack,
            fallback: false,
        };
        let t = CropTrajectory::new(
            "vid",
            30,
            20,
            meta,
            vec![(0, CropRect::new(0, 0, 9, 6)), (1, CropRect::new(3, 2, 21, 14))],
        )
        .unwrap();
        let out = render_video(&seq, &t, &RenderConfig::default()).unwrap();
        assert!(out.frames().iter().all(|f| f.dims() == (30, 20)));
        let par = render_video_with(&seq, &t, &RenderConfig::default(), Execution::Auto).unwrap();
        assert_eq!(out, par);
    }

    #[test]
    fn render_rejects_mismatches() {
        let seq = video(2, 30, 20);
        let t = center_crop_plan("other", 30, 20, &[0], 0.5).unwrap();
        assert!(render_video(&seq, &t, &RenderConfig::default()).is_err());
        let t = center_crop_plan("vid", 40, 20, &[0], 0.5).unwrap();
        assert!(matches!(
            render_video(&seq, &t, &RenderConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
