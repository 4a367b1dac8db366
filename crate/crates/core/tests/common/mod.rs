//! Synthetic fixtures shared by the integration tests and the bench.
#![allow(dead_code)]

use std::path::Path;

use memcrop::io::frames::{frame_file_name, write_frame};
use memcrop::{Frame, FrameSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A bright disc that drifts and grows (or shrinks) linearly over a noisy
/// flat background.
#[derive(Clone, Debug)]
pub struct BlobVideo {
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub background: u8,
    pub noise: u8,
    pub blob: [u8; 3],
    pub start: (f64, f64),
    pub velocity: (f64, f64),
    pub radius: f64,
    pub growth: f64,
    pub seed: u64,
}

impl BlobVideo {
    /// Random parameters that keep the blob at least partly inside the frame.
    ///
    /// One clutter level drives the scene: quiet scenes have a small, bright
    /// blob on a dark, nearly flat background; cluttered scenes have a larger,
    /// dimmer blob on a strongly textured background.
    pub fn random(rng: &mut impl Rng, width: u32, height: u32, frames: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        let side = w.min(h);
        let clutter: f64 = rng.gen();
        let radius = (0.05 + 0.15 * clutter) * side * rng.gen_range(0.8..1.2);
        let steps = (frames.max(2) - 1) as f64;
        let end_radius = (radius * rng.gen_range(0.6..1.6)).clamp(0.03 * side, 0.35 * side);
        let margin = 0.25;
        let start = (rng.gen_range(margin..1.0 - margin) * w, rng.gen_range(margin..1.0 - margin) * h);
        let end = (rng.gen_range(margin..1.0 - margin) * w, rng.gen_range(margin..1.0 - margin) * h);
        let level = (255.0 - 60.0 * clutter) as u8;
        BlobVideo {
            width,
            height,
            frames,
            background: (60.0 + 60.0 * clutter) as u8,
            noise: (6.0 + 110.0 * clutter) as u8,
            blob: [level, level.saturating_sub(rng.gen_range(0..30)), level.saturating_sub(rng.gen_range(0..30))],
            start,
            velocity: ((end.0 - start.0) / steps, (end.1 - start.1) / steps),
            radius,
            growth: (end_radius - radius) / steps,
            seed: rng.gen(),
        }
    }

    pub fn frame(&self, i: usize) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let t = i as f64;
        let (cx, cy) = (self.start.0 + self.velocity.0 * t, self.start.1 + self.velocity.1 * t);
        let r = (self.radius + self.growth * t).max(1.0);
        let r2 = r * r;
        let mut px = Vec::with_capacity((self.width * self.height * 3) as usize);
        let n = self.noise as i16;
        for y in 0..self.height {
            for x in 0..self.width {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r2 {
                    px.extend_from_slice(&self.blob);
                } else {
                    let v = (self.background as i16 + rng.gen_range(-n..=n)).clamp(0, 255) as u8;
                    px.extend_from_slice(&[v, v, v]);
                }
            }
        }
        Frame::new(self.width, self.height, px).expect("valid synthetic frame")
    }

    pub fn sequence(&self, video_id: &str) -> FrameSequence {
        FrameSequence::new(video_id, (0..self.frames).map(|i| self.frame(i)).collect()).expect("valid sequence")
    }
}

/// Uniformly random pixels.
pub fn noise_video(rng: &mut impl Rng, video_id: &str, width: u32, height: u32, frames: usize) -> FrameSequence {
    let frames = (0..frames)
        .map(|_| {
            let px = (0..width * height * 3).map(|_| rng.gen()).collect();
            Frame::new(width, height, px).unwrap()
        })
        .collect();
    FrameSequence::new(video_id, frames).unwrap()
}

pub fn write_video(root: &Path, seq: &FrameSequence) {
    let dir = root.join(seq.video_id());
    std::fs::create_dir_all(&dir).unwrap();
    for (i, f) in seq.frames().iter().enumerate() {
        write_frame(f, &dir.join(frame_file_name(i))).unwrap();
    }
}

/// `count` random blob videos named `vid000`, `vid001`, ….
pub fn blob_corpus(seed: u64, count: usize, width: u32, height: u32, frames: usize) -> Vec<FrameSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| BlobVideo::random(&mut rng, width, height, frames).sequence(&format!("vid{k:03}")))
        .collect()
}
