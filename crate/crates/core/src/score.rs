//! Memorability scoring.
//!
//! A video's score is the mean of its sampled frames' scores. Frame scores
//! come from a [`Scorer`]: a table of precomputed scores exported by an
//! external model, a constant, or a contrast-based stand-in.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameSequence};
use crate::io::csvio;

/// A memorability score in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct MemorabilityScore(f64);

impl MemorabilityScore {
    pub fn new(value: f64, source_name: &str) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(MemorabilityScore(value))
        } else {
            Err(Error::ScoreOutOfRange {
                value,
                source_name: source_name.to_string(),
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum ScorerConfig {
    /// Per-frame scores from a `video_id,frame_index,score` CSV.
    FileStore { path: PathBuf },
    Constant { value: f64 },
    /// Population std of the frame's luma divided by 127.5.
    #[default]
    SyntheticContrast,
}


/// A ready-to-use scorer. File-backed scorers load their table once.
#[derive(Clone, Debug)]
pub enum Scorer {
    Table {
        name: String,
        scores: HashMap<(String, usize), f64>,
    },
    Constant(MemorabilityScore),
    SyntheticContrast,
}

impl Scorer {
    pub fn from_config(cfg: &ScorerConfig) -> Result<Self> {
        match cfg {
            ScorerConfig::FileStore { path } => Scorer::from_csv(path),
            ScorerConfig::Constant { value } => {
                let score = MemorabilityScore::new(*value, "constant scorer")
                    .map_err(|_| Error::invalid(format!("constant score {value} outside [0, 1]")))?;
                Ok(Scorer::Constant(score))
            }
            ScorerConfig::SyntheticContrast => Ok(Scorer::SyntheticContrast),
        }
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let rows = csvio::read_frame_scores(path)?;
        let mut scores = HashMap::with_capacity(rows.len());
        for row in rows {
            scores.insert((row.video_id, row.frame_index), row.score);
        }
        Ok(Scorer::Table {
            name: path.display().to_string(),
            scores,
        })
    }

    pub fn score_frame(&self, frame: &Frame, video_id: &str, frame_index: usize) -> Result<MemorabilityScore> {
        match self {
            Scorer::Table { name, scores } => {
                let value = scores
                    .get(&(video_id.to_string(), frame_index))
                    .ok_or_else(|| Error::MissingScore {
                        video_id: video_id.to_string(),
                        frame_index,
                    })?;
                MemorabilityScore::new(*value, name)
            }
            Scorer::Constant(s) => Ok(*s),
            Scorer::SyntheticContrast => {
                MemorabilityScore::new(contrast_score(frame), "synthetic contrast scorer")
            }
        }
    }

    /// Mean frame score over `frame_indices`.
    pub fn score_video(&self, seq: &FrameSequence, frame_indices: &[usize]) -> Result<MemorabilityScore> {
        if frame_indices.is_empty() {
            return Err(Error::invalid("no sampled frames to score"));
        }
        let mut sum = 0.0;
        for &i in frame_indices {
            let frame = seq.frames().get(i).ok_or_else(|| {
                Error::invalid(format!("frame index {i} out of range for {} frames", seq.len()))
            })?;
            sum += self.score_frame(frame, seq.video_id(), i)?.value();
        }
        MemorabilityScore::new(sum / frame_indices.len() as f64, "video mean")
    }
}

/// Normalized luma contrast: 0 for a flat frame, 1 for an even black/white split.
fn contrast_score(frame: &Frame) -> f64 {
    // Luma scaled by 1000 is an integer, so n²·var is computed exactly.
    let (mut n, mut s, mut s2) = (0u128, 0u128, 0u128);
    for p in frame.pixels().chunks_exact(3) {
        let l = (299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32) as u128;
        n += 1;
        s += l;
        s2 += l * l;
    }
    let n2_var = (n * s2 - s * s) as f64;
    let std = n2_var.sqrt() / (n as f64 * 1000.0);
    (std / 127.5).min(1.0)
}

/// Score the frames at `sample_frame_indices(len, stride)`.
pub fn score_video(seq: &FrameSequence, scorer: &Scorer, stride: usize) -> Result<MemorabilityScore> {
    let idx = crate::frame::sample_frame_indices(seq.len(), stride)?;
    scorer.score_video(seq, &idx)
}
