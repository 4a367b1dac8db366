//! Trajectory JSON-lines: a header object, then one object per sampled frame.
//!
//! ```text
//! {"video_id":"v1","src_width":320,"src_height":240,"strategy":"variable_track","fallback":true}
//! {"frame_index":0,"x":12,"y":8,"w":160,"h":120}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{CropRect, CropTrajectory, TrajectoryMeta};
use crate::plan::Strategy;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    video_id: String,
    src_width: u32,
    src_height: u32,
    strategy: Strategy,
    fallback: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    frame_index: usize,
    x: i64,
    y: i64,
    w: i64,
    h: i64,
}

pub fn trajectory_to_string(traj: &CropTrajectory) -> String {
    let (src_width, src_height) = traj.src_dims();
    let meta = traj.meta();
    let header = Header {
        video_id: traj.video_id().to_string(),
        src_width,
        src_height,
        strategy: meta.strategy,
        fallback: meta.fallback,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for (frame_index, r) in traj.rects() {
        let row = Row {
            frame_index: *frame_index,
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
        };
        out.push_str(&serde_json::to_string(&row).expect("row serializes"));
        out.push('\n');
    }
    out
}

pub fn trajectory_from_str(text: &str, path: &Path) -> Result<CropTrajectory> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::malformed_input(path, "empty trajectory file"))?;
    let header: Header =
        serde_json::from_str(first).map_err(|e| Error::malformed_input(path, format!("header: {e}")))?;
    let rects = lines
        .map(|(n, line)| {
            let row: Row = serde_json::from_str(line)
                .map_err(|e| Error::malformed_input(path, format!("line {}: {e}", n + 1)))?;
            Ok((row.frame_index, CropRect::new(row.x, row.y, row.w, row.h)))
        })
        .collect::<Result<Vec<_>>>()?;
    CropTrajectory::new(
        header.video_id,
        header.src_width,
        header.src_height,
        TrajectoryMeta {
            strategy: header.strategy,
            fallback: header.fallback,
        },
        rects,
    )
    .map_err(|e| Error::malformed_input(path, e))
}

pub fn write_trajectory(traj: &CropTrajectory, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, trajectory_to_string(traj)).map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<CropTrajectory> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    trajectory_from_str(&text, path)
}
