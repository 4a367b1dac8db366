use std::fs;
use std::path::{Path, PathBuf};

use image::RgbImage;

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameSequence};

/// File name of frame `index` in a sequence directory.
pub fn frame_file_name(index: usize) -> String {
    format!("{index:06}.png")
}

fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if stem.is_empty() || !stem.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::malformed_input(&path, "frame file name is not a numeric index"));
        }
        paths.push(path);
    }
    paths.sort();
    Ok(paths)
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path)
        .map_err(|e| Error::malformed_input(path, e))?
        .into_rgb8();
    let (w, h) = img.dimensions();
    Frame::new(w, h, img.into_raw())
}

/// Load `dir/NNNNNN.png` frames in file-name order. The video id is the
/// directory name.
pub fn ingest_frames(dir: &Path) -> Result<FrameSequence> {
    let paths = frame_paths(dir)?;
    if paths.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    let mut frames = Vec::with_capacity(paths.len());
    for path in &paths {
        let frame = read_frame(path)?;
        if let Some(first) = frames.first().map(Frame::dims) {
            if frame.dims() != first {
                return Err(Error::MixedDimensions {
                    path: path.clone(),
                    expected: first,
                    found: frame.dims(),
                });
            }
        }
        frames.push(frame);
    }
    FrameSequence::new(video_id_of(dir), frames)
}

pub fn video_id_of(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

pub fn write_frame(frame: &Frame, path: &Path) -> Result<()> {
    let img = RgbImage::from_raw(frame.width(), frame.height(), frame.pixels().to_vec())
        .expect("frame buffer matches its dimensions");
    img.save(path).map_err(|e| Error::malformed_input(path, e))
}

/// Write every frame as `dir/NNNNNN.png`, creating `dir`.
pub fn write_frames(seq: &FrameSequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in seq.frames().iter().enumerate() {
        write_frame(frame, &dir.join(frame_file_name(i)))?;
    }
    Ok(())
}

/// Video directories directly under `root`, sorted by name.
pub fn list_video_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}
