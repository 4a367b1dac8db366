//! Saliency map store: `<dir>/<video_id>/<frame_index>.png` (8-bit
//! grayscale, value/255) or `.csv` (one row per image row, comma separated).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::GrayImage;

use crate::error::{Error, Result};
use crate::saliency::SaliencyMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MapFormat {
    #[default]
    Png,
    Csv,
}

pub fn map_path(dir: &Path, video_id: &str, frame_index: usize, format: MapFormat) -> PathBuf {
    let ext = match format {
        MapFormat::Png => "png",
        MapFormat::Csv => "csv",
    };
    dir.join(video_id).join(format!("{frame_index}.{ext}"))
}

/// Load a stored map, preferring the PNG when both exist.
pub fn load_stored_map(dir: &Path, video_id: &str, frame_index: usize) -> Result<SaliencyMap> {
    let png = map_path(dir, video_id, frame_index, MapFormat::Png);
    if png.is_file() {
        return read_map_png(&png);
    }
    let csv = map_path(dir, video_id, frame_index, MapFormat::Csv);
    if csv.is_file() {
        return read_map_csv(&csv);
    }
    Err(Error::Backend(format!(
        "no stored saliency map for `{video_id}` frame {frame_index} under {}",
        dir.display()
    )))
}

pub fn read_map_png(path: &Path) -> Result<SaliencyMap> {
    let img = image::open(path)
        .map_err(|e| Error::Backend(format!("{}: {e}", path.display())))?
        .into_luma8();
    let (w, h) = img.dimensions();
    let values = img.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
    SaliencyMap::new(w, h, values)
}

pub fn read_map_csv(path: &Path) -> Result<SaliencyMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::Backend(format!("{}: {e}", path.display())))?;
    let bad = |reason: String| Error::Backend(format!("{}: {reason}", path.display()));
    let mut values = Vec::new();
    let mut width = None;
    let mut height = 0u32;
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(bad(format!("line {} has {} values, expected {w}", n + 1, row.len())))
            }
            _ => {}
        }
        values.extend(row);
        height += 1;
    }
    let width = width.ok_or_else(|| bad("empty saliency map".into()))?;
    SaliencyMap::new(width as u32, height, values).map_err(|e| bad(e.to_string()))
}

pub fn write_map(map: &SaliencyMap, path: &Path, format: MapFormat) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    match format {
        MapFormat::Png => {
            let bytes = map
                .values()
                .iter()
                .map(|v| (v * 255.0 + 0.5).floor() as u8)
                .collect();
            let img = GrayImage::from_raw(map.width(), map.height(), bytes).expect("map dims");
            img.save(path).map_err(|e| Error::malformed_input(path, e))
        }
        MapFormat::Csv => {
            let mut out = String::new();
            for row in map.values().chunks(map.width() as usize) {
                for (i, v) in row.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write!(out, "{v}").unwrap();
                }
                out.push('\n');
            }
            fs::write(path, out).map_err(|e| Error::io(path, e))
        }
    }
}
