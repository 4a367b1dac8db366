//! File formats: PNG frame sequences, the saliency map store, trajectory
//! JSON-lines, score and evaluation CSVs, SVG charts and key=value configs.

pub mod config;
pub mod csvio;
pub mod frames;
pub mod maps;
pub mod svg;
pub mod trajectory;

pub use frames::{ingest_frames, write_frames};
pub use trajectory::{read_trajectory, write_trajectory};
