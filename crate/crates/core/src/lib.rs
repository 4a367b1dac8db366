//! Saliency-guided cropping of short videos and evaluation of how the crops
//! change predicted memorability.
//!
//! The pipeline works on PNG frame sequences:
//!
//! 1. [`saliency`] computes (or loads) a per-frame saliency map, its weighted
//!    centroid and the area of the region above `mean + k·std`.
//! 2. [`plan`] turns those per-frame measurements into a [`CropTrajectory`]
//!    using one of three strategies: a fixed centre crop, a fixed-size window
//!    that tracks the centroid, or a tracking window whose size follows a
//!    least-squares linear fit of `√area`.
//! 3. [`render`] applies the trajectory to every frame.
//! 4. [`score`] scores sampled frames through a pluggable scorer and averages
//!    them into a video score.
//! 5. [`metrics`] turns before/after scores into the evaluation reports.
//!
//! [`pipeline`] ties the stages together over many videos, in parallel when
//! the `parallel` feature is enabled (the default).

pub mod error;
pub mod frame;
pub mod io;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod plan;
pub mod render;
pub mod saliency;
pub mod score;

pub use error::{Error, Result};
pub use frame::{
    clamp_rect, sample_frame_indices, CropRect, CropTrajectory, Frame, FrameSequence, RectRequest,
};
pub use par::Execution;
