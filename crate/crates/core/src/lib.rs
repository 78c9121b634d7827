//! Mask propagation for video object tracking.
//!
//! A first-frame mask is carried through a video by a pluggable
//! [`segmenter::Segmenter`]. Around it sit two optional mechanisms:
//!
//! * motion prompts: keypoints extrapolated at constant velocity become
//!   point prompts ([`sparse`]), and the previous mask warped by dense optical
//!   flow becomes a box prompt ([`flow`]);
//! * memory selection: the bank of past frames the segmenter consults is
//!   chosen by confidence instead of recency, and stored probability maps
//!   are filtered per pixel ([`memory`]).
//!
//! [`simulator`] renders synthetic scenes with exact ground truth,
//! [`metrics`] scores predictions, and [`pipeline`] ties everything together.

pub mod error;
pub mod flow;
pub mod frame;
pub mod io;
pub mod mask;
pub mod memory;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod segmenter;
pub mod simulator;
pub mod sparse;

pub use error::{Error, Result};
