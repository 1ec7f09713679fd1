//! Differential imaging forensics.
//!
//! A scene image is compared against a reference baseline acquired under the
//! same conditions. Their difference is smoothed with a Gaussian to lift
//! spatially coherent signals above sensor noise, then split into positive
//! (added light) and negative (shadow, occlusion) parts that are each
//! stretched to full display range.

// `!(x > 0.0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod color;
pub mod diff;
pub mod error;
pub mod filter;
pub mod forgery;
pub mod image;
pub mod io;
pub mod params;
pub mod synth;
pub mod video;

pub use diff::{amplify_split, analyze_pair, filtered_difference, AmplifiedPair};
pub use error::{Error, Result};
pub use filter::{build_kernel, spatial_filter, GaussianKernel};
pub use image::{decode_to_float, subtract, FloatImage, Mask, RawImage};
pub use params::AnalysisParams;
pub use video::{analyze_video, FrameStream, ReferenceSpec, VideoResult};
pub use forgery::{forgery_score, ConsistencyParams, ConsistencyReport, RegionSpec, Verdict};
pub use synth::{evaluate_recovery, generate_pair, generate_stream, SceneSpec};
