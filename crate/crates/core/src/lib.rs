//! Segment-aware clipping and direct volume rendering of labelled volumes.
//!
//! The pipeline runs in four stages over a co-registered intensity volume and
//! label map:
//!
//! 1. [`clip::compute_opacity_volume`] hides voxels inside a clipping sphere whose
//!    mask marks their label as clippable, and maps the rest through the opacity
//!    transfer function;
//! 2. [`filter::antialias_opacity`] smooths high-contrast regions of the result;
//! 3. [`filter::compute_normals`] estimates surface normals from the smoothed opacity;
//! 4. [`render::PreparedVolume::render_frame`] ray casts color, normalized depth and
//!    the first-hit segment per pixel.
//!
//! [`session::CarveSession`] holds the interactive state (stacked spheres with
//! per-sphere masks), and [`metrics`] compares renders of the same view.

pub mod clip;
pub mod filter;
pub mod frame;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod render;
pub mod session;
pub mod transfer;
pub mod volume;

pub use clip::{compute_opacity_volume, is_clipped, ClipMask, ClippingSphere, OpacityVolume};
pub use frame::{ColorBuffer, DepthBuffer, FrameSet, SegBuffer};
pub use io::Scene;
pub use render::{render, render_with_threads, Camera, Dataset, PreparedVolume, RenderParams, ShadingParams};
pub use session::{CarveSession, MaskReset, PickResult, SessionConfig};
pub use transfer::OpacityTransferFunction;
pub use volume::{Grid, IntensityVolume, LabelMap, Pose, BACKGROUND_LABEL, MISS_LABEL};
