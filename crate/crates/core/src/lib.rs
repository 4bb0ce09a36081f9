//! Hand-keypoint driven wireless channel simulation.
//!
//! Hand motion captured as 21 keypoints per video frame is converted to
//! camera coordinates, smoothed, resampled to the channel snapshot rate, and
//! turned into per-snapshot channel impulse responses by tracing one ray off
//! each ellipsoidal hand segment, plus static environment scatterers and the
//! line-of-sight path. The narrowband channel is then turned into a
//! time-Doppler spectrogram.
//!
//! The modules follow the data flow:
//!
//! - [`camera`]: pinhole projection and PnP pose recovery per frame.
//! - [`motion`]: clip ingest, one-euro smoothing, spline resampling.
//! - [`hand`]: skeleton topology and ellipsoid primitives.
//! - [`channel`]: bistatic RCS, ray amplitudes, environment, snapshots.
//! - [`dsp`]: narrowband collapse, clutter removal, STFT, exports.
//! - [`runner`]: configuration, the end-to-end pipeline, batches and fixtures.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod channel;
pub mod dsp;
pub mod hand;
pub mod motion;
pub mod runner;

use nalgebra::Vector3;

/// Number of hand keypoints (and of hand primitives).
pub const KEYPOINT_COUNT: usize = 21;

/// A position in meters.
pub type Point3 = Vector3<f64>;

/// The 21 keypoints of one hand at one instant.
pub type Keypoints = [Point3; KEYPOINT_COUNT];

/// The guide's chapters, compiled so their code blocks run as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/hand.md")]
    mod hand {}
    #[doc = include_str!("../../../book/src/motion.md")]
    mod motion {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/spectrogram.md")]
    mod spectrogram {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
}
