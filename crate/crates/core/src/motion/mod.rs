//! Keypoint motion: clip ingest, trajectory smoothing and snapshot resampling.

mod one_euro;
mod spline;

pub use one_euro::{smooth, smoothing_factor, OneEuroFilter};
pub use spline::{resample, snapshot_count, NaturalCubicSpline};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraIntrinsics, PixelPoint, WorldPoint};
use crate::{Keypoints, KEYPOINT_COUNT};

/// Format tag of the motion interchange document.
pub const MOTION_FORMAT: &str = "caster-motion/1";

/// Timestamps must sit on the `k · Δt_v` grid within this tolerance, seconds.
pub const TIMESTAMP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("need at least {needed} frames, got {got}")]
    InsufficientFrames { needed: usize, got: usize },
    #[error("invalid motion clip: {0}")]
    InvalidClip(String),
    #[error("invalid filter parameters: {0}")]
    InvalidParams(String),
    #[error("invalid resampling request: {0}")]
    InvalidResample(String),
    #[error("motion document: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One video frame of keypoint observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp: f64,
    pub keypoints_pixel: [PixelPoint; KEYPOINT_COUNT],
    pub keypoints_world: [WorldPoint; KEYPOINT_COUNT],
}

/// Keypoint observations of one gesture recording.
///
/// Frames lie on a uniform grid `t_0 + k Δt_v`. Grid slots may be missing
/// (a detector that found no hand in a frame omits it); consumers treat
/// missing slots as dropped frames.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    frames: Vec<Frame>,
    frame_interval: f64,
    label: String,
    intrinsics: Option<CameraIntrinsics>,
}

impl MotionClip {
    pub fn new(
        frames: Vec<Frame>,
        frame_interval: f64,
        label: impl Into<String>,
        intrinsics: Option<CameraIntrinsics>,
    ) -> Result<Self, MotionError> {
        if !(frame_interval > 0.0 && frame_interval.is_finite()) {
            return Err(MotionError::InvalidClip(format!(
                "frame interval must be positive, got {frame_interval}"
            )));
        }
        if frames.len() < 2 {
            return Err(MotionError::InsufficientFrames {
                needed: 2,
                got: frames.len(),
            });
        }
        for (k, frame) in frames.iter().enumerate() {
            let finite = frame.timestamp.is_finite()
                && frame.keypoints_pixel.iter().all(|p| p.u.is_finite() && p.v.is_finite())
                && frame.keypoints_world.iter().all(|w| w.iter().all(|c| c.is_finite()));
            if !finite {
                return Err(MotionError::InvalidClip(format!("frame {k} has non-finite values")));
            }
        }
        let t0 = frames[0].timestamp;
        let mut previous_slot = 0usize;
        for (k, pair) in frames.windows(2).enumerate() {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(MotionError::InvalidClip(format!(
                    "timestamps not strictly increasing at frame {}",
                    k + 1
                )));
            }
            let offset = (pair[1].timestamp - t0) / frame_interval;
            let slot = offset.round();
            if (offset - slot).abs() * frame_interval > TIMESTAMP_TOLERANCE || slot as usize <= previous_slot {
                return Err(MotionError::InvalidClip(format!(
                    "frame {} at t={} is off the {frame_interval} s frame grid",
                    k + 1,
                    pair[1].timestamp
                )));
            }
            previous_slot = slot as usize;
        }
        Ok(Self {
            frames,
            frame_interval,
            label: label.into(),
            intrinsics,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame_interval(&self) -> f64 {
        self.frame_interval
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn intrinsics(&self) -> Option<&CameraIntrinsics> {
        self.intrinsics.as_ref()
    }

    /// Grid slot index of every frame, relative to the first frame.
    pub fn slots(&self) -> Vec<usize> {
        let t0 = self.frames[0].timestamp;
        self.frames
            .iter()
            .map(|f| ((f.timestamp - t0) / self.frame_interval).round() as usize)
            .collect()
    }

    /// Number of grid slots spanned by the clip, including missing ones.
    pub fn slot_count(&self) -> usize {
        self.slots().last().map_or(0, |s| s + 1)
    }

    pub fn from_json(text: &str) -> Result<Self, MotionError> {
        let doc: MotionDocument =
            serde_json::from_str(text).map_err(|e| MotionError::Format(e.to_string()))?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MotionDocument::from(self)).expect("motion document serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MotionError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MotionError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// On-disk layout of a motion clip.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionDocument {
    format: String,
    fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intrinsics: Option<CameraIntrinsics>,
    label: String,
    frames: Vec<FrameRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    t: f64,
    pixel: [PixelPoint; KEYPOINT_COUNT],
    world: [WorldPoint; KEYPOINT_COUNT],
}

impl TryFrom<MotionDocument> for MotionClip {
    type Error = MotionError;

    fn try_from(doc: MotionDocument) -> Result<Self, Self::Error> {
        if doc.format != MOTION_FORMAT {
            return Err(MotionError::Format(format!(
                "unsupported format {:?}, expected {MOTION_FORMAT:?}",
                doc.format
            )));
        }
        if !(doc.fps > 0.0 && doc.fps.is_finite()) {
            return Err(MotionError::Format(format!("fps must be positive, got {}", doc.fps)));
        }
        let frames = doc
            .frames
            .into_iter()
            .map(|r| Frame {
                timestamp: r.t,
                keypoints_pixel: r.pixel,
                keypoints_world: r.world,
            })
            .collect();
        MotionClip::new(frames, 1.0 / doc.fps, doc.label, doc.intrinsics)
    }
}

impl From<&MotionClip> for MotionDocument {
    fn from(clip: &MotionClip) -> Self {
        Self {
            format: MOTION_FORMAT.to_string(),
            fps: 1.0 / clip.frame_interval,
            intrinsics: clip.intrinsics,
            label: clip.label.clone(),
            frames: clip
                .frames
                .iter()
                .map(|f| FrameRecord {
                    t: f.timestamp,
                    pixel: f.keypoints_pixel,
                    world: f.keypoints_world,
                })
                .collect(),
        }
    }
}

/// One-euro filter parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    /// Minimum cutoff frequency for position, Hz.
    pub min_cutoff: f64,
    /// Speed coefficient: cutoff increase per unit of smoothed speed.
    pub beta: f64,
    /// Smoothing factor of the velocity estimate, in (0, 1].
    pub velocity_smoothing: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            min_cutoff: 1.0,
            beta: 0.5,
            velocity_smoothing: 0.3,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), MotionError> {
        if !(self.min_cutoff > 0.0 && self.min_cutoff.is_finite()) {
            return Err(MotionError::InvalidParams(format!(
                "min_cutoff must be positive, got {}",
                self.min_cutoff
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(MotionError::InvalidParams(format!(
                "beta must be non-negative, got {}",
                self.beta
            )));
        }
        if !(self.velocity_smoothing > 0.0 && self.velocity_smoothing <= 1.0) {
            return Err(MotionError::InvalidParams(format!(
                "velocity_smoothing must be in (0, 1], got {}",
                self.velocity_smoothing
            )));
        }
        Ok(())
    }
}

/// Camera-frame keypoint positions on the snapshot grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSequence {
    snapshot_interval: f64,
    positions: Vec<Keypoints>,
    label: String,
}

impl SnapshotSequence {
    pub fn new(
        snapshot_interval: f64,
        positions: Vec<Keypoints>,
        label: impl Into<String>,
    ) -> Result<Self, MotionError> {
        if !(snapshot_interval > 0.0 && snapshot_interval.is_finite()) {
            return Err(MotionError::InvalidResample(format!(
                "snapshot interval must be positive, got {snapshot_interval}"
            )));
        }
        if positions.len() < 2 {
            return Err(MotionError::InsufficientFrames {
                needed: 2,
                got: positions.len(),
            });
        }
        if !positions.iter().flatten().all(|p| p.iter().all(|c| c.is_finite())) {
            return Err(MotionError::InvalidResample("non-finite snapshot position".into()));
        }
        Ok(Self {
            snapshot_interval,
            positions,
            label: label.into(),
        })
    }

    pub fn snapshot_interval(&self) -> f64 {
        self.snapshot_interval
    }

    pub fn positions(&self) -> &[Keypoints] {
        &self.positions
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Time of snapshot `index`, seconds from the first snapshot.
    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.snapshot_interval
    }

    /// Shifts every position by `offset`.
    pub fn translate(&mut self, offset: crate::Point3) {
        for p in self.positions.iter_mut().flatten() {
            *p += offset;
        }
    }

    /// Mean of all keypoints over all snapshots.
    pub fn mean_position(&self) -> crate::Point3 {
        let n = (self.positions.len() * KEYPOINT_COUNT) as f64;
        self.positions.iter().flatten().sum::<crate::Point3>() / n
    }
}
