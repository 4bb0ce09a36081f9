//! End-to-end pipeline, seeded batches and synthetic gesture fixtures.
//!
//! One clip flows through: per-frame PnP (warm-started from the previous
//! frame) → hand-world to camera coordinates → gap filling → one-euro
//! smoothing → spline resampling → placement in the scenario → one channel
//! snapshot per sample → narrowband collapse → clutter removal → STFT.

mod batch;
mod config;
mod fixtures;

pub use batch::{
    clip_seed, export_clip, run_batch, BatchItem, ClipSource, DatasetManifest, EntryStatus, ManifestEntry, OutputFile,
    MANIFEST_FILE, MANIFEST_FORMAT,
};
pub use config::{derive_seed, EnvironmentConfig, HandConfig, Placement, SimulationConfig, SCENARIO_FORMAT};
pub use fixtures::{
    canonical_hand, fixture_pose, fixture_suite, synth_gesture, synth_gesture_with, GestureKind, SynthOptions,
};

use rayon::prelude::*;
use thiserror::Error;

use crate::camera::{solve_pnp, to_camera, CameraError, CameraIntrinsics, PnpOptions, Pose};
use crate::channel::{ChannelError, ChannelGenerator};
use crate::dsp::{collapse, remove_clutter, stft, DspError, NarrowbandSeries, Spectrogram};
use crate::hand::HandError;
use crate::motion::{resample, smooth, FilterParams, MotionClip, MotionError, SnapshotSequence};
use crate::{Keypoints, Point3, KEYPOINT_COUNT};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("clip rejected: {dropped} of {total} frames dropped, budget {budget}")]
    ClipRejected { dropped: usize, total: usize, budget: f64 },
    #[error("invalid batch: {0}")]
    Batch(String),
    #[error("every clip of the batch failed")]
    BatchFailed,
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Hand(#[from] HandError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Camera-frame keypoints on every grid slot of a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraTrajectory {
    pub positions: Vec<Keypoints>,
    /// Slots that were missing from the clip or whose pose did not converge.
    pub dropped: Vec<usize>,
}

/// Recovers camera-frame keypoints frame by frame.
///
/// Each solve is warm-started from the last converged pose. Frames that do
/// not converge and grid slots absent from the clip count as dropped; if
/// their share exceeds `drop_budget` the clip is rejected. Otherwise dropped
/// slots are filled by linear interpolation between the nearest recovered
/// slots (holding the end values at the edges).
pub fn camera_trajectory(
    clip: &MotionClip,
    intrinsics: &CameraIntrinsics,
    options: &PnpOptions,
    drop_budget: f64,
) -> Result<CameraTrajectory, RunError> {
    let total = clip.slot_count();
    let mut recovered: Vec<Option<Keypoints>> = vec![None; total];
    let mut previous: Option<Pose> = None;
    for (frame, slot) in clip.frames().iter().zip(clip.slots()) {
        match solve_pnp(
            &frame.keypoints_pixel,
            &frame.keypoints_world,
            intrinsics,
            previous.as_ref(),
            options,
        ) {
            Ok(solution) => {
                previous = Some(solution.pose);
                let mut kp = [Point3::zeros(); KEYPOINT_COUNT];
                for (c, w) in kp.iter_mut().zip(&frame.keypoints_world) {
                    *c = to_camera(w, &solution.pose);
                }
                recovered[slot] = Some(kp);
            }
            Err(CameraError::NonConvergence { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }

    let dropped: Vec<usize> = (0..total).filter(|&s| recovered[s].is_none()).collect();
    let good: Vec<usize> = (0..total).filter(|&s| recovered[s].is_some()).collect();
    if dropped.len() as f64 > drop_budget * total as f64 || good.len() < 2 {
        return Err(RunError::ClipRejected {
            dropped: dropped.len(),
            total,
            budget: drop_budget,
        });
    }

    let mut positions = Vec::with_capacity(total);
    let mut next_good = 0;
    for slot in 0..total {
        if let Some(kp) = recovered[slot] {
            positions.push(kp);
            continue;
        }
        while next_good < good.len() && good[next_good] < slot {
            next_good += 1;
        }
        let filled = match (next_good.checked_sub(1).map(|i| good[i]), good.get(next_good)) {
            (Some(lo), Some(&hi)) => {
                let w = (slot - lo) as f64 / (hi - lo) as f64;
                let (a, b) = (recovered[lo].unwrap(), recovered[hi].unwrap());
                std::array::from_fn(|k| a[k] + (b[k] - a[k]) * w)
            }
            (Some(lo), None) => recovered[lo].unwrap(),
            (None, Some(&hi)) => recovered[hi].unwrap(),
            (None, None) => unreachable!("at least two recovered slots"),
        };
        positions.push(filled);
    }
    Ok(CameraTrajectory { positions, dropped })
}

/// Smooths a slot trajectory and resamples it to the snapshot rate.
pub fn snapshot_sequence(
    trajectory: &CameraTrajectory,
    frame_interval: f64,
    filter: &FilterParams,
    snapshot_rate: f64,
    label: &str,
) -> Result<SnapshotSequence, RunError> {
    let smoothed = smooth(&trajectory.positions, frame_interval, filter)?;
    Ok(resample(&smoothed, frame_interval, 1.0 / snapshot_rate, label)?)
}

/// Result of running one clip.
#[derive(Debug, Clone)]
pub struct ClipOutput {
    pub spectrogram: Spectrogram,
    /// Narrowband channel before clutter removal.
    pub series: NarrowbandSeries,
    /// Collapsed environment plus line-of-sight component.
    pub static_component: num_complex::Complex64,
    pub snapshot_count: usize,
    pub rays_per_snapshot: usize,
    pub dropped_frames: Vec<usize>,
    /// Translation applied to the camera-frame trajectory to place it.
    pub placement_offset: Point3,
}

/// Runs the whole pipeline for one clip. `seed` drives the per-clip random
/// choices (placement and, unless pinned by the configuration, the
/// environment).
pub fn run_clip(clip: &MotionClip, config: &SimulationConfig, seed: u64) -> Result<ClipOutput, RunError> {
    config.validate()?;
    let intrinsics = clip.intrinsics().copied().unwrap_or(config.intrinsics);
    let trajectory = camera_trajectory(clip, &intrinsics, &config.pnp_options(), config.drop_budget)?;
    let mut sequence = snapshot_sequence(
        &trajectory,
        clip.frame_interval(),
        &config.filter,
        config.snapshot_rate,
        clip.label(),
    )?;
    let placement_offset = match config.placement.sample(derive_seed(seed, "placement")) {
        Some(center) => center - sequence.mean_position(),
        None => Point3::zeros(),
    };
    sequence.translate(placement_offset);

    let generator = ChannelGenerator::new(config.scenario(seed)?, config.hand_model()?)?;
    let samples = sequence
        .positions()
        .par_iter()
        .enumerate()
        .map(|(m, kp)| generator.snapshot(sequence.time(m), kp).map(|s| collapse(&s)))
        .collect::<Result<Vec<_>, _>>()?;
    let series = NarrowbandSeries::new(config.snapshot_rate, samples)?;
    let static_component = generator.static_component();
    let cleaned = remove_clutter(&series, config.clutter_mode, Some(static_component))?;
    let spectrogram = stft(&cleaned, &config.stft, clip.label())?;

    Ok(ClipOutput {
        spectrogram,
        series,
        static_component,
        snapshot_count: sequence.len(),
        rays_per_snapshot: KEYPOINT_COUNT + generator.static_rays().len(),
        dropped_frames: trajectory.dropped,
        placement_offset,
    })
}
