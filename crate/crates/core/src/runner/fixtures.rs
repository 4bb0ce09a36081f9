//! Synthetic gesture clips that stand in for recorded video.
//!
//! Every fixture animates a canonical hand in its own (hand-world) frame,
//! moves it with a rigid camera pose, and projects the result through a
//! pinhole camera, producing the same kind of document the keypoint
//! extractor writes.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, RunError};
use crate::camera::{project, CameraIntrinsics, PixelPoint, Pose};
use crate::motion::{Frame, MotionClip, MotionError};
use crate::{Keypoints, Point3, KEYPOINT_COUNT};

/// Gesture patterns with their motion parameters (meters, seconds, radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GestureKind {
    /// Rigid hand moving along the camera axis, `z(t) = z₀ − A cos(2πt/P)`.
    PushPull { amplitude: f64, period: f64 },
    /// Wrist still, the four fingers curling towards the palm and back.
    Beckon { angle: f64, period: f64 },
    Static,
    /// Thumb sliding sideways against the index finger.
    Rubbing { amplitude: f64, period: f64 },
    /// Fingers spreading apart and closing, relative amplitude.
    Scaling { amplitude: f64, period: f64 },
    /// A 1.5 cm rigid cluster receding from the camera at constant speed.
    SinglePointRadial { speed: f64 },
}

impl GestureKind {
    /// Names accepted by [`FromStr`].
    pub const NAMES: [&'static str; 6] = ["push_pull", "beckon", "static", "rubbing", "scaling", "single_point_radial"];

    pub fn push_pull() -> Self {
        GestureKind::PushPull { amplitude: 0.1, period: 1.0 }
    }

    pub fn beckon() -> Self {
        GestureKind::Beckon { angle: 1.0, period: 1.0 }
    }

    pub fn rubbing() -> Self {
        GestureKind::Rubbing { amplitude: 0.01, period: 0.25 }
    }

    pub fn scaling() -> Self {
        GestureKind::Scaling { amplitude: 0.3, period: 1.0 }
    }

    pub fn single_point_radial(speed: f64) -> Self {
        GestureKind::SinglePointRadial { speed }
    }

    /// The five gestures used for fixture datasets.
    pub fn dataset_gestures() -> [GestureKind; 5] {
        [
            Self::push_pull(),
            Self::beckon(),
            GestureKind::Static,
            Self::rubbing(),
            Self::scaling(),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            GestureKind::PushPull { .. } => "push_pull",
            GestureKind::Beckon { .. } => "beckon",
            GestureKind::Static => "static",
            GestureKind::Rubbing { .. } => "rubbing",
            GestureKind::Scaling { .. } => "scaling",
            GestureKind::SinglePointRadial { .. } => "single_point_radial",
        }
    }

    fn varied(self, rng: &mut ChaCha8Rng) -> Self {
        let mut jitter = || rng.random_range(0.8..1.2);
        match self {
            GestureKind::PushPull { amplitude, period } => GestureKind::PushPull {
                amplitude: amplitude * jitter(),
                period: period * jitter(),
            },
            GestureKind::Beckon { angle, period } => GestureKind::Beckon {
                angle: angle * jitter(),
                period: period * jitter(),
            },
            GestureKind::Rubbing { amplitude, period } => GestureKind::Rubbing {
                amplitude: amplitude * jitter(),
                period: period * jitter(),
            },
            GestureKind::Scaling { amplitude, period } => GestureKind::Scaling {
                amplitude: amplitude * jitter(),
                period: period * jitter(),
            },
            other => other,
        }
    }
}

impl FromStr for GestureKind {
    type Err = String;

    /// Parses a gesture name with default parameters; `single_point_radial`
    /// moves at 1 m/s.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "push_pull" => Self::push_pull(),
            "beckon" => Self::beckon(),
            "static" => GestureKind::Static,
            "rubbing" => Self::rubbing(),
            "scaling" => Self::scaling(),
            "single_point_radial" => Self::single_point_radial(1.0),
            other => return Err(format!("unknown gesture {other:?}, expected one of {:?}", Self::NAMES)),
        })
    }
}

/// Camera and placement of a synthesized clip.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub intrinsics: CameraIntrinsics,
    /// Camera-axis distance of the hand centroid at rest, meters.
    pub depth: f64,
    /// Extra hand rotation (axis-angle, radians) on top of palm-facing-camera.
    pub tilt: Vector3<f64>,
    pub hand_scale: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            depth: 0.6,
            tilt: Vector3::zeros(),
            hand_scale: 1.0,
        }
    }
}

const CANONICAL_HAND: [[f64; 3]; KEYPOINT_COUNT] = [
    [0.0, 0.0, 0.0],
    [0.025, 0.02, 0.005],
    [0.045, 0.04, 0.01],
    [0.06, 0.06, 0.012],
    [0.07, 0.08, 0.015],
    [0.025, 0.085, 0.0],
    [0.027, 0.12, 0.005],
    [0.028, 0.145, 0.01],
    [0.029, 0.165, 0.015],
    [0.005, 0.09, 0.0],
    [0.005, 0.13, 0.005],
    [0.005, 0.155, 0.01],
    [0.005, 0.175, 0.015],
    [-0.015, 0.085, 0.0],
    [-0.017, 0.118, 0.005],
    [-0.018, 0.14, 0.01],
    [-0.019, 0.158, 0.015],
    [-0.033, 0.075, 0.0],
    [-0.037, 0.1, 0.005],
    [-0.039, 0.117, 0.008],
    [-0.04, 0.132, 0.012],
];

/// An open right hand in its own frame: fingers along +y, palm normal along
/// +z, keypoint centroid at the origin. Meters.
pub fn canonical_hand() -> Keypoints {
    let raw: Keypoints = std::array::from_fn(|k| Point3::from(CANONICAL_HAND[k]));
    let centroid = raw.iter().sum::<Point3>() / KEYPOINT_COUNT as f64;
    raw.map(|p| p - centroid)
}

const FINGER_BASES: [usize; 4] = [5, 9, 13, 17];
const THUMB_JOINTS: [usize; 2] = [3, 4];

fn hand_shape(kind: &GestureKind, rest: &Keypoints, t: f64) -> Keypoints {
    let mut kp = *rest;
    match *kind {
        GestureKind::Beckon { angle, period } => {
            let a = angle * 0.5 * (1.0 - (2.0 * PI * t / period).cos());
            let curl = Rotation3::from_axis_angle(&Vector3::x_axis(), a);
            for base in FINGER_BASES {
                for joint in base + 1..base + 4 {
                    kp[joint] = rest[base] + curl * (rest[joint] - rest[base]);
                }
            }
        }
        GestureKind::Rubbing { amplitude, period } => {
            let dx = amplitude * (2.0 * PI * t / period).sin();
            for joint in THUMB_JOINTS {
                kp[joint].x += dx;
            }
        }
        GestureKind::Scaling { amplitude, period } => {
            let s = 1.0 + amplitude * (2.0 * PI * t / period).sin();
            for p in kp.iter_mut() {
                p.x *= s;
            }
        }
        _ => {}
    }
    kp
}

fn hand_translation(kind: &GestureKind, depth: f64, t: f64) -> Vector3<f64> {
    let z = match *kind {
        GestureKind::PushPull { amplitude, period } => depth - amplitude * (2.0 * PI * t / period).cos(),
        GestureKind::SinglePointRadial { speed } => depth + speed * t,
        _ => depth,
    };
    Vector3::new(0.0, 0.0, z)
}

/// Hand pose at time `t`: palm towards the camera (hand +y maps to image
/// up), tilted by `options.tilt`, centroid on the camera axis.
pub fn fixture_pose(kind: &GestureKind, options: &SynthOptions, t: f64) -> Pose {
    let facing = Rotation3::from_axis_angle(&Vector3::x_axis(), PI);
    Pose::new(facing * Rotation3::new(options.tilt), hand_translation(kind, options.depth, t))
}

/// Synthesizes `round(duration · fps)` frames with default camera options.
pub fn synth_gesture(kind: GestureKind, duration: f64, fps: f64) -> Result<MotionClip, RunError> {
    synth_gesture_with(kind, duration, fps, &SynthOptions::default())
}

pub fn synth_gesture_with(
    kind: GestureKind,
    duration: f64,
    fps: f64,
    options: &SynthOptions,
) -> Result<MotionClip, RunError> {
    if !(duration > 0.0 && duration.is_finite() && fps > 0.0 && fps.is_finite()) {
        return Err(RunError::Config(format!(
            "duration and fps must be positive, got {duration} s at {fps} fps"
        )));
    }
    if !(options.hand_scale > 0.0 && options.depth > 0.0) {
        return Err(RunError::Config("hand_scale and depth must be positive".into()));
    }
    let count = (duration * fps).round() as usize;
    let scale = match kind {
        GestureKind::SinglePointRadial { .. } => 0.08 * options.hand_scale,
        _ => options.hand_scale,
    };
    let rest = canonical_hand().map(|p| p * scale);
    let mut frames = Vec::with_capacity(count);
    for k in 0..count {
        let t = k as f64 / fps;
        let world = hand_shape(&kind, &rest, t);
        let pose = fixture_pose(&kind, options, t);
        let mut pixel = [PixelPoint::default(); KEYPOINT_COUNT];
        for (px, w) in pixel.iter_mut().zip(&world) {
            *px = project(w, &pose, &options.intrinsics)?;
        }
        frames.push(Frame {
            timestamp: t,
            keypoints_pixel: pixel,
            keypoints_world: world,
        });
    }
    if frames.len() < 2 {
        return Err(MotionError::InsufficientFrames {
            needed: 2,
            got: frames.len(),
        }
        .into());
    }
    Ok(MotionClip::new(frames, 1.0 / fps, kind.name(), Some(options.intrinsics))?)
}

/// `per_kind` varied clips of every gesture, with ids `<name>_<nn>`.
///
/// Each clip's variation (amplitude, period, depth, tilt, hand size) is
/// drawn from a seed derived from `seed` and the clip id.
pub fn fixture_suite(
    kinds: &[GestureKind],
    per_kind: usize,
    duration: f64,
    fps: f64,
    seed: u64,
) -> Result<Vec<(String, MotionClip)>, RunError> {
    let mut out = Vec::with_capacity(kinds.len() * per_kind);
    for kind in kinds {
        for n in 0..per_kind {
            let id = format!("{}_{n:02}", kind.name());
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &id));
            let options = SynthOptions {
                depth: rng.random_range(0.5..0.7),
                tilt: Vector3::from_fn(|_, _| rng.random_range(-0.15..0.15)),
                hand_scale: rng.random_range(0.9..1.1),
                ..Default::default()
            };
            let varied = kind.varied(&mut rng);
            out.push((id, synth_gesture_with(varied, duration, fps, &options)?));
        }
    }
    Ok(out)
}
