//! Pinhole camera model and hand-world to camera coordinate conversion.

mod pnp;

pub use pnp::{
    reprojection_cost, reprojection_jacobian, reprojection_residuals, solve_pnp, PnpOptions,
    PnpSolution,
};

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Point3;

/// Points closer to the image plane than this (meters) cannot be projected.
pub const MIN_DEPTH: f64 = 1e-6;

/// Keypoint coordinates in the hand-centered metric frame, meters.
pub type WorldPoint = Point3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraError {
    #[error("point is behind the camera (depth {depth:.3e} m)")]
    BehindCamera { depth: f64 },
    #[error("focal length must be positive, got {0}")]
    InvalidFocal(f64),
    #[error("pixel and world point counts differ or are too few ({pixels} vs {world})")]
    CorrespondenceMismatch { pixels: usize, world: usize },
    #[error("non-finite input to pose estimation")]
    NonFiniteInput,
    #[error("pose estimation did not converge: residual {residual_rms:.3} px after {iterations} iterations")]
    NonConvergence { residual_rms: f64, iterations: usize },
}

/// Focal length and principal point, both in pixels. No lens distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsRepr", into = "IntrinsicsRepr")]
pub struct CameraIntrinsics {
    focal: f64,
    principal_point: (f64, f64),
}

#[derive(Serialize, Deserialize)]
struct IntrinsicsRepr {
    focal: f64,
    principal_point: [f64; 2],
}

impl TryFrom<IntrinsicsRepr> for CameraIntrinsics {
    type Error = CameraError;

    fn try_from(r: IntrinsicsRepr) -> Result<Self, Self::Error> {
        Self::new(r.focal, r.principal_point[0], r.principal_point[1])
    }
}

impl From<CameraIntrinsics> for IntrinsicsRepr {
    fn from(k: CameraIntrinsics) -> Self {
        Self {
            focal: k.focal,
            principal_point: [k.principal_point.0, k.principal_point.1],
        }
    }
}

impl CameraIntrinsics {
    pub fn new(focal: f64, cx: f64, cy: f64) -> Result<Self, CameraError> {
        if !(focal > 0.0 && focal.is_finite()) {
            return Err(CameraError::InvalidFocal(focal));
        }
        Ok(Self {
            focal,
            principal_point: (cx, cy),
        })
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn principal_point(&self) -> (f64, f64) {
        self.principal_point
    }

    /// The 3x3 intrinsic matrix.
    pub fn matrix(&self) -> Matrix3<f64> {
        let (cx, cy) = self.principal_point;
        Matrix3::new(self.focal, 0.0, cx, 0.0, self.focal, cy, 0.0, 0.0, 1.0)
    }
}

impl Default for CameraIntrinsics {
    /// A 1280x720 sensor with a 1000 px focal length.
    fn default() -> Self {
        Self {
            focal: 1000.0,
            principal_point: (640.0, 360.0),
        }
    }
}

/// A pixel coordinate, serialized as `[u, v]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

impl From<[f64; 2]> for PixelPoint {
    fn from([u, v]: [f64; 2]) -> Self {
        Self { u, v }
    }
}

impl From<PixelPoint> for [f64; 2] {
    fn from(p: PixelPoint) -> Self {
        [p.u, p.v]
    }
}

/// Rigid transform from hand-world to camera coordinates: `x_c = R x_w + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vector3::zeros())
    }

    /// Builds a pose from an axis-angle vector (radians) and a translation.
    pub fn from_axis_angle(axis_angle: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self::new(Rotation3::new(axis_angle), translation)
    }

    /// Checks `R Rᵀ = I` and `det R = 1` elementwise within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let r = self.rotation.matrix();
        let orth = r * r.transpose() - Matrix3::identity();
        orth.iter().all(|e| e.abs() <= tol)
            && (r.determinant() - 1.0).abs() <= tol
            && self.translation.iter().all(|c| c.is_finite())
    }

    /// Angle of the relative rotation between two poses, radians.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        let m = self.rotation.rotation_to(&other.rotation).into_inner();
        let sin = 0.5
            * Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]).norm();
        let cos = 0.5 * (m.trace() - 1.0);
        sin.atan2(cos)
    }
}

/// Hand-world to camera coordinates.
pub fn to_camera(point: &WorldPoint, pose: &Pose) -> Point3 {
    pose.rotation * point + pose.translation
}

/// Pinhole projection of a camera-frame point.
pub fn project_camera(point: &Point3, intrinsics: &CameraIntrinsics) -> Result<PixelPoint, CameraError> {
    if !(point.z > MIN_DEPTH) {
        return Err(CameraError::BehindCamera { depth: point.z });
    }
    let (cx, cy) = intrinsics.principal_point;
    Ok(PixelPoint {
        u: intrinsics.focal * point.x / point.z + cx,
        v: intrinsics.focal * point.y / point.z + cy,
    })
}

/// Projects a hand-world point into the image.
pub fn project(
    point: &WorldPoint,
    pose: &Pose,
    intrinsics: &CameraIntrinsics,
) -> Result<PixelPoint, CameraError> {
    project_camera(&to_camera(point, pose), intrinsics)
}
