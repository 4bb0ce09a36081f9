//! Perspective-n-Point pose estimation.
//!
//! The reprojection error is minimized with Levenberg-Marquardt over a
//! 6-vector (rotation increment as an axis-angle, translation increment).
//! Rotation updates are applied through the exponential map, so the estimate
//! stays on SO(3) at every iteration. Cold starts are seeded with a
//! normalized DLT estimate plus a few coarse centroid-based guesses; the
//! lowest-cost refinement wins.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Rotation3, Vector3, Vector6};

use super::{to_camera, CameraError, CameraIntrinsics, PixelPoint, Pose, WorldPoint, MIN_DEPTH};

/// Levenberg-Marquardt settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpOptions {
    pub max_iterations: usize,
    /// Stop when the parameter step norm falls below this.
    pub min_step: f64,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub min_relative_decrease: f64,
    pub initial_damping: f64,
    /// A solution whose RMS reprojection error exceeds this (pixels) is
    /// reported as [`CameraError::NonConvergence`].
    pub max_residual_rms: f64,
}

impl Default for PnpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            min_step: 1e-10,
            min_relative_decrease: 1e-12,
            initial_damping: 1e-3,
            max_residual_rms: 25.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpSolution {
    pub pose: Pose,
    /// Root-mean-square reprojection error over all points, pixels.
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Stacked residuals `project(world_i) - pixel_i`, `[du_0, dv_0, du_1, ...]`.
///
/// Points at or behind the image plane yield `None`.
pub fn reprojection_residuals(
    pose: &Pose,
    pixels: &[PixelPoint],
    world: &[WorldPoint],
    intrinsics: &CameraIntrinsics,
) -> Option<DVector<f64>> {
    let f = intrinsics.focal();
    let (cx, cy) = intrinsics.principal_point();
    let mut r = DVector::zeros(2 * world.len());
    for (i, (px, w)) in pixels.iter().zip(world).enumerate() {
        let c = to_camera(w, pose);
        if !(c.z > MIN_DEPTH) {
            return None;
        }
        r[2 * i] = f * c.x / c.z + cx - px.u;
        r[2 * i + 1] = f * c.y / c.z + cy - px.v;
    }
    Some(r)
}

/// Sum of squared reprojection errors, or infinity when a point falls behind
/// the camera.
pub fn reprojection_cost(
    pose: &Pose,
    pixels: &[PixelPoint],
    world: &[WorldPoint],
    intrinsics: &CameraIntrinsics,
) -> f64 {
    reprojection_residuals(pose, pixels, world, intrinsics)
        .map_or(f64::INFINITY, |r| r.norm_squared())
}

/// Jacobian of [`reprojection_residuals`] with respect to the local
/// perturbation `(δω, δt)` where the perturbed pose is
/// `(exp(δω) R, t + δt)`.
pub fn reprojection_jacobian(
    pose: &Pose,
    world: &[WorldPoint],
    intrinsics: &CameraIntrinsics,
) -> DMatrix<f64> {
    let f = intrinsics.focal();
    let mut jac = DMatrix::zeros(2 * world.len(), 6);
    for (i, w) in world.iter().enumerate() {
        let rotated = pose.rotation * w;
        let c = rotated + pose.translation;
        let inv_z = 1.0 / c.z;
        // d(pixel)/d(camera point)
        let du = Vector3::new(f * inv_z, 0.0, -f * c.x * inv_z * inv_z);
        let dv = Vector3::new(0.0, f * inv_z, -f * c.y * inv_z * inv_z);
        // d(camera point)/d(δω) = -[R p]x
        let skew = -rotated.cross_matrix();
        let du_dw = skew.transpose() * du;
        let dv_dw = skew.transpose() * dv;
        for k in 0..3 {
            jac[(2 * i, k)] = du_dw[k];
            jac[(2 * i + 1, k)] = dv_dw[k];
            jac[(2 * i, 3 + k)] = du[k];
            jac[(2 * i + 1, 3 + k)] = dv[k];
        }
    }
    jac
}

/// Estimates the hand-world to camera pose from 2D-3D correspondences.
///
/// With `initial` present the solver refines from it and falls back to a
/// cold start only if that refinement ends above the residual threshold.
pub fn solve_pnp(
    pixels: &[PixelPoint],
    world: &[WorldPoint],
    intrinsics: &CameraIntrinsics,
    initial: Option<&Pose>,
    options: &PnpOptions,
) -> Result<PnpSolution, CameraError> {
    if pixels.len() != world.len() || world.len() < 4 {
        return Err(CameraError::CorrespondenceMismatch {
            pixels: pixels.len(),
            world: world.len(),
        });
    }
    let finite = pixels.iter().all(|p| p.u.is_finite() && p.v.is_finite())
        && world.iter().all(|w| w.iter().all(|c| c.is_finite()));
    if !finite {
        return Err(CameraError::NonFiniteInput);
    }

    let accept = |s: &PnpSolution| s.residual_rms.is_finite() && s.residual_rms <= options.max_residual_rms;

    if let Some(seed) = initial {
        let warm = refine(*seed, pixels, world, intrinsics, options);
        if accept(&warm) {
            return Ok(warm);
        }
    }

    let mut best: Option<PnpSolution> = None;
    for seed in cold_start_candidates(pixels, world, intrinsics) {
        let sol = refine(seed, pixels, world, intrinsics, options);
        let better = match &best {
            None => true,
            Some(b) => sol.residual_rms < b.residual_rms || (!b.residual_rms.is_finite() && sol.residual_rms.is_finite()),
        };
        if better {
            best = Some(sol);
        }
    }
    let best = best.expect("at least one candidate");
    debug_assert!(best.pose.is_valid(1e-9));
    if accept(&best) {
        Ok(best)
    } else {
        Err(CameraError::NonConvergence {
            residual_rms: best.residual_rms,
            iterations: best.iterations,
        })
    }
}

fn refine(
    seed: Pose,
    pixels: &[PixelPoint],
    world: &[WorldPoint],
    intrinsics: &CameraIntrinsics,
    options: &PnpOptions,
) -> PnpSolution {
    let n = world.len() as f64;
    let mut pose = seed;
    let mut residuals = match reprojection_residuals(&pose, pixels, world, intrinsics) {
        Some(r) => r,
        None => {
            return PnpSolution {
                pose,
                residual_rms: f64::INFINITY,
                iterations: 0,
            }
        }
    };
    let mut cost = residuals.norm_squared();
    let mut damping = options.initial_damping;
    let mut iterations = 0;

    'outer: while iterations < options.max_iterations && cost > 0.0 {
        iterations += 1;
        let jac = reprojection_jacobian(&pose, world, intrinsics);
        let jt = jac.transpose();
        let hessian: Matrix6<f64> = (&jt * &jac).fixed_view::<6, 6>(0, 0).into_owned();
        let gradient: Vector6<f64> = (&jt * &residuals).fixed_rows::<6>(0).into_owned();

        loop {
            let mut system = hessian;
            for k in 0..6 {
                system[(k, k)] += damping * hessian[(k, k)].max(1e-12);
            }
            let Some(step) = system.cholesky().map(|c| c.solve(&(-gradient))) else {
                damping *= 10.0;
                if damping > 1e16 {
                    break 'outer;
                }
                continue;
            };
            let candidate = apply_step(&pose, &step);
            let trial = reprojection_residuals(&candidate, pixels, world, intrinsics);
            let trial_cost = trial.as_ref().map_or(f64::INFINITY, |r| r.norm_squared());
            if trial_cost < cost {
                let decrease = (cost - trial_cost) / cost;
                pose = candidate;
                residuals = trial.expect("finite cost implies residuals");
                cost = trial_cost;
                damping = (damping / 10.0).max(1e-15);
                if step.norm() < options.min_step || decrease < options.min_relative_decrease {
                    break 'outer;
                }
                break;
            }
            damping *= 10.0;
            if damping > 1e16 || step.norm() < options.min_step {
                break 'outer;
            }
        }
    }

    PnpSolution {
        pose,
        residual_rms: (cost / n).sqrt(),
        iterations,
    }
}

fn apply_step(pose: &Pose, step: &Vector6<f64>) -> Pose {
    let dw = Vector3::new(step[0], step[1], step[2]);
    let dt = Vector3::new(step[3], step[4], step[5]);
    let mut rotation = Rotation3::new(dw) * pose.rotation;
    rotation.renormalize();
    Pose::new(rotation, pose.translation + dt)
}

fn cold_start_candidates(
    pixels: &[PixelPoint],
    world: &[WorldPoint],
    intrinsics: &CameraIntrinsics,
) -> Vec<Pose> {
    let mut seeds = Vec::with_capacity(5);
    if let Some(pose) = dlt_pose(pixels, world, intrinsics) {
        seeds.push(pose);
    }
    let flips = [
        Rotation3::identity(),
        Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI),
        Rotation3::from_axis_angle(&Vector3::y_axis(), std::f64::consts::PI),
        Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::PI),
    ];
    seeds.extend(flips.iter().map(|r| centroid_pose(*r, pixels, world, intrinsics)));
    seeds
}

/// Places the rotated point cloud so that its centroid projects onto the
/// pixel centroid at a depth matching the observed image spread.
fn centroid_pose(
    rotation: Rotation3<f64>,
    pixels: &[PixelPoint],
    world: &[WorldPoint],
    intrinsics: &CameraIntrinsics,
) -> Pose {
    let n = world.len() as f64;
    let f = intrinsics.focal();
    let (cx, cy) = intrinsics.principal_point();
    let wc = world.iter().sum::<Vector3<f64>>() / n;
    let (mu, mv) = pixels
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.u / n, b + p.v / n));
    let world_spread = (world.iter().map(|w| (w - wc).norm_squared()).sum::<f64>() / n).sqrt();
    let pixel_spread = (pixels
        .iter()
        .map(|p| (p.u - mu).powi(2) + (p.v - mv).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let depth = if pixel_spread > 1e-9 && world_spread > 0.0 {
        f * world_spread / pixel_spread
    } else {
        1.0
    };
    let center = Vector3::new((mu - cx) / f * depth, (mv - cy) / f * depth, depth);
    Pose::new(rotation, center - rotation * wc)
}

/// Direct linear transform on normalized image coordinates, projected onto
/// SO(3). Returns `None` for configurations the linear system cannot resolve.
fn dlt_pose(pixels: &[PixelPoint], world: &[WorldPoint], intrinsics: &CameraIntrinsics) -> Option<Pose> {
    let n = world.len();
    if n < 6 {
        return None;
    }
    let f = intrinsics.focal();
    let (cx, cy) = intrinsics.principal_point();
    let centroid = world.iter().sum::<Vector3<f64>>() / n as f64;
    let scale = (world.iter().map(|w| (w - centroid).norm_squared()).sum::<f64>() / n as f64).sqrt();
    if scale <= 0.0 {
        return None;
    }

    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, (px, w)) in pixels.iter().zip(world).enumerate() {
        let x = (w - centroid) / scale;
        let xh = [x.x, x.y, x.z, 1.0];
        let un = (px.u - cx) / f;
        let vn = (px.v - cy) / f;
        for k in 0..4 {
            a[(2 * i, k)] = xh[k];
            a[(2 * i, 8 + k)] = -un * xh[k];
            a[(2 * i + 1, 4 + k)] = xh[k];
            a[(2 * i + 1, 8 + k)] = -vn * xh[k];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let (smallest, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let p = v_t.row(smallest);

    // undo the world normalization: P = P' [I/s, -c/s; 0, 1]
    let mut m = Matrix3::from_fn(|r, c| p[4 * r + c] / scale);
    let mut p4 = Vector3::from_fn(|r, _| p[4 * r + 3]) - m * centroid;
    if m.determinant() < 0.0 {
        m = -m;
        p4 = -p4;
    }
    let msvd = m.svd(true, true);
    let (u, v_t) = (msvd.u?, msvd.v_t?);
    let mut rot = u * v_t;
    if rot.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        rot = u * v_t;
    }
    let s = msvd.singular_values.mean();
    if !(s > 0.0) {
        return None;
    }
    let pose = Pose::new(Rotation3::from_matrix_unchecked(rot), p4 / s);
    let depth = to_camera(&centroid, &pose).z;
    (depth > MIN_DEPTH && pose.is_valid(1e-6)).then_some(pose)
}
