//! Natural cubic spline resampling from the frame rate to the snapshot rate.

use super::{MotionError, SnapshotSequence};
use crate::{Keypoints, Point3, KEYPOINT_COUNT};

/// Interpolating cubic spline with zero second derivative at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Fits the spline through `(knots[k], values[k])`. Knots must be strictly
    /// increasing and there must be at least two of them.
    pub fn new(knots: &[f64], values: &[f64]) -> Result<Self, MotionError> {
        let n = knots.len();
        if n != values.len() {
            return Err(MotionError::InvalidResample(format!(
                "{} knots but {} values",
                n,
                values.len()
            )));
        }
        if n < 2 {
            return Err(MotionError::InsufficientFrames { needed: 2, got: n });
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MotionError::InvalidResample("knots must be strictly increasing".into()));
        }

        // Tridiagonal system for the interior second derivatives (Thomas algorithm).
        let mut second = vec![0.0; n];
        if n > 2 {
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 1..n - 1 {
                let h0 = knots[i] - knots[i - 1];
                let h1 = knots[i + 1] - knots[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
            }
        }
        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
        })
    }

    /// Evaluates the spline; outside the knot range the end pieces extend.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.knots.len();
        let i = self.knots.partition_point(|&k| k <= t).clamp(1, n - 1) - 1;
        if t == self.knots[i] {
            return self.values[i];
        }
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let h = t1 - t0;
        let (a, b) = (t1 - t, t - t0);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (self.values[i] - m0 * h * h / 6.0) * a / h
            + (self.values[i + 1] - m1 * h * h / 6.0) * b / h
    }
}

fn linear_eval(knots: &[f64], values: &[f64], t: f64) -> f64 {
    let n = knots.len();
    let i = knots.partition_point(|&k| k <= t).clamp(1, n - 1) - 1;
    if t == knots[i] {
        return values[i];
    }
    let w = (t - knots[i]) / (knots[i + 1] - knots[i]);
    values[i] + w * (values[i + 1] - values[i])
}

/// Number of snapshots on `t = 0, Δt_s, 2Δt_s, … ≤ (frames − 1) Δt_v`.
pub fn snapshot_count(frames: usize, frame_interval: f64, snapshot_interval: f64) -> usize {
    if frames == 0 {
        return 0;
    }
    let span = (frames - 1) as f64 * frame_interval;
    // the small slack keeps an exactly-representable end point on the grid
    (span / snapshot_interval + 1e-9).floor() as usize + 1
}

/// Resamples a smoothed frame-rate trajectory onto the snapshot grid.
///
/// Each keypoint axis gets its own natural cubic spline over the knot times
/// `k Δt_v`; fewer than four frames fall back to linear interpolation.
pub fn resample(
    smoothed: &[Keypoints],
    frame_interval: f64,
    snapshot_interval: f64,
    label: &str,
) -> Result<SnapshotSequence, MotionError> {
    if smoothed.len() < 2 {
        return Err(MotionError::InsufficientFrames {
            needed: 2,
            got: smoothed.len(),
        });
    }
    if !(frame_interval > 0.0 && snapshot_interval > 0.0) {
        return Err(MotionError::InvalidResample("intervals must be positive".into()));
    }
    if snapshot_interval > frame_interval {
        return Err(MotionError::InvalidResample(format!(
            "snapshot interval {snapshot_interval} s exceeds frame interval {frame_interval} s"
        )));
    }

    let knots: Vec<f64> = (0..smoothed.len()).map(|k| k as f64 * frame_interval).collect();
    let count = snapshot_count(smoothed.len(), frame_interval, snapshot_interval);
    let times: Vec<f64> = (0..count).map(|m| m as f64 * snapshot_interval).collect();
    let mut positions = vec![[Point3::zeros(); KEYPOINT_COUNT]; count];
    let cubic = smoothed.len() >= 4;

    let mut channel = vec![0.0; smoothed.len()];
    for keypoint in 0..KEYPOINT_COUNT {
        for axis in 0..3 {
            for (value, frame) in channel.iter_mut().zip(smoothed) {
                *value = frame[keypoint][axis];
            }
            if cubic {
                let spline = NaturalCubicSpline::new(&knots, &channel)?;
                for (out, &t) in positions.iter_mut().zip(&times) {
                    out[keypoint][axis] = spline.eval(t);
                }
            } else {
                for (out, &t) in positions.iter_mut().zip(&times) {
                    out[keypoint][axis] = linear_eval(&knots, &channel, t);
                }
            }
        }
    }
    SnapshotSequence::new(snapshot_interval, positions, label)
}
