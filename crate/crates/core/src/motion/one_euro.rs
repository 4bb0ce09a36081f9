//! One-euro trajectory smoothing.
//!
//! A first-order low-pass filter whose cutoff grows with the smoothed speed:
//! slow motion is smoothed hard (less jitter), fast motion lightly (less lag).

use std::f64::consts::PI;

use super::{FilterParams, MotionError};
use crate::{Keypoints, KEYPOINT_COUNT};

/// Position smoothing factor for a given smoothed speed.
pub fn smoothing_factor(frame_interval: f64, params: &FilterParams, speed: f64) -> f64 {
    let cutoff = params.min_cutoff + params.beta * speed.abs();
    1.0 / (1.0 + 1.0 / (2.0 * PI * frame_interval * cutoff))
}

/// Streaming one-euro filter for a single scalar channel.
#[derive(Debug, Clone)]
pub struct OneEuroFilter {
    params: FilterParams,
    frame_interval: f64,
    state: Option<(f64, f64)>,
}

impl OneEuroFilter {
    pub fn new(params: FilterParams, frame_interval: f64) -> Result<Self, MotionError> {
        params.validate()?;
        if !(frame_interval > 0.0 && frame_interval.is_finite()) {
            return Err(MotionError::InvalidParams(format!(
                "frame interval must be positive, got {frame_interval}"
            )));
        }
        Ok(Self {
            params,
            frame_interval,
            state: None,
        })
    }

    /// Feeds one sample and returns the smoothed value.
    pub fn filter(&mut self, sample: f64) -> f64 {
        let (position, velocity) = match self.state {
            None => (sample, 0.0),
            Some((prev_position, prev_velocity)) => {
                let raw_velocity = (sample - prev_position) / self.frame_interval;
                let velocity = self.params.velocity_smoothing * raw_velocity
                    + (1.0 - self.params.velocity_smoothing) * prev_velocity;
                let alpha = smoothing_factor(self.frame_interval, &self.params, velocity);
                // prev + α (x − prev) equals α x + (1 − α) prev and keeps constants exact
                (prev_position + alpha * (sample - prev_position), velocity)
            }
        };
        self.state = Some((position, velocity));
        position
    }

    pub fn reset(&mut self) {
        self.state = None;
    }
}

/// Smooths every keypoint axis of a frame-rate trajectory independently.
pub fn smooth(
    trajectory: &[Keypoints],
    frame_interval: f64,
    params: &FilterParams,
) -> Result<Vec<Keypoints>, MotionError> {
    if trajectory.len() < 2 {
        return Err(MotionError::InsufficientFrames {
            needed: 2,
            got: trajectory.len(),
        });
    }
    let template = OneEuroFilter::new(*params, frame_interval)?;
    let mut out = trajectory.to_vec();
    for keypoint in 0..KEYPOINT_COUNT {
        for axis in 0..3 {
            let mut filter = template.clone();
            for (frame, smoothed) in trajectory.iter().zip(out.iter_mut()) {
                smoothed[keypoint][axis] = filter.filter(frame[keypoint][axis]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Point3;
    use proptest::prelude::*;

    #[test]
    fn constant_alpha_without_speed_term() {
        let params = FilterParams {
            min_cutoff: 1.0,
            beta: 0.0,
            velocity_smoothing: 0.3,
        };
        let alpha = smoothing_factor(1.0 / 30.0, &params, 123.0);
        let expected = 1.0 / (1.0 + 30.0 / (2.0 * PI));
        assert!((alpha - expected).abs() < 1e-15);
        assert!((alpha - 0.17317).abs() < 1e-5);
    }

    #[test]
    fn constant_trajectory_is_fixed_point() {
        let frames = vec![[Point3::new(0.1, -0.2, 0.6); KEYPOINT_COUNT]; 40];
        let out = smooth(&frames, 1.0 / 30.0, &FilterParams::default()).unwrap();
        assert_eq!(out, frames);
    }

    #[test]
    fn unit_step_matches_hand_computation() {
        // gamma = 1, beta = 0: velocity does not enter alpha
        let params = FilterParams {
            min_cutoff: 1.0,
            beta: 0.0,
            velocity_smoothing: 1.0,
        };
        let dt = 1.0 / 30.0;
        let alpha = 1.0 / (1.0 + 1.0 / (2.0 * PI * dt));
        let mut f = OneEuroFilter::new(params, dt).unwrap();
        assert_eq!(f.filter(0.0), 0.0);
        let mut expected = 0.0;
        for _ in 0..10 {
            expected = alpha * 1.0 + (1.0 - alpha) * expected;
            let got = f.filter(1.0);
            assert!((got - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_short_input_and_bad_params() {
        let one = vec![[Point3::zeros(); KEYPOINT_COUNT]; 1];
        assert!(smooth(&one, 0.1, &FilterParams::default()).is_err());
        let two = vec![[Point3::zeros(); KEYPOINT_COUNT]; 2];
        assert!(smooth(&two, 0.0, &FilterParams::default()).is_err());
        let bad = FilterParams { min_cutoff: -1.0, ..Default::default() };
        assert!(smooth(&two, 0.1, &bad).is_err());
    }

    #[test]
    fn reset_restarts_from_next_sample() {
        let mut f = OneEuroFilter::new(FilterParams::default(), 0.1).unwrap();
        f.filter(0.0);
        f.filter(5.0);
        f.reset();
        assert_eq!(f.filter(2.5), 2.5);
    }

    fn tone_amplitude(samples: &[f64], freq: f64, dt: f64) -> f64 {
        let (re, im) = samples.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, &x)| {
            let phase = 2.0 * PI * freq * k as f64 * dt;
            (re + x * phase.cos(), im - x * phase.sin())
        });
        2.0 * (re * re + im * im).sqrt() / samples.len() as f64
    }

    #[test]
    fn attenuates_jitter_but_keeps_slow_motion() {
        let dt = 1.0 / 30.0;
        let input: Vec<f64> = (0..300)
            .map(|k| {
                let t = k as f64 * dt;
                0.1 * (2.0 * PI * 0.5 * t).sin() + 0.005 * (2.0 * PI * 10.0 * t).sin()
            })
            .collect();
        let mut f = OneEuroFilter::new(FilterParams::default(), dt).unwrap();
        let output: Vec<f64> = input.iter().map(|&x| f.filter(x)).collect();
        // skip the first two seconds of start-up transient; 8 s holds whole periods of both tones
        let (inp, out) = (&input[60..], &output[60..]);
        let slow = tone_amplitude(out, 0.5, dt) / tone_amplitude(inp, 0.5, dt);
        let fast = tone_amplitude(out, 10.0, dt) / tone_amplitude(inp, 10.0, dt);
        assert!(fast <= 0.5, "10 Hz gain {fast}");
        assert!(slow >= 0.9, "0.5 Hz gain {slow}");
    }

    proptest! {
        #[test]
        fn output_finite_and_alpha_in_unit_interval(
            samples in prop::collection::vec(-1e3f64..1e3, 2..200),
            min_cutoff in 0.01f64..50.0,
            beta in 0.0f64..10.0,
            gamma in 0.01f64..=1.0,
        ) {
            let params = FilterParams { min_cutoff, beta, velocity_smoothing: gamma };
            let dt = 1.0 / 30.0;
            let mut f = OneEuroFilter::new(params, dt).unwrap();
            let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for s in samples {
                let out = f.filter(s);
                prop_assert!(out.is_finite());
                // convex combination keeps the output inside the input range
                prop_assert!(out >= lo - 1e-9 && out <= hi + 1e-9);
                let (_, v) = f.state.unwrap();
                let a = smoothing_factor(dt, &params, v);
                prop_assert!(a > 0.0 && a < 1.0);
            }
        }
    }
}
