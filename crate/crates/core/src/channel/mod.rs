//! Ray-based channel impulse responses.
//!
//! A snapshot's channel is the sum of a target-related part, one ray per hand
//! primitive, and a time-invariant target-unrelated part made of one ray per
//! static scatterer plus the line-of-sight ray. Every ray carries a
//! continuous delay and a complex amplitude that already includes the
//! carrier phase `e^{-j 2π f_c τ}`.

mod antenna;
mod environment;
mod rcs;

pub use antenna::{GainModel, PatternTable};
pub use environment::{generate_environment, ENVIRONMENT_EXTENT, SCATTERER_RCS_MEAN, SCATTERER_RCS_STD};
pub use rcs::{bistatic_geometry, ellipsoid_rcs, BistaticGeometry, ON_AXIS_EPSILON};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hand::{HandError, HandModel, Primitive};
use crate::{Keypoints, Point3};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{0} coincide")]
    CoincidentPosition(&'static str),
    #[error(transparent)]
    Hand(#[from] HandError),
}

/// A static point scatterer of the environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scatterer {
    pub position: Point3,
    /// Radar cross section, m².
    pub rcs: f64,
}

/// Antenna placement, carrier and environment of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    tx_position: Point3,
    rx_position: Point3,
    carrier_frequency: f64,
    antenna_gain: GainModel,
    scatterers: Vec<Scatterer>,
}

impl Scenario {
    pub fn new(
        tx_position: Point3,
        rx_position: Point3,
        carrier_frequency: f64,
        antenna_gain: GainModel,
        scatterers: Vec<Scatterer>,
    ) -> Result<Self, ChannelError> {
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(ChannelError::InvalidScenario(format!(
                "carrier frequency must be positive, got {carrier_frequency}"
            )));
        }
        let finite = |p: &Point3| p.iter().all(|c| c.is_finite());
        if !finite(&tx_position) || !finite(&rx_position) {
            return Err(ChannelError::InvalidScenario("non-finite antenna position".into()));
        }
        if (tx_position - rx_position).norm() < ON_AXIS_EPSILON {
            return Err(ChannelError::CoincidentPosition("transmitter and receiver"));
        }
        for (k, s) in scatterers.iter().enumerate() {
            if !(s.rcs >= 0.0 && s.rcs.is_finite()) || !finite(&s.position) {
                return Err(ChannelError::InvalidScenario(format!("scatterer {k} is invalid")));
            }
        }
        antenna_gain.validate()?;
        Ok(Self {
            tx_position,
            rx_position,
            carrier_frequency,
            antenna_gain,
            scatterers,
        })
    }

    pub fn tx_position(&self) -> Point3 {
        self.tx_position
    }

    pub fn rx_position(&self) -> Point3 {
        self.rx_position
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    /// Carrier wavelength `c / f_c`, meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn antenna_gain(&self) -> &GainModel {
        &self.antenna_gain
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    /// Copy of this scenario with transmitter and receiver exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tx_position: self.rx_position,
            rx_position: self.tx_position,
            ..self.clone()
        }
    }
}

/// What a ray interacted with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayTag {
    Primitive(usize),
    Scatterer(usize),
    LineOfSight,
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    /// Complex field coefficient including the carrier phase.
    pub amplitude: Complex64,
    /// Propagation delay, seconds.
    pub delay: f64,
    /// Unwrapped carrier phase `2π f_c τ`, radians.
    pub phase: f64,
    pub tag: RayTag,
}

impl Ray {
    /// Builds a ray of real magnitude `magnitude` over a path of
    /// `path_length` meters.
    pub fn new(magnitude: f64, path_length: f64, carrier_frequency: f64, tag: RayTag) -> Self {
        let delay = path_length / SPEED_OF_LIGHT;
        // reduce to the fractional number of carrier cycles before forming the
        // phasor; the fused multiply-add recovers the rounding error of the
        // product so long paths keep full phase precision
        let per_meter = carrier_frequency / SPEED_OF_LIGHT;
        let cycles = path_length * per_meter;
        let residual = path_length.mul_add(per_meter, -cycles);
        let fraction = (cycles - cycles.floor()) + residual;
        Self {
            amplitude: Complex64::from_polar(magnitude, -2.0 * PI * fraction),
            delay,
            phase: 2.0 * PI * carrier_frequency * delay,
            tag,
        }
    }
}

/// Magnitude of a singly scattered ray: `λ √(σ G_t G_r / ((4π)³ (R_t R_r)²))`.
pub fn scattered_magnitude(rcs: f64, gains: (f64, f64), range_t: f64, range_r: f64, wavelength: f64) -> f64 {
    let four_pi = 4.0 * PI;
    let ranges = range_t * range_r;
    wavelength * (rcs * gains.0 * gains.1 / (four_pi * four_pi * four_pi * ranges * ranges)).sqrt()
}

/// Free-space line-of-sight magnitude `λ √(G_t G_r) / (4π R)`.
pub fn free_space_magnitude(gains: (f64, f64), range: f64, wavelength: f64) -> f64 {
    wavelength * (gains.0 * gains.1).sqrt() / (4.0 * PI * range)
}

/// Ray scattered off primitive `index`.
pub fn primitive_ray(index: usize, primitive: &Primitive, scenario: &Scenario) -> Result<Ray, ChannelError> {
    let (tx, rx) = (scenario.tx_position, scenario.rx_position);
    let geometry = bistatic_geometry(primitive, &tx, &rx)?;
    let rcs = ellipsoid_rcs(&geometry, primitive.half_length_long, primitive.half_length_short);
    let gains = scenario
        .antenna_gain
        .gains(&(primitive.center - tx), &(primitive.center - rx));
    let magnitude = scattered_magnitude(rcs, gains, geometry.range_t, geometry.range_r, scenario.wavelength());
    Ok(Ray::new(
        magnitude,
        geometry.range_t + geometry.range_r,
        scenario.carrier_frequency,
        RayTag::Primitive(index),
    ))
}

/// One ray per primitive, in primitive order.
pub fn target_related(primitives: &[Primitive], scenario: &Scenario) -> Result<Vec<Ray>, ChannelError> {
    primitives
        .iter()
        .enumerate()
        .map(|(n, p)| primitive_ray(n, p, scenario))
        .collect()
}

/// One ray per static scatterer.
pub fn environment_rays(scenario: &Scenario) -> Result<Vec<Ray>, ChannelError> {
    let (tx, rx) = (scenario.tx_position, scenario.rx_position);
    scenario
        .scatterers
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (range_t, range_r) = ((s.position - tx).norm(), (s.position - rx).norm());
            if range_t < ON_AXIS_EPSILON || range_r < ON_AXIS_EPSILON {
                return Err(ChannelError::CoincidentPosition("scatterer and antenna"));
            }
            let gains = scenario.antenna_gain.gains(&(s.position - tx), &(s.position - rx));
            let magnitude = scattered_magnitude(s.rcs, gains, range_t, range_r, scenario.wavelength());
            Ok(Ray::new(
                magnitude,
                range_t + range_r,
                scenario.carrier_frequency,
                RayTag::Scatterer(k),
            ))
        })
        .collect()
}

/// The direct transmitter-to-receiver ray.
pub fn los_ray(scenario: &Scenario) -> Ray {
    let path = scenario.rx_position - scenario.tx_position;
    let range = path.norm();
    let gains = scenario.antenna_gain.gains(&path, &(-path));
    Ray::new(
        free_space_magnitude(gains, range, scenario.wavelength()),
        range,
        scenario.carrier_frequency,
        RayTag::LineOfSight,
    )
}

/// All rays of one quasi-static snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    /// Snapshot time, seconds.
    pub time: f64,
    pub rays: Vec<Ray>,
}

impl ChannelSnapshot {
    pub fn target_rays(&self) -> impl Iterator<Item = &Ray> {
        self.rays.iter().filter(|r| matches!(r.tag, RayTag::Primitive(_)))
    }

    pub fn static_rays(&self) -> impl Iterator<Item = &Ray> {
        self.rays.iter().filter(|r| !matches!(r.tag, RayTag::Primitive(_)))
    }
}

/// Assembles a snapshot from hand keypoints and precomputed static rays.
pub fn snapshot_channel(
    time: f64,
    keypoints: &Keypoints,
    hand: &HandModel,
    scenario: &Scenario,
    static_rays: &[Ray],
) -> Result<ChannelSnapshot, ChannelError> {
    let primitives = hand.primitives(keypoints)?;
    let mut rays = target_related(&primitives, scenario)?;
    rays.extend_from_slice(static_rays);
    Ok(ChannelSnapshot { time, rays })
}

/// Scenario plus its time-invariant rays, computed once.
#[derive(Debug, Clone)]
pub struct ChannelGenerator {
    scenario: Scenario,
    hand: HandModel,
    static_rays: Vec<Ray>,
}

impl ChannelGenerator {
    pub fn new(scenario: Scenario, hand: HandModel) -> Result<Self, ChannelError> {
        let mut static_rays = environment_rays(&scenario)?;
        static_rays.push(los_ray(&scenario));
        Ok(Self {
            scenario,
            hand,
            static_rays,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn hand(&self) -> &HandModel {
        &self.hand
    }

    /// Environment rays followed by the line-of-sight ray.
    pub fn static_rays(&self) -> &[Ray] {
        &self.static_rays
    }

    /// Narrowband sum of the static rays.
    pub fn static_component(&self) -> Complex64 {
        self.static_rays.iter().map(|r| r.amplitude).sum()
    }

    pub fn snapshot(&self, time: f64, keypoints: &Keypoints) -> Result<ChannelSnapshot, ChannelError> {
        snapshot_channel(time, keypoints, &self.hand, &self.scenario, &self.static_rays)
    }
}
