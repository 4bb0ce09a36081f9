//! Antenna gain models.

use serde::{Deserialize, Serialize};

use super::ChannelError;
use crate::Point3;

/// Gain pattern sampled on an azimuth/elevation grid in the scenario frame.
///
/// Azimuth is `atan2(y, x)` and elevation `asin(z / |d|)`, both in degrees,
/// of the direction `d` pointing away from the antenna. Values between grid
/// points are bilinearly interpolated; directions outside the grid use the
/// nearest edge value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternTable {
    pub azimuth_deg: Vec<f64>,
    pub elevation_deg: Vec<f64>,
    /// `gain_dbi[e][a]` is the gain at `elevation_deg[e]`, `azimuth_deg[a]`.
    pub gain_dbi: Vec<Vec<f64>>,
}

impl PatternTable {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let increasing = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&self.azimuth_deg) || !increasing(&self.elevation_deg) {
            return Err(ChannelError::InvalidScenario(
                "pattern axes must be non-empty and strictly increasing".into(),
            ));
        }
        let shape_ok = self.gain_dbi.len() == self.elevation_deg.len()
            && self.gain_dbi.iter().all(|row| row.len() == self.azimuth_deg.len());
        if !shape_ok {
            return Err(ChannelError::InvalidScenario(
                "pattern gain table shape does not match its axes".into(),
            ));
        }
        if !self.gain_dbi.iter().flatten().all(|g| g.is_finite()) {
            return Err(ChannelError::InvalidScenario("non-finite pattern gain".into()));
        }
        Ok(())
    }

    /// Linear (power) gain towards `direction`.
    pub fn gain(&self, direction: &Point3) -> f64 {
        let norm = direction.norm();
        if norm == 0.0 {
            return 1.0;
        }
        let azimuth = direction.y.atan2(direction.x).to_degrees();
        let elevation = (direction.z / norm).clamp(-1.0, 1.0).asin().to_degrees();
        let (e0, e1, we) = bracket(&self.elevation_deg, elevation);
        let (a0, a1, wa) = bracket(&self.azimuth_deg, azimuth);
        let g = &self.gain_dbi;
        let db = (1.0 - we) * ((1.0 - wa) * g[e0][a0] + wa * g[e0][a1])
            + we * ((1.0 - wa) * g[e1][a0] + wa * g[e1][a1]);
        10f64.powf(db / 10.0)
    }
}

fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let hi = axis.partition_point(|&a| a <= x);
    let lo = hi - 1;
    (lo, hi, (x - axis[lo]) / (axis[hi] - axis[lo]))
}

/// How transmit and receive antenna gains are obtained.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainModel {
    /// Unit gain in every direction.
    #[default]
    Isotropic,
    /// Separate sampled patterns for the transmit and receive antennas.
    Table { tx: PatternTable, rx: PatternTable },
}

impl GainModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        match self {
            GainModel::Isotropic => Ok(()),
            GainModel::Table { tx, rx } => {
                tx.validate()?;
                rx.validate()
            }
        }
    }

    /// `(G_t, G_r)` for a path leaving the transmitter along `departure` and
    /// reaching the receiver from the direction `arrival` (pointing from the
    /// receiver towards the last interaction point).
    pub fn gains(&self, departure: &Point3, arrival: &Point3) -> (f64, f64) {
        match self {
            GainModel::Isotropic => (1.0, 1.0),
            GainModel::Table { tx, rx } => (tx.gain(departure), rx.gain(arrival)),
        }
    }
}
