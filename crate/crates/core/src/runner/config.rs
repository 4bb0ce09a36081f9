//! The `caster-scenario/1` simulation configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunError;
use crate::camera::{CameraIntrinsics, PnpOptions};
use crate::channel::{generate_environment, GainModel, Scatterer, Scenario};
use crate::dsp::{ClutterMode, ExportFormat, StftConfig};
use crate::hand::{HandModel, SkeletonTopology, DEFAULT_SHORT_TO_LONG_RATIO};
use crate::motion::FilterParams;
use crate::Point3;

/// Format tag of the configuration document.
pub const SCENARIO_FORMAT: &str = "caster-scenario/1";

/// Static scatterers of the room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    /// `count` random scatterers around the receiver. With a seed every clip
    /// shares one environment; without, each clip draws its own from its seed.
    Random {
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit {
        scatterers: Vec<Scatterer>,
    },
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        EnvironmentConfig::Random { count: 20, seed: None }
    }
}

/// Where the hand is put in the scenario. The resampled trajectory is
/// shifted so that its mean keypoint position lands on the chosen point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// Keep the camera-frame positions unchanged.
    AsCaptured,
    Fixed { center: Point3 },
    /// `base + s · axis` with `s` uniform in `[min, max]`, drawn once per clip.
    UniformAlongAxis { base: Point3, axis: Point3, min: f64, max: f64 },
}

impl Default for Placement {
    fn default() -> Self {
        Placement::UniformAlongAxis {
            base: Point3::zeros(),
            axis: Point3::z(),
            min: 0.4,
            max: 0.8,
        }
    }
}

impl Placement {
    fn validate(&self) -> Result<(), RunError> {
        match self {
            Placement::AsCaptured => Ok(()),
            Placement::Fixed { center } if center.iter().all(|c| c.is_finite()) => Ok(()),
            Placement::UniformAlongAxis { base, axis, min, max }
                if base.iter().all(|c| c.is_finite())
                    && axis.norm() > 0.0
                    && axis.iter().all(|c| c.is_finite())
                    && min.is_finite()
                    && max.is_finite()
                    && min <= max =>
            {
                Ok(())
            }
            _ => Err(RunError::Config(format!("invalid placement {self:?}"))),
        }
    }

    /// Target point for the trajectory mean, or `None` to leave it in place.
    pub fn sample(&self, seed: u64) -> Option<Point3> {
        match self {
            Placement::AsCaptured => None,
            Placement::Fixed { center } => Some(*center),
            Placement::UniformAlongAxis { base, axis, min, max } => {
                let s = if min == max {
                    *min
                } else {
                    ChaCha8Rng::seed_from_u64(seed).random_range(*min..=*max)
                };
                Some(base + axis.normalize() * s)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandConfig {
    #[serde(default)]
    pub topology: SkeletonTopology,
    #[serde(default = "default_ratio")]
    pub short_to_long_ratio: f64,
}

fn default_ratio() -> f64 {
    DEFAULT_SHORT_TO_LONG_RATIO
}

impl Default for HandConfig {
    fn default() -> Self {
        Self {
            topology: SkeletonTopology::default(),
            short_to_long_ratio: DEFAULT_SHORT_TO_LONG_RATIO,
        }
    }
}

/// Everything that determines a simulation apart from the input clips.
///
/// Missing fields take their defaults, which reproduce the reference
/// scenario: transmitter at (0, −0.1, −1.5) m, receiver at (0.2, −0.1, 0.1) m,
/// 60.48 GHz carrier, 20 random scatterers, hand 0.4–0.8 m along +z,
/// 2000 snapshots per second and a 250-sample Hann STFT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub format: String,
    pub tx_position: Point3,
    pub rx_position: Point3,
    /// Hz.
    pub carrier_frequency: f64,
    pub antenna_gain: GainModel,
    pub environment: EnvironmentConfig,
    pub placement: Placement,
    pub hand: HandConfig,
    /// Used when a clip carries no intrinsics of its own.
    pub intrinsics: CameraIntrinsics,
    pub filter: FilterParams,
    /// Snapshots per second.
    pub snapshot_rate: f64,
    pub stft: StftConfig,
    pub clutter_mode: ClutterMode,
    /// Frames whose PnP RMS reprojection error exceeds this (pixels) are dropped.
    pub pnp_max_residual_rms: f64,
    /// Largest tolerated fraction of dropped frames per clip.
    pub drop_budget: f64,
    pub master_seed: u64,
    /// Parallel clip workers in a batch; 0 uses every core.
    pub workers: usize,
    pub outputs: Vec<ExportFormat>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            format: SCENARIO_FORMAT.to_string(),
            tx_position: Point3::new(0.0, -0.1, -1.5),
            rx_position: Point3::new(0.2, -0.1, 0.1),
            carrier_frequency: 60.48e9,
            antenna_gain: GainModel::Isotropic,
            environment: EnvironmentConfig::default(),
            placement: Placement::default(),
            hand: HandConfig::default(),
            intrinsics: CameraIntrinsics::default(),
            filter: FilterParams::default(),
            snapshot_rate: 2000.0,
            stft: StftConfig::default(),
            clutter_mode: ClutterMode::default(),
            pnp_max_residual_rms: PnpOptions::default().max_residual_rms,
            drop_budget: 0.1,
            master_seed: 0,
            workers: 0,
            outputs: vec![ExportFormat::PngGrayscale, ExportFormat::BinaryMatrixV1],
        }
    }
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let config: Self = serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, RunError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.format != SCENARIO_FORMAT {
            return Err(RunError::Config(format!(
                "unsupported format {:?}, expected {SCENARIO_FORMAT:?}",
                self.format
            )));
        }
        if !(self.snapshot_rate > 0.0 && self.snapshot_rate.is_finite()) {
            return Err(RunError::Config(format!(
                "snapshot_rate must be positive, got {}",
                self.snapshot_rate
            )));
        }
        if !(self.pnp_max_residual_rms > 0.0) {
            return Err(RunError::Config("pnp_max_residual_rms must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.drop_budget) {
            return Err(RunError::Config(format!(
                "drop_budget must be in [0, 1], got {}",
                self.drop_budget
            )));
        }
        if self.outputs.is_empty() {
            return Err(RunError::Config("at least one output format is required".into()));
        }
        self.filter.validate()?;
        self.stft.validate()?;
        self.placement.validate()?;
        self.hand_model()?;
        self.scenario(0)?;
        Ok(())
    }

    pub fn hand_model(&self) -> Result<HandModel, RunError> {
        Ok(HandModel::new(self.hand.topology.clone(), self.hand.short_to_long_ratio)?)
    }

    /// Scenario for a clip; `clip_seed` matters only for per-clip random
    /// environments.
    pub fn scenario(&self, clip_seed: u64) -> Result<Scenario, RunError> {
        let scatterers = match &self.environment {
            EnvironmentConfig::Random { count, seed } => {
                let seed = seed.unwrap_or_else(|| derive_seed(clip_seed, "environment"));
                generate_environment(seed, *count, &self.rx_position)
            }
            EnvironmentConfig::Explicit { scatterers } => scatterers.clone(),
        };
        Ok(Scenario::new(
            self.tx_position,
            self.rx_position,
            self.carrier_frequency,
            self.antenna_gain.clone(),
            scatterers,
        )?)
    }

    pub fn pnp_options(&self) -> PnpOptions {
        PnpOptions {
            max_residual_rms: self.pnp_max_residual_rms,
            ..Default::default()
        }
    }

    /// Hex SHA-256 of the canonical JSON form (keys sorted, defaults filled),
    /// so key order and omitted defaults do not change it.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_value(self).expect("config serializes");
        hex(&Sha256::digest(canonical.to_string().as_bytes()))
    }
}

/// Child seed: the first eight bytes (little-endian) of
/// `SHA-256(parent as u64 LE ‖ tag)`.
pub fn derive_seed(parent: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let config = SimulationConfig::default();
        config.validate().unwrap();
        let back = SimulationConfig::from_json(&config.to_json_pretty()).unwrap();
        assert_eq!(back, config);
        assert_eq!(SimulationConfig::from_json("{}").unwrap(), config);
    }

    #[test]
    fn digest_ignores_key_order_and_defaults() {
        let a = SimulationConfig::from_json(r#"{"carrier_frequency": 6e10, "master_seed": 3}"#).unwrap();
        let b = SimulationConfig::from_json(
            r#"{"master_seed": 3, "format": "caster-scenario/1", "carrier_frequency": 6e10}"#,
        )
        .unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        assert_ne!(a.digest(), SimulationConfig::default().digest());
    }

    #[test]
    fn rejects_bad_documents() {
        for text in [
            r#"{"format": "caster-scenario/2"}"#,
            r#"{"snapshot_rate": 0}"#,
            r#"{"drop_budget": 1.5}"#,
            r#"{"unknown": 1}"#,
            r#"{"tx_position": [0.2, -0.1, 0.1]}"#,
            r#"{"stft": {"window_length": 10, "hop": 20, "fft_length": 10}}"#,
            r#"{"placement": {"kind": "uniform_along_axis", "base": [0,0,0], "axis": [0,0,0], "min": 0, "max": 1}}"#,
            r#"{"outputs": []}"#,
        ] {
            assert!(SimulationConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn seed_derivation() {
        assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        // independent re-computation of the scheme
        let mut bytes = 7u64.to_le_bytes().to_vec();
        bytes.extend_from_slice(b"clip");
        let digest = Sha256::digest(&bytes);
        let expected = u64::from_le_bytes([
            digest[0], digest[1], digest[2], digest[3], digest[4], digest[5], digest[6], digest[7],
        ]);
        assert_eq!(derive_seed(7, "clip"), expected);
    }

    #[test]
    fn placement_sampling() {
        let p = Placement::default();
        for seed in 0..200 {
            let c = p.sample(seed).unwrap();
            assert_eq!((c.x, c.y), (0.0, 0.0));
            assert!((0.4..=0.8).contains(&c.z));
        }
        assert_eq!(p.sample(5), p.sample(5));
        assert_eq!(Placement::AsCaptured.sample(1), None);
    }

    #[test]
    fn environment_policies() {
        let shared = SimulationConfig {
            environment: EnvironmentConfig::Random { count: 5, seed: Some(9) },
            ..Default::default()
        };
        assert_eq!(shared.scenario(1).unwrap(), shared.scenario(2).unwrap());
        let per_clip = SimulationConfig::default();
        assert_ne!(per_clip.scenario(1).unwrap(), per_clip.scenario(2).unwrap());
        assert_eq!(per_clip.scenario(1).unwrap().scatterers().len(), 20);
        let explicit = SimulationConfig {
            environment: EnvironmentConfig::Explicit { scatterers: vec![] },
            ..Default::default()
        };
        assert!(explicit.scenario(3).unwrap().scatterers().is_empty());
    }
}
