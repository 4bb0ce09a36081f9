//! Narrowband collapse, clutter removal, STFT spectrograms and exports.

mod export;
mod stft;

pub use export::{
    export, read_cstr, to_cstr_bytes, to_png_bytes, CstrMatrix, ExportFormat, CSTR_HEADER_LEN, CSTR_MAGIC,
    CSTR_VERSION,
};
pub use stft::{
    column_spectrum, frequency_axis, stft, Spectrogram, StftConfig, WindowShape, DB_FLOOR, DEFAULT_FFT_LENGTH,
    DEFAULT_HOP, DEFAULT_WINDOW_LENGTH,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelSnapshot;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("series of {len} samples is shorter than the {window}-sample window")]
    SeriesTooShort { len: usize, window: usize },
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid STFT configuration: {0}")]
    InvalidConfig(String),
    #[error("static clutter removal needs the static channel component")]
    MissingStaticComponent,
    #[error("malformed matrix file: {0}")]
    Malformed(String),
    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coherent sum of every ray amplitude of a snapshot.
pub fn collapse(snapshot: &ChannelSnapshot) -> Complex64 {
    snapshot.rays.iter().map(|r| r.amplitude).sum()
}

/// Uniformly sampled complex baseband channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NarrowbandSeries {
    sample_rate: f64,
    samples: Vec<Complex64>,
}

impl NarrowbandSeries {
    pub fn new(sample_rate: f64, samples: Vec<Complex64>) -> Result<Self, DspError> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(DspError::InvalidSeries(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some(k) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(DspError::InvalidSeries(format!("sample {k} is not finite")));
        }
        Ok(Self { sample_rate, samples })
    }

    /// Collapses each snapshot in order.
    pub fn from_snapshots(sample_rate: f64, snapshots: &[ChannelSnapshot]) -> Result<Self, DspError> {
        Self::new(sample_rate, snapshots.iter().map(collapse).collect())
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            sample_rate: self.sample_rate,
            samples: self.samples.iter().map(|s| s * factor).collect(),
        }
    }
}

/// Static clutter suppression applied before the STFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClutterMode {
    None,
    /// Subtract the complex temporal mean.
    SubtractMean,
    /// Subtract the known environment plus line-of-sight component.
    #[default]
    SubtractStatic,
}

impl std::str::FromStr for ClutterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "subtract_mean" => Ok(Self::SubtractMean),
            "subtract_static" => Ok(Self::SubtractStatic),
            other => Err(format!(
                "unknown clutter mode {other:?} (expected none, subtract_mean or subtract_static)"
            )),
        }
    }
}

/// Removes static clutter. `static_component` is required for
/// [`ClutterMode::SubtractStatic`] and ignored otherwise.
pub fn remove_clutter(
    series: &NarrowbandSeries,
    mode: ClutterMode,
    static_component: Option<Complex64>,
) -> Result<NarrowbandSeries, DspError> {
    let offset = match mode {
        ClutterMode::None => return Ok(series.clone()),
        ClutterMode::SubtractMean => {
            if series.is_empty() {
                return Ok(series.clone());
            }
            series.samples.iter().sum::<Complex64>() / series.len() as f64
        }
        ClutterMode::SubtractStatic => static_component.ok_or(DspError::MissingStaticComponent)?,
    };
    Ok(NarrowbandSeries {
        sample_rate: series.sample_rate,
        samples: series.samples.iter().map(|s| s - offset).collect(),
    })
}
