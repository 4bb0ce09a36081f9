//! Short-time Fourier transform of a narrowband series.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{DspError, NarrowbandSeries};

/// 0.125 s at 2000 snapshots per second.
pub const DEFAULT_WINDOW_LENGTH: usize = 250;
pub const DEFAULT_HOP: usize = 25;
pub const DEFAULT_FFT_LENGTH: usize = 250;
/// Dynamic range kept below the spectrogram maximum, dB.
pub const DB_FLOOR: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowShape {
    Rectangular,
    #[default]
    Hann,
}

impl WindowShape {
    /// Window coefficients of the given length. Hann is the symmetric form
    /// `0.5 (1 − cos(2π n / (L − 1)))`.
    pub fn coefficients(self, length: usize) -> Vec<f64> {
        match self {
            WindowShape::Rectangular => vec![1.0; length],
            WindowShape::Hann if length == 1 => vec![1.0],
            WindowShape::Hann => {
                let denom = (length - 1) as f64;
                (0..length)
                    .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / denom).cos()))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop: usize,
    #[serde(default)]
    pub window_shape: WindowShape,
    pub fft_length: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_length: DEFAULT_WINDOW_LENGTH,
            hop: DEFAULT_HOP,
            window_shape: WindowShape::Hann,
            fft_length: DEFAULT_FFT_LENGTH,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        if !(0 < self.hop && self.hop <= self.window_length && self.window_length <= self.fft_length) {
            return Err(DspError::InvalidConfig(format!(
                "need 0 < hop ({}) <= window_length ({}) <= fft_length ({})",
                self.hop, self.window_length, self.fft_length
            )));
        }
        Ok(())
    }

    /// Number of columns for a series of `len` samples.
    pub fn column_count(&self, len: usize) -> usize {
        if len < self.window_length {
            0
        } else {
            (len - self.window_length) / self.hop + 1
        }
    }
}

/// Centered two-sided frequency axis: bin `k` maps to
/// `(k − ⌊N/2⌋) · f_s / N`, so 0 Hz sits at row `⌊N/2⌋`.
pub fn frequency_axis(fft_length: usize, sample_rate: f64) -> Vec<f64> {
    let half = (fft_length / 2) as f64;
    (0..fft_length)
        .map(|k| (k as f64 - half) * sample_rate / fft_length as f64)
        .collect()
}

/// Unshifted DFT of `window ⊙ segment`, zero-padded to `fft_length`.
pub fn column_spectrum(segment: &[Complex64], window: &[f64], fft_length: usize) -> Vec<Complex64> {
    let mut buffer = vec![Complex64::new(0.0, 0.0); fft_length];
    for ((b, s), w) in buffer.iter_mut().zip(segment).zip(window) {
        *b = s * w;
    }
    FftPlanner::new().plan_fft_forward(fft_length).process(&mut buffer);
    buffer
}

/// Time-Doppler magnitude in dB.
///
/// `magnitude_db` is row-major with one row per frequency bin (ascending
/// frequency) and one column per STFT frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitude_db: Vec<f64>,
    pub frequency_axis: Vec<f64>,
    /// Window centers, seconds from the first sample.
    pub time_axis: Vec<f64>,
    pub label: String,
}

impl Spectrogram {
    pub fn rows(&self) -> usize {
        self.frequency_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.time_axis.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.magnitude_db[row * self.cols() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows()).map(|r| self.get(r, col)).collect()
    }

    /// Column spacing, seconds.
    pub fn time_step(&self) -> f64 {
        match self.time_axis.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }

    /// Frequency of the strongest bin in a column; the lowest bin wins ties.
    pub fn peak_frequency(&self, col: usize) -> f64 {
        let column = self.column(col);
        let mut best = 0;
        for (r, &v) in column.iter().enumerate() {
            if v > column[best] {
                best = r;
            }
        }
        self.frequency_axis[best]
    }

    pub fn max_db(&self) -> f64 {
        self.magnitude_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Computes the fftshifted magnitude spectrogram in dB, floored at
/// [`DB_FLOOR`] below its maximum. A series that is identically zero yields
/// a matrix filled with [`DB_FLOOR`].
pub fn stft(series: &NarrowbandSeries, config: &StftConfig, label: &str) -> Result<Spectrogram, DspError> {
    config.validate()?;
    let samples = series.samples();
    if samples.len() < config.window_length {
        return Err(DspError::SeriesTooShort {
            len: samples.len(),
            window: config.window_length,
        });
    }
    let n = config.fft_length;
    let columns = config.column_count(samples.len());
    let window = config.window_shape.coefficients(config.window_length);
    let fft = FftPlanner::new().plan_fft_forward(n);
    let shift = n / 2;

    let mut magnitude = vec![0.0; n * columns];
    let mut buffer = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..columns {
        let start = col * config.hop;
        buffer.fill(Complex64::new(0.0, 0.0));
        for ((b, s), w) in buffer.iter_mut().zip(&samples[start..]).zip(&window) {
            *b = s * w;
        }
        fft.process(&mut buffer);
        for (k, x) in buffer.iter().enumerate() {
            let row = (k + shift) % n;
            magnitude[row * columns + col] = x.norm();
        }
    }

    let peak = magnitude.iter().cloned().fold(0.0, f64::max);
    let magnitude_db = if peak > 0.0 {
        let floor = 20.0 * peak.log10() + DB_FLOOR;
        magnitude.iter().map(|&m| (20.0 * m.log10()).max(floor)).collect()
    } else {
        vec![DB_FLOOR; magnitude.len()]
    };

    let rate = series.sample_rate();
    let half_window = config.window_length as f64 / 2.0;
    Ok(Spectrogram {
        magnitude_db,
        frequency_axis: frequency_axis(n, rate),
        time_axis: (0..columns)
            .map(|c| ((c * config.hop) as f64 + half_window) / rate)
            .collect(),
        label: label.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tone(freq: f64, rate: f64, len: usize) -> NarrowbandSeries {
        let samples = (0..len)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * freq * k as f64 / rate))
            .collect();
        NarrowbandSeries::new(rate, samples).unwrap()
    }

    fn rectangular() -> StftConfig {
        StftConfig {
            window_shape: WindowShape::Rectangular,
            ..Default::default()
        }
    }

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * t % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn axis_and_shape() {
        let axis = frequency_axis(250, 2000.0);
        assert_eq!(axis[0], -1000.0);
        assert_eq!(axis[125], 0.0);
        assert_eq!(axis[1] - axis[0], 8.0);
        let s = stft(&tone(0.0, 2000.0, 2000), &StftConfig::default(), "x").unwrap();
        assert_eq!(s.rows(), 250);
        assert_eq!(s.cols(), (2000 - 250) / 25 + 1);
        assert!((s.time_step() - 0.0125).abs() < 1e-15);
        assert_eq!(s.time_axis[0], 0.0625);
    }

    #[test]
    fn positive_and_negative_tones() {
        for freq in [400.0, -400.0] {
            let s = stft(&tone(freq, 2000.0, 1000), &rectangular(), "tone").unwrap();
            for c in 0..s.cols() {
                assert_eq!(s.peak_frequency(c), freq);
            }
        }
    }

    #[test]
    fn constant_peaks_at_zero() {
        let series = NarrowbandSeries::new(2000.0, vec![Complex64::new(0.2, 0.1); 600]).unwrap();
        let s = stft(&series, &StftConfig::default(), "dc").unwrap();
        for c in 0..s.cols() {
            assert_eq!(s.peak_frequency(c), 0.0);
        }
    }

    #[test]
    fn floor_and_silence() {
        let s = stft(&tone(400.0, 2000.0, 500), &rectangular(), "").unwrap();
        let max = s.max_db();
        assert!(s.magnitude_db.iter().all(|&v| v >= max + DB_FLOOR && v.is_finite()));
        // rectangular window over whole periods: off-peak bins hit the floor
        assert_eq!(s.magnitude_db.iter().cloned().fold(f64::INFINITY, f64::min), max + DB_FLOOR);
        let zeros = NarrowbandSeries::new(2000.0, vec![Complex64::new(0.0, 0.0); 300]).unwrap();
        let silent = stft(&zeros, &StftConfig::default(), "").unwrap();
        assert!(silent.magnitude_db.iter().all(|&v| v == DB_FLOOR));
    }

    #[test]
    fn config_checks() {
        let bad = StftConfig { hop: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = StftConfig { fft_length: 100, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(matches!(
            stft(&tone(0.0, 2000.0, 100), &StftConfig::default(), ""),
            Err(DspError::SeriesTooShort { len: 100, window: 250 })
        ));
        let json = serde_json::to_string(&StftConfig::default()).unwrap();
        assert_eq!(
            json,
            r#"{"window_length":250,"hop":25,"window_shape":"hann","fft_length":250}"#
        );
    }

    #[test]
    fn hann_window_values() {
        let w = WindowShape::Hann.coefficients(5);
        let expected = [0.0, 0.5, 1.0, 0.5, 0.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_padded_column_matches_naive_dft() {
        let segment: Vec<Complex64> = (0..50).map(|k| Complex64::new((k as f64).sin(), (0.3 * k as f64).cos())).collect();
        let window = WindowShape::Hann.coefficients(50);
        let fast = column_spectrum(&segment, &window, 64);
        let mut padded: Vec<Complex64> = segment.iter().zip(&window).map(|(s, w)| s * w).collect();
        padded.resize(64, Complex64::new(0.0, 0.0));
        for (a, b) in fast.iter().zip(naive_dft(&padded)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn parseval_per_column(
            values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
            hann in any::<bool>(),
            fft_length in 64usize..100,
        ) {
            let segment: Vec<Complex64> = values.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
            let shape = if hann { WindowShape::Hann } else { WindowShape::Rectangular };
            let window = shape.coefficients(64);
            let spectrum = column_spectrum(&segment, &window, fft_length);
            let lhs = spectrum.iter().map(|x| x.norm_sqr()).sum::<f64>() / fft_length as f64;
            let rhs: f64 = segment.iter().zip(&window).map(|(s, w)| (s * w).norm_sqr()).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn linearity_shifts_db(
            values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 300),
            scale in 1e-3f64..1e3,
            angle in -PI..PI,
        ) {
            let series = NarrowbandSeries::new(
                2000.0,
                values.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
            ).unwrap();
            let a = Complex64::from_polar(scale, angle);
            let base = stft(&series, &StftConfig::default(), "").unwrap();
            let scaled = stft(&series.scaled(a), &StftConfig::default(), "").unwrap();
            let shift = 20.0 * scale.log10();
            for (x, y) in base.magnitude_db.iter().zip(&scaled.magnitude_db) {
                prop_assert!((y - x - shift).abs() < 1e-6);
            }
        }
    }
}
