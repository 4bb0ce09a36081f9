//! Spectrogram files: 8-bit grayscale PNG and the `CSTR` binary matrix.
//!
//! `CSTR` layout, all little-endian:
//!
//! | offset | type   | field                       |
//! |--------|--------|-----------------------------|
//! | 0      | [u8;4] | magic `CSTR`                |
//! | 4      | u32    | version = 1                 |
//! | 8      | u32    | F (frequency rows)          |
//! | 12     | u32    | M (time columns)            |
//! | 16     | f64    | lowest bin frequency, Hz    |
//! | 24     | f64    | highest bin frequency, Hz   |
//! | 32     | f64    | column spacing, s           |
//! | 40     | f64×FM | dB values, row-major        |

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DspError, Spectrogram};

pub const CSTR_MAGIC: &[u8; 4] = b"CSTR";
pub const CSTR_VERSION: u32 = 1;
pub const CSTR_HEADER_LEN: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    PngGrayscale,
    BinaryMatrixV1,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::PngGrayscale => "png",
            ExportFormat::BinaryMatrixV1 => "cstr",
        }
    }
}

/// Grayscale image, one pixel per cell, highest frequency in the top row.
/// Values are min-max scaled to 0..=255; a constant matrix maps to 128.
pub fn to_png_bytes(spectrogram: &Spectrogram) -> Result<Vec<u8>, DspError> {
    let (rows, cols) = (spectrogram.rows(), spectrogram.cols());
    if rows == 0 || cols == 0 {
        return Err(DspError::InvalidSeries("cannot render an empty spectrogram".into()));
    }
    let values = &spectrogram.magnitude_db;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut pixels = Vec::with_capacity(rows * cols);
    for row in (0..rows).rev() {
        for col in 0..cols {
            let v = spectrogram.get(row, col);
            pixels.push(if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                128
            });
        }
    }
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, cols as u32, rows as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(&pixels)?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn to_cstr_bytes(spectrogram: &Spectrogram) -> Vec<u8> {
    let (rows, cols) = (spectrogram.rows(), spectrogram.cols());
    let mut out = Vec::with_capacity(CSTR_HEADER_LEN + rows * cols * 8);
    out.extend_from_slice(CSTR_MAGIC);
    out.extend_from_slice(&CSTR_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    let f_min = spectrogram.frequency_axis.first().copied().unwrap_or(0.0);
    let f_max = spectrogram.frequency_axis.last().copied().unwrap_or(0.0);
    out.extend_from_slice(&f_min.to_le_bytes());
    out.extend_from_slice(&f_max.to_le_bytes());
    out.extend_from_slice(&spectrogram.time_step().to_le_bytes());
    for v in &spectrogram.magnitude_db {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Writes one export file.
pub fn export(spectrogram: &Spectrogram, path: &Path, format: ExportFormat) -> Result<(), DspError> {
    let bytes = match format {
        ExportFormat::PngGrayscale => to_png_bytes(spectrogram)?,
        ExportFormat::BinaryMatrixV1 => to_cstr_bytes(spectrogram),
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Decoded `CSTR` file.
#[derive(Debug, Clone, PartialEq)]
pub struct CstrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub t_step: f64,
    pub values: Vec<f64>,
}

impl CstrMatrix {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DspError> {
        if bytes.len() < CSTR_HEADER_LEN || &bytes[..4] != CSTR_MAGIC {
            return Err(DspError::Malformed("missing CSTR header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(4);
        if version != CSTR_VERSION {
            return Err(DspError::Malformed(format!("unsupported version {version}")));
        }
        let (rows, cols) = (u32_at(8) as usize, u32_at(12) as usize);
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .and_then(|n| n.checked_add(CSTR_HEADER_LEN));
        if expected != Some(bytes.len()) {
            return Err(DspError::Malformed(format!(
                "{rows}x{cols} matrix does not match file size {}",
                bytes.len()
            )));
        }
        let values = bytes[CSTR_HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self {
            rows,
            cols,
            f_min: f64_at(16),
            f_max: f64_at(24),
            t_step: f64_at(32),
            values,
        })
    }
}

pub fn read_cstr(path: &Path) -> Result<CstrMatrix, DspError> {
    CstrMatrix::from_bytes(&std::fs::read(path)?)
}
