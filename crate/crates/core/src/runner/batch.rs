//! Seeded batch runs and the dataset manifest.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::hex;
use super::{derive_seed, run_clip, ClipOutput, RunError, SimulationConfig};
use crate::dsp::{to_cstr_bytes, to_png_bytes, ExportFormat};
use crate::motion::MotionClip;

pub const MANIFEST_FORMAT: &str = "caster-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Seed of one clip: [`derive_seed`] of the master seed and the clip id, so
/// it depends on neither batch order nor worker count.
pub fn clip_seed(master_seed: u64, clip_id: &str) -> u64 {
    derive_seed(master_seed, clip_id)
}

#[derive(Debug, Clone)]
pub enum ClipSource {
    Clip(MotionClip),
    /// Loaded inside the worker, so an unreadable file only fails its own entry.
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct BatchItem {
    pub id: String,
    pub source: ClipSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub format: ExportFormat,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub clip_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub seed: u64,
    pub config_digest: String,
    pub status: EntryStatus,
    #[serde(default)]
    pub outputs: Vec<OutputFile>,
    #[serde(default)]
    pub dropped_frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format: String,
    pub master_seed: u64,
    pub config_digest: String,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_json_pretty(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Batch(format!("manifest: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Hex SHA-256 of the serialized manifest.
    pub fn digest(&self) -> String {
        hex(&Sha256::digest(self.to_json_pretty().as_bytes()))
    }

    pub fn succeeded(&self) -> usize {
        self.entries.iter().filter(|e| e.status == EntryStatus::Ok).count()
    }

    pub fn failed(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.status == EntryStatus::Failed)
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Writes `<clip_id>.<ext>` for every format into `dir`.
pub fn export_clip(
    output: &ClipOutput,
    dir: &Path,
    clip_id: &str,
    formats: &[ExportFormat],
) -> Result<Vec<OutputFile>, RunError> {
    formats
        .iter()
        .map(|&format| {
            let bytes = match format {
                ExportFormat::PngGrayscale => to_png_bytes(&output.spectrogram)?,
                ExportFormat::BinaryMatrixV1 => to_cstr_bytes(&output.spectrogram),
            };
            let name = format!("{clip_id}.{}", format.extension());
            std::fs::write(dir.join(&name), &bytes)?;
            Ok(OutputFile {
                path: name,
                format,
                sha256: hex(&Sha256::digest(&bytes)),
            })
        })
        .collect()
}

fn process(item: &BatchItem, config: &SimulationConfig, digest: &str, out_dir: &Path) -> ManifestEntry {
    let seed = clip_seed(config.master_seed, &item.id);
    let mut entry = ManifestEntry {
        clip_id: item.id.clone(),
        label: None,
        seed,
        config_digest: digest.to_string(),
        status: EntryStatus::Failed,
        outputs: Vec::new(),
        dropped_frames: 0,
        error: None,
    };
    let result = (|| {
        let loaded;
        let clip = match &item.source {
            ClipSource::Clip(clip) => clip,
            ClipSource::File(path) => {
                loaded = MotionClip::load(path)?;
                &loaded
            }
        };
        entry.label = Some(clip.label().to_string());
        let output = run_clip(clip, config, seed)?;
        entry.dropped_frames = output.dropped_frames.len();
        export_clip(&output, out_dir, &item.id, &config.outputs)
    })();
    match result {
        Ok(outputs) => {
            entry.outputs = outputs;
            entry.status = EntryStatus::Ok;
        }
        Err(e) => entry.error = Some(e.to_string()),
    }
    entry
}

/// Runs every clip, writes outputs plus `manifest.json` into `out_dir`, and
/// returns the manifest. Entries follow input order. A failing clip is
/// recorded in its entry and does not affect the others; only a batch in
/// which every clip fails is an error (the manifest is still written).
pub fn run_batch(items: &[BatchItem], config: &SimulationConfig, out_dir: &Path) -> Result<DatasetManifest, RunError> {
    config.validate()?;
    if items.is_empty() {
        return Err(RunError::Batch("no clips given".into()));
    }
    let mut seen = HashSet::new();
    for item in items {
        if !valid_id(&item.id) {
            return Err(RunError::Batch(format!(
                "clip id {:?} must be non-empty and use only letters, digits, '_', '-' or '.'",
                item.id
            )));
        }
        if !seen.insert(item.id.as_str()) {
            return Err(RunError::Batch(format!("duplicate clip id {:?}", item.id)));
        }
    }
    std::fs::create_dir_all(out_dir)?;

    let digest = config.digest();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| RunError::Config(format!("worker pool: {e}")))?;
    let entries: Vec<ManifestEntry> =
        pool.install(|| items.par_iter().map(|item| process(item, config, &digest, out_dir)).collect());

    let manifest = DatasetManifest {
        format: MANIFEST_FORMAT.to_string(),
        master_seed: config.master_seed,
        config_digest: digest,
        entries,
    };
    std::fs::write(out_dir.join(MANIFEST_FILE), manifest.to_json_pretty())?;
    if manifest.succeeded() == 0 {
        return Err(RunError::BatchFailed);
    }
    Ok(manifest)
}
