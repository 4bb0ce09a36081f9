//! `gchan`: simulate spectrograms from hand-keypoint motion clips.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gesture_channel::dsp::{read_cstr, ClutterMode, CSTR_VERSION};
use gesture_channel::motion::{MotionClip, MOTION_FORMAT};
use gesture_channel::runner::{
    fixture_suite, run_batch, synth_gesture, BatchItem, ClipSource, DatasetManifest, GestureKind, SimulationConfig,
    MANIFEST_FILE, MANIFEST_FORMAT, SCENARIO_FORMAT,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "gchan", version, about = "Hand-keypoint driven channel and spectrogram simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Simulation configuration (caster-scenario/1 JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Static clutter removal: none, subtract_mean or subtract_static.
    #[arg(long)]
    clutter_mode: Option<ClutterMode>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one motion clip.
    Simulate {
        /// Motion clip (caster-motion/1 JSON).
        clip: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Simulate every clip given, directories contributing their *.json files.
    Batch {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write synthetic gesture clips.
    Synth {
        /// Gesture: push_pull, beckon, static, rubbing, scaling or single_point_radial.
        #[arg(long, default_value = "push_pull")]
        kind: GestureKind,
        #[arg(long, default_value_t = 2.0)]
        duration: f64,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        /// Write this many varied clips per gesture into the output directory
        /// instead of one nominal clip into the output file.
        #[arg(long)]
        suite: Option<usize>,
        /// Include all five dataset gestures in a suite rather than only --kind.
        #[arg(long, requires = "suite")]
        all_kinds: bool,
        /// Variation seed for suites.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file, or directory with --suite.
        #[arg(long)]
        out: PathBuf,
    },
    /// Describe a manifest, spectrogram matrix, motion clip or configuration,
    /// or list format versions and the default configuration.
    Inspect { path: Option<PathBuf> },
}

fn load_config(run: &RunArgs) -> Result<SimulationConfig> {
    let mut config = match &run.config {
        Some(path) => {
            SimulationConfig::load(path).with_context(|| format!("loading config {}", path.display()))?
        }
        None => SimulationConfig::default(),
    };
    if let Some(seed) = run.seed {
        config.master_seed = seed;
    }
    if let Some(mode) = run.clutter_mode {
        config.clutter_mode = mode;
    }
    config.validate()?;
    Ok(config)
}

fn clip_id(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .with_context(|| format!("no file name in {}", path.display()))
}

fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("reading {}", input.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            found.retain(|p| p.extension().is_some_and(|e| e == "json") && p.file_name() != Some(MANIFEST_FILE.as_ref()));
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        bail!("no clip files found");
    }
    Ok(files)
}

fn batch(files: &[PathBuf], run: &RunArgs) -> Result<()> {
    let config = load_config(run)?;
    let items = files
        .iter()
        .map(|path| {
            Ok(BatchItem {
                id: clip_id(path)?,
                source: ClipSource::File(path.clone()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let result = run_batch(&items, &config, &run.out);
    let manifest_path = run.out.join(MANIFEST_FILE);
    match result {
        Ok(manifest) => {
            for entry in manifest.failed() {
                eprintln!("failed {}: {}", entry.clip_id, entry.error.as_deref().unwrap_or("unknown error"));
            }
            println!(
                "{} of {} clips simulated; manifest {}",
                manifest.succeeded(),
                manifest.entries.len(),
                manifest_path.display()
            );
            Ok(())
        }
        Err(e) => {
            if let Ok(manifest) = DatasetManifest::load(&manifest_path) {
                for entry in manifest.failed() {
                    eprintln!("failed {}: {}", entry.clip_id, entry.error.as_deref().unwrap_or("unknown error"));
                }
            }
            Err(e.into())
        }
    }
}

fn synth(
    kind: GestureKind,
    duration: f64,
    fps: f64,
    suite: Option<usize>,
    all_kinds: bool,
    seed: u64,
    out: &Path,
) -> Result<()> {
    match suite {
        None => {
            let clip = synth_gesture(kind, duration, fps)?;
            clip.save(out).with_context(|| format!("writing {}", out.display()))?;
            println!("{} frames of {} written to {}", clip.frames().len(), kind.name(), out.display());
        }
        Some(count) => {
            let kinds: Vec<GestureKind> = if all_kinds {
                GestureKind::dataset_gestures().to_vec()
            } else {
                vec![kind]
            };
            std::fs::create_dir_all(out)?;
            let clips = fixture_suite(&kinds, count, duration, fps, seed)?;
            for (id, clip) in &clips {
                clip.save(out.join(format!("{id}.json")))?;
            }
            println!("{} clips written to {}", clips.len(), out.display());
        }
    }
    Ok(())
}

fn inspect(path: Option<&Path>) -> Result<()> {
    let Some(path) = path else {
        let info = json!({
            "formats": {
                "scenario": SCENARIO_FORMAT,
                "motion": MOTION_FORMAT,
                "manifest": MANIFEST_FORMAT,
                "matrix": format!("CSTR v{CSTR_VERSION}"),
            },
            "default_config": SimulationConfig::default(),
        });
        println!("{}", serde_json::to_string_pretty(&info)?);
        return Ok(());
    };
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(b"CSTR") {
        let m = read_cstr(path)?;
        let lo = m.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = m.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "CSTR v{CSTR_VERSION}: {} frequency bins x {} frames, {} .. {} Hz, {} s per frame, {lo:.1} .. {hi:.1} dB",
            m.rows, m.cols, m.f_min, m.f_max, m.t_step
        );
        return Ok(());
    }
    let text = String::from_utf8(bytes).context("not a CSTR matrix or a UTF-8 JSON document")?;
    let value: serde_json::Value = serde_json::from_str(&text).context("not a CSTR matrix or a JSON document")?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(MANIFEST_FORMAT) => {
            let manifest = DatasetManifest::from_json(&text)?;
            println!(
                "{MANIFEST_FORMAT}: {} entries, {} ok, master seed {}, config {}, digest {}",
                manifest.entries.len(),
                manifest.succeeded(),
                manifest.master_seed,
                manifest.config_digest,
                manifest.digest()
            );
            for entry in &manifest.entries {
                let files: Vec<&str> = entry.outputs.iter().map(|o| o.path.as_str()).collect();
                println!(
                    "  {} [{}] seed {}: {}",
                    entry.clip_id,
                    entry.label.as_deref().unwrap_or("?"),
                    entry.seed,
                    entry.error.clone().unwrap_or_else(|| files.join(", "))
                );
            }
        }
        Some(MOTION_FORMAT) => {
            let clip = MotionClip::from_json(&text)?;
            println!(
                "{MOTION_FORMAT}: label {}, {} frames over {} slots at {:.3} fps",
                clip.label(),
                clip.frames().len(),
                clip.slot_count(),
                1.0 / clip.frame_interval()
            );
        }
        Some(SCENARIO_FORMAT) => {
            let config = SimulationConfig::from_json(&text)?;
            println!("{SCENARIO_FORMAT}: digest {}", config.digest());
        }
        other => bail!("unrecognized document format {other:?}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { clip, run } => batch(&[clip], &run),
        Command::Batch { inputs, run } => batch(&collect_inputs(&inputs)?, &run),
        Command::Synth {
            kind,
            duration,
            fps,
            suite,
            all_kinds,
            seed,
            out,
        } => synth(kind, duration, fps, suite, all_kinds, seed, &out),
        Command::Inspect { path } => inspect(path.as_deref()),
    }
}
