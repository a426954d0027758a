//! Command-line front end: `gen`, `annotate`, `eval` and `stats`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::{PipelineConfig, RefineMode};
use crate::error::{Error, Result};
use crate::eval::{evaluate, frames_histogram, write_report, DEFAULT_THRESHOLDS};
use crate::refine::annotate_scene;
use crate::scene::{generate_scene, load_scene, read_pseudo_labels, save_scene, write_pseudo_labels, SceneConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "autolabel3d", version, about = "3D box pseudo-labels from 2D annotations and LiDAR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with ground truth.
    Gen {
        /// Scene config JSON; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Produce one pseudo-label per annotated track.
    Annotate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pipeline config JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Emit coarse boxes without refinement.
        #[arg(long)]
        no_refine: bool,
    },
    /// Score labels against the dataset's ground truth.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Pipeline config JSON used to recompute coarse boxes and clusters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print dataset statistics as JSON.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
}

fn pipeline_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn scene_config(path: Option<&Path>) -> Result<SceneConfig> {
    let Some(path) = path else {
        return Ok(SceneConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| Error::parse(format!("{} {}", path.display(), e.path()), e.inner().to_string()))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen { config, seed, out } => {
            let cfg = SceneConfig {
                seed,
                ..scene_config(config.as_deref())?
            };
            let scene = generate_scene(&cfg)?;
            save_scene(&scene, &out)?;
            let n_points: usize = scene.frames.iter().map(|f| f.points.len()).sum();
            eprintln!(
                "generated {} frames, {} points, {} tracks in {}",
                scene.frames.len(),
                n_points,
                scene.annotated_track_ids().len(),
                out.display()
            );
        }
        Command::Annotate {
            dataset,
            out,
            config,
            no_refine,
        } => {
            let mut cfg = pipeline_config(config.as_deref())?;
            if no_refine {
                cfg.refine = RefineMode::Off;
            }
            let scene = load_scene(&dataset)?;
            let labels = annotate_scene(&scene, &cfg)?;
            write_pseudo_labels(&labels, &out)?;
            let kept = labels.iter().filter(|l| l.kept).count();
            eprintln!("wrote {} labels ({kept} kept) to {}", labels.len(), out.display());
        }
        Command::Eval {
            dataset,
            labels,
            report,
            config,
        } => {
            let cfg = pipeline_config(config.as_deref())?;
            let scene = load_scene(&dataset)?;
            let labels = read_pseudo_labels(&labels)?;
            let r = evaluate(&scene, &labels, &cfg, &DEFAULT_THRESHOLDS)?;
            write_report(&r, &report)?;
            eprintln!("keep rate {:.3}; report written to {}", r.keep_rate, report.display());
        }
        Command::Stats { dataset } => {
            let scene = load_scene(&dataset)?;
            let n_points: usize = scene.frames.iter().map(|f| f.points.len()).sum();
            let n_annotations: usize = scene.frames.iter().map(|f| f.annotations.len()).sum();
            let stats = json!({
                "scene_id": scene.scene_id,
                "n_frames": scene.frames.len(),
                "n_points": n_points,
                "n_annotations": n_annotations,
                "n_tracks": scene.annotated_track_ids().len(),
                "cameras": scene.cameras.keys().collect::<Vec<_>>(),
                "frames_histogram": frames_histogram(&scene),
            });
            let text = serde_json::to_string_pretty(&stats).map_err(|e| Error::Config(e.to_string()))?;
            // a reader that hangs up early (`| head`) is not an error
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(Error::io(Path::new("<stdout>"), e)),
                _ => {}
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 on bad input, 2 on internal errors.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_INTERNAL
            }
        }
    }
}
