#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmtrack::config::{load_run_config, ConfigFile};
use mmtrack::error::{AppError, Result};
use mmtrack::eval::{self, DEFAULT_MATCH_DISTANCE};
use mmtrack::scene::{self, SceneFile};
use mmtrack::sweep::{self, SweepGrid};
use mmtrack::synth::{self, ScenarioSpec};
use mmtrack::{curves, run};

#[derive(Parser)]
#[command(name = "mmtrack", version, about = "Multi-model 3D multi-object tracker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a scene and write trajectories.
    Track {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score trajectories against a scene's ground truth.
    Eval {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MATCH_DISTANCE)]
        metric_gate: f64,
        /// Also compute AMOTA over score thresholds.
        #[arg(long)]
        amota: bool,
        /// JSON report destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic scene.
    Synth {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track and evaluate scenes over a grid of module toggles.
    Sweep {
        /// Scene files; mutually exclusive with --preset.
        #[arg(long, num_args = 1.., conflicts_with = "preset")]
        scene: Vec<PathBuf>,
        /// Generate `count` scenes from this preset with seeds `seed..seed+count`.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "dw=on,off")]
        sweep_grid: String,
        #[arg(long, default_value_t = DEFAULT_MATCH_DISTANCE)]
        metric_gate: f64,
        /// JSON results destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write damping-window and DBSE curves as TSV.
    Curves {
        /// Output directory; prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        frames: usize,
        #[arg(long, default_value_t = 0.4)]
        lambda: f64,
        #[arg(long, default_value_t = 100.0)]
        max_range: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ScenarioSource {
    /// Built-in scenario name.
    #[arg(long)]
    preset: Option<String>,
    /// TOML scenario description.
    #[arg(long)]
    spec: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mmtrack: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Track { scene, config, out } => {
            let cfg = load_run_config(config.as_deref())?;
            let scene = scene::load_scene(&scene)?;
            let tracks = run::track_scene(&scene, &cfg)?;
            scene::write_tracks(&out, &tracks)
        }
        Command::Eval {
            tracks,
            scene,
            metric_gate,
            amota,
            out,
        } => {
            let tracks = scene::load_tracks(&tracks)?;
            let scene = scene::load_scene(&scene)?;
            let pred = eval::prediction_frames(&tracks)?;
            let gt = eval::ground_truth_frames(&scene)?;
            let mut report = eval::evaluate(&pred, &gt, metric_gate)?;
            if amota {
                report.amota = Some(eval::amota(&pred, &gt, metric_gate)?);
            }
            print!("{}", report.to_text());
            if let Some(out) = out {
                write_json(&out, &report)?;
            }
            Ok(())
        }
        Command::Synth { source, seed, out } => {
            let mut spec = match (source.preset, source.spec) {
                (Some(name), _) => synth::preset(&name, 0)?,
                (None, Some(path)) => load_spec(&path)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            scene::write_scene(&out, &synth::generate_scenario(&spec)?)
        }
        Command::Sweep {
            scene,
            preset,
            count,
            seed,
            config,
            sweep_grid,
            metric_gate,
            out,
        } => {
            let base = match &config {
                Some(p) => ConfigFile::load(p)?,
                None => ConfigFile::default(),
            };
            let grid = SweepGrid::parse(&sweep_grid)?;
            let scenes: Vec<SceneFile> = match preset {
                Some(name) => (seed..seed + count)
                    .map(|s| synth::generate_scenario(&synth::preset(&name, s)?))
                    .collect::<Result<_>>()?,
                None if !scene.is_empty() => scene.iter().map(scene::load_scene).collect::<Result<_>>()?,
                None => return Err(AppError::Config("sweep needs --scene or --preset".into())),
            };
            let rows = sweep::run_sweep(&base, &grid, &scenes, metric_gate)?;
            print!("{}", sweep::sweep_table(&rows));
            if let Some(out) = out {
                write_json(&out, &rows)?;
            }
            Ok(())
        }
        Command::Curves {
            out,
            frames,
            lambda,
            max_range,
            step,
        } => {
            if frames == 0 || !(lambda > 0.0) || !(step > 0.0) || !(max_range >= step) {
                return Err(AppError::Config(
                    "curves needs frames >= 1, lambda > 0 and 0 < step <= max-range".into(),
                ));
            }
            let dw = curves::dw_table(frames, lambda);
            let dbse = curves::dbse_table(max_range, step)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
                    write_text(&dir.join("dw_scores.tsv"), &dw)?;
                    write_text(&dir.join("dbse_weights.tsv"), &dbse)
                }
                None => {
                    print!("{dw}\n{dbse}");
                    Ok(())
                }
            }
        }
    }
}

fn load_spec(path: &Path) -> Result<ScenarioSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| AppError::Data(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}
