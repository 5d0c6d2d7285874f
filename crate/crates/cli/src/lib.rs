//! Command-line front end: `synth`, `track`, `eval` and `export`.
//!
//! Exit status is 0 on success, 2 for usage, parse and validation errors
//! (including missing input files) and 1 for I/O failures during processing.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use cuboid_track::heatmap::DEFAULT_VOXEL_SIZE;
use cuboid_track::io::{self, SceneReader, TrackWriter};
use cuboid_track::synth::{self, Scenario};
use cuboid_track::tracker::DEFAULT_TAU;
use cuboid_track::{AssignmentMode, FormatError, FusionMode, HeatmapGrid, Tracker, TrackerConfig, UnionMode};
use log::info;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) | CliError::Invalid(_) => 2,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "cuboid-track", version, about = "Online 3D object tracking from cuboid proposals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene and its ground truth from a TOML scenario.
    Synth {
        scenario: PathBuf,
        /// Output scene file.
        #[arg(long)]
        scene: PathBuf,
        /// Output ground-truth file.
        #[arg(long)]
        truth: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label every proposal of a scene and write the track file.
    Track {
        scene: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the heatmap grid built from depth samples.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TAU, value_parser = parse_tau)]
        tau: f64,
        #[arg(long, value_enum, default_value_t = UnionArg::Paper)]
        union_mode: UnionArg,
        #[arg(long, value_enum, default_value_t = AssignmentArg::Greedy)]
        assignment: AssignmentArg,
        #[arg(long, value_enum, default_value_t = FusionArg::CountWeighted)]
        fusion: FusionArg,
        /// Heatmap voxel size in meters [default: the scene header's value]
        #[arg(long, value_parser = parse_voxel)]
        voxel: Option<f64>,
    },
    /// Score a track file against ground truth.
    Eval {
        tracks: PathBuf,
        truth: PathBuf,
        /// Print only the single metrics line.
        #[arg(long)]
        machine: bool,
    },
    /// Write an ASCII PLY of the heatmap and labeled boxes.
    Export { tracks: PathBuf, grid: PathBuf, output: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UnionArg {
    Paper,
    Ie,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AssignmentArg {
    Greedy,
    Argmax,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FusionArg {
    CountWeighted,
    KeepFirst,
    KeepLatest,
}

fn parse_tau(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1]"))
    }
}

fn parse_voxel(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a positive length"))
    }
}

/// Options for [`track`].
#[derive(Debug, Clone, Copy)]
pub struct TrackOptions {
    pub config: TrackerConfig,
    pub voxel: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct TrackSummary {
    pub frames: u64,
    pub objects: usize,
    /// Time spent labeling and merging depth, excluding file I/O.
    pub processing: Duration,
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{}: no such file", path.display())))
    }
}

pub fn synth(scenario: &Path, scene: &Path, truth: &Path, seed: Option<u64>) -> Result<(), CliError> {
    require(scenario)?;
    let text = std::fs::read_to_string(scenario).map_err(|e| io_err(scenario, e))?;
    let mut s =
        Scenario::from_toml_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", scenario.display())))?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    let (scene_file, labels) = synth::generate(&s).map_err(|e| CliError::Invalid(e.to_string()))?;
    io::write_scene(scene, &scene_file)?;
    io::write_truth(truth, &labels)?;
    info!("wrote {} frames for {} objects (seed {})", scene_file.frames.len(), labels.objects.len(), s.seed);
    Ok(())
}

/// Streams the scene through the tracker, writing matches as frames arrive.
pub fn track(
    scene: &Path,
    output: &Path,
    grid_out: Option<&Path>,
    opts: TrackOptions,
) -> Result<TrackSummary, CliError> {
    require(scene)?;
    let reader = SceneReader::open(scene)?;
    let voxel = opts.voxel.unwrap_or(reader.header().voxel_size);
    let cfg = opts.config;
    info!(
        "tau={} union_mode={} assignment={} fusion={} voxel={voxel}",
        cfg.tau(),
        cfg.union_mode.as_str(),
        cfg.assignment.as_str(),
        cfg.fusion.as_str()
    );
    let intrinsics = reader.header().intrinsics;
    let file = File::create(output).map_err(|e| io_err(output, e))?;
    let mut writer = TrackWriter::new(BufWriter::new(file), &cfg).map_err(|e| io_err(output, e))?;
    let mut tracker = Tracker::new(cfg);
    let mut grid = HeatmapGrid::new(voxel).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut processing = Duration::ZERO;
    let mut frames = 0;
    for frame in reader {
        let frame = frame?;
        let start = Instant::now();
        let matches = tracker.step(&frame).map_err(|e| CliError::Invalid(e.to_string()))?;
        if !frame.depth_samples.is_empty() {
            grid.merge_frame(&frame.pose, &frame.depth_samples, &intrinsics)
                .map_err(|e| CliError::Invalid(format!("frame {}: {e}", frame.frame_index)))?;
        }
        let elapsed = start.elapsed();
        processing += elapsed;
        frames += 1;
        info!(
            "frame {}: {} proposals, {} objects, {:.3} ms",
            frame.frame_index,
            matches.len(),
            tracker.registry().len(),
            elapsed.as_secs_f64() * 1e3
        );
        writer.write_frame(frame.frame_index, &matches).map_err(|e| io_err(output, e))?;
    }
    let registry = tracker.into_registry();
    writer.finish(&registry).map_err(|e| io_err(output, e))?.flush().map_err(|e| io_err(output, e))?;
    if let Some(path) = grid_out {
        io::write_grid(path, &grid)?;
    }
    Ok(TrackSummary { frames, objects: registry.len(), processing })
}

pub fn eval(tracks: &Path, truth: &Path) -> Result<synth::Metrics, CliError> {
    require(tracks)?;
    require(truth)?;
    let t = io::read_tracks(tracks)?;
    let g = io::read_truth(truth)?;
    synth::evaluate(&t, &g).map_err(|e| CliError::Invalid(e.to_string()))
}

pub fn export(tracks: &Path, grid: &Path, output: &Path) -> Result<(), CliError> {
    require(tracks)?;
    require(grid)?;
    let t = io::read_tracks(tracks)?;
    let g = io::read_grid(grid)?;
    io::export_ply(output, &g, &t.registry)?;
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout_err = |e: std::io::Error| CliError::Io(format!("stdout: {e}"));
    match cli.command {
        Command::Synth { scenario, scene, truth, seed } => synth(&scenario, &scene, &truth, seed),
        Command::Track { scene, output, grid, tau, union_mode, assignment, fusion, voxel } => {
            let config = TrackerConfig::new(tau)
                .map_err(|e| CliError::Usage(e.to_string()))?
                .with_union_mode(match union_mode {
                    UnionArg::Paper => UnionMode::Paper,
                    UnionArg::Ie => UnionMode::InclusionExclusion,
                })
                .with_assignment(match assignment {
                    AssignmentArg::Greedy => AssignmentMode::Greedy,
                    AssignmentArg::Argmax => AssignmentMode::Argmax,
                })
                .with_fusion(match fusion {
                    FusionArg::CountWeighted => FusionMode::CountWeighted,
                    FusionArg::KeepFirst => FusionMode::KeepFirst,
                    FusionArg::KeepLatest => FusionMode::KeepLatest,
                });
            let s = track(&scene, &output, grid.as_deref(), TrackOptions { config, voxel })?;
            writeln!(
                out,
                "frames={} objects={} processing_ms={:.3}",
                s.frames,
                s.objects,
                s.processing.as_secs_f64() * 1e3
            )
            .map_err(stdout_err)
        }
        Command::Eval { tracks, truth, machine } => {
            let m = eval(&tracks, &truth)?;
            if !machine {
                info!("{} observed objects, {} evaluable occlusion windows", m.observed_objects, m.reid_windows);
            }
            writeln!(out, "{m}").map_err(stdout_err)
        }
        Command::Export { tracks, grid, output } => export(&tracks, &grid, &output),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status. Diagnostics go to stderr; results go to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Defaults printed at startup so every run records its configuration.
pub fn defaults_line() -> String {
    format!(
        "defaults: tau={DEFAULT_TAU} union_mode=paper assignment=greedy fusion=count_weighted voxel={DEFAULT_VOXEL_SIZE}"
    )
}
