//! Line-delimited file formats.
//!
//! Every file is a sequence of JSON objects, one per line, each carrying a
//! `"type"` tag. The first line is always a `header` naming the format and
//! version. The full schema lives in `docs/FORMAT.md`.

mod grid;
mod ply;
mod scene;
mod tracks;
mod truth;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::{Cuboid, Pose};

pub use grid::{read_grid, write_grid, GridReader};
pub use ply::{export_ply, label_color, write_ply, GRAY};
pub use scene::{read_scene, write_scene, SceneFile, SceneHeader, SceneReader, SceneWriter};
pub use tracks::{read_tracks, write_tracks, FrameMatches, TrackFile, TrackWriter};
pub use truth::{read_truth, write_truth};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {context}: {message}")]
    Invalid { line: usize, context: String, message: String },
    #[error("line {line}: expected a {expected} record")]
    UnexpectedRecord { line: usize, expected: &'static str },
    #[error("missing {0} record")]
    Missing(&'static str),
}

impl FormatError {
    /// True for failures of the underlying file system rather than content.
    pub fn is_io(&self) -> bool {
        matches!(self, FormatError::Io { .. })
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io { path: path.to_path_buf(), source }
    }

    fn invalid(line: usize, context: impl Into<String>, message: impl ToString) -> Self {
        FormatError::Invalid { line, context: context.into(), message: message.to_string() }
    }
}

/// A depth measurement at pixel `(u, v)`, in meters along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSample {
    pub u: f64,
    pub v: f64,
    pub z: f64,
}

/// One frame: camera pose plus camera-frame proposals.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    pub frame_index: u64,
    pub pose: Pose,
    pub proposals: Vec<Cuboid>,
    pub depth_samples: Vec<DepthSample>,
}

impl FrameObservation {
    pub fn new(frame_index: u64, pose: Pose, proposals: Vec<Cuboid>) -> Self {
        FrameObservation { frame_index, pose, proposals, depth_samples: Vec::new() }
    }
}

/// Rounds to 9 significant decimal digits.
pub fn round_sig9(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().unwrap_or(v)
}

fn open(path: &Path) -> Result<BufReader<File>, FormatError> {
    File::open(path).map(BufReader::new).map_err(|e| FormatError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    File::create(path).map(BufWriter::new).map_err(|e| FormatError::io(path, e))
}

/// Non-blank lines tagged with their 1-based line number.
struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
    path: PathBuf,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R, path: PathBuf) -> Self {
        Lines { inner: reader.lines(), line: 0, path }
    }

    fn next_record(&mut self) -> Option<Result<(usize, Value), FormatError>> {
        loop {
            let text = match self.inner.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(FormatError::Io { path: self.path.clone(), source: e })),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            let line = self.line;
            return Some(
                serde_json::from_str::<Value>(&text)
                    .map(|v| (line, v))
                    .map_err(|e| FormatError::Parse { line, message: e.to_string() }),
            );
        }
    }
}

fn record_type(line: usize, v: &Value) -> Result<&str, FormatError> {
    v.get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| FormatError::Parse { line, message: "missing string field `type`".into() })
}

fn decode<T: DeserializeOwned>(line: usize, v: Value) -> Result<T, FormatError> {
    serde_json::from_value(v).map_err(|e| FormatError::Parse { line, message: e.to_string() })
}

fn check_header(line: usize, format: &str, expected: &str, version: u32) -> Result<(), FormatError> {
    if format != expected {
        return Err(FormatError::invalid(line, "header", format!("format `{format}`, expected `{expected}`")));
    }
    if version != FORMAT_VERSION {
        return Err(FormatError::invalid(line, "header", format!("unsupported version {version}")));
    }
    Ok(())
}

fn write_record<W: Write, T: Serialize>(w: &mut W, record: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, record)?;
    w.write_all(b"\n")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRecord {
    rotation: [f64; 9],
    translation: [f64; 3],
}
