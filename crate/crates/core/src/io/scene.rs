use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    check_header, create, decode, open, record_type, write_record, DepthSample, FormatError, FrameObservation, Lines,
    PoseRecord, FORMAT_VERSION,
};
use crate::geometry::{Cuboid, Intrinsics, Mat3, Pose, Vec3};

const SCENE_FORMAT: &str = "cuboid-track/scene";

#[derive(Debug, Clone, PartialEq)]
pub struct SceneHeader {
    pub intrinsics: Intrinsics,
    pub voxel_size: f64,
    /// Generator seed for synthetic scenes.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub header: SceneHeader,
    pub frames: Vec<FrameObservation>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntrinsicsRecord {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    #[serde(rename = "type")]
    kind: String,
    format: String,
    version: u32,
    intrinsics: IntrinsicsRecord,
    voxel_size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    #[serde(rename = "type")]
    kind: String,
    frame_index: u64,
    pose: PoseRecord,
    proposals: Vec<[f64; 9]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    depth_samples: Vec<[f64; 3]>,
}

impl FrameRecord {
    fn from_frame(f: &FrameObservation) -> Self {
        FrameRecord {
            kind: "frame".into(),
            frame_index: f.frame_index,
            pose: PoseRecord {
                rotation: f.pose.rotation().to_row_major(),
                translation: f.pose.translation().to_array(),
            },
            proposals: f.proposals.iter().map(Cuboid::to_array).collect(),
            depth_samples: f.depth_samples.iter().map(|s| [s.u, s.v, s.z]).collect(),
        }
    }

    fn into_frame(self, line: usize) -> Result<FrameObservation, FormatError> {
        let frame = self.frame_index;
        let pose = Pose::new(Mat3::from_row_major(self.pose.rotation), Vec3::from_array(self.pose.translation))
            .map_err(|e| FormatError::invalid(line, format!("frame {frame}, pose"), e))?;
        let proposals = self
            .proposals
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                Cuboid::from_array(v).map_err(|e| FormatError::invalid(line, format!("frame {frame}, proposal {i}"), e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let depth_samples = self
            .depth_samples
            .into_iter()
            .enumerate()
            .map(|(i, [u, v, z])| {
                if !(u.is_finite() && v.is_finite() && z.is_finite() && z > 0.0) {
                    Err(FormatError::invalid(
                        line,
                        format!("frame {frame}, depth sample {i}"),
                        "pixel must be finite and depth positive",
                    ))
                } else {
                    Ok(DepthSample { u, v, z })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FrameObservation { frame_index: frame, pose, proposals, depth_samples })
    }
}

/// Streaming, single-pass scene reader. The header is read eagerly; frames are
/// yielded one at a time and validated as they arrive.
pub struct SceneReader<R> {
    lines: Lines<R>,
    header: SceneHeader,
    last_index: Option<u64>,
    failed: bool,
}

impl<R: BufRead> SceneReader<R> {
    pub fn new(reader: R) -> Result<Self, FormatError> {
        Self::with_path(reader, PathBuf::from("<scene>"))
    }

    fn with_path(reader: R, path: PathBuf) -> Result<Self, FormatError> {
        let mut lines = Lines::new(reader, path);
        let (line, value) = lines.next_record().ok_or(FormatError::Missing("header"))??;
        if record_type(line, &value)? != "header" {
            return Err(FormatError::UnexpectedRecord { line, expected: "header" });
        }
        let h: HeaderRecord = decode(line, value)?;
        check_header(line, &h.format, SCENE_FORMAT, h.version)?;
        let k = h.intrinsics;
        let intrinsics =
            Intrinsics::new(k.fx, k.fy, k.cx, k.cy).map_err(|e| FormatError::invalid(line, "header, intrinsics", e))?;
        if !(h.voxel_size.is_finite() && h.voxel_size > 0.0) {
            return Err(FormatError::invalid(line, "header, voxel_size", "must be positive"));
        }
        Ok(SceneReader {
            lines,
            header: SceneHeader { intrinsics, voxel_size: h.voxel_size, seed: h.seed },
            last_index: None,
            failed: false,
        })
    }

    pub fn header(&self) -> &SceneHeader {
        &self.header
    }

    fn read_frame(&mut self) -> Option<Result<FrameObservation, FormatError>> {
        let (line, value) = match self.lines.next_record()? {
            Ok(r) => r,
            Err(e) => return Some(Err(e)),
        };
        let parsed = (|| {
            if record_type(line, &value)? != "frame" {
                return Err(FormatError::UnexpectedRecord { line, expected: "frame" });
            }
            let frame = decode::<FrameRecord>(line, value)?.into_frame(line)?;
            if let Some(prev) = self.last_index {
                if frame.frame_index <= prev {
                    return Err(FormatError::invalid(
                        line,
                        format!("frame {}", frame.frame_index),
                        format!("frame_index not greater than previous frame {prev}"),
                    ));
                }
            }
            self.last_index = Some(frame.frame_index);
            Ok(frame)
        })();
        Some(parsed)
    }
}

impl<R: BufRead> Iterator for SceneReader<R> {
    type Item = Result<FrameObservation, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.read_frame();
        if matches!(item, Some(Err(_))) {
            self.failed = true;
        }
        item
    }
}

impl SceneReader<std::io::BufReader<std::fs::File>> {
    pub fn open(path: &Path) -> Result<Self, FormatError> {
        Self::with_path(open(path)?, path.to_path_buf())
    }
}

/// Loads and validates a whole scene file.
pub fn read_scene(path: &Path) -> Result<SceneFile, FormatError> {
    let mut reader = SceneReader::open(path)?;
    let header = reader.header().clone();
    let frames = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok(SceneFile { header, frames })
}

/// Incremental scene writer.
pub struct SceneWriter<W: Write> {
    out: W,
}

impl<W: Write> SceneWriter<W> {
    pub fn new(mut out: W, header: &SceneHeader) -> std::io::Result<Self> {
        let k = header.intrinsics;
        write_record(
            &mut out,
            &HeaderRecord {
                kind: "header".into(),
                format: SCENE_FORMAT.into(),
                version: FORMAT_VERSION,
                intrinsics: IntrinsicsRecord { fx: k.fx(), fy: k.fy(), cx: k.cx(), cy: k.cy() },
                voxel_size: header.voxel_size,
                seed: header.seed,
            },
        )?;
        Ok(SceneWriter { out })
    }

    pub fn write_frame(&mut self, frame: &FrameObservation) -> std::io::Result<()> {
        write_record(&mut self.out, &FrameRecord::from_frame(frame))
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_scene(path: &Path, scene: &SceneFile) -> Result<(), FormatError> {
    let io_err = |e| FormatError::io(path, e);
    let mut w = SceneWriter::new(create(path)?, &scene.header).map_err(io_err)?;
    for f in &scene.frames {
        w.write_frame(f).map_err(io_err)?;
    }
    w.finish().map_err(io_err)?;
    Ok(())
}
