use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_header, create, decode, open, record_type, write_record, FormatError, Lines, FORMAT_VERSION};
use crate::synth::{FrameTruth, GroundTruthLabels, OcclusionWindow};

const TRUTH_FORMAT: &str = "cuboid-track/truth";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowRecord {
    object: u64,
    start: u64,
    end: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    #[serde(rename = "type")]
    kind: String,
    format: String,
    version: u32,
    seed: u64,
    objects: Vec<u64>,
    occlusions: Vec<WindowRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    #[serde(rename = "type")]
    kind: String,
    frame_index: u64,
    ids: Vec<u64>,
}

pub fn write_truth(path: &Path, truth: &GroundTruthLabels) -> Result<(), FormatError> {
    let mut out = create(path)?;
    write_truth_to(&mut out, truth).map_err(|e| FormatError::io(path, e))
}

fn write_truth_to<W: Write>(out: &mut W, truth: &GroundTruthLabels) -> std::io::Result<()> {
    write_record(
        out,
        &HeaderRecord {
            kind: "header".into(),
            format: TRUTH_FORMAT.into(),
            version: FORMAT_VERSION,
            seed: truth.seed,
            objects: truth.objects.clone(),
            occlusions: truth
                .occlusions
                .iter()
                .map(|w| WindowRecord { object: w.object, start: w.start, end: w.end })
                .collect(),
        },
    )?;
    for f in &truth.frames {
        write_record(out, &FrameRecord { kind: "frame".into(), frame_index: f.frame_index, ids: f.ids.clone() })?;
    }
    out.flush()
}

pub fn read_truth(path: &Path) -> Result<GroundTruthLabels, FormatError> {
    parse_truth(Lines::new(open(path)?, path.to_path_buf()))
}

fn parse_truth<R: BufRead>(mut lines: Lines<R>) -> Result<GroundTruthLabels, FormatError> {
    let (line, value) = lines.next_record().ok_or(FormatError::Missing("header"))??;
    if record_type(line, &value)? != "header" {
        return Err(FormatError::UnexpectedRecord { line, expected: "header" });
    }
    let h: HeaderRecord = decode(line, value)?;
    check_header(line, &h.format, TRUTH_FORMAT, h.version)?;
    let objects: HashSet<u64> = h.objects.iter().copied().collect();
    if objects.len() != h.objects.len() {
        return Err(FormatError::invalid(line, "header, objects", "duplicate object id"));
    }
    let mut occlusions = Vec::with_capacity(h.occlusions.len());
    for (i, w) in h.occlusions.into_iter().enumerate() {
        if !objects.contains(&w.object) || w.end < w.start {
            return Err(FormatError::invalid(
                line,
                format!("header, occlusion {i}"),
                "unknown object or end before start",
            ));
        }
        occlusions.push(OcclusionWindow { object: w.object, start: w.start, end: w.end });
    }

    let mut frames: Vec<FrameTruth> = Vec::new();
    while let Some(record) = lines.next_record() {
        let (line, value) = record?;
        if record_type(line, &value)? != "frame" {
            return Err(FormatError::UnexpectedRecord { line, expected: "frame" });
        }
        let f: FrameRecord = decode(line, value)?;
        let ctx = format!("frame {}", f.frame_index);
        if frames.last().is_some_and(|p| f.frame_index <= p.frame_index) {
            return Err(FormatError::invalid(line, ctx, "frame_index not increasing"));
        }
        let mut seen = HashSet::new();
        for id in &f.ids {
            if !objects.contains(id) || !seen.insert(*id) {
                return Err(FormatError::invalid(line, ctx, format!("id {id} unknown or repeated")));
            }
        }
        frames.push(FrameTruth { frame_index: f.frame_index, ids: f.ids });
    }
    Ok(GroundTruthLabels { seed: h.seed, objects: h.objects, occlusions, frames })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn sample() -> GroundTruthLabels {
        GroundTruthLabels {
            seed: 9,
            objects: vec![1, 2],
            occlusions: vec![OcclusionWindow { object: 2, start: 1, end: 1 }],
            frames: vec![
                FrameTruth { frame_index: 0, ids: vec![1, 2] },
                FrameTruth { frame_index: 1, ids: vec![1] },
                FrameTruth { frame_index: 2, ids: vec![2, 1] },
            ],
        }
    }

    fn parse(bytes: &[u8]) -> Result<GroundTruthLabels, FormatError> {
        parse_truth(Lines::new(bytes, PathBuf::from("<truth>")))
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        write_truth_to(&mut buf, &sample()).unwrap();
        assert_eq!(parse(&buf).unwrap(), sample());
    }

    #[test]
    fn rejects_unknown_id() {
        let mut buf = Vec::new();
        write_truth_to(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("[2,1]", "[2,7]");
        let err = parse(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }
}
