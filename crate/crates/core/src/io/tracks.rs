use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    check_header, create, decode, open, record_type, round_sig9, write_record, FormatError, Lines, FORMAT_VERSION,
};
use crate::geometry::{Cuboid, UnionMode};
use crate::tracker::{AssignmentMode, FusionMode, Label, MatchResult, ObjectTrack, Registry, TrackerConfig};

const TRACKS_FORMAT: &str = "cuboid-track/tracks";

/// Labels assigned to one frame's proposals, in proposal order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatches {
    pub frame_index: u64,
    pub matches: Vec<MatchResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackFile {
    pub config: TrackerConfig,
    pub frames: Vec<FrameMatches>,
    pub registry: Registry,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    #[serde(rename = "type")]
    kind: String,
    format: String,
    version: u32,
    tau: f64,
    union_mode: UnionMode,
    assignment: AssignmentMode,
    fusion: FusionMode,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchRecord {
    proposal: usize,
    label: u64,
    iou: f64,
    new: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    #[serde(rename = "type")]
    kind: String,
    frame_index: u64,
    matches: Vec<MatchRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackRecord {
    label: u64,
    #[serde(rename = "box")]
    bbox: [f64; 9],
    observation_count: u64,
    first_seen: u64,
    last_seen: u64,
    heat: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryRecord {
    #[serde(rename = "type")]
    kind: String,
    next_label: u64,
    tracks: Vec<TrackRecord>,
}

/// Streams a track file: header on construction, one line per frame, and the
/// registry snapshot on [`TrackWriter::finish`]. Floats are written with 9
/// significant digits so repeated runs are byte-identical.
pub struct TrackWriter<W: Write> {
    out: W,
}

impl<W: Write> TrackWriter<W> {
    pub fn new(mut out: W, config: &TrackerConfig) -> std::io::Result<Self> {
        write_record(
            &mut out,
            &HeaderRecord {
                kind: "header".into(),
                format: TRACKS_FORMAT.into(),
                version: FORMAT_VERSION,
                tau: round_sig9(config.tau()),
                union_mode: config.union_mode,
                assignment: config.assignment,
                fusion: config.fusion,
            },
        )?;
        Ok(TrackWriter { out })
    }

    pub fn write_frame(&mut self, frame_index: u64, matches: &[MatchResult]) -> std::io::Result<()> {
        let record = FrameRecord {
            kind: "frame".into(),
            frame_index,
            matches: matches
                .iter()
                .map(|m| MatchRecord {
                    proposal: m.proposal_index,
                    label: m.assigned_label.0,
                    iou: round_sig9(m.best_iou),
                    new: m.is_new,
                })
                .collect(),
        };
        write_record(&mut self.out, &record)
    }

    pub fn finish(mut self, registry: &Registry) -> std::io::Result<W> {
        let record = RegistryRecord {
            kind: "registry".into(),
            next_label: registry.next_label().0,
            tracks: registry
                .tracks()
                .iter()
                .map(|t| TrackRecord {
                    label: t.label().0,
                    bbox: t.bbox().to_array().map(round_sig9),
                    observation_count: t.observation_count(),
                    first_seen: t.first_seen(),
                    last_seen: t.last_seen(),
                    heat: round_sig9(t.heat()),
                })
                .collect(),
        };
        write_record(&mut self.out, &record)?;
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_tracks(
    path: &Path,
    config: &TrackerConfig,
    frames: &[FrameMatches],
    registry: &Registry,
) -> Result<(), FormatError> {
    let io_err = |e| FormatError::io(path, e);
    let mut w = TrackWriter::new(create(path)?, config).map_err(io_err)?;
    for f in frames {
        w.write_frame(f.frame_index, &f.matches).map_err(io_err)?;
    }
    w.finish(registry).map_err(io_err)?;
    Ok(())
}

pub fn read_tracks(path: &Path) -> Result<TrackFile, FormatError> {
    parse_tracks(Lines::new(open(path)?, path.to_path_buf()))
}

fn parse_tracks<R: std::io::BufRead>(mut lines: Lines<R>) -> Result<TrackFile, FormatError> {
    let (line, value) = lines.next_record().ok_or(FormatError::Missing("header"))??;
    if record_type(line, &value)? != "header" {
        return Err(FormatError::UnexpectedRecord { line, expected: "header" });
    }
    let h: HeaderRecord = decode(line, value)?;
    check_header(line, &h.format, TRACKS_FORMAT, h.version)?;
    let config = TrackerConfig::new(h.tau)
        .map_err(|e| FormatError::invalid(line, "header, tau", e))?
        .with_union_mode(h.union_mode)
        .with_assignment(h.assignment)
        .with_fusion(h.fusion);

    let mut frames: Vec<FrameMatches> = Vec::new();
    let mut registry = None;
    while let Some(record) = lines.next_record() {
        let (line, value) = record?;
        if registry.is_some() {
            return Err(FormatError::invalid(line, "registry", "records after the registry snapshot"));
        }
        match record_type(line, &value)? {
            "frame" => {
                let f: FrameRecord = decode(line, value)?;
                let ctx = format!("frame {}", f.frame_index);
                if let Some(prev) = frames.last() {
                    if f.frame_index <= prev.frame_index {
                        return Err(FormatError::invalid(line, ctx, "frame_index not increasing"));
                    }
                }
                let mut matches = Vec::with_capacity(f.matches.len());
                for (i, m) in f.matches.into_iter().enumerate() {
                    if m.proposal != i {
                        return Err(FormatError::invalid(
                            line,
                            ctx,
                            format!("match {i} has proposal index {}", m.proposal),
                        ));
                    }
                    if !(0.0..=1.0).contains(&m.iou) {
                        return Err(FormatError::invalid(line, ctx, format!("iou {} outside [0, 1]", m.iou)));
                    }
                    if m.is_new_consistent(config.tau()) {
                        matches.push(MatchResult {
                            proposal_index: m.proposal,
                            assigned_label: Label(m.label),
                            best_iou: m.iou,
                            is_new: m.new,
                        });
                    } else {
                        return Err(FormatError::invalid(
                            line,
                            ctx,
                            format!("match {i}: `new` disagrees with iou and tau"),
                        ));
                    }
                }
                frames.push(FrameMatches { frame_index: f.frame_index, matches });
            }
            "registry" => {
                let r: RegistryRecord = decode(line, value)?;
                let tracks = r
                    .tracks
                    .into_iter()
                    .map(|t| {
                        let ctx = format!("registry, track {}", t.label);
                        let bbox =
                            Cuboid::from_array(t.bbox).map_err(|e| FormatError::invalid(line, ctx.clone(), e))?;
                        ObjectTrack::new(Label(t.label), bbox, t.observation_count, t.first_seen, t.last_seen, t.heat)
                            .map_err(|e| FormatError::invalid(line, ctx, e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                registry = Some(
                    Registry::from_parts(tracks, Label(r.next_label))
                        .map_err(|e| FormatError::invalid(line, "registry", e))?,
                );
            }
            _ => return Err(FormatError::UnexpectedRecord { line, expected: "frame or registry" }),
        }
    }
    let registry = registry.ok_or(FormatError::Missing("registry"))?;
    let known: HashSet<Label> = registry.tracks().iter().map(ObjectTrack::label).collect();
    for f in &frames {
        for m in &f.matches {
            if !known.contains(&m.assigned_label) {
                return Err(FormatError::invalid(
                    lines.line,
                    format!("frame {}", f.frame_index),
                    format!("label {} missing from registry", m.assigned_label),
                ));
            }
        }
    }
    Ok(TrackFile { config, frames, registry })
}

impl MatchRecord {
    /// `new` holds exactly when the IoU is below tau. Rounding to 9 digits is
    /// monotone, so an IoU just under tau may round onto it; `tau` here is the
    /// rounded value read from the header.
    fn is_new_consistent(&self, tau: f64) -> bool {
        if self.new {
            self.iou <= tau
        } else {
            self.iou >= tau
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Extents, Vec3};
    use std::path::PathBuf;

    fn parse(text: &str) -> Result<TrackFile, FormatError> {
        parse_tracks(Lines::new(text.as_bytes(), PathBuf::from("<test>")))
    }

    fn sample() -> (TrackerConfig, Vec<FrameMatches>, Registry) {
        let mut reg = Registry::new();
        let b = Cuboid::aligned(Vec3::new(0.5, 0.25, 0.0), Extents::new(0.125, 0.5, 1.0)).unwrap();
        let l1 = reg.register_new(b, 0);
        let frames = vec![
            FrameMatches {
                frame_index: 0,
                matches: vec![MatchResult { proposal_index: 0, assigned_label: l1, best_iou: 0.0, is_new: true }],
            },
            FrameMatches { frame_index: 1, matches: vec![] },
        ];
        (TrackerConfig::default(), frames, reg)
    }

    fn to_string(cfg: &TrackerConfig, frames: &[FrameMatches], reg: &Registry) -> String {
        let mut w = TrackWriter::new(Vec::new(), cfg).unwrap();
        for f in frames {
            w.write_frame(f.frame_index, &f.matches).unwrap();
        }
        String::from_utf8(w.finish(reg).unwrap()).unwrap()
    }

    #[test]
    fn empty_results_are_stable() {
        let text = to_string(&TrackerConfig::default(), &[], &Registry::new());
        assert_eq!(
            text,
            concat!(
                r#"{"type":"header","format":"cuboid-track/tracks","version":1,"tau":0.25,"union_mode":"paper","assignment":"greedy","fusion":"count_weighted"}"#,
                "\n",
                r#"{"type":"registry","next_label":1,"tracks":[]}"#,
                "\n"
            )
        );
    }

    #[test]
    fn round_trip() {
        let (cfg, frames, reg) = sample();
        let text = to_string(&cfg, &frames, &reg);
        let back = parse(&text).unwrap();
        assert_eq!(back, TrackFile { config: cfg, frames: frames.clone(), registry: reg.clone() });
        assert_eq!(to_string(&back.config, &back.frames, &back.registry), text);
    }

    #[test]
    fn unknown_label_is_rejected() {
        let (cfg, mut frames, reg) = sample();
        frames[0].matches[0].assigned_label = Label(9);
        let text = to_string(&cfg, &frames, &reg);
        assert!(parse(&text).unwrap_err().to_string().contains("label 9 missing"));
    }

    #[test]
    fn missing_registry_is_rejected() {
        let (cfg, frames, reg) = sample();
        let text = to_string(&cfg, &frames, &reg);
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse(&truncated), Err(FormatError::Missing("registry"))));
    }

    #[test]
    fn inconsistent_new_flag_is_rejected() {
        let (cfg, mut frames, reg) = sample();
        frames[0].matches[0].best_iou = 0.9;
        let text = to_string(&cfg, &frames, &reg);
        assert!(parse(&text).unwrap_err().to_string().contains("disagrees"));
    }
}
