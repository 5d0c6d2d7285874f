use std::io::Write;
use std::path::Path;

use super::{create, FormatError};
use crate::heatmap::HeatmapGrid;
use crate::tracker::{Label, Registry};

pub const GRAY: [u8; 3] = [128, 128, 128];

/// Box edges as corner index pairs; corners are indexed by bits (x, y, z).
const BOX_EDGES: [(usize, usize); 12] =
    [(0, 1), (2, 3), (4, 5), (6, 7), (0, 2), (1, 3), (4, 6), (5, 7), (0, 4), (1, 5), (2, 6), (3, 7)];

/// Deterministic, well-separated color per label: hue steps by the golden
/// ratio conjugate at full saturation and value.
pub fn label_color(label: Label) -> [u8; 3] {
    let hue = (label.0 as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let sector = hue.floor() as u8;
    let f = hue - hue.floor();
    let (up, down) = ((f * 255.0).round() as u8, ((1.0 - f) * 255.0).round() as u8);
    match sector {
        0 => [255, up, 0],
        1 => [down, 255, 0],
        2 => [0, 255, up],
        3 => [0, down, 255],
        4 => [up, 0, 255],
        _ => [255, 0, down],
    }
}

/// ASCII PLY with three elements:
///
/// * `vertex`: one per heat cell at its mean position, colored by the lowest
///   label whose box contains it, gray otherwise;
/// * `corner`: eight per registry box, colored by the box's label;
/// * `edge`: twelve per box, indexing into `corner`.
pub fn write_ply<W: Write>(out: &mut W, grid: &HeatmapGrid, registry: &Registry) -> std::io::Result<()> {
    let cells = grid.sorted_cells();
    let tracks = registry.tracks();
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "comment cuboid-track heatmap and object boxes")?;
    writeln!(out, "element vertex {}", cells.len())?;
    for p in ["x", "y", "z"] {
        writeln!(out, "property float {p}")?;
    }
    for p in ["red", "green", "blue"] {
        writeln!(out, "property uchar {p}")?;
    }
    writeln!(out, "element corner {}", tracks.len() * 8)?;
    for p in ["x", "y", "z"] {
        writeln!(out, "property float {p}")?;
    }
    for p in ["red", "green", "blue"] {
        writeln!(out, "property uchar {p}")?;
    }
    writeln!(out, "element edge {}", tracks.len() * BOX_EDGES.len())?;
    writeln!(out, "property int vertex1")?;
    writeln!(out, "property int vertex2")?;
    writeln!(out, "end_header")?;

    for (_, cell) in &cells {
        let p = cell.mean_position();
        let color = tracks.iter().find(|t| t.bbox().contains(p)).map_or(GRAY, |t| label_color(t.label()));
        writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, color[0], color[1], color[2])?;
    }
    for t in tracks {
        let c = label_color(t.label());
        for p in t.bbox().corners() {
            writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, c[0], c[1], c[2])?;
        }
    }
    for i in 0..tracks.len() {
        for (a, b) in BOX_EDGES {
            writeln!(out, "{} {}", i * 8 + a, i * 8 + b)?;
        }
    }
    out.flush()
}

pub fn export_ply(path: &Path, grid: &HeatmapGrid, registry: &Registry) -> Result<(), FormatError> {
    let mut out = create(path)?;
    write_ply(&mut out, grid, registry).map_err(|e| FormatError::io(path, e))
}
