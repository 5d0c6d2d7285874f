use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{check_header, create, decode, open, record_type, write_record, FormatError, Lines, FORMAT_VERSION};
use crate::geometry::Vec3;
use crate::heatmap::HeatmapGrid;

const GRID_FORMAT: &str = "cuboid-track/grid";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    #[serde(rename = "type")]
    kind: String,
    format: String,
    version: u32,
    voxel_size: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellRecord {
    #[serde(rename = "type")]
    kind: String,
    key: [i64; 3],
    mean: [f64; 3],
    heat: f64,
    count: u64,
}

/// Writes the grid with cells in ascending key order. Floats use the shortest
/// round-trip representation, so reading back restores the grid exactly.
pub fn write_grid(path: &Path, grid: &HeatmapGrid) -> Result<(), FormatError> {
    let mut out = create(path)?;
    write_grid_to(&mut out, grid).map_err(|e| FormatError::io(path, e))
}

fn write_grid_to<W: Write>(out: &mut W, grid: &HeatmapGrid) -> std::io::Result<()> {
    write_record(
        out,
        &HeaderRecord {
            kind: "header".into(),
            format: GRID_FORMAT.into(),
            version: FORMAT_VERSION,
            voxel_size: grid.voxel_size(),
        },
    )?;
    for (key, cell) in grid.sorted_cells() {
        write_record(
            out,
            &CellRecord {
                kind: "cell".into(),
                key,
                mean: cell.mean_position().to_array(),
                heat: cell.heat(),
                count: cell.sample_count(),
            },
        )?;
    }
    out.flush()
}

pub fn read_grid(path: &Path) -> Result<HeatmapGrid, FormatError> {
    GridReader { lines: Lines::new(open(path)?, path.to_path_buf()) }.read()
}

/// Grid loader over any buffered reader.
pub struct GridReader<R> {
    lines: Lines<R>,
}

impl<R: BufRead> GridReader<R> {
    pub fn new(reader: R) -> Self {
        GridReader { lines: Lines::new(reader, PathBuf::from("<grid>")) }
    }

    pub fn read(mut self) -> Result<HeatmapGrid, FormatError> {
        let (line, value) = self.lines.next_record().ok_or(FormatError::Missing("header"))??;
        if record_type(line, &value)? != "header" {
            return Err(FormatError::UnexpectedRecord { line, expected: "header" });
        }
        let h: HeaderRecord = decode(line, value)?;
        check_header(line, &h.format, GRID_FORMAT, h.version)?;
        let mut grid =
            HeatmapGrid::new(h.voxel_size).map_err(|e| FormatError::invalid(line, "header, voxel_size", e))?;
        while let Some(record) = self.lines.next_record() {
            let (line, value) = record?;
            if record_type(line, &value)? != "cell" {
                return Err(FormatError::UnexpectedRecord { line, expected: "cell" });
            }
            let c: CellRecord = decode(line, value)?;
            grid.insert_cell(c.key, Vec3::from_array(c.mean), c.heat, c.count)
                .map_err(|e| FormatError::invalid(line, "cell", e))?;
        }
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut g = HeatmapGrid::new(0.02).unwrap();
        g.update(&[
            (Vec3::new(0.1234567891234, -0.5, 1.0 / 3.0), 1.0),
            (Vec3::new(0.1234567, -0.5, 1.0 / 3.0), 1.0),
            (Vec3::new(4.0, 5.0, 6.0), 2.5),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_grid_to(&mut buf, &g).unwrap();
        let back = GridReader::new(buf.as_slice()).read().unwrap();
        assert_eq!(back, g);
        let mut again = Vec::new();
        write_grid_to(&mut again, &back).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn rejects_misplaced_cell() {
        let text = concat!(
            r#"{"type":"header","format":"cuboid-track/grid","version":1,"voxel_size":0.1}"#,
            "\n",
            r#"{"type":"cell","key":[3,0,0],"mean":[0.05,0.05,0.05],"heat":1.0,"count":1}"#,
            "\n"
        );
        let err = GridReader::new(text.as_bytes()).read().unwrap_err();
        assert!(err.to_string().contains("outside its voxel"), "{err}");
    }
}
