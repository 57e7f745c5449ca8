//! Per-location maps written as `col,row,value` CSV plus an 8-bit binary PGM.
//!
//! The PGM puts the highest grid row at the top of the image, so north is up.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::scenario::Grid;

/// Write `<stem>.csv` and `<stem>.pgm`; returns both paths.
pub fn emit_heatmap(values: &[f64], grid: &Grid, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    if values.len() != grid.len() {
        return Err(Error::validation(
            "heatmap",
            format!("{} values for a grid of {} locations", values.len(), grid.len()),
        ));
    }
    let csv_path = stem.with_extension("csv");
    let pgm_path = stem.with_extension("pgm");

    let mut csv = String::from("col,row,value\n");
    for (i, v) in values.iter().enumerate() {
        let (col, row) = grid.index_to_cell(i)?;
        csv.push_str(&format!("{col},{row},{v}\n"));
    }
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;

    let file = File::create(&pgm_path).map_err(|e| Error::io(&pgm_path, e))?;
    let mut out = BufWriter::new(file);
    let pixels = graymap_pixels(values, grid);
    out.write_all(format!("P5\n{} {}\n255\n", grid.width_cells(), grid.height_cells()).as_bytes())
        .and_then(|_| out.write_all(&pixels))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&pgm_path, e))?;
    Ok((csv_path, pgm_path))
}

/// Min-max scaled pixels in image order (top row first). Constant fields map to 0.
pub fn graymap_pixels(values: &[f64], grid: &Grid) -> Vec<u8> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let (w, h) = (grid.width_cells(), grid.height_cells());
    let mut pixels = Vec::with_capacity(w * h);
    for row in (0..h).rev() {
        for col in 0..w {
            let v = values[row * w + col];
            let p = if span > 0.0 && span.is_finite() {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            };
            pixels.push(p);
        }
    }
    pixels
}

/// Read back the CSV half of a heatmap.
pub fn read_heatmap_csv(path: &Path, grid: &Grid) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = vec![f64::NAN; grid.len()];
    for (n, line) in text.lines().enumerate().skip(1) {
        let bad = || Error::Parse {
            path: path.to_path_buf(),
            line: n as u64 + 1,
            message: format!("malformed heatmap row `{line}`"),
        };
        let mut parts = line.split(',');
        let (Some(c), Some(r), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        let col: usize = c.parse().map_err(|_| bad())?;
        let row: usize = r.parse().map_err(|_| bad())?;
        let value: f64 = v.parse().map_err(|_| bad())?;
        values[grid.location_index(col, row)?] = value;
    }
    Ok(values)
}
