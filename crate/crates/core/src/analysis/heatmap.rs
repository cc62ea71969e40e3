//! Per-cell score maps as CSV and a grayscale PPM.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::GridConfig;

fn check(grid: GridConfig, scores: &[f64]) -> Result<()> {
    if scores.len() != grid.cell_count() {
        return Err(Error::Dimension(format!(
            "{} scores for a {grid} grid",
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("heatmap score"));
    }
    Ok(())
}

/// Rows of comma-separated scores, newline between rows, none at the end.
pub fn heatmap_csv(grid: GridConfig, scores: &[f64]) -> Result<String> {
    check(grid, scores)?;
    Ok(scores
        .chunks(grid.cols)
        .map(|row| row.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Gray level of each cell: the lowest score maps to 255, the highest to 0.
pub fn luminance(scores: &[f64]) -> Vec<u8> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .map(|&s| {
            if hi > lo {
                (255.0 - 255.0 * (s - lo) / (hi - lo)).round() as u8
            } else {
                255
            }
        })
        .collect()
}

/// Binary PPM (P6), one pixel per cell, gray written to all three channels.
pub fn heatmap_ppm(grid: GridConfig, scores: &[f64]) -> Result<Vec<u8>> {
    check(grid, scores)?;
    let mut out = format!("P6\n{} {}\n255\n", grid.cols, grid.rows).into_bytes();
    for l in luminance(scores) {
        out.extend_from_slice(&[l, l, l]);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeatmapFiles {
    pub csv: PathBuf,
    pub ppm: PathBuf,
}

/// Writes `<stem>.csv` and `<stem>.ppm`. `scores` is row-major.
pub fn emit_heatmap(grid: GridConfig, scores: &[f64], stem: &Path) -> Result<HeatmapFiles> {
    let csv = stem.with_extension("csv");
    let ppm = stem.with_extension("ppm");
    let text = heatmap_csv(grid, scores)?;
    let image = heatmap_ppm(grid, scores)?;
    fs::write(&csv, text).map_err(|e| Error::io(&csv, e))?;
    fs::write(&ppm, image).map_err(|e| Error::io(&ppm, e))?;
    Ok(HeatmapFiles { csv, ppm })
}
