//! Per-instance score tables and graymap rasters for heatmap-style review.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use afdmil_core::data::Bag;
use afdmil_core::model::ForwardTrace;

use crate::{Error, Result};

pub const SCORE_HEADER: &str = "idx,x,y,y_hat,alpha,sel_ins,sel_att";

/// Largest raster side accepted from coordinates.
pub const MAX_RASTER_SIDE: usize = 8192;

/// One row per instance. Columns without a value (no coordinates, or a
/// disabled channel) are left blank.
pub fn score_table(trace: &ForwardTrace, bag: &Bag) -> String {
    let mut sel_ins = vec![false; bag.len()];
    let mut sel_att = vec![false; bag.len()];
    for &i in &trace.channel1_indices {
        sel_ins[i] = true;
    }
    for &i in &trace.channel2_indices {
        sel_att[i] = true;
    }
    let mut out = String::with_capacity(48 * (bag.len() + 1));
    out.push_str(SCORE_HEADER);
    out.push('\n');
    for i in 0..bag.len() {
        write!(out, "{i},").unwrap();
        match &bag.coords {
            Some(c) => write!(out, "{},{},", c[i][0], c[i][1]).unwrap(),
            None => out.push_str(",,"),
        }
        if let Some(p) = trace.instance_probs.get(i) {
            write!(out, "{p}").unwrap();
        }
        out.push(',');
        if let Some(a) = trace.attention_weights.get(i) {
            write!(out, "{a}").unwrap();
        }
        writeln!(out, ",{},{}", u8::from(sel_ins[i]), u8::from(sel_att[i])).unwrap();
    }
    out
}

pub fn gray_level(p: f64) -> u8 {
    (255.0 * p.clamp(0.0, 1.0)).round() as u8
}

/// An 8-bit raster, row-major, `width * height` pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Raster {
    /// Binary portable graymap (`P5`, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Places `values` on the integer grid given by `coords`. Cells without an
/// instance stay black.
pub fn grid_raster(coords: &[[f64; 2]], values: &[f64]) -> std::result::Result<Raster, String> {
    if coords.len() != values.len() || coords.is_empty() {
        return Err(format!(
            "{} coordinates for {} values",
            coords.len(),
            values.len()
        ));
    }
    let mut cells = Vec::with_capacity(coords.len());
    for (i, &[x, y]) in coords.iter().enumerate() {
        let ok = |v: f64| v >= 0.0 && v.fract() == 0.0 && v < MAX_RASTER_SIDE as f64;
        if !ok(x) || !ok(y) {
            return Err(format!("instance {i} sits at ({x}, {y}), not a grid cell"));
        }
        cells.push((x as usize, y as usize));
    }
    let width = cells.iter().map(|c| c.0).max().unwrap() + 1;
    let height = cells.iter().map(|c| c.1).max().unwrap() + 1;
    let mut pixels = vec![0u8; width * height];
    let mut seen = vec![false; width * height];
    for (i, &(x, y)) in cells.iter().enumerate() {
        let at = y * width + x;
        if seen[at] {
            return Err(format!("two instances share grid cell ({x}, {y})"));
        }
        seen[at] = true;
        pixels[at] = gray_level(values[i]);
    }
    Ok(Raster {
        width,
        height,
        pixels,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExportedScores {
    pub table: PathBuf,
    pub raster: Option<PathBuf>,
}

/// Writes `<stem>.csv` and, when the bag has grid coordinates and instance
/// probabilities, `<stem>.pgm`.
pub fn export_instance_scores(trace: &ForwardTrace, bag: &Bag, dir: &Path, stem: &str) -> Result<ExportedScores> {
    let table = dir.join(format!("{stem}.csv"));
    fs::write(&table, score_table(trace, bag)).map_err(|e| Error::io(&table, e))?;
    let raster = match (&bag.coords, trace.instance_probs.is_empty()) {
        (Some(coords), false) => match grid_raster(coords, &trace.instance_probs) {
            Ok(r) => {
                let path = dir.join(format!("{stem}.pgm"));
                fs::write(&path, r.to_pgm()).map_err(|e| Error::io(&path, e))?;
                Some(path)
            }
            Err(msg) => {
                log::warn!("bag `{}`: raster skipped: {msg}", bag.id);
                None
            }
        },
        _ => None,
    };
    Ok(ExportedScores { table, raster })
}

#[cfg(test)]
mod tests {
    use super::*;
    use afdmil_core::numerics::Matrix;

    fn trace(probs: Vec<f64>, alpha: Vec<f64>, c1: Vec<usize>, c2: Vec<usize>) -> ForwardTrace {
        ForwardTrace {
            instance_probs: probs,
            attention_weights: alpha,
            channel1_indices: c1,
            channel1_positive: 1,
            channel2_indices: c2,
            fusion_weights: vec![1.0],
            attention_branch_prob: None,
            final_prob: 0.5,
            loss1: 0.0,
            loss2: 0.0,
            loss3: 0.0,
            total_loss: 0.0,
        }
    }

    #[test]
    fn two_instance_table() {
        let bag = Bag::new("b", 1, Matrix::zeros(2, 3))
            .unwrap()
            .with_coords(vec![[0.0, 0.0], [1.0, 0.0]])
            .unwrap();
        let t = trace(vec![0.25, 1.0], vec![0.4, 0.6], vec![1], vec![1]);
        let text = score_table(&t, &bag);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, [SCORE_HEADER, "0,0,0,0.25,0.4,0,0", "1,1,0,1,0.6,1,1"]);
    }

    #[test]
    fn blanks_without_coords_or_channels() {
        let bag = Bag::new("b", 0, Matrix::zeros(1, 2)).unwrap();
        let t = trace(vec![], vec![], vec![], vec![]);
        assert_eq!(score_table(&t, &bag).lines().nth(1), Some("0,,,,,0,0"));
    }

    #[test]
    fn raster_endpoints_and_layout() {
        assert_eq!(gray_level(1.0), 255);
        assert_eq!(gray_level(0.0), 0);
        assert_eq!(gray_level(0.5), 128);
        let r = grid_raster(&[[0.0, 0.0], [1.0, 1.0]], &[1.0, 0.2]).unwrap();
        assert_eq!((r.width, r.height), (2, 2));
        assert_eq!(r.pixels, [255, 0, 0, 51]);
        let pgm = r.to_pgm();
        assert!(pgm.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(pgm.len(), 11 + 4);
    }

    #[test]
    fn non_grid_coords_are_refused() {
        assert!(grid_raster(&[[0.5, 0.0]], &[0.1]).is_err());
        assert!(grid_raster(&[[-1.0, 0.0]], &[0.1]).is_err());
        assert!(grid_raster(&[[1.0, 1.0], [1.0, 1.0]], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn export_skips_raster_for_fractional_coords() {
        let dir = tempfile::tempdir().unwrap();
        let bag = Bag::new("b", 1, Matrix::zeros(1, 2))
            .unwrap()
            .with_coords(vec![[0.5, 2.0]])
            .unwrap();
        let t = trace(vec![0.7], vec![1.0], vec![0], vec![0]);
        let out = export_instance_scores(&t, &bag, dir.path(), "b").unwrap();
        assert!(out.raster.is_none());
        assert!(out.table.exists());
        let bag = Bag::new("g", 1, Matrix::zeros(1, 2))
            .unwrap()
            .with_coords(vec![[0.0, 0.0]])
            .unwrap();
        let out = export_instance_scores(&t, &bag, dir.path(), "g").unwrap();
        assert_eq!(fs::read(out.raster.unwrap()).unwrap(), b"P5\n1 1\n255\n\xb3");
    }
}
