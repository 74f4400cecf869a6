//! Double-precision reference model and the fixed-vs-float comparator.
//!
//! The geometry matches the fixed pipeline exactly (clamped borders, bin
//! centres, 8×8 cells, overlapping 2×2 blocks, the same epsilon), so a
//! [`DiffReport`] measures quantization error and nothing else.

use std::fmt::Write as _;

use crate::block::HogFrame;
use crate::cell::cells_per_frame;
use crate::error::{HogError, Result};
use crate::ingest::GrayFrame;
use crate::{BINS, BLOCK_LEN, CELL_SIZE};

#[derive(Clone, Debug, PartialEq)]
pub struct GoldenHog {
    pub width: usize,
    pub height: usize,
    pub cells_wide: usize,
    pub cells_high: usize,
    /// Row-major cell histograms.
    pub cells: Vec<[f64; BINS]>,
    /// Row-major block descriptors, same layout as [`HogFrame::blocks`].
    pub blocks: Vec<[f64; BLOCK_LEN]>,
}

impl GoldenHog {
    pub fn blocks_wide(&self) -> usize {
        self.cells_wide.saturating_sub(1)
    }

    pub fn blocks_high(&self) -> usize {
        self.cells_high.saturating_sub(1)
    }

    pub fn cell_features(&self) -> Vec<f32> {
        self.cells.iter().flatten().map(|&x| x as f32).collect()
    }

    pub fn block_features(&self) -> Vec<f32> {
        self.blocks.iter().flatten().map(|&x| x as f32).collect()
    }
}

/// Orientation in degrees folded onto `[0, 180)`.
pub fn unsigned_orientation(gx: f64, gy: f64) -> f64 {
    crate::cordic::fold_unsigned(gy.atan2(gx).to_degrees())
}

/// `(lo_bin, lo_weight, hi_weight)`; the high bin is `(lo_bin + 1) % 9`.
pub fn interpolate_vote(magnitude: f64, theta_deg: f64) -> (usize, f64, f64) {
    let mut from_first = theta_deg - 10.0;
    if from_first < 0.0 {
        from_first += 180.0;
    }
    let t = from_first / 20.0;
    let lo = (t.floor() as usize).min(BINS - 1);
    let hi_w = magnitude * (t - lo as f64);
    (lo, magnitude - hi_w, hi_w)
}

pub fn golden_hog(frame: &GrayFrame, epsilon: f64) -> Result<GoldenHog> {
    let (w, h) = (frame.width(), frame.height());
    let (cols, rows) = cells_per_frame(w, h)?;
    let mut cells = vec![[0.0; BINS]; cols * rows];
    for y in 0..h {
        for x in 0..w {
            let px = |xx: usize, yy: usize| frame.at(xx, yy) as f64;
            let gx = px((x + 1).min(w - 1), y) - px(x.saturating_sub(1), y);
            let gy = px(x, (y + 1).min(h - 1)) - px(x, y.saturating_sub(1));
            let (lo, lo_w, hi_w) = interpolate_vote((gx * gx + gy * gy).sqrt(), unsigned_orientation(gx, gy));
            let cell = &mut cells[(y / CELL_SIZE) * cols + x / CELL_SIZE];
            cell[lo] += lo_w;
            cell[(lo + 1) % BINS] += hi_w;
        }
    }

    let mut blocks = Vec::with_capacity(cols.saturating_sub(1) * rows.saturating_sub(1));
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols.saturating_sub(1) {
            let mut v = [0.0; BLOCK_LEN];
            for (k, (rr, cc)) in [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)].into_iter().enumerate() {
                v[k * BINS..(k + 1) * BINS].copy_from_slice(&cells[rr * cols + cc]);
            }
            let norm = (v.iter().map(|x| x * x).sum::<f64>() + epsilon * epsilon).sqrt();
            blocks.push(v.map(|x| x / norm));
        }
    }
    Ok(GoldenHog { width: w, height: h, cells_wide: cols, cells_high: rows, cells, blocks })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageDiff {
    pub mean_rel_err: f64,
    pub max_abs_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffReport {
    /// Mean over blocks of `|fixed - gold|_1 / max(|gold|_1, eps)`.
    pub mean_rel_err: f64,
    /// Largest element-wise block feature difference.
    pub max_abs_err: f64,
    pub blocks: usize,
    /// Same measures on the unnormalized cell histograms.
    pub per_stage: Option<StageDiff>,
}

impl DiffReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mean_rel_err={:.6}", self.mean_rel_err);
        let _ = writeln!(s, "max_abs_err={:.6}", self.max_abs_err);
        let _ = writeln!(s, "blocks={}", self.blocks);
        if let Some(cells) = &self.per_stage {
            let _ = writeln!(s, "cell_mean_rel_err={:.6}", cells.mean_rel_err);
            let _ = writeln!(s, "cell_max_abs_err={:.6}", cells.max_abs_err);
        }
        s
    }
}

fn diff_vectors<'a>(
    pairs: impl Iterator<Item = (&'a [f64], &'a [f64])>,
    epsilon: f64,
) -> StageDiff {
    let (mut rel_sum, mut max_abs, mut n) = (0.0, 0.0f64, 0usize);
    for (a, b) in pairs {
        let mut l1 = 0.0;
        let mut ref_l1 = 0.0;
        for (x, y) in a.iter().zip(b) {
            let d = (x - y).abs();
            l1 += d;
            ref_l1 += y.abs();
            max_abs = max_abs.max(d);
        }
        rel_sum += l1 / ref_l1.max(epsilon);
        n += 1;
    }
    StageDiff { mean_rel_err: if n == 0 { 0.0 } else { rel_sum / n as f64 }, max_abs_err: max_abs }
}

pub fn compare(fixed: &HogFrame, gold: &GoldenHog, epsilon: f64) -> Result<DiffReport> {
    if (fixed.cells_wide, fixed.cells_high) != (gold.cells_wide, gold.cells_high)
        || fixed.blocks.len() != gold.blocks.len()
        || fixed.cells.len() != gold.cells.len()
    {
        return Err(HogError::ShapeMismatch(format!(
            "fixed grid {}x{} vs golden grid {}x{}",
            fixed.cells_wide, fixed.cells_high, gold.cells_wide, gold.cells_high
        )));
    }
    let blocks = diff_vectors(
        fixed.blocks.iter().map(|b| &b.values[..]).zip(gold.blocks.iter().map(|b| &b[..])),
        epsilon,
    );
    let fixed_cells: Vec<[f64; BINS]> = fixed.cells.iter().map(|c| c.values()).collect();
    let cells = diff_vectors(fixed_cells.iter().map(|c| &c[..]).zip(gold.cells.iter().map(|c| &c[..])), epsilon);
    Ok(DiffReport {
        mean_rel_err: blocks.mean_rel_err,
        max_abs_err: blocks.max_abs_err,
        blocks: fixed.blocks.len(),
        per_stage: Some(cells),
    })
}

/// Element-wise `|fixed - gold|` of the block view.
pub fn block_difference(fixed: &HogFrame, gold: &GoldenHog) -> Result<Vec<f32>> {
    if fixed.blocks.len() != gold.blocks.len() {
        return Err(HogError::ShapeMismatch("block counts differ".into()));
    }
    Ok(fixed
        .blocks
        .iter()
        .zip(&gold.blocks)
        .flat_map(|(f, g)| f.values.iter().zip(g).map(|(a, b)| (a - b).abs() as f32).collect::<Vec<_>>())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{BlockDescriptor, DEFAULT_EPSILON};
    use crate::cell::CellHistogram;

    #[test]
    fn flat_frame_is_all_zero() {
        let g = golden_hog(&GrayFrame::from_fn(24, 16, |_, _| 80), DEFAULT_EPSILON).unwrap();
        assert_eq!((g.cells_wide, g.cells_high), (3, 2));
        assert!(g.cells.iter().flatten().all(|&x| x == 0.0));
        assert_eq!(g.blocks.len(), 2);
        assert!(g.blocks.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn horizontal_ramp_splits_between_first_and_last_bin() {
        let g = golden_hog(&GrayFrame::from_fn(32, 16, |x, _| (x * 3) as u8), DEFAULT_EPSILON).unwrap();
        // Cell (0, 1) is interior: gx = 6 everywhere, theta = 0.
        let cell = g.cells[1];
        assert_eq!(cell[0], 64.0 * 3.0);
        assert_eq!(cell[8], 64.0 * 3.0);
        assert!(cell[1..8].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn vote_interpolation_examples() {
        assert_eq!(interpolate_vote(10.0, 30.0), (1, 10.0, 0.0));
        assert_eq!(interpolate_vote(10.0, 20.0), (0, 5.0, 5.0));
        let (lo, a, b) = interpolate_vote(8.0, 175.0);
        assert_eq!(lo, 8);
        assert!((a - 6.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        assert_eq!(unsigned_orientation(-1.0, 0.0), 0.0);
        assert_eq!(unsigned_orientation(0.0, -1.0), 90.0);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            golden_hog(&GrayFrame::from_fn(20, 16, |_, _| 0), DEFAULT_EPSILON),
            Err(HogError::Dimension(_))
        ));
    }

    fn hog_from_golden(g: &GoldenHog) -> HogFrame {
        let q = crate::fixq::ACC.quantum();
        HogFrame {
            width: g.width,
            height: g.height,
            cells_wide: g.cells_wide,
            cells_high: g.cells_high,
            cells: g
                .cells
                .iter()
                .enumerate()
                .map(|(i, c)| CellHistogram {
                    bins: c.map(|x| (x / q).round() as u32),
                    cell_row: (i / g.cells_wide) as u32,
                    cell_col: (i % g.cells_wide) as u32,
                })
                .collect(),
            blocks: g
                .blocks
                .iter()
                .enumerate()
                .map(|(i, b)| BlockDescriptor {
                    values: *b,
                    block_row: (i / g.blocks_wide()) as u32,
                    block_col: (i % g.blocks_wide()) as u32,
                })
                .collect(),
        }
    }

    #[test]
    fn compare_identical_and_zero() {
        let frame = GrayFrame::from_fn(16, 16, |x, y| (x * y) as u8);
        let g = golden_hog(&frame, DEFAULT_EPSILON).unwrap();
        let f = hog_from_golden(&g);
        let r = compare(&f, &g, DEFAULT_EPSILON).unwrap();
        assert_eq!(r.mean_rel_err, 0.0);
        assert_eq!(r.max_abs_err, 0.0);

        let flat = golden_hog(&GrayFrame::from_fn(16, 16, |_, _| 0), DEFAULT_EPSILON).unwrap();
        let r = compare(&hog_from_golden(&flat), &flat, DEFAULT_EPSILON).unwrap();
        assert_eq!(r.mean_rel_err, 0.0);
        assert!(r.to_text().contains("mean_rel_err=0.000000"));
    }

    #[test]
    fn compare_detects_shape_mismatch() {
        let a = golden_hog(&GrayFrame::from_fn(16, 16, |_, _| 0), DEFAULT_EPSILON).unwrap();
        let b = golden_hog(&GrayFrame::from_fn(24, 16, |_, _| 0), DEFAULT_EPSILON).unwrap();
        assert!(matches!(compare(&hog_from_golden(&a), &b, DEFAULT_EPSILON), Err(HogError::ShapeMismatch(_))));
    }
}
