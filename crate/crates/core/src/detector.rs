//! Sliding-window linear SVM over the block-normalized feature map.
//!
//! A window of `cols × rows` cells covers `(cols-1) × (rows-1)` blocks; its
//! feature vector is those blocks in row-major order, 36 values each. The
//! default window is 64×128 pixels (8×16 cells, 3780 features).

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::block::HogFrame;
use crate::error::{HogError, Result};
use crate::golden::GoldenHog;
use crate::{BLOCK_LEN, CELL_SIZE};

/// A grid of normalized block descriptors.
pub trait FeatureMap {
    fn blocks_wide(&self) -> usize;
    fn blocks_high(&self) -> usize;
    fn block_values(&self, row: usize, col: usize) -> &[f64; BLOCK_LEN];

    fn cells_wide(&self) -> usize {
        self.blocks_wide() + 1
    }

    fn cells_high(&self) -> usize {
        self.blocks_high() + 1
    }
}

impl FeatureMap for HogFrame {
    fn blocks_wide(&self) -> usize {
        HogFrame::blocks_wide(self)
    }

    fn blocks_high(&self) -> usize {
        HogFrame::blocks_high(self)
    }

    fn block_values(&self, row: usize, col: usize) -> &[f64; BLOCK_LEN] {
        &self.block(row, col).values
    }

    fn cells_wide(&self) -> usize {
        self.cells_wide
    }

    fn cells_high(&self) -> usize {
        self.cells_high
    }
}

impl FeatureMap for GoldenHog {
    fn blocks_wide(&self) -> usize {
        GoldenHog::blocks_wide(self)
    }

    fn blocks_high(&self) -> usize {
        GoldenHog::blocks_high(self)
    }

    fn block_values(&self, row: usize, col: usize) -> &[f64; BLOCK_LEN] {
        &self.blocks[row * GoldenHog::blocks_wide(self) + col]
    }

    fn cells_wide(&self) -> usize {
        self.cells_wide
    }

    fn cells_high(&self) -> usize {
        self.cells_high
    }
}

pub const MODEL_MAGIC: &str = "hog-svm v1";

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    window_cols: usize,
    window_rows: usize,
    weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
}

impl SvmModel {
    pub const DEFAULT_WINDOW: (usize, usize) = (8, 16);

    pub fn weight_count(window_cols: usize, window_rows: usize) -> usize {
        window_cols.saturating_sub(1) * window_rows.saturating_sub(1) * BLOCK_LEN
    }

    /// Model for the default 64×128 pixel window.
    pub fn new(weights: Vec<f64>, bias: f64, threshold: f64) -> Result<Self> {
        let (c, r) = Self::DEFAULT_WINDOW;
        Self::with_window(c, r, weights, bias, threshold)
    }

    pub fn with_window(
        window_cols: usize,
        window_rows: usize,
        weights: Vec<f64>,
        bias: f64,
        threshold: f64,
    ) -> Result<Self> {
        if window_cols < 2 || window_rows < 2 {
            return Err(HogError::Config(format!(
                "window of {window_cols}x{window_rows} cells holds no block"
            )));
        }
        let expected = Self::weight_count(window_cols, window_rows);
        if weights.len() != expected {
            return Err(HogError::CountMismatch { expected, found: weights.len() });
        }
        Ok(SvmModel { window_cols, window_rows, weights, bias, threshold })
    }

    pub fn window_cells(&self) -> (usize, usize) {
        (self.window_cols, self.window_rows)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MODEL_MAGIC} {}\n", self.weights.len());
        for w in &self.weights {
            let _ = writeln!(s, "{w:?}");
        }
        let _ = writeln!(s, "bias {:?}", self.bias);
        let _ = writeln!(s, "threshold {:?}", self.threshold);
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_real(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| !x.is_nan())
        .ok_or_else(|| HogError::Format(format!("bad {what} {s:?} in model file")))
}

/// Parse the text weight format for the default window.
pub fn parse_model(text: &str) -> Result<SvmModel> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| HogError::Format("empty model file".into()))?;
    let count = header
        .strip_prefix(MODEL_MAGIC)
        .and_then(|rest| rest.trim().parse::<usize>().ok())
        .ok_or_else(|| HogError::Format(format!("bad model header {header:?}")))?;
    let (c, r) = SvmModel::DEFAULT_WINDOW;
    let expected = SvmModel::weight_count(c, r);
    if count != expected {
        return Err(HogError::CountMismatch { expected, found: count });
    }

    let mut weights = Vec::with_capacity(count);
    let mut bias = None;
    let mut threshold = None;
    for line in lines {
        if let Some(v) = line.strip_prefix("bias") {
            bias = Some(parse_real(v, "bias")?);
        } else if let Some(v) = line.strip_prefix("threshold") {
            threshold = Some(parse_real(v, "threshold")?);
        } else if bias.is_some() || threshold.is_some() {
            return Err(HogError::Format(format!("unexpected line {line:?} after bias")));
        } else {
            weights.push(parse_real(line, "weight")?);
        }
    }
    if weights.len() != count {
        return Err(HogError::CountMismatch { expected: count, found: weights.len() });
    }
    // A file cut off before its trailer is treated as truncated, not malformed.
    let (bias, threshold) = match (bias, threshold) {
        (Some(b), Some(t)) => (b, t),
        _ => return Err(HogError::CountMismatch { expected: count + 2, found: count }),
    };
    SvmModel::new(weights, bias, threshold)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvmModel> {
    parse_model(&fs::read_to_string(path)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    /// Top-left pixel of the window.
    pub x: usize,
    pub y: usize,
    pub score: f64,
}

/// Number of window positions on the cell grid at the given stride.
pub fn window_positions(cells_wide: usize, cells_high: usize, model: &SvmModel, stride: usize) -> usize {
    let (wc, wr) = model.window_cells();
    if cells_wide < wc || cells_high < wr || stride == 0 {
        return 0;
    }
    ((cells_wide - wc) / stride + 1) * ((cells_high - wr) / stride + 1)
}

/// Linear score of the window whose top-left cell is `(cell_x, cell_y)`.
pub fn score_window<F: FeatureMap + ?Sized>(frame: &F, cell_x: usize, cell_y: usize, model: &SvmModel) -> Result<f64> {
    let (bw, bh) = (model.window_cols - 1, model.window_rows - 1);
    if cell_x + bw > frame.blocks_wide() || cell_y + bh > frame.blocks_high() {
        return Err(HogError::OutOfBounds(format!(
            "window at cell ({cell_x}, {cell_y}) leaves the {}x{} block grid",
            frame.blocks_wide(),
            frame.blocks_high()
        )));
    }
    let mut score = model.bias;
    let mut weights = model.weights.chunks_exact(BLOCK_LEN);
    for by in 0..bh {
        for bx in 0..bw {
            let w = weights.next().expect("weight count checked at construction");
            let f = frame.block_values(cell_y + by, cell_x + bx);
            score += w.iter().zip(f).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(score)
}

/// Score every window position and keep those above the model threshold,
/// best first; ties are broken by `(y, x)`.
pub fn detect<F: FeatureMap + ?Sized>(frame: &F, model: &SvmModel, stride_cells: usize) -> Result<Vec<Detection>> {
    if stride_cells == 0 {
        return Err(HogError::Config("window stride must be at least one cell".into()));
    }
    let (wc, wr) = model.window_cells();
    let mut out = Vec::new();
    if frame.cells_wide() < wc || frame.cells_high() < wr {
        return Ok(out);
    }
    for cy in (0..=frame.cells_high() - wr).step_by(stride_cells) {
        for cx in (0..=frame.cells_wide() - wc).step_by(stride_cells) {
            let score = score_window(frame, cx, cy, model)?;
            if score > model.threshold {
                out.push(Detection { x: cx * CELL_SIZE, y: cy * CELL_SIZE, score });
            }
        }
    }
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
    });
    Ok(out)
}

pub fn detections_csv(dets: &[Detection]) -> String {
    let mut s = String::from("x,y,score\n");
    for d in dets {
        let _ = writeln!(s, "{},{},{}", d.x, d.y, d.score);
    }
    s
}
