//! The complete extractor as a single-clock streaming model.
//!
//! One step ingests at most one pixel. The gradient stage's registered
//! output determines the schedule; CORDIC, voting, cell and block stages
//! consume an item in the step it is produced. After the last pixel the
//! pipeline keeps stepping with empty input until the final gradient has
//! drained, so a `W×H` frame takes `W·H + W + 2` steps.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::binning::{vote, BinVote};
use crate::block::{batch_blocks, BlockDescriptor, BlockStream, HogFrame, DEFAULT_EPSILON};
use crate::cell::{batch_cells, cells_per_frame, CellHistogram, CellLineBuffer};
use crate::cordic::{vector_translate, CordicConfig, PolarGradient, PolarTable};
use crate::error::{HogError, Result};
use crate::gradient::{batch_gradients, GradientPair, LineBuffers};
use crate::ingest::GrayFrame;
use crate::CELL_SIZE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tap {
    Gradients,
    Polar,
    Votes,
    Cells,
    Blocks,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub width: usize,
    pub height: usize,
    pub cordic: CordicConfig,
    pub epsilon: f64,
    pub taps: BTreeSet<Tap>,
}

impl PipelineConfig {
    pub const MIN_SIDE: usize = 16;

    pub fn new(width: usize, height: usize) -> Result<Self> {
        let cfg = PipelineConfig {
            width,
            height,
            cordic: CordicConfig::default(),
            epsilon: DEFAULT_EPSILON,
            taps: BTreeSet::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_taps(mut self, taps: impl IntoIterator<Item = Tap>) -> Self {
        self.taps.extend(taps);
        self
    }

    pub fn validate(&self) -> Result<()> {
        cells_per_frame(self.width, self.height)?;
        if self.width < Self::MIN_SIDE || self.height < Self::MIN_SIDE {
            return Err(HogError::Dimension(format!(
                "pipeline needs at least {0}x{0} pixels, got {1}x{2}",
                Self::MIN_SIDE,
                self.width,
                self.height
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(HogError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Live buffered state, in entries of each kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BufferFootprint {
    /// Luma samples in the line buffers and the 3×3 window.
    pub pixel_entries: usize,
    /// Partial cell histograms with at least one row segment collected.
    pub partial_cells: usize,
    /// Completed cells held for block formation.
    pub cell_entries: usize,
}

impl BufferFootprint {
    fn max(self, other: Self) -> Self {
        BufferFootprint {
            pixel_entries: self.pixel_entries.max(other.pixel_entries),
            partial_cells: self.partial_cells.max(other.partial_cells),
            cell_entries: self.cell_entries.max(other.cell_entries),
        }
    }

    /// Two pixel rows plus the window, one partial histogram per cell
    /// column, one cell row plus one cell.
    pub fn within_bound(&self, width: usize) -> bool {
        let cols = width / CELL_SIZE;
        self.pixel_entries <= 2 * width + 9 && self.partial_cells <= cols && self.cell_entries <= cols + 1
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub pixels_in: u64,
    pub steps: u64,
    /// Steps that produced no gradient before the first one appeared.
    pub warmup_steps: u64,
    pub cells_out: u64,
    pub blocks_out: u64,
    pub peak_buffers: BufferFootprint,
}

impl RunStats {
    pub fn pixels_per_step(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.pixels_in as f64 / self.steps as f64
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pixels_in={}", self.pixels_in);
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "warmup_steps={}", self.warmup_steps);
        let _ = writeln!(s, "cells_out={}", self.cells_out);
        let _ = writeln!(s, "blocks_out={}", self.blocks_out);
        let _ = writeln!(s, "pixels_per_step={:.6}", self.pixels_per_step());
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Captures {
    gradients: Option<Vec<GradientPair>>,
    polar: Option<Vec<PolarGradient>>,
    votes: Option<Vec<BinVote>>,
    cells: Option<Vec<CellHistogram>>,
    blocks: Option<Vec<BlockDescriptor>>,
}

impl Captures {
    fn for_taps(taps: &BTreeSet<Tap>) -> Self {
        Captures {
            gradients: taps.contains(&Tap::Gradients).then(Vec::new),
            polar: taps.contains(&Tap::Polar).then(Vec::new),
            votes: taps.contains(&Tap::Votes).then(Vec::new),
            cells: taps.contains(&Tap::Cells).then(Vec::new),
            blocks: taps.contains(&Tap::Blocks).then(Vec::new),
        }
    }
}

fn tapped<T>(v: &Option<Vec<T>>, tap: Tap) -> Result<&[T]> {
    v.as_deref().ok_or(HogError::TapNotEnabled(tap))
}

/// Result of one frame: features, step accounting and any tapped streams.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRun {
    pub hog: HogFrame,
    pub stats: RunStats,
    captures: Captures,
}

impl FrameRun {
    pub fn gradients(&self) -> Result<&[GradientPair]> {
        tapped(&self.captures.gradients, Tap::Gradients)
    }

    pub fn polar(&self) -> Result<&[PolarGradient]> {
        tapped(&self.captures.polar, Tap::Polar)
    }

    pub fn votes(&self) -> Result<&[BinVote]> {
        tapped(&self.captures.votes, Tap::Votes)
    }

    pub fn cells(&self) -> Result<&[CellHistogram]> {
        tapped(&self.captures.cells, Tap::Cells)
    }

    pub fn blocks(&self) -> Result<&[BlockDescriptor]> {
        tapped(&self.captures.blocks, Tap::Blocks)
    }

    /// Total number of captured items across all taps.
    pub fn captured_items(&self) -> usize {
        let c = &self.captures;
        [
            c.gradients.as_ref().map_or(0, Vec::len),
            c.polar.as_ref().map_or(0, Vec::len),
            c.votes.as_ref().map_or(0, Vec::len),
            c.cells.as_ref().map_or(0, Vec::len),
            c.blocks.as_ref().map_or(0, Vec::len),
        ]
        .iter()
        .sum()
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    polar: &'static PolarTable,
    gradient: LineBuffers,
    cells: CellLineBuffer,
    blocks: BlockStream,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let (cols, _) = cells_per_frame(cfg.width, cfg.height)?;
        Ok(Pipeline {
            polar: PolarTable::shared(&cfg.cordic),
            gradient: LineBuffers::new(cfg.width),
            cells: CellLineBuffer::new(cfg.width)?,
            blocks: BlockStream::new(cols, cfg.epsilon),
            cfg,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn footprint(&self) -> BufferFootprint {
        BufferFootprint {
            pixel_entries: self.gradient.occupancy(),
            partial_cells: self.cells.live_entries(),
            cell_entries: self.blocks.buffered(),
        }
    }

    pub fn run(&mut self, frame: &GrayFrame) -> Result<FrameRun> {
        if (frame.width(), frame.height()) != (self.cfg.width, self.cfg.height) {
            return Err(HogError::Dimension(format!(
                "frame is {}x{}, pipeline configured for {}x{}",
                frame.width(),
                frame.height(),
                self.cfg.width,
                self.cfg.height
            )));
        }
        self.gradient.reset();
        self.cells.reset();
        self.blocks.reset();

        let total = frame.luma().len();
        let (cols, rows) = cells_per_frame(self.cfg.width, self.cfg.height)?;
        let mut captures = Captures::for_taps(&self.cfg.taps);
        let mut out_cells = Vec::with_capacity(cols * rows);
        let mut out_blocks = Vec::with_capacity(cols.saturating_sub(1) * rows.saturating_sub(1));
        let mut stats = RunStats::default();
        let mut gradients_out = 0usize;
        let mut pixels = frame.luma().iter();

        while gradients_out < total {
            let g = match pixels.next() {
                Some(&v) => {
                    stats.pixels_in += 1;
                    self.gradient.push_pixel(v)
                }
                None => self.gradient.flush_step(),
            };
            stats.steps += 1;
            if let Some(g) = g {
                if gradients_out == 0 {
                    stats.warmup_steps = stats.steps - 1;
                }
                gradients_out += 1;
                self.consume(g, &mut captures, &mut out_cells, &mut out_blocks)?;
                // Partial cells and held cells only change when a vote closes
                // a cell-row segment; sample the footprint there.
                if g.col as usize % CELL_SIZE == CELL_SIZE - 1 {
                    stats.peak_buffers = stats.peak_buffers.max(self.footprint());
                }
            }
        }
        // Pixel occupancy never decreases within a frame, so its peak is the
        // final value.
        stats.peak_buffers = stats.peak_buffers.max(self.footprint());

        stats.cells_out = out_cells.len() as u64;
        stats.blocks_out = out_blocks.len() as u64;
        let hog = HogFrame {
            width: self.cfg.width,
            height: self.cfg.height,
            cells_wide: cols,
            cells_high: rows,
            cells: out_cells,
            blocks: out_blocks,
        };
        Ok(FrameRun { hog, stats, captures })
    }

    fn consume(
        &mut self,
        g: GradientPair,
        captures: &mut Captures,
        out_cells: &mut Vec<CellHistogram>,
        out_blocks: &mut Vec<BlockDescriptor>,
    ) -> Result<()> {
        let p = self.polar.translate(&g, &self.cfg.cordic);
        let v = vote(&p);
        if let Some(c) = &mut captures.gradients {
            c.push(g);
        }
        if let Some(c) = &mut captures.polar {
            c.push(p);
        }
        if let Some(c) = &mut captures.votes {
            c.push(v);
        }
        let Some(cell) = self.cells.accumulate(&v)? else {
            return Ok(());
        };
        if let Some(c) = &mut captures.cells {
            c.push(cell);
        }
        out_cells.push(cell);
        if let Some(block) = self.blocks.push(cell)? {
            if let Some(c) = &mut captures.blocks {
                c.push(block);
            }
            out_blocks.push(block);
        }
        Ok(())
    }
}

/// Stream one frame through a fresh pipeline.
pub fn run_frame(frame: &GrayFrame, cfg: &PipelineConfig) -> Result<(HogFrame, RunStats)> {
    let run = Pipeline::new(cfg.clone())?.run(frame)?;
    Ok((run.hog, run.stats))
}

/// Like [`run_frame`] but keeps the tapped intermediate streams.
pub fn run_frame_tapped(frame: &GrayFrame, cfg: &PipelineConfig) -> Result<FrameRun> {
    Pipeline::new(cfg.clone())?.run(frame)
}

/// The same stages applied to whole-frame arrays instead of a stream.
pub fn run_frame_batch(frame: &GrayFrame, cfg: &PipelineConfig) -> Result<HogFrame> {
    cfg.validate()?;
    let (cols, rows) = cells_per_frame(frame.width(), frame.height())?;
    let votes: Vec<BinVote> = batch_gradients(frame)
        .iter()
        .map(|g| vote(&vector_translate(g, &cfg.cordic)))
        .collect();
    let cells = batch_cells(&votes, frame.width(), frame.height())?;
    let blocks = batch_blocks(&cells, cols, rows, cfg.epsilon);
    Ok(HogFrame { width: frame.width(), height: frame.height(), cells_wide: cols, cells_high: rows, cells, blocks })
}
