//! Cell aggregation through a line buffer of partial cell histograms.
//!
//! One [`PartialCellHog`] per cell column is live at a time. Each 8-pixel
//! row segment of a cell adds into its column's entry; once the eighth
//! segment lands the histogram is complete (the `cell_hog_valid` event), it
//! is emitted and the entry is cleared for the next cell row.

use crate::binning::BinVote;
use crate::error::{HogError, Result};
use crate::fixq::{QValue, ACC};
use crate::{BINS, CELL_SIZE};

/// Cell grid dimensions `(cols, rows)` for a frame.
pub fn cells_per_frame(width: usize, height: usize) -> Result<(usize, usize)> {
    if width % CELL_SIZE != 0 || height % CELL_SIZE != 0 || width == 0 || height == 0 {
        return Err(HogError::Dimension(format!(
            "frame {width}x{height} is not a positive multiple of {CELL_SIZE} in both directions"
        )));
    }
    Ok((width / CELL_SIZE, height / CELL_SIZE))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PartialCellHog {
    /// Raw [`ACC`] accumulators.
    pub bins: [u32; BINS],
    pub rows_collected: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellHistogram {
    /// Raw [`ACC`] bins.
    pub bins: [u32; BINS],
    pub cell_row: u32,
    pub cell_col: u32,
}

impl CellHistogram {
    pub fn bin_q(&self, k: usize) -> QValue {
        QValue::from_raw(ACC, self.bins[k] as i64).expect("bin within ACC")
    }

    pub fn values(&self) -> [f64; BINS] {
        let q = ACC.quantum();
        self.bins.map(|b| b as f64 * q)
    }

    pub fn mass(&self) -> u64 {
        self.bins.iter().map(|&b| b as u64).sum()
    }
}

#[derive(Clone, Debug)]
pub struct CellLineBuffer {
    width: usize,
    entries: Vec<PartialCellHog>,
    next_seq: u64,
    live: usize,
}

impl CellLineBuffer {
    pub fn new(width: usize) -> Result<Self> {
        if width % CELL_SIZE != 0 || width == 0 {
            return Err(HogError::Dimension(format!(
                "row width {width} is not a positive multiple of {CELL_SIZE}"
            )));
        }
        Ok(CellLineBuffer {
            width,
            entries: vec![PartialCellHog::default(); width / CELL_SIZE],
            next_seq: 0,
            live: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.entries.len()
    }

    /// Entries holding at least one completed row segment.
    pub fn live_entries(&self) -> usize {
        self.live
    }

    pub fn entries(&self) -> &[PartialCellHog] {
        &self.entries
    }

    pub fn reset(&mut self) {
        self.entries.fill(PartialCellHog::default());
        self.next_seq = 0;
        self.live = 0;
    }

    #[inline]
    pub fn accumulate(&mut self, v: &BinVote) -> Result<Option<CellHistogram>> {
        let (row, col) = (v.row as usize, v.col as usize);
        let seq = (row * self.width + col) as u64;
        if col >= self.width || seq != self.next_seq {
            return Err(HogError::Order(format!(
                "vote for pixel ({row}, {col}) arrived, expected sequence {}",
                self.next_seq
            )));
        }
        self.next_seq += 1;

        let entry = &mut self.entries[col / CELL_SIZE];
        entry.bins[v.lo_bin as usize] += v.lo_weight as u32;
        entry.bins[v.hi_bin as usize] += v.hi_weight as u32;
        if col % CELL_SIZE != CELL_SIZE - 1 {
            return Ok(None);
        }
        if entry.rows_collected == 0 {
            self.live += 1;
        }
        entry.rows_collected += 1;
        if entry.rows_collected as usize != CELL_SIZE {
            return Ok(None);
        }
        let hist = CellHistogram {
            bins: entry.bins,
            cell_row: (row / CELL_SIZE) as u32,
            cell_col: (col / CELL_SIZE) as u32,
        };
        *entry = PartialCellHog::default();
        self.live -= 1;
        Ok(Some(hist))
    }
}

/// Bucket votes by `(row / 8, col / 8)` over a whole frame, row-major cells.
pub fn batch_cells(votes: &[BinVote], width: usize, height: usize) -> Result<Vec<CellHistogram>> {
    let (cols, rows) = cells_per_frame(width, height)?;
    let mut cells: Vec<CellHistogram> = (0..rows * cols)
        .map(|i| CellHistogram { bins: [0; BINS], cell_row: (i / cols) as u32, cell_col: (i % cols) as u32 })
        .collect();
    for v in votes {
        let idx = (v.row as usize / CELL_SIZE) * cols + v.col as usize / CELL_SIZE;
        let cell = cells
            .get_mut(idx)
            .ok_or_else(|| HogError::OutOfBounds(format!("vote at ({}, {})", v.row, v.col)))?;
        cell.bins[v.lo_bin as usize] += v.lo_weight as u32;
        cell.bins[v.hi_bin as usize] += v.hi_weight as u32;
    }
    Ok(cells)
}
