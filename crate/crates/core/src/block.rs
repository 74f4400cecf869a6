//! Block normalization over overlapping 2×2 cell neighbourhoods.
//!
//! Features leave the fixed-point domain here: the four cell histograms are
//! dequantized and the 36-vector is scaled by `1 / sqrt(|v|^2 + eps^2)` in
//! double precision.

use std::collections::VecDeque;

use crate::cell::CellHistogram;
use crate::error::{HogError, Result};
use crate::{BINS, BLOCK_LEN};

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockDescriptor {
    /// Cells in order (r,c), (r,c+1), (r+1,c), (r+1,c+1); bins innermost.
    pub values: [f64; BLOCK_LEN],
    pub block_row: u32,
    pub block_col: u32,
}

pub fn l2_normalize(v: &[f64; BLOCK_LEN], epsilon: f64) -> [f64; BLOCK_LEN] {
    let sq: f64 = v.iter().map(|x| x * x).sum();
    let scale = (sq + epsilon * epsilon).sqrt().recip();
    v.map(|x| x * scale)
}

/// Normalize the 2×2 neighbourhood whose top-left cell is `cells[0]`.
pub fn normalize_block(cells: [&CellHistogram; 4], epsilon: f64) -> BlockDescriptor {
    let mut v = [0.0; BLOCK_LEN];
    for (chunk, cell) in v.chunks_exact_mut(BINS).zip(cells) {
        chunk.copy_from_slice(&cell.values());
    }
    BlockDescriptor {
        values: l2_normalize(&v, epsilon),
        block_row: cells[0].cell_row,
        block_col: cells[0].cell_col,
    }
}

/// Streaming block former holding one cell row plus one cell.
#[derive(Clone, Debug)]
pub struct BlockStream {
    cols: usize,
    epsilon: f64,
    ring: VecDeque<CellHistogram>,
    next: (u32, u32),
}

impl BlockStream {
    pub fn new(cols: usize, epsilon: f64) -> Self {
        BlockStream { cols, epsilon, ring: VecDeque::with_capacity(cols + 1), next: (0, 0) }
    }

    pub fn capacity(&self) -> usize {
        self.cols + 1
    }

    pub fn buffered(&self) -> usize {
        self.ring.len()
    }

    pub fn reset(&mut self) {
        self.ring.clear();
        self.next = (0, 0);
    }

    pub fn push(&mut self, cell: CellHistogram) -> Result<Option<BlockDescriptor>> {
        if (cell.cell_row, cell.cell_col) != self.next || cell.cell_col as usize >= self.cols {
            return Err(HogError::Order(format!(
                "cell ({}, {}) arrived, expected {:?}",
                cell.cell_row, cell.cell_col, self.next
            )));
        }
        self.next = if cell.cell_col as usize + 1 == self.cols {
            (cell.cell_row + 1, 0)
        } else {
            (cell.cell_row, cell.cell_col + 1)
        };
        let block = if cell.cell_row > 0 && cell.cell_col > 0 {
            // The ring ends with (r-1,c-1), (r-1,c), ..., (r,c-1).
            let n = self.ring.len();
            let quad = [&self.ring[n - 1 - self.cols], &self.ring[n - self.cols], &self.ring[n - 1], &cell];
            Some(normalize_block(quad, self.epsilon))
        } else {
            None
        };
        if self.ring.len() == self.cols + 1 {
            self.ring.pop_front();
        }
        self.ring.push_back(cell);
        Ok(block)
    }
}

pub fn stream_blocks(
    cells: impl IntoIterator<Item = CellHistogram>,
    cols: usize,
    epsilon: f64,
) -> Result<Vec<BlockDescriptor>> {
    let mut stream = BlockStream::new(cols, epsilon);
    let mut out = Vec::new();
    for c in cells {
        out.extend(stream.push(c)?);
    }
    Ok(out)
}

/// Normalize every block of a complete row-major cell grid.
pub fn batch_blocks(cells: &[CellHistogram], cols: usize, rows: usize, epsilon: f64) -> Vec<BlockDescriptor> {
    let mut out = Vec::with_capacity(cols.saturating_sub(1) * rows.saturating_sub(1));
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols.saturating_sub(1) {
            let at = |rr: usize, cc: usize| &cells[rr * cols + cc];
            out.push(normalize_block([at(r, c), at(r, c + 1), at(r + 1, c), at(r + 1, c + 1)], epsilon));
        }
    }
    out
}

/// Output of the fixed-point extractor: the cell grid and its block view.
#[derive(Clone, Debug, PartialEq)]
pub struct HogFrame {
    pub width: usize,
    pub height: usize,
    pub cells_wide: usize,
    pub cells_high: usize,
    pub cells: Vec<CellHistogram>,
    pub blocks: Vec<BlockDescriptor>,
}

impl HogFrame {
    pub fn blocks_wide(&self) -> usize {
        self.cells_wide.saturating_sub(1)
    }

    pub fn blocks_high(&self) -> usize {
        self.cells_high.saturating_sub(1)
    }

    pub fn cell(&self, row: usize, col: usize) -> &CellHistogram {
        &self.cells[row * self.cells_wide + col]
    }

    pub fn block(&self, row: usize, col: usize) -> &BlockDescriptor {
        &self.blocks[row * self.blocks_wide() + col]
    }

    /// `cells_high × cells_wide × 9` cell features, row-major.
    pub fn cell_features(&self) -> Vec<f32> {
        self.cells.iter().flat_map(|c| c.values()).map(|x| x as f32).collect()
    }

    /// `blocks_high × blocks_wide × 36` normalized features, row-major.
    pub fn block_features(&self) -> Vec<f32> {
        self.blocks.iter().flat_map(|b| b.values).map(|x| x as f32).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixq::ACC;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cell(r: u32, c: u32, bins: [u32; BINS]) -> CellHistogram {
        CellHistogram { bins, cell_row: r, cell_col: c }
    }

    fn grid(cols: usize, rows: usize, rng: &mut ChaCha8Rng) -> Vec<CellHistogram> {
        (0..rows * cols)
            .map(|i| cell((i / cols) as u32, (i % cols) as u32, std::array::from_fn(|_| rng.gen_range(0..40_000))))
            .collect()
    }

    fn raw(x: f64) -> u32 {
        (x / ACC.quantum()) as u32
    }

    #[test]
    fn uniform_block() {
        let c = cell(0, 0, [raw(3.0); BINS]);
        let b = normalize_block([&c; 4], DEFAULT_EPSILON);
        for v in b.values {
            assert!((v - 1.0 / 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_block_stays_zero() {
        let c = cell(0, 0, [0; BINS]);
        let b = normalize_block([&c; 4], DEFAULT_EPSILON);
        assert!(b.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_spike() {
        let mut v = [0.0; BLOCK_LEN];
        v[0] = 1.0;
        let out = l2_normalize(&v, DEFAULT_EPSILON);
        assert!((out[0] - 1.0).abs() <= 1e-6);
        assert!(out[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn random_vectors_match_reference_and_norm_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let v: [f64; BLOCK_LEN] = std::array::from_fn(|_| rng.gen_range(0.0..50.0));
            let out = l2_normalize(&v, DEFAULT_EPSILON);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (o, x) in out.iter().zip(&v) {
                assert!((o - x / norm).abs() <= 1e-4);
                assert!(*o >= 0.0);
            }
            assert!(out.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-6);

            let k = rng.gen_range(0.1..10.0);
            let scaled = l2_normalize(&v.map(|x| x * k), DEFAULT_EPSILON);
            let kn = norm * k;
            if norm >= 1.0 && kn >= 1.0 {
                let bound = 2.0 * DEFAULT_EPSILON / norm.min(kn);
                assert!(out.iter().zip(&scaled).all(|(a, b)| (a - b).abs() <= bound));
            }
        }
    }

    #[test]
    fn block_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(stream_blocks(grid(2, 2, &mut rng), 2, DEFAULT_EPSILON).unwrap().len(), 1);
        assert_eq!(stream_blocks(grid(7, 1, &mut rng), 7, DEFAULT_EPSILON).unwrap().len(), 0);
        assert_eq!(stream_blocks(grid(1, 5, &mut rng), 1, DEFAULT_EPSILON).unwrap().len(), 0);
        let big = stream_blocks(grid(80, 60, &mut rng), 80, DEFAULT_EPSILON).unwrap();
        assert_eq!(big.len(), 4661);
        assert_eq!(big.len() * BLOCK_LEN, 167_796);
    }

    #[test]
    fn streaming_equals_batch_up_to_6x6() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for cols in 1..=6 {
            for rows in 1..=6 {
                let cells = grid(cols, rows, &mut rng);
                let mut s = BlockStream::new(cols, DEFAULT_EPSILON);
                let mut streamed = Vec::new();
                for c in cells.iter().copied() {
                    streamed.extend(s.push(c).unwrap());
                    assert!(s.buffered() <= s.capacity());
                }
                let batch = batch_blocks(&cells, cols, rows, DEFAULT_EPSILON);
                assert_eq!(streamed, batch);
                for b in &batch {
                    let (r, c) = (b.block_row as usize, b.block_col as usize);
                    assert_eq!(b.values[..BINS], l2_normalize(&{
                        let mut v = [0.0; BLOCK_LEN];
                        for (k, cc) in [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)].iter().enumerate() {
                            v[k * BINS..(k + 1) * BINS].copy_from_slice(&cells[cc.0 * cols + cc.1].values());
                        }
                        v
                    }, DEFAULT_EPSILON)[..BINS]);
                }
            }
        }
    }

    #[test]
    fn out_of_order_cells_rejected() {
        let mut s = BlockStream::new(3, DEFAULT_EPSILON);
        s.push(cell(0, 0, [0; BINS])).unwrap();
        assert!(matches!(s.push(cell(0, 2, [0; BINS])), Err(HogError::Order(_))));
    }
}
