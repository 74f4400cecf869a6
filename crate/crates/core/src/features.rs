//! Binary feature file.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! "HOGF" | version=1 | width_cells | height_cells | bins=9 | view (0 cell, 1 block)
//! payload: f32 LE, row-major over cells or blocks, bin index innermost
//! ```
//!
//! The cell view holds `height_cells · width_cells · bins` values; the block
//! view holds `(height_cells-1) · (width_cells-1) · 4 · bins`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::block::HogFrame;
use crate::error::{HogError, Result};
use crate::golden::GoldenHog;
use crate::BINS;

pub const MAGIC: &[u8; 4] = b"HOGF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureView {
    CellRaw,
    BlockNorm,
}

impl FeatureView {
    fn code(self) -> u32 {
        match self {
            FeatureView::CellRaw => 0,
            FeatureView::BlockNorm => 1,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(FeatureView::CellRaw),
            1 => Ok(FeatureView::BlockNorm),
            _ => Err(HogError::Format(format!("unknown feature view {code}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureFile {
    pub width_cells: u32,
    pub height_cells: u32,
    pub bins: u32,
    pub view: FeatureView,
    pub payload: Vec<f32>,
}

/// Values implied by the header fields.
pub fn payload_len(width_cells: u32, height_cells: u32, bins: u32, view: FeatureView) -> usize {
    let (w, h, b) = (width_cells as usize, height_cells as usize, bins as usize);
    match view {
        FeatureView::CellRaw => w * h * b,
        FeatureView::BlockNorm => w.saturating_sub(1) * h.saturating_sub(1) * 4 * b,
    }
}

impl FeatureFile {
    pub fn new(width_cells: u32, height_cells: u32, view: FeatureView, payload: Vec<f32>) -> Result<Self> {
        let expected = payload_len(width_cells, height_cells, BINS as u32, view);
        if payload.len() != expected {
            return Err(HogError::CountMismatch { expected, found: payload.len() });
        }
        Ok(FeatureFile { width_cells, height_cells, bins: BINS as u32, view, payload })
    }

    pub fn from_hog(hog: &HogFrame, view: FeatureView) -> Result<Self> {
        let payload = match view {
            FeatureView::CellRaw => hog.cell_features(),
            FeatureView::BlockNorm => hog.block_features(),
        };
        Self::new(hog.cells_wide as u32, hog.cells_high as u32, view, payload)
    }

    pub fn from_golden(gold: &GoldenHog, view: FeatureView) -> Result<Self> {
        let payload = match view {
            FeatureView::CellRaw => gold.cell_features(),
            FeatureView::BlockNorm => gold.block_features(),
        };
        Self::new(gold.cells_wide as u32, gold.cells_high as u32, view, payload)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MAGIC);
        for field in [VERSION, self.width_cells, self.height_cells, self.bins, self.view.code()] {
            header.extend_from_slice(&field.to_le_bytes());
        }
        w.write_all(&header)?;
        let mut body = Vec::with_capacity(self.payload.len() * 4);
        for v in &self.payload {
            body.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&body)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(HogError::Format("not a HOGF feature file".into()));
        }
        let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = field(0);
        if version != VERSION {
            return Err(HogError::Format(format!("unsupported feature file version {version}")));
        }
        let (width_cells, height_cells, bins) = (field(1), field(2), field(3));
        let view = FeatureView::from_code(field(4))?;
        let expected = payload_len(width_cells, height_cells, bins, view);
        let body = &bytes[HEADER_LEN..];
        if body.len() != expected * 4 {
            return Err(HogError::CountMismatch { expected, found: body.len() / 4 });
        }
        let payload = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(FeatureFile { width_cells, height_cells, bins, view, payload })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::with_capacity(HEADER_LEN + 4 * self.payload.len());
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn payload_sizes() {
        assert_eq!(payload_len(80, 60, 9, FeatureView::CellRaw), 43_200);
        assert_eq!(payload_len(80, 60, 9, FeatureView::BlockNorm), 167_796);
        assert_eq!(payload_len(1, 5, 9, FeatureView::BlockNorm), 0);
    }

    #[test]
    fn header_layout() {
        let f = FeatureFile::new(1, 1, FeatureView::CellRaw, vec![1.0; 9]).unwrap();
        let mut bytes = Vec::new();
        f.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"HOGF");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &9u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &0u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), HEADER_LEN + 36);
    }

    #[test]
    fn rejects_corrupt_files() {
        assert!(matches!(FeatureFile::from_bytes(b"HOGX"), Err(HogError::Format(_))));
        let f = FeatureFile::new(2, 2, FeatureView::BlockNorm, vec![0.5; 36]).unwrap();
        let mut bytes = Vec::new();
        f.write_to(&mut bytes).unwrap();
        bytes.pop();
        assert!(matches!(FeatureFile::from_bytes(&bytes), Err(HogError::CountMismatch { .. })));
        assert!(FeatureFile::new(2, 2, FeatureView::CellRaw, vec![0.0; 35]).is_err());
    }

    proptest! {
        #[test]
        fn write_read_is_bit_identical(
            w in 1u32..6,
            h in 1u32..6,
            block in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let view = if block { FeatureView::BlockNorm } else { FeatureView::CellRaw };
            let n = payload_len(w, h, 9, view);
            let payload: Vec<f32> = (0..n as u64)
                .map(|i| f32::from_bits((seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15)) as u32))
                .collect();
            let f = FeatureFile::new(w, h, view, payload).unwrap();
            let mut bytes = Vec::new();
            f.write_to(&mut bytes).unwrap();
            let back = FeatureFile::from_bytes(&bytes).unwrap();
            let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back.payload), bits(&f.payload));
            prop_assert_eq!((back.width_cells, back.height_cells, back.view), (w, h, view));
        }
    }
}
