//! Image input: binary PGM/PPM decoding, Bayer demosaicing, grayscale
//! conversion and the row-major pixel stream that feeds the pipeline.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{HogError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layout {
    Gray8,
    Rgb8,
    /// Single-channel mosaic, red at even rows and even columns.
    BayerRggb8,
}

impl Layout {
    pub fn channels(self) -> usize {
        match self {
            Layout::Gray8 | Layout::BayerRggb8 => 1,
            Layout::Rgb8 => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawFrame {
    width: usize,
    height: usize,
    layout: Layout,
    data: Vec<u8>,
}

impl RawFrame {
    pub fn new(width: usize, height: usize, layout: Layout, data: Vec<u8>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(HogError::Dimension(format!(
                "frame {width}x{height} is smaller than 3x3"
            )));
        }
        let expected = width * height * layout.channels();
        if data.len() != expected {
            return Err(HogError::Format(format!(
                "{layout:?} frame {width}x{height} needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(RawFrame { width, height, layout, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Reinterpret a single-channel frame as an RGGB mosaic.
    pub fn into_bayer(self) -> Result<Self> {
        match self.layout {
            Layout::Gray8 | Layout::BayerRggb8 => Ok(RawFrame { layout: Layout::BayerRggb8, ..self }),
            Layout::Rgb8 => Err(HogError::Layout("an RGB frame cannot be a Bayer mosaic".into())),
        }
    }

    /// Whatever the layout, produce the 8-bit luma frame the extractor consumes.
    pub fn to_gray(&self) -> Result<GrayFrame> {
        match self.layout {
            Layout::Gray8 => GrayFrame::new(self.width, self.height, self.data.clone()),
            Layout::Rgb8 => to_grayscale(self),
            Layout::BayerRggb8 => to_grayscale(&demosaic_bilinear(self)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    luma: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, luma: Vec<u8>) -> Result<Self> {
        if luma.len() != width * height {
            return Err(HogError::Format(format!(
                "gray frame {width}x{height} needs {} bytes, got {}",
                width * height,
                luma.len()
            )));
        }
        Ok(GrayFrame { width, height, luma })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut luma = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                luma.push(f(x, y));
            }
        }
        GrayFrame { width, height, luma }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn luma(&self) -> &[u8] {
        &self.luma
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.luma[y * self.width + x]
    }

    pub fn stream(&self) -> PixelStream<'_> {
        stream(self)
    }

    /// Write as binary PGM.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(self.luma.len() + 32);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.extend_from_slice(&self.luma);
        fs::write(path, out)?;
        Ok(())
    }
}

/// One sample of a [`PixelStream`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
    pub luma: u8,
}

/// Row-major, one-pixel-per-step iterator over a frame.
#[derive(Clone, Debug)]
pub struct PixelStream<'a> {
    source: &'a GrayFrame,
    next: usize,
}

impl Iterator for PixelStream<'_> {
    type Item = Pixel;

    fn next(&mut self) -> Option<Pixel> {
        let luma = *self.source.luma.get(self.next)?;
        let w = self.source.width;
        let px = Pixel { row: self.next / w, col: self.next % w, luma };
        self.next += 1;
        Some(px)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.source.luma.len() - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PixelStream<'_> {}

pub fn stream(frame: &GrayFrame) -> PixelStream<'_> {
    PixelStream { source: frame, next: 0 }
}

/// Decode a binary PGM (P5) or PPM (P6) file with maxval 255.
pub fn decode_image(path: impl AsRef<Path>) -> Result<RawFrame> {
    let bytes = fs::read(path)?;
    decode_netpbm(&bytes)
}

pub fn decode_netpbm(bytes: &[u8]) -> Result<RawFrame> {
    let layout = match bytes.get(..2) {
        Some(b"P5") => Layout::Gray8,
        Some(b"P6") => Layout::Rgb8,
        _ => return Err(HogError::Format("expected a binary PGM (P5) or PPM (P6) header".into())),
    };
    let mut header = HeaderReader { bytes, pos: 2 };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval != 255 {
        return Err(HogError::Format(format!("maxval {maxval} unsupported, only 255 is accepted")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => header.pos += 1,
        _ => return Err(HogError::Format("missing whitespace after maxval".into())),
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(layout.channels()))
        .ok_or_else(|| HogError::Format("image dimensions overflow".into()))?;
    let raster = &bytes[header.pos..];
    if raster.len() < need {
        return Err(HogError::Format(format!(
            "truncated raster: {} of {need} bytes",
            raster.len()
        )));
    }
    RawFrame::new(width, height, layout, raster[..need].to_vec())
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| HogError::Format(format!("bad {what} in netpbm header")))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Site {
    Red,
    GreenOnRed,
    GreenOnBlue,
    Blue,
}

fn site(x: usize, y: usize) -> Site {
    match (y % 2, x % 2) {
        (0, 0) => Site::Red,
        (0, _) => Site::GreenOnRed,
        (_, 0) => Site::GreenOnBlue,
        _ => Site::Blue,
    }
}

/// Bilinear demosaic of an RGGB mosaic.
///
/// Neighbours that fall outside the frame are replaced by the nearest
/// in-frame sample of the same colour (index reflection), so border pixels
/// see a replicated same-colour value instead of a wrong-colour one.
pub fn demosaic_bilinear(raw: &RawFrame) -> Result<RawFrame> {
    if raw.layout != Layout::BayerRggb8 {
        return Err(HogError::Layout(format!("demosaic needs BayerRggb8, got {:?}", raw.layout)));
    }
    let (w, h) = (raw.width, raw.height);
    if w % 2 != 0 || h % 2 != 0 {
        return Err(HogError::Layout(format!("Bayer frame {w}x{h} must have even dimensions")));
    }
    let reflect = |i: isize, n: usize| -> usize {
        if i < 0 {
            (-i) as usize
        } else if i as usize >= n {
            2 * (n - 1) - i as usize
        } else {
            i as usize
        }
    };
    let px = |x: isize, y: isize| -> u32 { raw.data[reflect(y, h) * w + reflect(x, w)] as u32 };
    let cross = |x: isize, y: isize| (px(x - 1, y) + px(x + 1, y) + px(x, y - 1) + px(x, y + 1) + 2) / 4;
    let diag = |x: isize, y: isize| {
        (px(x - 1, y - 1) + px(x + 1, y - 1) + px(x - 1, y + 1) + px(x + 1, y + 1) + 2) / 4
    };
    let horiz = |x: isize, y: isize| (px(x - 1, y) + px(x + 1, y) + 1) / 2;
    let vert = |x: isize, y: isize| (px(x, y - 1) + px(x, y + 1) + 1) / 2;

    let mut rgb = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let c = px(xi, yi);
            let (r, g, b) = match site(x, y) {
                Site::Red => (c, cross(xi, yi), diag(xi, yi)),
                Site::GreenOnRed => (horiz(xi, yi), c, vert(xi, yi)),
                Site::GreenOnBlue => (vert(xi, yi), c, horiz(xi, yi)),
                Site::Blue => (diag(xi, yi), cross(xi, yi), c),
            };
            rgb.extend_from_slice(&[r as u8, g as u8, b as u8]);
        }
    }
    RawFrame::new(w, h, Layout::Rgb8, rgb)
}

/// Integer BT.601 luma, `(77 R + 150 G + 29 B) >> 8`.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = (77 * r as u32 + 150 * g as u32 + 29 * b as u32) >> 8;
    y.min(255) as u8
}

pub fn to_grayscale(rgb: &RawFrame) -> Result<GrayFrame> {
    if rgb.layout != Layout::Rgb8 {
        return Err(HogError::Layout(format!("grayscale conversion needs Rgb8, got {:?}", rgb.layout)));
    }
    let luma = rgb.data.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
    GrayFrame::new(rgb.width, rgb.height, luma)
}
