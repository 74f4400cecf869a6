//! Streaming central-difference stage.
//!
//! Two row-deep line buffers feed a 3×3 register window. Each step shifts
//! one pixel in; the window centre trails the stream head by one row and one
//! column. The difference is registered, so a pixel's gradient leaves the
//! stage one step after its lower-right neighbour arrived.
//!
//! Borders replicate the centre pixel: `gx = I(x+1,y) - I(x-1,y)` and
//! `gy = I(x,y+1) - I(x,y-1)` with out-of-frame neighbours clamped to the
//! nearest in-frame pixel.

use crate::fixq::{QValue, GRAD};
use crate::ingest::GrayFrame;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GradientPair {
    pub gx: i16,
    pub gy: i16,
    pub row: u32,
    pub col: u32,
}

impl GradientPair {
    pub fn gx_q(&self) -> QValue {
        QValue::from_raw(GRAD, self.gx as i64).expect("gradient within GRAD")
    }

    pub fn gy_q(&self) -> QValue {
        QValue::from_raw(GRAD, self.gy as i64).expect("gradient within GRAD")
    }
}

#[derive(Clone, Debug)]
pub struct LineBuffers {
    width: usize,
    /// Per column, rows `R-2` and `R-1` before the shift.
    lines: Vec<[u8; 2]>,
    /// Window columns, oldest first, each packed `top | mid << 8 | bottom << 16`.
    window: [u32; 3],
    col: usize,
    /// Steps taken, pixels and bubbles alike.
    head: usize,
    /// Pixels pushed before the first bubble; `usize::MAX` while streaming.
    frame_len: usize,
    /// Row and column of the window centre, once it is inside the frame.
    centre: (usize, usize),
    out: Option<GradientPair>,
}

impl LineBuffers {
    pub fn new(row_width: usize) -> Self {
        assert!(row_width > 0, "row width must be positive");
        LineBuffers {
            width: row_width,
            lines: vec![[0; 2]; row_width],
            window: [0; 3],
            col: 0,
            head: 0,
            frame_len: usize::MAX,
            centre: (0, 0),
            out: None,
        }
    }

    pub fn row_width(&self) -> usize {
        self.width
    }

    /// Steps before the first gradient leaves the stage.
    pub fn latency_pixels(&self) -> usize {
        self.width + 2
    }

    /// Pixel entries currently held (line buffers plus window).
    pub fn occupancy(&self) -> usize {
        self.head.min(2 * self.width) + 9
    }

    /// Start a new frame.
    pub fn reset(&mut self) {
        self.lines.fill([0; 2]);
        self.window = [0; 3];
        self.col = 0;
        self.head = 0;
        self.frame_len = usize::MAX;
        self.centre = (0, 0);
        self.out = None;
    }

    /// Shift in the next pixel of the frame.
    #[inline]
    pub fn push_pixel(&mut self, luma: u8) -> Option<GradientPair> {
        assert!(self.frame_len == usize::MAX, "pixel pushed after the frame was closed");
        self.step(luma)
    }

    /// Advance one step with no input, draining the last row.
    pub fn flush_step(&mut self) -> Option<GradientPair> {
        if self.frame_len == usize::MAX {
            self.frame_len = self.head;
        }
        self.step(0)
    }

    #[inline]
    fn step(&mut self, luma: u8) -> Option<GradientPair> {
        let c = self.col;
        let [top, mid] = self.lines[c];
        self.lines[c] = [mid, luma];
        self.window = [self.window[1], self.window[2], top as u32 | (mid as u32) << 8 | (luma as u32) << 16];

        let emitted = self.out.take();
        self.out = self.centre_gradient();

        self.head += 1;
        self.col = if c + 1 == self.width { 0 } else { c + 1 };
        emitted
    }

    /// Gradient of the pixel `width + 1` positions behind the head.
    #[inline]
    fn centre_gradient(&mut self) -> Option<GradientPair> {
        let p = self.head.checked_sub(self.width + 1)?;
        if p >= self.frame_len {
            return None;
        }
        let (r, c) = self.centre;
        self.centre = if c + 1 == self.width { (r + 1, 0) } else { (r, c + 1) };
        let [w_left, w_mid, w_right] = self.window;
        let centre = (w_mid >> 8) as u8;
        let left = if c == 0 { centre } else { (w_left >> 8) as u8 };
        let right = if c + 1 == self.width { centre } else { (w_right >> 8) as u8 };
        let up = if r == 0 { centre } else { w_mid as u8 };
        let down = if p + self.width >= self.frame_len { centre } else { (w_mid >> 16) as u8 };
        Some(GradientPair {
            gx: right as i16 - left as i16,
            gy: down as i16 - up as i16,
            row: r as u32,
            col: c as u32,
        })
    }
}

/// Stream a whole frame through fresh line buffers.
pub fn stream_gradients(frame: &GrayFrame) -> Vec<GradientPair> {
    let mut buf = LineBuffers::new(frame.width());
    let mut out = Vec::with_capacity(frame.luma().len());
    for &v in frame.luma() {
        out.extend(buf.push_pixel(v));
    }
    while out.len() < frame.luma().len() {
        out.extend(buf.flush_step());
    }
    out
}

/// Nested-loop evaluation over the whole frame, row-major.
pub fn batch_gradients(frame: &GrayFrame) -> Vec<GradientPair> {
    let (w, h) = (frame.width(), frame.height());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = |xx: usize, yy: usize| frame.at(xx, yy) as i16;
            let gx = i((x + 1).min(w - 1), y) - i(x.saturating_sub(1), y);
            let gy = i(x, (y + 1).min(h - 1)) - i(x, y.saturating_sub(1));
            out.push(GradientPair { gx, gy, row: y as u32, col: x as u32 });
        }
    }
    out
}
