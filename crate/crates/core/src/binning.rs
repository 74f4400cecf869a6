//! Orientation voting: each magnitude is split between the two bins whose
//! centres (`10° + 20°·k`, k = 0..8) bracket the pixel's orientation, with
//! wraparound between bin 8 (170°) and bin 0 (190° ≡ 10°).
//!
//! Bin indices are 0-based, so the bin centred on 30° is bin 1.

use crate::cordic::PolarGradient;
use crate::fixq::{self, QFormat, QValue, ANG, MAG};
use crate::BINS;

/// Reciprocal of the bin width, as a `U0.24` constant.
pub const RECIP_FORMAT: QFormat = QFormat::unsigned(0, 24);
/// `round(2^24 / 20)`.
pub const BIN_WIDTH_RECIP: i64 = 838_861;

const ANG_FRAC: u32 = 13;
const BIN_WIDTH: i64 = 20 << ANG_FRAC;
const FIRST_CENTRE: i64 = 10 << ANG_FRAC;
const HALF_TURN: i64 = 180 << ANG_FRAC;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BinVote {
    pub lo_bin: u8,
    pub hi_bin: u8,
    /// Raw [`MAG`] weight for `lo_bin`.
    pub lo_weight: u16,
    /// Raw [`MAG`] weight for `hi_bin`.
    pub hi_weight: u16,
    pub row: u32,
    pub col: u32,
}

impl BinVote {
    pub fn lo_weight_q(&self) -> QValue {
        QValue::from_raw(MAG, self.lo_weight as i64).expect("weight within MAG")
    }

    pub fn hi_weight_q(&self) -> QValue {
        QValue::from_raw(MAG, self.hi_weight as i64).expect("weight within MAG")
    }

    /// Total raw weight; always equals the voting magnitude.
    pub fn mass(&self) -> u32 {
        self.lo_weight as u32 + self.hi_weight as u32
    }
}

/// Centre of bin `k` in degrees.
pub fn bin_centre(k: usize) -> f64 {
    10.0 + 20.0 * k as f64
}

#[inline]
pub fn vote(p: &PolarGradient) -> BinVote {
    debug_assert!((p.orientation as i64) < HALF_TURN);
    let theta = p.orientation as i64;
    let from_first = if theta >= FIRST_CENTRE {
        theta - FIRST_CENTRE
    } else {
        theta + HALF_TURN - FIRST_CENTRE
    };
    let lo_bin = from_first / BIN_WIDTH;
    let offset = from_first - lo_bin * BIN_WIDTH;
    // Offset within the bin as a 24-bit fraction of the bin width.
    let frac = fixq::shift_right_rne(offset * BIN_WIDTH_RECIP, ANG.frac_bits());
    let m = p.magnitude as i64;
    let hi = fixq::shift_right_rne(m * frac, RECIP_FORMAT.frac_bits());
    let hi = hi.min(m) as u16;
    BinVote {
        lo_bin: lo_bin as u8,
        hi_bin: ((lo_bin as usize + 1) % BINS) as u8,
        lo_weight: p.magnitude - hi,
        hi_weight: hi,
        row: p.row,
        col: p.col,
    }
}
