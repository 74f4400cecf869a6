//! Fixed-point CORDIC vector translation: `(gx, gy)` to magnitude and
//! orientation in degrees, folded to the unsigned `[0, 180)` range.
//!
//! The datapath is 24-bit signed with arithmetic-shift truncation each
//! iteration. Before iterating the vector is moved into the right half plane
//! (a 180° rotation, invisible after folding) and left-shifted so its larger
//! component sits in `[2^20, 2^21)`; the shift is undone when the
//! gain-compensated magnitude is formed.

use std::sync::OnceLock;

use crate::error::{HogError, Result};
use crate::fixq::{self, QFormat, QValue, Rounding, ANG, MAG};
use crate::gradient::GradientPair;

/// Datapath width of the x/y registers.
pub const DATAPATH_BITS: u32 = 24;
/// Normalized inputs have their leading one at this bit.
const NORM_MSB: u32 = 20;
/// Reciprocal gain format.
pub const GAIN_FORMAT: QFormat = QFormat::unsigned(0, 16);
/// Gain-compensated magnitude before it is rounded to [`MAG`].
pub const FINE_MAG: QFormat = QFormat::unsigned(10, 16);

const HALF_TURN: i64 = 180 << 13;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CordicConfig {
    iterations: u32,
    angle_table: Vec<i64>,
    gain_reciprocal: QValue,
}

impl CordicConfig {
    pub const MIN_ITERATIONS: u32 = 14;
    pub const MAX_ITERATIONS: u32 = NORM_MSB + 2;

    pub fn new(iterations: u32) -> Result<Self> {
        if !(Self::MIN_ITERATIONS..=Self::MAX_ITERATIONS).contains(&iterations) {
            return Err(HogError::Config(format!(
                "CORDIC iterations must be in {}..={}, got {iterations}",
                Self::MIN_ITERATIONS,
                Self::MAX_ITERATIONS
            )));
        }
        let angle_table = (0..iterations)
            .map(|i| {
                let deg = (-(i as f64)).exp2().atan().to_degrees();
                fixq::quantize(deg, ANG, Rounding::RoundNearestEven).value.raw()
            })
            .collect();
        let gain: f64 = (0..iterations)
            .map(|i| (1.0 + (-2.0 * i as f64).exp2()).sqrt())
            .product();
        let gain_reciprocal = fixq::quantize(gain.recip(), GAIN_FORMAT, Rounding::RoundNearestEven).value;
        Ok(CordicConfig { iterations, angle_table, gain_reciprocal })
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    /// `atan(2^-i)` in degrees, as [`ANG`] values.
    pub fn angle_table(&self) -> Vec<QValue> {
        self.angle_table
            .iter()
            .map(|&raw| QValue::from_raw(ANG, raw).expect("table entry within ANG"))
            .collect()
    }

    pub fn gain_reciprocal(&self) -> QValue {
        self.gain_reciprocal
    }
}

impl Default for CordicConfig {
    fn default() -> Self {
        CordicConfig::new(16).expect("16 iterations is valid")
    }
}

/// Magnitude ([`MAG`]) and unsigned orientation ([`ANG`]) of one pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PolarGradient {
    /// Raw [`MAG`] value.
    pub magnitude: u16,
    /// Raw [`ANG`] value in `[0, 180 * 2^13)`.
    pub orientation: u32,
    pub row: u32,
    pub col: u32,
}

impl PolarGradient {
    pub fn magnitude_q(&self) -> QValue {
        QValue::from_raw(MAG, self.magnitude as i64).expect("magnitude within MAG")
    }

    pub fn orientation_q(&self) -> QValue {
        QValue::from_raw(ANG, self.orientation as i64).expect("orientation within ANG")
    }

    pub fn magnitude_f64(&self) -> f64 {
        self.magnitude_q().to_f64()
    }

    pub fn orientation_deg(&self) -> f64 {
        self.orientation_q().to_f64()
    }
}

/// Raw CORDIC result before the magnitude is narrowed to [`MAG`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CordicOutput {
    /// Gain-compensated magnitude, raw [`FINE_MAG`].
    pub magnitude_fine: u32,
    /// Folded orientation, raw [`ANG`].
    pub orientation: u32,
}

impl CordicOutput {
    pub fn magnitude_fine_f64(&self) -> f64 {
        self.magnitude_fine as f64 * FINE_MAG.quantum()
    }

    pub fn orientation_deg(&self) -> f64 {
        self.orientation as f64 * ANG.quantum()
    }
}

/// Core vectoring iteration on integer gradients.
pub fn translate(gx: i32, gy: i32, cfg: &CordicConfig) -> CordicOutput {
    if gx == 0 && gy == 0 {
        return CordicOutput { magnitude_fine: 0, orientation: 0 };
    }
    // Right half plane; the negative y axis folds onto the positive one.
    let (x0, y0) = if gx < 0 || (gx == 0 && gy < 0) { (-gx, -gy) } else { (gx, gy) };
    let lead = 31 - x0.unsigned_abs().max(y0.unsigned_abs()).leading_zeros();
    let shift = NORM_MSB.saturating_sub(lead);
    let (mut x, mut y) = ((x0 as i64) << shift, (y0 as i64) << shift);
    let mut z: i64 = 0;
    for (i, &atan) in cfg.angle_table.iter().enumerate() {
        // Branch-free rotation direction: `neg` is all ones when y <= 0.
        let neg = (y - 1) >> 63;
        let (dx, dy) = (y >> i, x >> i);
        x += (dx ^ neg) - neg;
        y -= (dy ^ neg) - neg;
        z += (atan ^ neg) - neg;
        debug_assert!(x < 1 << (DATAPATH_BITS - 1) && y.abs() < 1 << (DATAPATH_BITS - 1));
    }
    // Below 2^22 · 2^16, so 64 bits hold the product; it carries
    // shift + 16 fractional bits and 16 are kept.
    let scaled = x * cfg.gain_reciprocal.raw();
    let fine = fixq::shift_right_rne(scaled, shift).min(FINE_MAG.max_raw()) as u32;

    let mut angle = z;
    if angle < 0 {
        angle += HALF_TURN;
    }
    if angle >= HALF_TURN {
        angle -= HALF_TURN;
    }
    CordicOutput { magnitude_fine: fine, orientation: angle as u32 }
}

pub fn vector_translate(g: &GradientPair, cfg: &CordicConfig) -> PolarGradient {
    let out = translate(g.gx as i32, g.gy as i32, cfg);
    let drop = FINE_MAG.frac_bits() - MAG.frac_bits();
    let magnitude = fixq::shift_right_rne(out.magnitude_fine as i64, drop).min(MAG.max_raw()) as u16;
    PolarGradient { magnitude, orientation: out.orientation, row: g.row, col: g.col }
}

/// Largest gradient component produced by differencing 8-bit pixels.
pub const TABLE_RANGE: i32 = 255;
const TABLE_SPAN: usize = 2 * TABLE_RANGE as usize + 1;

/// Every [`vector_translate`] result over `|gx|, |gy| <= 255`, computed once
/// by the iterative unit itself. The table is indexed after the half-plane
/// pre-rotation, so only `gx >= 0` is stored. Lookups are bit-identical to
/// running the iterations; they only save simulation time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolarTable {
    magnitude: Vec<u16>,
    orientation: Vec<u32>,
}

impl PolarTable {
    pub fn new(cfg: &CordicConfig) -> Self {
        let n = (TABLE_RANGE as usize + 1) * TABLE_SPAN;
        let (mut magnitude, mut orientation) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for gx in 0..=TABLE_RANGE {
            for gy in -TABLE_RANGE..=TABLE_RANGE {
                let g = GradientPair { gx: gx as i16, gy: gy as i16, row: 0, col: 0 };
                let p = vector_translate(&g, cfg);
                magnitude.push(p.magnitude);
                orientation.push(p.orientation);
            }
        }
        PolarTable { magnitude, orientation }
    }

    /// Shared table for `cfg`, built on first use.
    pub fn shared(cfg: &CordicConfig) -> &'static PolarTable {
        const UNSET: OnceLock<PolarTable> = OnceLock::new();
        static TABLES: [OnceLock<PolarTable>; (CordicConfig::MAX_ITERATIONS - CordicConfig::MIN_ITERATIONS + 1) as usize] =
            [UNSET; (CordicConfig::MAX_ITERATIONS - CordicConfig::MIN_ITERATIONS + 1) as usize];
        TABLES[(cfg.iterations - CordicConfig::MIN_ITERATIONS) as usize].get_or_init(|| PolarTable::new(cfg))
    }

    #[inline]
    pub fn lookup(&self, g: &GradientPair) -> Option<PolarGradient> {
        let (mut gx, mut gy) = (g.gx as i32, g.gy as i32);
        if gx < 0 || (gx == 0 && gy < 0) {
            (gx, gy) = (-gx, -gy);
        }
        if gx > TABLE_RANGE || gy.abs() > TABLE_RANGE {
            return None;
        }
        let i = gx as usize * TABLE_SPAN + (gy + TABLE_RANGE) as usize;
        Some(PolarGradient { magnitude: self.magnitude[i], orientation: self.orientation[i], row: g.row, col: g.col })
    }

    /// Table lookup, falling back to the iterations outside the table.
    #[inline]
    pub fn translate(&self, g: &GradientPair, cfg: &CordicConfig) -> PolarGradient {
        self.lookup(g).unwrap_or_else(|| vector_translate(g, cfg))
    }
}

/// Map an angle in `(-180, 180]` degrees onto `[0, 180)`.
pub fn fold_unsigned(angle_deg: f64) -> f64 {
    let mut a = angle_deg;
    if a < 0.0 {
        a += 180.0;
    }
    if a >= 180.0 {
        a -= 180.0;
    }
    a
}

/// Circular distance between two unsigned orientations, in degrees.
pub fn orientation_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}
