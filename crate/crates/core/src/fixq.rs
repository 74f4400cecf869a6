//! Q-format fixed-point values.
//!
//! A [`QFormat`] declares a sign bit, `int_bits` integer bits and
//! `frac_bits` fractional bits; a [`QValue`] pairs a format with the raw
//! scaled integer (`value = raw / 2^frac_bits`). Every operation computes the
//! exact integer result first and then saturates into the destination format;
//! nothing ever wraps.

use std::fmt;

use crate::error::{HogError, Result};

/// Maximum payload width, sign bit included.
pub const MAX_WIDTH: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounding {
    /// Drop the low bits (floor, like an arithmetic shifter).
    Truncate,
    /// Round to nearest, ties to even.
    RoundNearestEven,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QFormat {
    signed: bool,
    int_bits: u32,
    frac_bits: u32,
}

/// Signed gradient differences: 9 bits including the sign, range `[-256, 255]`.
pub const GRAD: QFormat = QFormat::signed(8, 0);
/// Gradient magnitude, 6 fractional bits.
pub const MAG: QFormat = QFormat::unsigned(10, 6);
/// Orientation in degrees, 13 fractional bits.
pub const ANG: QFormat = QFormat::unsigned(8, 13);
/// Cell histogram accumulator.
pub const ACC: QFormat = QFormat::unsigned(16, 6);

impl QFormat {
    /// Panics (at compile time in const context) if the width exceeds 32 bits.
    pub const fn signed(int_bits: u32, frac_bits: u32) -> Self {
        assert!(int_bits + frac_bits + 1 <= MAX_WIDTH);
        QFormat { signed: true, int_bits, frac_bits }
    }

    pub const fn unsigned(int_bits: u32, frac_bits: u32) -> Self {
        assert!(int_bits + frac_bits <= MAX_WIDTH);
        QFormat { signed: false, int_bits, frac_bits }
    }

    pub fn new(signed: bool, int_bits: u32, frac_bits: u32) -> Result<Self> {
        let width = int_bits as u64 + frac_bits as u64 + signed as u64;
        if width > MAX_WIDTH as u64 {
            return Err(HogError::Config(format!(
                "Q format needs {width} bits, at most {MAX_WIDTH} are supported"
            )));
        }
        Ok(QFormat { signed, int_bits, frac_bits })
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn int_bits(&self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    /// Total storage width including the sign bit.
    pub fn width(&self) -> u32 {
        self.int_bits + self.frac_bits + self.signed as u32
    }

    pub fn max_raw(&self) -> i64 {
        (1i64 << (self.int_bits + self.frac_bits)) - 1
    }

    pub fn min_raw(&self) -> i64 {
        if self.signed {
            -(1i64 << (self.int_bits + self.frac_bits))
        } else {
            0
        }
    }

    /// Value of one raw unit, `2^-frac_bits`.
    pub fn quantum(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.quantum()
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.quantum()
    }

    fn clamp(&self, raw: i128) -> (i64, bool) {
        let (lo, hi) = (self.min_raw() as i128, self.max_raw() as i128);
        if raw > hi {
            (hi as i64, true)
        } else if raw < lo {
            (lo as i64, true)
        } else {
            (raw as i64, false)
        }
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.signed { 'S' } else { 'U' };
        write!(f, "{s}{}.{}", self.int_bits, self.frac_bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QValue {
    format: QFormat,
    raw: i64,
}

/// Result of an operation that may have saturated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quantized {
    pub value: QValue,
    pub saturated: bool,
}

impl QValue {
    pub fn zero(format: QFormat) -> Self {
        QValue { format, raw: 0 }
    }

    pub fn from_raw(format: QFormat, raw: i64) -> Result<Self> {
        if raw < format.min_raw() || raw > format.max_raw() {
            return Err(HogError::OutOfBounds(format!(
                "raw value {raw} does not fit {format}"
            )));
        }
        Ok(QValue { format, raw })
    }

    /// Saturating construction from an exact wide integer.
    pub fn saturate(format: QFormat, raw: i128) -> Quantized {
        let (raw, saturated) = format.clamp(raw);
        Quantized { value: QValue { format, raw }, saturated }
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> QFormat {
        self.format
    }

    pub fn to_f64(&self) -> f64 {
        dequantize(*self)
    }
}

impl fmt::Display for QValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.to_f64(), self.format)
    }
}

/// Arithmetic right shift of `value` by `shift` bits with the given rounding.
pub fn shift_right_rounded(value: i128, shift: u32, mode: Rounding) -> i128 {
    if shift == 0 {
        return value;
    }
    let q = value >> shift;
    match mode {
        Rounding::Truncate => q,
        Rounding::RoundNearestEven => {
            let rem = value - (q << shift);
            let half = 1i128 << (shift - 1);
            if rem > half || (rem == half && q & 1 == 1) {
                q + 1
            } else {
                q
            }
        }
    }
}

/// Round-to-nearest-even right shift on 64-bit raws, for the per-pixel
/// datapath; agrees with [`shift_right_rounded`] wherever both apply.
#[inline]
pub fn shift_right_rne(value: i64, shift: u32) -> i64 {
    if shift == 0 {
        return value;
    }
    let q = value >> shift;
    let rem = value & ((1i64 << shift) - 1);
    let half = 1i64 << (shift - 1);
    q + ((rem + (q & 1)) > half) as i64
}

pub fn quantize(x: f64, format: QFormat, mode: Rounding) -> Quantized {
    if x.is_nan() {
        return Quantized { value: QValue::zero(format), saturated: true };
    }
    // Scaling by a power of two is exact in binary floating point.
    let scaled = x * (format.frac_bits as f64).exp2();
    let rounded = match mode {
        Rounding::Truncate => scaled.floor(),
        Rounding::RoundNearestEven => scaled.round_ties_even(),
    };
    let (lo, hi) = (format.min_raw() as f64, format.max_raw() as f64);
    if rounded > hi {
        QValue::saturate(format, format.max_raw() as i128 + 1)
    } else if rounded < lo {
        QValue::saturate(format, format.min_raw() as i128 - 1)
    } else {
        QValue::saturate(format, rounded as i128)
    }
}

pub fn dequantize(v: QValue) -> f64 {
    v.raw as f64 * v.format.quantum()
}

fn check_same_scale(a: QValue, b: QValue, op: &str) -> Result<()> {
    if a.format.frac_bits != b.format.frac_bits {
        return Err(HogError::FormatMismatch(format!(
            "{op} of {} and {} needs equal fractional bits",
            a.format, b.format
        )));
    }
    Ok(())
}

/// `a + b`, saturated to the format of `a`.
pub fn q_add(a: QValue, b: QValue) -> Result<Quantized> {
    check_same_scale(a, b, "addition")?;
    Ok(QValue::saturate(a.format, a.raw as i128 + b.raw as i128))
}

/// `a - b`, saturated to the format of `a`.
pub fn q_sub(a: QValue, b: QValue) -> Result<Quantized> {
    check_same_scale(a, b, "subtraction")?;
    Ok(QValue::saturate(a.format, a.raw as i128 - b.raw as i128))
}

/// Full-precision product: integer and fractional widths add up.
pub fn q_mul(a: QValue, b: QValue) -> Result<Quantized> {
    let format = QFormat::new(
        a.format.signed || b.format.signed,
        a.format.int_bits + b.format.int_bits,
        a.format.frac_bits + b.format.frac_bits,
    )
    .map_err(|_| {
        HogError::FormatMismatch(format!(
            "product of {} and {} exceeds {MAX_WIDTH} bits",
            a.format, b.format
        ))
    })?;
    Ok(QValue::saturate(format, a.raw as i128 * b.raw as i128))
}

/// Multiply by `2^shift` (negative shifts divide), keeping the format.
pub fn q_shift(a: QValue, shift: i32, mode: Rounding) -> Quantized {
    let raw = a.raw as i128;
    let shifted = if shift >= 0 {
        raw << shift.min(64) as u32
    } else {
        shift_right_rounded(raw, shift.unsigned_abs().min(100), mode)
    };
    QValue::saturate(a.format, shifted)
}

/// Convert `v` into another format, rounding dropped fractional bits.
pub fn requantize(v: QValue, format: QFormat, mode: Rounding) -> Quantized {
    let from = v.format.frac_bits;
    let to = format.frac_bits;
    let raw = if to >= from {
        (v.raw as i128) << (to - from)
    } else {
        shift_right_rounded(v.raw as i128, from - to, mode)
    };
    QValue::saturate(format, raw)
}
