//! Number formats stored one element per crossbar row.

use std::fmt;
use std::str::FromStr;

use half::f16;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Binary layout of one operand element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NumberFormat {
    /// Two's complement (signed) or plain binary (unsigned) integer.
    Fixed { bits: u32, signed: bool },
    /// IEEE-754 binary interchange format; total width is `1 + exponent_bits + mantissa_bits`.
    Float { exponent_bits: u32, mantissa_bits: u32 },
}

impl NumberFormat {
    pub const SINGLE: NumberFormat = NumberFormat::Float { exponent_bits: 8, mantissa_bits: 23 };
    pub const HALF: NumberFormat = NumberFormat::Float { exponent_bits: 5, mantissa_bits: 10 };

    pub fn fixed(bits: u32, signed: bool) -> Result<Self> {
        if bits == 0 || bits > 64 {
            return invalid(format!("fixed-point width {bits} outside 1..=64"));
        }
        Ok(NumberFormat::Fixed { bits, signed })
    }

    pub fn unsigned(bits: u32) -> Result<Self> {
        Self::fixed(bits, false)
    }

    pub fn signed(bits: u32) -> Result<Self> {
        Self::fixed(bits, true)
    }

    pub fn float(exponent_bits: u32, mantissa_bits: u32) -> Result<Self> {
        let f = NumberFormat::Float { exponent_bits, mantissa_bits };
        if f == Self::SINGLE || f == Self::HALF {
            Ok(f)
        } else {
            invalid(format!("unsupported float format e{exponent_bits}m{mantissa_bits}"))
        }
    }

    /// N: width of one element in bits.
    pub fn total_bits(&self) -> u32 {
        match *self {
            NumberFormat::Fixed { bits, .. } => bits,
            NumberFormat::Float { exponent_bits, mantissa_bits } => 1 + exponent_bits + mantissa_bits,
        }
    }

    pub fn is_float(&self) -> bool {
        matches!(self, NumberFormat::Float { .. })
    }

    /// Whether the arithmetic kernels support this format.
    pub fn kernel_supported(&self) -> bool {
        match *self {
            NumberFormat::Fixed { bits, .. } => matches!(bits, 8 | 16 | 32),
            NumberFormat::Float { .. } => *self == Self::SINGLE || *self == Self::HALF,
        }
    }

    fn mask(&self) -> u64 {
        let n = self.total_bits();
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    /// Encodes a value into its raw bit pattern. Floats must be exactly representable.
    pub fn encode(&self, value: Number) -> Result<u64> {
        let err = || Error::Encoding { value: value.to_string(), format: self.to_string() };
        match (*self, value) {
            (NumberFormat::Fixed { bits, signed }, Number::Int(v)) => {
                let (lo, hi) = if signed {
                    (-(1i128 << (bits - 1)), (1i128 << (bits - 1)) - 1)
                } else {
                    (0, (1i128 << bits) - 1)
                };
                if v < lo || v > hi {
                    return Err(err());
                }
                Ok((v as u64) & self.mask())
            }
            (NumberFormat::Float { .. }, Number::Float(v)) => {
                if *self == Self::SINGLE {
                    let s = v as f32;
                    if v.is_nan() || s as f64 == v {
                        Ok(s.to_bits() as u64)
                    } else {
                        Err(err())
                    }
                } else if *self == Self::HALF {
                    let h = f16::from_f64(v);
                    if v.is_nan() || h.to_f64() == v {
                        Ok(h.to_bits() as u64)
                    } else {
                        Err(err())
                    }
                } else {
                    Err(err())
                }
            }
            (NumberFormat::Float { .. }, Number::Int(i)) => self.encode(Number::Float(i as f64)),
            (NumberFormat::Fixed { .. }, Number::Float(f)) => {
                if f.fract() == 0.0 && f.is_finite() {
                    self.encode(Number::Int(f as i128))
                } else {
                    Err(err())
                }
            }
        }
    }

    /// Decodes a raw bit pattern. Every pattern decodes; NaN patterns become NaN.
    pub fn decode(&self, raw: u64) -> Number {
        let raw = raw & self.mask();
        match *self {
            NumberFormat::Fixed { bits, signed } => {
                if signed && bits < 64 && raw >> (bits - 1) & 1 == 1 {
                    Number::Int(raw as i128 - (1i128 << bits))
                } else if signed && bits == 64 {
                    Number::Int(raw as i64 as i128)
                } else {
                    Number::Int(raw as i128)
                }
            }
            NumberFormat::Float { .. } => {
                if *self == Self::HALF {
                    Number::Float(f16::from_bits(raw as u16).to_f64())
                } else {
                    Number::Float(f32::from_bits(raw as u32) as f64)
                }
            }
        }
    }

    /// Short name used on the command line and in report labels.
    pub fn name(&self) -> String {
        match *self {
            NumberFormat::Fixed { bits, signed: false } => format!("fixed{bits}"),
            NumberFormat::Fixed { bits, signed: true } => format!("sfixed{bits}"),
            f if f == Self::SINGLE => "fp32".into(),
            f if f == Self::HALF => "fp16".into(),
            NumberFormat::Float { exponent_bits, mantissa_bits } => format!("e{exponent_bits}m{mantissa_bits}"),
        }
    }
}

impl fmt::Display for NumberFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for NumberFormat {
    type Err = Error;

    /// Accepts `fixed8`/`fixed16`/`fixed32` (unsigned), `sfixedN` (signed), `fp16`/`half`, `fp32`/`single`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let parsed = match s.as_str() {
            "fp32" | "single" | "float32" => Some(Self::SINGLE),
            "fp16" | "half" | "float16" => Some(Self::HALF),
            _ => {
                let (signed, digits) = if let Some(d) = s.strip_prefix("sfixed") {
                    (true, d)
                } else if let Some(d) = s.strip_prefix("fixed") {
                    (false, d)
                } else {
                    return invalid(format!("unknown number format '{s}'"));
                };
                digits
                    .parse::<u32>()
                    .ok()
                    .map(|bits| NumberFormat::Fixed { bits, signed })
            }
        };
        match parsed {
            Some(f) if f.kernel_supported() => Ok(f),
            _ => invalid(format!("unsupported number format '{s}'")),
        }
    }
}

/// A host-side value that can be loaded into or read from the grid.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Number {
    Int(i128),
    Float(f64),
}

impl Number {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Int(i) => write!(f, "{i}"),
            Number::Float(x) => write!(f, "{x:e}"),
        }
    }
}

impl From<u64> for Number {
    fn from(v: u64) -> Self {
        Number::Int(v as i128)
    }
}

impl From<i64> for Number {
    fn from(v: i64) -> Self {
        Number::Int(v as i128)
    }
}

impl From<f64> for Number {
    fn from(v: f64) -> Self {
        Number::Float(v)
    }
}
