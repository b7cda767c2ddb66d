// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::AppError;

/// Sign-magnitude fixed point: a `wl`-bit magnitude with `frac` fraction bits
/// plus a separate sign bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointFormat {
    pub wl: u32,
    pub frac: u32,
}

pub const MAX_FORMAT_WL: u32 = 16;

impl FixedPointFormat {
    pub fn new(wl: u32, frac: u32) -> Result<Self, AppError> {
        let f = FixedPointFormat { wl, frac };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if self.wl == 0 || self.wl > MAX_FORMAT_WL || self.frac > self.wl {
            return Err(AppError::Format(format!(
                "need 0 ≤ frac ≤ wl ≤ {MAX_FORMAT_WL} and wl ≥ 1, got wl={} frac={}",
                self.wl, self.frac
            )));
        }
        Ok(())
    }

    pub fn max_magnitude(&self) -> u64 {
        (1u64 << self.wl) - 1
    }

    /// Value of one least significant bit.
    pub fn lsb(&self) -> f64 {
        (-(self.frac as f64)).exp2()
    }

    pub fn max_value(&self) -> f64 {
        self.max_magnitude() as f64 * self.lsb()
    }

    /// Round to nearest, ties away from zero, saturating at the format limits.
    pub fn quantize(&self, x: f64) -> Fixed {
        let scaled = (x.abs() * (self.frac as f64).exp2()).round();
        let mag = if scaled.is_nan() {
            0
        } else {
            (scaled as u64).min(self.max_magnitude())
        };
        Fixed {
            neg: x < 0.0 && mag != 0,
            mag,
        }
    }

    pub fn to_f64(&self, v: Fixed) -> f64 {
        let m = v.mag as f64 * self.lsb();
        if v.neg {
            -m
        } else {
            m
        }
    }

    /// Representation of 1.0, saturated when it does not fit.
    pub fn one(&self) -> Fixed {
        self.quantize(1.0)
    }
}

/// A sign-magnitude value; zero is always non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "i64", into = "i64")]
pub struct Fixed {
    pub neg: bool,
    pub mag: u64,
}

impl Fixed {
    pub fn from_raw(v: i64) -> Self {
        Fixed {
            neg: v < 0,
            mag: v.unsigned_abs(),
        }
    }

    pub fn raw(self) -> i64 {
        if self.neg {
            -(self.mag as i64)
        } else {
            self.mag as i64
        }
    }

    pub fn negate(self) -> Self {
        Fixed {
            neg: !self.neg && self.mag != 0,
            mag: self.mag,
        }
    }
}

impl From<i64> for Fixed {
    fn from(v: i64) -> Self {
        Fixed::from_raw(v)
    }
}

impl From<Fixed> for i64 {
    fn from(v: Fixed) -> Self {
        v.raw()
    }
}
