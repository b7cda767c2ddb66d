// SPDX-License-Identifier: Apache-2.0

//! Weighted-plateau-average defuzzification.
//!
//! Plateau `i` spans `[left, right]` at `height`; its mass is
//! `w = height · (right − left + 1)` and its centre `c = ⌊(left + right) / 2⌋`.
//! The crisp value is `round(Σ w·c / Σ w)`. The numerator runs through the
//! MAC, the denominator through the adder, and the final division is exact
//! with ties rounded up.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{min_acc_width, AppError, ArithConfig, Datapath, Fixed, FixedPointFormat};
use crate::metrics::{ErrorAccumulator, ErrorReport};
use crate::rng::{self, domain};

/// Serialized as `[left, right, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u64; 3]", into = "[u64; 3]")]
pub struct Plateau {
    pub left: u64,
    pub right: u64,
    pub height: u64,
}

impl From<[u64; 3]> for Plateau {
    fn from([left, right, height]: [u64; 3]) -> Self {
        Plateau { left, right, height }
    }
}

impl From<Plateau> for [u64; 3] {
    fn from(p: Plateau) -> Self {
        [p.left, p.right, p.height]
    }
}

impl Plateau {
    pub fn new(left: u64, right: u64, height: u64) -> Self {
        Plateau { left, right, height }
    }

    pub fn mass(&self) -> u64 {
        self.height * (self.right - self.left + 1)
    }

    pub fn centre(&self) -> u64 {
        (self.left + self.right) / 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlateauSet {
    pub plateaus: Vec<Plateau>,
}

/// Random sets hold between 1 and this many plateaus.
pub const MAX_RANDOM_PLATEAUS: u64 = 4;

impl PlateauSet {
    pub fn new(plateaus: Vec<Plateau>) -> Self {
        PlateauSet { plateaus }
    }

    /// Edges must lie in `[0, 2^wl)` and every mass must fit the `wl`-bit multiplier.
    pub fn validate(&self, format: &FixedPointFormat) -> Result<(), AppError> {
        let fw = 1u64 << format.wl;
        for p in &self.plateaus {
            if p.left > p.right || p.right >= fw {
                return Err(AppError::Domain(format!(
                    "plateau [{}, {}] outside universe [0, {fw})",
                    p.left, p.right
                )));
            }
            if p.height.checked_mul(p.right - p.left + 1).is_none_or(|m| m >= fw) {
                return Err(AppError::Domain(format!(
                    "plateau [{}, {}] with height {} has mass ≥ 2^{}",
                    p.left, p.right, p.height, format.wl
                )));
            }
        }
        if self.plateaus.iter().all(|p| p.height == 0) {
            return Err(AppError::Domain("all plateau weights are zero".into()));
        }
        Ok(())
    }

    /// The `index`-th random set for `seed`: 1..=4 plateaus with uniform
    /// left edges, uniform lengths and uniform heights under the mass limit.
    pub fn random(wl: u32, seed: u64, index: u64) -> Self {
        let fw = 1u64 << wl;
        let key = rng::combine(seed, index);
        let mut c = 0u64;
        let mut draw = |n: u64| {
            c += 1;
            rng::uniform_below(key, domain::PLATEAU, c, n)
        };
        let k = 1 + draw(MAX_RANDOM_PLATEAUS);
        let plateaus = (0..k)
            .map(|_| {
                let left = draw(fw);
                let len = 1 + draw((fw - left).min(fw - 1));
                let height = 1 + draw((fw - 1) / len);
                Plateau::new(left, left + len - 1, height)
            })
            .collect();
        PlateauSet { plateaus }
    }
}

/// Datapath suited to defuzzifying sets of up to `terms` plateaus.
pub fn wpa_datapath(cfg: &ArithConfig, format: FixedPointFormat, terms: usize) -> Result<Datapath, AppError> {
    Datapath::new(cfg, format, 0, terms)
}

pub fn wpa_defuzzify_with(set: &PlateauSet, dp: &Datapath, key: u64) -> Result<u64, AppError> {
    let format = *dp.format();
    set.validate(&format)?;
    let fw = 1u64 << format.wl;
    let centres: Vec<Fixed> = set
        .plateaus
        .iter()
        .map(|p| Fixed {
            neg: false,
            mag: p.centre(),
        })
        .collect();
    let masses: Vec<u64> = set.plateaus.iter().map(Plateau::mass).collect();
    let weights: Vec<Fixed> = masses.iter().map(|&m| Fixed { neg: false, mag: m }).collect();
    let num = dp.mac(&centres, &weights, rng::combine(key, 0))?.value.max(0) as u64;
    let den = dp.sum(&masses, rng::combine(key, 1))?.value as u64;
    if den == 0 {
        return Err(AppError::Domain("weight sum is zero".into()));
    }
    Ok(((2 * num + den) / (2 * den)).min(fw - 1))
}

pub fn wpa_defuzzify(set: &PlateauSet, cfg: &ArithConfig, format: FixedPointFormat) -> Result<u64, AppError> {
    wpa_defuzzify_with(set, &wpa_datapath(cfg, format, set.plateaus.len())?, 0)
}

/// Accumulator width that suits random plateau sets at `wl`.
pub fn wpa_acc_width(wl: u32) -> u32 {
    min_acc_width(wl, MAX_RANDOM_PLATEAUS as usize)
}

/// Compares `cfg` against precise arithmetic of the same format on `samples`
/// random plateau sets; the report is in percent of the universe width.
pub fn defuzz_error_study(
    cfg: &ArithConfig,
    format: FixedPointFormat,
    samples: u64,
    seed: u64,
) -> Result<ErrorReport, AppError> {
    if samples == 0 {
        return Err(AppError::Domain("samples must be at least 1".into()));
    }
    let terms = MAX_RANDOM_PLATEAUS as usize;
    let dp = wpa_datapath(cfg, format, terms)?;
    let precise = wpa_datapath(&ArithConfig::precise(format.wl, cfg.acc_width()), format, terms)?;
    let acc = (0..samples)
        .into_par_iter()
        .map(|i| {
            let set = PlateauSet::random(format.wl, seed, i);
            let key = rng::combine(seed, i);
            let got = wpa_defuzzify_with(&set, &dp, key)?;
            let want = wpa_defuzzify_with(&set, &precise, key)?;
            let mut a = ErrorAccumulator::default();
            a.push(got as i128 - want as i128);
            Ok::<_, AppError>(a)
        })
        .try_reduce(ErrorAccumulator::default, |x, y| Ok(x.merge(y)))?;
    Ok(acc.finish((1u64 << format.wl) as f64, false).to_percent())
}
