// SPDX-License-Identifier: Apache-2.0

//! Arithmetic block generators.
//!
//! Every generator returns a [`Netlist`] with input buses `a` and `b` and one
//! output bus (`sum` for adders, `prod` for multipliers). Each family also has
//! a closed-form functional model that the netlists are checked against.
//!
//! Site names follow a fixed scheme so that fault draws line up across related
//! blocks: `r{k}.fa{bit}.*` for ripple-carry full adders of replica `k`
//! (unprotected logic uses replica 0), `r{k}.c{i}_{j}.*` for array-multiplier
//! cells and `vote.*` for majority voters.

mod adders;
mod multipliers;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::Netlist;

pub use adders::{build_loa, build_loa_with, build_rca, build_rft_adder, build_rrca, loa_value, loa_value_with};
pub use multipliers::{bam_value, build_array_mult, build_bam, build_ram, cell_coordinates};

pub const MAX_ADDER_WIDTH: u32 = 32;
pub const MAX_MULT_WIDTH: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("{name}={value} violates {constraint}")]
    Parameter {
        name: &'static str,
        value: u32,
        constraint: String,
    },
    #[error("RFT adder needs at least one non-empty section")]
    EmptySections,
    #[error("operand {value} out of range for {width}-bit block")]
    Operand { value: u64, width: u32 },
}

fn check(name: &'static str, value: u32, ok: bool, constraint: impl FnOnce() -> String) -> Result<(), BlockError> {
    if ok {
        Ok(())
    } else {
        Err(BlockError::Parameter {
            name,
            value,
            constraint: constraint(),
        })
    }
}

pub(crate) fn check_adder_width(p: u32) -> Result<(), BlockError> {
    check("wl", p, (1..=MAX_ADDER_WIDTH).contains(&p), || {
        format!("1 ≤ WL ≤ {MAX_ADDER_WIDTH}")
    })
}

pub(crate) fn check_mult_width(wl: u32) -> Result<(), BlockError> {
    check("wl", wl, (1..=MAX_MULT_WIDTH).contains(&wl), || {
        format!("1 ≤ WL ≤ {MAX_MULT_WIDTH}")
    })
}

pub(crate) fn check_operands(a: u64, b: u64, width: u32) -> Result<(), BlockError> {
    for v in [a, b] {
        if width < 64 && v >> width != 0 {
            return Err(BlockError::Operand { value: v, width });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protection {
    Unprotected,
    Tmr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub width: u32,
    pub protection: Protection,
}

impl Section {
    pub fn new(width: u32, protection: Protection) -> Self {
        Section { width, protection }
    }
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

/// A block family together with its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "block", rename_all = "snake_case")]
pub enum BlockSpec {
    Rca {
        wl: u32,
    },
    ArrayMult {
        wl: u32,
    },
    Loa {
        wl: u32,
        lpl: u32,
        /// Carry-in of the precise part from AND of the lower parts' MSBs.
        #[serde(default = "default_true", skip_serializing_if = "is_true")]
        carry_and: bool,
    },
    Bam {
        wl: u32,
        hbl: u32,
        vbl: u32,
    },
    Rrca {
        wl: u32,
        aul: u32,
    },
    Ram {
        wl: u32,
        hul: u32,
        vul: u32,
    },
    RftAdder {
        sections: Vec<Section>,
    },
}

impl BlockSpec {
    pub fn loa(wl: u32, lpl: u32) -> Self {
        BlockSpec::Loa {
            wl,
            lpl,
            carry_and: true,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            BlockSpec::Rca { .. } => "rca",
            BlockSpec::ArrayMult { .. } => "array_mult",
            BlockSpec::Loa { .. } => "loa",
            BlockSpec::Bam { .. } => "bam",
            BlockSpec::Rrca { .. } => "rrca",
            BlockSpec::Ram { .. } => "ram",
            BlockSpec::RftAdder { .. } => "rft_adder",
        }
    }

    pub fn is_adder(&self) -> bool {
        matches!(
            self,
            BlockSpec::Rca { .. } | BlockSpec::Loa { .. } | BlockSpec::Rrca { .. } | BlockSpec::RftAdder { .. }
        )
    }

    /// Operand width in bits.
    pub fn width(&self) -> u32 {
        match self {
            BlockSpec::Rca { wl }
            | BlockSpec::ArrayMult { wl }
            | BlockSpec::Loa { wl, .. }
            | BlockSpec::Bam { wl, .. }
            | BlockSpec::Rrca { wl, .. }
            | BlockSpec::Ram { wl, .. } => *wl,
            BlockSpec::RftAdder { sections } => sections.iter().map(|s| s.width).sum(),
        }
    }

    /// Width of the result bus.
    pub fn output_width(&self) -> u32 {
        if self.is_adder() {
            self.width() + 1
        } else {
            2 * self.width()
        }
    }

    /// `key=value` parameter string, e.g. `wl=8;lpl=3`.
    pub fn params(&self) -> String {
        match self {
            BlockSpec::Rca { wl } | BlockSpec::ArrayMult { wl } => format!("wl={wl}"),
            BlockSpec::Loa { wl, lpl, carry_and } => {
                if *carry_and {
                    format!("wl={wl};lpl={lpl}")
                } else {
                    format!("wl={wl};lpl={lpl};carry_and=0")
                }
            }
            BlockSpec::Bam { wl, hbl, vbl } => format!("wl={wl};hbl={hbl};vbl={vbl}"),
            BlockSpec::Rrca { wl, aul } => format!("wl={wl};aul={aul}"),
            BlockSpec::Ram { wl, hul, vul } => format!("wl={wl};hul={hul};vul={vul}"),
            BlockSpec::RftAdder { sections } => sections
                .iter()
                .map(|s| {
                    let p = match s.protection {
                        Protection::Unprotected => "u",
                        Protection::Tmr => "tmr",
                    };
                    format!("{}:{p}", s.width)
                })
                .collect::<Vec<_>>()
                .join("/"),
        }
    }

    pub fn validate(&self) -> Result<(), BlockError> {
        match self {
            BlockSpec::Rca { wl } => check_adder_width(*wl),
            BlockSpec::ArrayMult { wl } => check_mult_width(*wl),
            BlockSpec::Loa { wl, lpl, .. } => {
                check_adder_width(*wl)?;
                check("lpl", *lpl, lpl <= wl, || format!("LPL ≤ WL (wl={wl})"))
            }
            BlockSpec::Bam { wl, hbl, vbl } => {
                check_mult_width(*wl)?;
                check("hbl", *hbl, hbl <= wl, || format!("HBL ≤ WL (wl={wl})"))?;
                check("vbl", *vbl, *vbl < 2 * wl, || format!("VBL ≤ 2·WL−1 (wl={wl})"))
            }
            BlockSpec::Rrca { wl, aul } => {
                check_adder_width(*wl)?;
                check("aul", *aul, aul <= wl, || format!("AUL ≤ WL (wl={wl})"))
            }
            BlockSpec::Ram { wl, hul, vul } => {
                check_mult_width(*wl)?;
                check("hul", *hul, hul <= wl, || format!("HUL ≤ WL (wl={wl})"))?;
                check("vul", *vul, *vul < 2 * wl, || format!("VUL ≤ 2·WL−1 (wl={wl})"))
            }
            BlockSpec::RftAdder { sections } => {
                if sections.iter().all(|s| s.width == 0) {
                    return Err(BlockError::EmptySections);
                }
                check_adder_width(self.width())
            }
        }
    }

    pub fn build(&self) -> Result<Netlist, BlockError> {
        match self {
            BlockSpec::Rca { wl } => build_rca(*wl),
            BlockSpec::ArrayMult { wl } => build_array_mult(*wl),
            BlockSpec::Loa { wl, lpl, carry_and } => build_loa_with(*wl, *lpl, *carry_and),
            BlockSpec::Bam { wl, hbl, vbl } => build_bam(*wl, *hbl, *vbl),
            BlockSpec::Rrca { wl, aul } => build_rrca(*wl, *aul),
            BlockSpec::Ram { wl, hul, vul } => build_ram(*wl, *hul, *vul),
            BlockSpec::RftAdder { sections } => build_rft_adder(sections),
        }
    }

    /// Fault-free functional model of the block.
    pub fn value(&self, a: u64, b: u64) -> Result<u64, BlockError> {
        check_operands(a, b, self.width())?;
        Ok(match self {
            BlockSpec::Loa { wl, lpl, carry_and } => loa_value_with(a, b, *wl, *lpl, *carry_and)?,
            BlockSpec::Bam { wl, hbl, vbl } => bam_value(a, b, *wl, *hbl, *vbl)?,
            _ => self.exact(a, b),
        })
    }

    /// The precise operation the block approximates or protects.
    pub fn exact(&self, a: u64, b: u64) -> u64 {
        if self.is_adder() {
            a + b
        } else {
            a * b
        }
    }
}
