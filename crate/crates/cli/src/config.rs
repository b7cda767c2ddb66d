// SPDX-License-Identifier: Apache-2.0

//! JSON configuration accepted by the application subcommands.

use serde::{Deserialize, Serialize};
use softreal::apps::{Activation, ArithConfig, Dataset, TrainParams};
use softreal::blocks::BlockSpec;
use softreal::netlist::FaultConfig;

/// Arithmetic for an application datapath. The accumulator width is filled
/// in from the format and term count unless given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArithChoice {
    #[default]
    Precise,
    Bic {
        lpl: u32,
        hbl: u32,
        vbl: u32,
    },
    Rtmr {
        aul: u32,
        hul: u32,
        vul: u32,
    },
    Tmr,
    Custom {
        adder: BlockSpec,
        multiplier: BlockSpec,
    },
}

impl ArithChoice {
    pub fn resolve(&self, wl: u32, acc: u32) -> ArithConfig {
        match self {
            ArithChoice::Precise => ArithConfig::precise(wl, acc),
            ArithChoice::Bic { lpl, hbl, vbl } => ArithConfig::bic(wl, acc, *lpl, *hbl, *vbl),
            ArithChoice::Rtmr { aul, hul, vul } => ArithConfig::rtmr(wl, acc, *aul, *hul, *vul),
            ArithChoice::Tmr => ArithConfig::full_tmr(wl, acc),
            ArithChoice::Custom { adder, multiplier } => ArithConfig {
                adder: adder.clone(),
                multiplier: multiplier.clone(),
                fault: None,
            },
        }
    }

    /// `bic;lpl=2;hbl=2;vbl=6` style label for report rows.
    pub fn label(&self) -> String {
        match self {
            ArithChoice::Precise => "precise".into(),
            ArithChoice::Bic { lpl, hbl, vbl } => format!("bic;lpl={lpl};hbl={hbl};vbl={vbl}"),
            ArithChoice::Rtmr { aul, hul, vul } => format!("rtmr;aul={aul};hul={hul};vul={vul}"),
            ArithChoice::Tmr => "tmr".into(),
            ArithChoice::Custom { adder, multiplier } => format!(
                "{}[{}]+{}[{}]",
                adder.family(),
                adder.params().replace(';', " "),
                multiplier.family(),
                multiplier.params().replace(';', " ")
            ),
        }
    }
}

/// Parameters of the built-in synthetic classification set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobSpec {
    pub per_class: usize,
    pub spread: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        BlobSpec {
            per_class: 64,
            spread: 0.35,
            seed: 11,
        }
    }
}

fn default_activation() -> Activation {
    Activation::PwlSigmoid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub topology: Vec<usize>,
    pub wl: u32,
    pub frac: u32,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default)]
    pub arith: ArithChoice,
    #[serde(default)]
    pub acc_width: Option<u32>,
    /// Faults apply while evaluating the trained model, never during training.
    #[serde(default)]
    pub fault: Option<FaultConfig>,
    #[serde(default)]
    pub train: TrainParams,
    #[serde(default)]
    pub data: BlobSpec,
}

impl MlpConfig {
    pub fn blobs(&self) -> Dataset {
        let classes = *self.topology.last().unwrap_or(&1);
        let dim = self.topology.first().copied().unwrap_or(1);
        Dataset::blobs(classes, dim, self.data.per_class, self.data.spread, self.data.seed)
    }
}
