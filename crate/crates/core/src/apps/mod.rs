// SPDX-License-Identifier: Apache-2.0

//! Application kernels over pluggable arithmetic: a fixed-point MLP and a
//! weighted-plateau-average defuzzifier, both built on a sign-magnitude MAC.

mod datapath;
mod fixed;
mod mlp;
mod wpa;

use thiserror::Error;

use crate::blocks::BlockError;
use crate::metrics::MetricsError;
use crate::netlist::FaultError;

pub use datapath::{min_acc_width, min_acc_width_shifted, ArithConfig, Datapath, MacResult};
pub use fixed::{Fixed, FixedPointFormat, MAX_FORMAT_WL};
pub use mlp::{
    classify_metrics, classify_metrics_with, mlp_forward, mlp_forward_with, mlp_train, Activation, ClassifyReport,
    Dataset, MlpModel, SigmoidLut, TrainParams, TrainReport,
};
pub use wpa::{
    defuzz_error_study, wpa_acc_width, wpa_datapath, wpa_defuzzify, wpa_defuzzify_with, Plateau, PlateauSet,
    MAX_RANDOM_PLATEAUS,
};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("fixed-point format: {0}")]
    Format(String),
    #[error("arithmetic config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0}")]
    Domain(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
