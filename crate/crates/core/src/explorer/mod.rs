// SPDX-License-Identifier: Apache-2.0

//! Parameter sweeps over block families with joint accuracy and cost
//! columns, Pareto filtering and table rendering.

mod pareto;
mod render;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{BlockError, BlockSpec};
use crate::metrics::{
    exhaustive_error, fault_error, monte_carlo_error, ErrorReport, InputDistribution, MetricsError, EXHAUSTIVE_CAP_BITS,
};
use crate::netlist::{cost, CostWeights, FaultConfig};

pub use pareto::{pareto_front, Direction, Objective};
pub use render::{parse_csv, render, TableFormat};

#[derive(Debug, Error)]
pub enum ExplorerError {
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error("cannot render: {0}")]
    Render(String),
    #[error("malformed table: {0}")]
    Parse(String),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Block families with integer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Rca,
    ArrayMult,
    Loa,
    Bam,
    Rrca,
    Ram,
}

impl Family {
    /// Parameter names in sweep order.
    pub fn params(self) -> &'static [&'static str] {
        match self {
            Family::Rca | Family::ArrayMult => &["wl"],
            Family::Loa => &["wl", "lpl"],
            Family::Bam => &["wl", "hbl", "vbl"],
            Family::Rrca => &["wl", "aul"],
            Family::Ram => &["wl", "hul", "vul"],
        }
    }

    /// `values` follow [`Family::params`].
    pub fn block(self, values: &[u32]) -> BlockSpec {
        match (self, values) {
            (Family::Rca, &[wl]) => BlockSpec::Rca { wl },
            (Family::ArrayMult, &[wl]) => BlockSpec::ArrayMult { wl },
            (Family::Loa, &[wl, lpl]) => BlockSpec::loa(wl, lpl),
            (Family::Bam, &[wl, hbl, vbl]) => BlockSpec::Bam { wl, hbl, vbl },
            (Family::Rrca, &[wl, aul]) => BlockSpec::Rrca { wl, aul },
            (Family::Ram, &[wl, hul, vul]) => BlockSpec::Ram { wl, hul, vul },
            _ => panic!(
                "{self:?} takes {} parameters, got {}",
                self.params().len(),
                values.len()
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mae,
    Mse,
    Aev,
    MaxAbs,
    Area,
    Delay,
    Adp,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Mae,
        Metric::Mse,
        Metric::Aev,
        Metric::MaxAbs,
        Metric::Area,
        Metric::Delay,
        Metric::Adp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Mse => "mse",
            Metric::Aev => "aev",
            Metric::MaxAbs => "max_abs",
            Metric::Area => "area",
            Metric::Delay => "delay",
            Metric::Adp => "adp",
        }
    }

    pub fn is_error(self) -> bool {
        matches!(self, Metric::Mae | Metric::Mse | Metric::Aev | Metric::MaxAbs)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = ExplorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ExplorerError::UnknownMetric(s.to_string()))
    }
}

/// Inclusive integer range, serialized as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct ParamRange {
    pub lo: u32,
    pub hi: u32,
}

impl From<[u32; 2]> for ParamRange {
    fn from([lo, hi]: [u32; 2]) -> Self {
        ParamRange { lo, hi }
    }
}

impl From<ParamRange> for [u32; 2] {
    fn from(r: ParamRange) -> Self {
        [r.lo, r.hi]
    }
}

impl ParamRange {
    pub fn new(lo: u32, hi: u32) -> Self {
        ParamRange { lo, hi }
    }

    pub fn single(v: u32) -> Self {
        ParamRange { lo: v, hi: v }
    }

    pub fn len(&self) -> usize {
        if self.hi < self.lo {
            0
        } else {
            (self.hi - self.lo) as usize + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

/// Largest number of parameter combinations one sweep may hold.
pub const MAX_SWEEP_POINTS: usize = 1 << 20;

fn default_samples() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: Family,
    /// One range per family parameter.
    pub ranges: BTreeMap<String, ParamRange>,
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub stimulus: InputDistribution,
    /// Sample count when a block is too wide to enumerate.
    #[serde(default = "default_samples")]
    pub samples: u64,
    /// With faults, error columns come from gate-level injection over `fault.trials`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultConfig>,
    #[serde(default)]
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(family: Family, ranges: &[(&str, ParamRange)], metrics: &[Metric]) -> Self {
        SweepSpec {
            family,
            ranges: ranges.iter().map(|(k, r)| (k.to_string(), *r)).collect(),
            metrics: metrics.to_vec(),
            stimulus: InputDistribution::default(),
            samples: default_samples(),
            fault: None,
            seed: 0,
        }
    }

    /// Every parameter combination in lexicographic order.
    pub fn points(&self) -> Result<Vec<Vec<u32>>, ExplorerError> {
        self.validate_shape()?;
        let ranges: Vec<ParamRange> = self.family.params().iter().map(|p| self.ranges[*p]).collect();
        let mut points = vec![Vec::new()];
        for r in &ranges {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    (r.lo..=r.hi).map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        Ok(points)
    }

    fn validate_shape(&self) -> Result<(), ExplorerError> {
        let names = self.family.params();
        if let Some(k) = self.ranges.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(ExplorerError::Spec(format!("{:?} has no parameter `{k}`", self.family)));
        }
        if let Some(k) = names.iter().find(|k| !self.ranges.contains_key(**k)) {
            return Err(ExplorerError::Spec(format!("missing range for `{k}`")));
        }
        if let Some((k, r)) = self.ranges.iter().find(|(_, r)| r.is_empty()) {
            return Err(ExplorerError::Spec(format!(
                "range for `{k}` is empty: [{}, {}]",
                r.lo, r.hi
            )));
        }
        let total = self.ranges.values().try_fold(1usize, |n, r| n.checked_mul(r.len()));
        if total.is_none_or(|n| n > MAX_SWEEP_POINTS) {
            return Err(ExplorerError::Spec(format!(
                "more than {MAX_SWEEP_POINTS} parameter combinations"
            )));
        }
        if self.metrics.is_empty() {
            return Err(ExplorerError::Spec("at least one metric is required".into()));
        }
        let mut seen = self.metrics.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.metrics.len() {
            return Err(ExplorerError::Spec("metrics are listed twice".into()));
        }
        Ok(())
    }

    /// Checks the shape and every block in the sweep.
    pub fn validate(&self) -> Result<(), ExplorerError> {
        for p in self.points()? {
            self.family.block(&p).validate()?;
        }
        if self.samples == 0 {
            return Err(MetricsError::NoSamples.into());
        }
        if let Some(f) = &self.fault {
            f.validate().map_err(MetricsError::Fault)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub block: String,
    pub params: Vec<(String, u32)>,
    pub metrics: Vec<(Metric, f64)>,
    /// Whether the error columns come from full enumeration; `None` without error columns.
    pub exhaustive: Option<bool>,
    pub seed: u64,
}

impl SweepRow {
    pub fn get(&self, m: Metric) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| *k == m).map(|(_, v)| *v)
    }

    pub fn param(&self, name: &str) -> Option<u32> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Evaluates every parameter combination; rows come back in lexicographic
/// parameter order whatever the thread count.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ExplorerError> {
    spec.validate()?;
    spec.points()?.par_iter().map(|p| evaluate(spec, p)).collect()
}

fn error_report(spec: &SweepSpec, block: &BlockSpec) -> Result<ErrorReport, ExplorerError> {
    let width = block.width();
    let exact = |a: u64, b: u64| block.exact(a, b);
    if let Some(cfg) = &spec.fault {
        return Ok(fault_error(&block.build()?, cfg, &spec.stimulus, &exact)?);
    }
    let model = |a: u64, b: u64| block.value(a, b).expect("operands drawn in range");
    Ok(if 2 * width <= EXHAUSTIVE_CAP_BITS {
        exhaustive_error(&model, &exact, width)?
    } else {
        monte_carlo_error(&model, &exact, width, &spec.stimulus, spec.samples, spec.seed)?
    })
}

fn evaluate(spec: &SweepSpec, point: &[u32]) -> Result<SweepRow, ExplorerError> {
    let block = spec.family.block(point);
    let report = if spec.metrics.iter().any(|m| m.is_error()) {
        Some(error_report(spec, &block)?)
    } else {
        None
    };
    let costs = if spec.metrics.iter().any(|m| !m.is_error()) {
        Some(cost(&block.build()?, &CostWeights::default()))
    } else {
        None
    };
    let metrics = spec
        .metrics
        .iter()
        .map(|&m| {
            let r = report.as_ref();
            let c = costs.as_ref();
            let v = match m {
                Metric::Mae => r.map(|r| r.mae),
                Metric::Mse => r.map(|r| r.mse),
                Metric::Aev => r.map(|r| r.aev),
                Metric::MaxAbs => r.map(|r| r.max_abs),
                Metric::Area => c.map(|c| c.area),
                Metric::Delay => c.map(|c| c.delay),
                Metric::Adp => c.map(|c| c.adp),
            };
            (m, v.expect("computed above"))
        })
        .collect();
    Ok(SweepRow {
        block: block.family().to_string(),
        params: spec
            .family
            .params()
            .iter()
            .map(|s| s.to_string())
            .zip(point.iter().copied())
            .collect(),
        metrics,
        exhaustive: report.map(|r| r.exhaustive),
        seed: spec.seed,
    })
}
