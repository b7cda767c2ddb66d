// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

pub const REPORT_CSV_HEADER: &str = "block,params,mae,mse,aev,max_abs,count,normalizer,exhaustive,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Raw integer output encoding.
    #[default]
    Raw,
    /// Percent of the normalizer.
    Percent,
}

/// Exact running sums over signed integer errors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorAccumulator {
    pub count: u64,
    pub sum_abs: u128,
    pub sum_sq: u128,
    pub max_abs: u128,
}

impl ErrorAccumulator {
    #[inline]
    pub fn push(&mut self, e: i128) {
        let a = e.unsigned_abs();
        self.count += 1;
        self.sum_abs += a;
        self.sum_sq += a * a;
        self.max_abs = self.max_abs.max(a);
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.count += other.count;
        self.sum_abs += other.sum_abs;
        self.sum_sq += other.sum_sq;
        self.max_abs = self.max_abs.max(other.max_abs);
        self
    }

    pub fn finish(&self, normalizer: f64, exhaustive: bool) -> ErrorReport {
        if self.count == 0 {
            return ErrorReport {
                normalizer,
                exhaustive,
                ..ErrorReport::default()
            };
        }
        let n = self.count as f64;
        let mae = self.sum_abs as f64 / n;
        let mse = self.sum_sq as f64 / n;
        // n·Σe² − (Σ|e|)² exactly when it fits, so a zero variance stays zero
        let aev = match (
            self.sum_sq.checked_mul(self.count as u128),
            self.sum_abs.checked_mul(self.sum_abs),
        ) {
            (Some(x), Some(y)) => (x - y) as f64 / (n * n),
            _ => (mse - mae * mae).max(0.0),
        };
        ErrorReport {
            mae,
            mse,
            aev,
            max_abs: self.max_abs as f64,
            count: self.count,
            normalizer,
            exhaustive,
            unit: Unit::Raw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ErrorReport {
    pub mae: f64,
    pub mse: f64,
    /// Variance of the absolute error.
    pub aev: f64,
    pub max_abs: f64,
    pub count: u64,
    pub normalizer: f64,
    pub exhaustive: bool,
    #[serde(default)]
    pub unit: Unit,
}

impl ErrorReport {
    /// The same statistics expressed as percentages of the normalizer.
    pub fn to_percent(&self) -> ErrorReport {
        if self.unit == Unit::Percent {
            return *self;
        }
        let k = 100.0 / self.normalizer;
        ErrorReport {
            mae: self.mae * k,
            mse: self.mse * k * k,
            aev: self.aev * k * k,
            max_abs: self.max_abs * k,
            unit: Unit::Percent,
            ..*self
        }
    }

    /// `|mse − (aev + mae²)| / max(mse, tiny)`.
    pub fn identity_residual(&self) -> f64 {
        let lhs = self.mse;
        let rhs = self.aev + self.mae * self.mae;
        if lhs == 0.0 && rhs == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
        }
    }

    /// Standard error of the sample mean of `|e|`.
    pub fn mae_sigma(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.aev / self.count as f64).sqrt()
        }
    }
}

/// One CSV row of a labelled report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub block: String,
    pub params: String,
    pub report: ErrorReport,
    pub seed: Option<u64>,
}

impl ReportRow {
    /// Fields never contain commas; reals use the shortest exact representation.
    pub fn to_csv(&self) -> String {
        let r = &self.report;
        let mut params = self.params.clone();
        if r.unit == Unit::Percent {
            if !params.is_empty() {
                params.push(';');
            }
            params.push_str("unit=percent");
        }
        debug_assert!(!self.block.contains(',') && !params.contains(','));
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.block,
            params,
            r.mae,
            r.mse,
            r.aev,
            r.max_abs,
            r.count,
            r.normalizer,
            r.exhaustive,
            self.seed.map(|s| s.to_string()).unwrap_or_default()
        )
    }
}
