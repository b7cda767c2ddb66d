// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ExplorerError, Metric, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub metric: Metric,
    pub direction: Direction,
}

impl Objective {
    pub fn min(metric: Metric) -> Self {
        Objective {
            metric,
            direction: Direction::Min,
        }
    }

    pub fn max(metric: Metric) -> Self {
        Objective {
            metric,
            direction: Direction::Max,
        }
    }
}

/// `mae`, `mae:min` or `area:max`.
impl FromStr for Objective {
    type Err = ExplorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, d) = s.split_once(':').unwrap_or((s, "min"));
        let direction = match d {
            "min" => Direction::Min,
            "max" => Direction::Max,
            _ => return Err(ExplorerError::Spec(format!("direction must be min or max, got `{d}`"))),
        };
        Ok(Objective {
            metric: m.parse()?,
            direction,
        })
    }
}

/// Objective values flipped so that smaller is always better.
fn keys(rows: &[SweepRow], objectives: &[Objective]) -> Result<Vec<Vec<f64>>, ExplorerError> {
    rows.iter()
        .map(|r| {
            objectives
                .iter()
                .map(|o| {
                    let v = r
                        .get(o.metric)
                        .ok_or_else(|| ExplorerError::UnknownMetric(o.metric.to_string()))?;
                    if !v.is_finite() {
                        return Err(ExplorerError::Spec(format!("{} is not finite", o.metric)));
                    }
                    Ok(match o.direction {
                        Direction::Min => v,
                        Direction::Max => -v,
                    })
                })
                .collect()
        })
        .collect()
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// The non-dominated rows, in their input order.
///
/// Rows are visited in lexicographic order of their objective vectors; a row
/// can only be dominated by one that sorts before it, so each row is checked
/// against the front built so far.
pub fn pareto_front(rows: &[SweepRow], objectives: &[Objective]) -> Result<Vec<SweepRow>, ExplorerError> {
    if objectives.is_empty() {
        return Err(ExplorerError::Spec("at least one objective is required".into()));
    }
    let k = keys(rows, objectives)?;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| {
        k[i].iter()
            .zip(&k[j])
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front.iter().any(|&f| dominates(&k[f], &k[i])) {
            front.push(i);
        }
    }
    front.sort_unstable();
    Ok(front.into_iter().map(|i| rows[i].clone()).collect())
}
