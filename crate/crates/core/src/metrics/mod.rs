// SPDX-License-Identifier: Apache-2.0

//! Error statistics for arithmetic blocks.
//!
//! All engines accumulate exact integer sums (`Σ|e|`, `Σe²`, max) and divide
//! only when the report is finalized, so parallel partitioning never changes
//! a result.

mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{CostReport, FaultConfig, FaultError, FaultPlan, Netlist, NetlistError, Simulator};
use crate::rng::{self, domain};

pub use report::{ErrorAccumulator, ErrorReport, ReportRow, Unit, REPORT_CSV_HEADER};

/// Exhaustive enumeration is refused above this many total operand bits.
pub const EXHAUSTIVE_CAP_BITS: u32 = 24;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("exhaustive enumeration of 2x{width} operand bits exceeds the cap of {cap} bits")]
    ExhaustiveCap { width: u32, cap: u32 },
    #[error("invalid input distribution: {0}")]
    Distribution(String),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("improvement needs a positive candidate value, got {0}")]
    Domain(f64),
    #[error("netlist must have two input buses of equal width and one output bus: {0}")]
    Shape(String),
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// A two-operand unsigned operation that can be compared against an oracle.
pub trait BinaryOp: Sync {
    fn apply(&self, a: u64, b: u64) -> u64;

    /// Evaluates `out[k] = apply(a[k], b[k])` for equal-length slices.
    fn apply_batch(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
            *o = self.apply(x, y);
        }
    }
}

impl<F: Fn(u64, u64) -> u64 + Sync> BinaryOp for F {
    fn apply(&self, a: u64, b: u64) -> u64 {
        self(a, b)
    }
}

/// Fault-free netlist evaluation, bit-sliced 64 operand pairs at a time.
pub struct NetlistOp<'a> {
    netlist: &'a Netlist,
}

impl<'a> NetlistOp<'a> {
    pub fn new(netlist: &'a Netlist) -> Result<Self, MetricsError> {
        operand_width(netlist)?;
        Ok(NetlistOp { netlist })
    }

    pub fn width(&self) -> u32 {
        self.netlist.inputs()[0].width
    }
}

impl BinaryOp for NetlistOp<'_> {
    fn apply(&self, a: u64, b: u64) -> u64 {
        self.netlist.evaluate(&[a, b]).expect("operands fit the netlist")[0]
    }

    fn apply_batch(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        for ((x, y), o) in a.chunks(64).zip(b.chunks(64)).zip(out.chunks_mut(64)) {
            let r = self.netlist.evaluate_lanes(&[x, y]).expect("operands fit the netlist");
            o.copy_from_slice(&r[0]);
        }
    }
}

/// Operand width of a two-input, one-output netlist.
pub fn operand_width(netlist: &Netlist) -> Result<u32, MetricsError> {
    let ins = netlist.inputs();
    if ins.len() != 2 || netlist.outputs().len() != 1 {
        return Err(MetricsError::Shape(format!(
            "{} inputs, {} outputs",
            ins.len(),
            netlist.outputs().len()
        )));
    }
    if ins[0].width != ins[1].width {
        return Err(MetricsError::Shape(format!(
            "widths {} and {}",
            ins[0].width, ins[1].width
        )));
    }
    Ok(ins[0].width)
}

/// How operand pairs are drawn for sampled studies.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDistribution {
    /// Both operands uniform over `[0, 2^width)`.
    #[default]
    UniformFullRange,
    /// Pairs drawn uniformly from a fixed list.
    FixedList { pairs: Vec<(u64, u64)> },
    /// A seeded pool of `count` uniform pairs, resampled uniformly.
    SeededRandom { count: u64 },
}

impl InputDistribution {
    pub fn validate(&self, width: u32) -> Result<(), MetricsError> {
        match self {
            InputDistribution::UniformFullRange => Ok(()),
            InputDistribution::FixedList { pairs } => {
                if pairs.is_empty() {
                    return Err(MetricsError::Distribution("fixed list is empty".into()));
                }
                for &(a, b) in pairs {
                    if width < 64 && (a >> width != 0 || b >> width != 0) {
                        return Err(MetricsError::Distribution(format!(
                            "pair ({a}, {b}) out of range for width {width}"
                        )));
                    }
                }
                Ok(())
            }
            InputDistribution::SeededRandom { count } => {
                if *count == 0 {
                    Err(MetricsError::Distribution("seeded pool size must be positive".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// The `i`-th sample for `seed`. Pure in its arguments.
    pub fn sample(&self, width: u32, seed: u64, i: u64) -> (u64, u64) {
        let pair = |k: u64| {
            (
                rng::uniform_bits(seed, domain::INPUT, 2 * k, width),
                rng::uniform_bits(seed, domain::INPUT, 2 * k + 1, width),
            )
        };
        match self {
            InputDistribution::UniformFullRange => pair(i),
            InputDistribution::FixedList { pairs } => {
                pairs[rng::uniform_below(seed, domain::INPUT ^ 1, i, pairs.len() as u64) as usize]
            }
            InputDistribution::SeededRandom { count } => pair(rng::uniform_below(seed, domain::INPUT ^ 2, i, *count)),
        }
    }
}

fn signed_error(got: u64, want: u64) -> i128 {
    got as i128 - want as i128
}

fn normalizer(width: u32) -> f64 {
    2f64.powi(width as i32)
}

/// Enumerates every operand pair of `width` bits and compares `block` against `oracle`.
pub fn exhaustive_error(block: &dyn BinaryOp, oracle: &dyn BinaryOp, width: u32) -> Result<ErrorReport, MetricsError> {
    if 2 * width > EXHAUSTIVE_CAP_BITS {
        return Err(MetricsError::ExhaustiveCap {
            width,
            cap: EXHAUSTIVE_CAP_BITS,
        });
    }
    let n = 1u64 << width;
    let acc = (0..n)
        .into_par_iter()
        .fold(ErrorAccumulator::default, |mut acc, a| {
            let mut xs = [0u64; 64];
            let mut ys = [0u64; 64];
            let mut got = [0u64; 64];
            let mut want = [0u64; 64];
            let mut b0 = 0;
            while b0 < n {
                let len = (n - b0).min(64) as usize;
                for k in 0..len {
                    xs[k] = a;
                    ys[k] = b0 + k as u64;
                }
                block.apply_batch(&xs[..len], &ys[..len], &mut got[..len]);
                oracle.apply_batch(&xs[..len], &ys[..len], &mut want[..len]);
                for k in 0..len {
                    acc.push(signed_error(got[k], want[k]));
                }
                b0 += len as u64;
            }
            acc
        })
        .reduce(ErrorAccumulator::default, ErrorAccumulator::merge);
    Ok(acc.finish(normalizer(width), true))
}

/// Samples `n` operand pairs from `dist` with a counter-based stream.
pub fn monte_carlo_error(
    block: &dyn BinaryOp,
    oracle: &dyn BinaryOp,
    width: u32,
    dist: &InputDistribution,
    n: u64,
    seed: u64,
) -> Result<ErrorReport, MetricsError> {
    if n == 0 {
        return Err(MetricsError::NoSamples);
    }
    dist.validate(width)?;
    let chunks = n.div_ceil(64);
    let acc = (0..chunks)
        .into_par_iter()
        .fold(ErrorAccumulator::default, |mut acc, c| {
            let lo = c * 64;
            let len = (n - lo).min(64) as usize;
            let mut xs = [0u64; 64];
            let mut ys = [0u64; 64];
            for k in 0..len {
                (xs[k], ys[k]) = dist.sample(width, seed, lo + k as u64);
            }
            let mut got = [0u64; 64];
            let mut want = [0u64; 64];
            block.apply_batch(&xs[..len], &ys[..len], &mut got[..len]);
            oracle.apply_batch(&xs[..len], &ys[..len], &mut want[..len]);
            for k in 0..len {
                acc.push(signed_error(got[k], want[k]));
            }
            acc
        })
        .reduce(ErrorAccumulator::default, ErrorAccumulator::merge);
    Ok(acc.finish(normalizer(width), false))
}

/// Fault-injection study: trial `t` draws input `t` from `dist` (seeded by
/// `cfg.base_seed`) and evaluates the netlist with fault stream `t`.
pub fn fault_error(
    netlist: &Netlist,
    cfg: &FaultConfig,
    dist: &InputDistribution,
    oracle: &dyn BinaryOp,
) -> Result<ErrorReport, MetricsError> {
    let width = operand_width(netlist)?;
    dist.validate(width)?;
    let plan = FaultPlan::new(netlist, cfg)?;
    const CHUNK: u64 = 1024;
    let chunks = cfg.trials.div_ceil(CHUNK);
    let acc = (0..chunks)
        .into_par_iter()
        .fold(
            || (ErrorAccumulator::default(), Simulator::new(netlist, Some(plan.clone()))),
            |(mut acc, mut sim), c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(cfg.trials);
                for t in lo..hi {
                    let (a, b) = dist.sample(width, cfg.base_seed, t);
                    let got = sim.run(&[a, b], t)[0];
                    acc.push(signed_error(got, oracle.apply(a, b)));
                }
                (acc, sim)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(ErrorAccumulator::default, ErrorAccumulator::merge);
    Ok(acc.finish(normalizer(width), false))
}

/// Relative improvement of `reference` over `candidate`, in percent:
/// `100 · (reference − candidate) / candidate`.
pub fn improvement(reference: f64, candidate: f64) -> Result<f64, MetricsError> {
    if candidate.is_nan() || candidate <= 0.0 || candidate.is_infinite() {
        return Err(MetricsError::Domain(candidate));
    }
    Ok(100.0 * (reference - candidate) / candidate)
}

/// Per-field improvement percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub area: f64,
    pub delay: f64,
    pub adp: f64,
}

pub fn improvement_costs(reference: &CostReport, candidate: &CostReport) -> Result<Improvement, MetricsError> {
    Ok(Improvement {
        area: improvement(reference.area, candidate.area)?,
        delay: improvement(reference.delay, candidate.delay)?,
        adp: improvement(reference.adp, candidate.adp)?,
    })
}

/// Round half away from zero, for comparing percentages against integers.
pub fn round_half_away(x: f64) -> i64 {
    x.round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{bam_value, build_bam, build_loa, build_rca, build_rrca, loa_value};
    use crate::netlist::TAG_UNPROTECTED;

    fn add(a: u64, b: u64) -> u64 {
        a + b
    }

    fn mul(a: u64, b: u64) -> u64 {
        a * b
    }

    #[test]
    fn identity_reports_are_zero() {
        let r = exhaustive_error(&add, &add, 6).unwrap();
        assert_eq!((r.mae, r.mse, r.aev, r.max_abs), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.count, 4096);
        assert!(r.exhaustive);
        let m = monte_carlo_error(&add, &add, 6, &InputDistribution::UniformFullRange, 1000, 9).unwrap();
        assert_eq!(m.mse, 0.0);
        assert!(!m.exhaustive);
    }

    #[test]
    fn exhaustive_cap_is_enforced() {
        let e = exhaustive_error(&add, &add, 13).unwrap_err();
        assert!(e.to_string().contains("24"), "{e}");
        assert!(exhaustive_error(&add, &add, 12).is_ok());
    }

    #[test]
    fn loa_4_2_report_is_locked() {
        let loa = build_loa(4, 2).unwrap();
        let via_net = exhaustive_error(&NetlistOp::new(&loa).unwrap(), &add, 4).unwrap();
        let model = |a, b| loa_value(a, b, 4, 2).unwrap();
        let via_model = exhaustive_error(&model, &add, 4).unwrap();
        assert_eq!(via_net, via_model);
        // 256 pairs; the lower two bits of each operand decide everything
        let mut s1 = 0i64;
        let mut s2 = 0i64;
        let mut mx = 0i64;
        for a in 0..16u64 {
            for b in 0..16u64 {
                let e = (model(a, b) as i64 - (a + b) as i64).abs();
                s1 += e;
                s2 += e * e;
                mx = mx.max(e);
            }
        }
        assert_eq!(via_net.mae, s1 as f64 / 256.0);
        assert_eq!(via_net.mse, s2 as f64 / 256.0);
        assert_eq!(via_net.max_abs, mx as f64);
        // e = 2·a1·b1 − a0·b0 over the low bits
        assert_eq!((s1, s2, mx), (160, 256, 2));
    }

    #[test]
    fn bam_max_abs_matches_omission_set() {
        let (wl, hbl, vbl) = (4, 1, 2);
        let bam = build_bam(wl, hbl, vbl).unwrap();
        let r = exhaustive_error(&NetlistOp::new(&bam).unwrap(), &mul, wl).unwrap();
        // with all-ones operands every omitted partial product is present
        let omitted: u64 = (0..wl)
            .flat_map(|j| (0..wl).map(move |i| (i, j)))
            .filter(|&(i, j)| !(j >= hbl && i + j >= vbl))
            .map(|(i, j)| 1u64 << (i + j))
            .sum();
        assert_eq!(r.max_abs, omitted as f64);
        let model = |a, b| bam_value(a, b, wl, hbl, vbl).unwrap();
        assert_eq!(exhaustive_error(&model, &mul, wl).unwrap(), r);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_consistent() {
        let model = |a, b| loa_value(a, b, 4, 2).unwrap();
        let ex = exhaustive_error(&model, &add, 4).unwrap();
        let d = InputDistribution::UniformFullRange;
        let a = monte_carlo_error(&model, &add, 4, &d, 100_000, 3).unwrap();
        let b = monte_carlo_error(&model, &add, 4, &d, 100_000, 3).unwrap();
        assert_eq!(a, b);
        let sigma = (a.aev / a.count as f64).sqrt();
        assert!((a.mae - ex.mae).abs() <= 3.0 * sigma, "{} vs {}", a.mae, ex.mae);
    }

    #[test]
    fn distributions_validate_and_sample_in_range() {
        assert!(InputDistribution::FixedList { pairs: vec![] }.validate(4).is_err());
        assert!(InputDistribution::FixedList { pairs: vec![(16, 0)] }
            .validate(4)
            .is_err());
        assert!(InputDistribution::SeededRandom { count: 0 }.validate(4).is_err());
        let pool = InputDistribution::SeededRandom { count: 3 };
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..200 {
            let (a, b) = pool.sample(5, 1, i);
            assert!(a < 32 && b < 32);
            seen.insert((a, b));
        }
        assert!(seen.len() <= 3);
        let list = InputDistribution::FixedList {
            pairs: vec![(1, 2), (3, 4)],
        };
        assert!((0..50).all(|i| [(1, 2), (3, 4)].contains(&list.sample(4, 0, i))));
    }

    #[test]
    fn fault_error_zero_probability_is_zero() {
        let n = build_rca(8).unwrap();
        let r = fault_error(
            &n,
            &FaultConfig::new(0.0, 500, 1),
            &InputDistribution::UniformFullRange,
            &add,
        )
        .unwrap();
        assert_eq!(r.mse, 0.0);
        assert_eq!(r.count, 500);
    }

    #[test]
    fn rrca_unprotected_faults_stay_bounded() {
        let n = build_rrca(8, 3).unwrap();
        let cfg = FaultConfig::new(0.05, 20_000, 11)
            .with_voters_fault_free(true)
            .with_region(n.nodes_tagged(TAG_UNPROTECTED));
        let r = fault_error(&n, &cfg, &InputDistribution::UniformFullRange, &add).unwrap();
        assert!(r.max_abs < 16.0, "{}", r.max_abs);
        assert!(r.mse > 0.0);
    }

    #[test]
    fn tmr_beats_unprotected() {
        let d = InputDistribution::UniformFullRange;
        let tmr = build_rrca(8, 0).unwrap();
        let rca = build_rca(8).unwrap();
        let cfg = FaultConfig::new(1e-3, 20_000, 5).with_voters_fault_free(true);
        let a = fault_error(&tmr, &cfg, &d, &add).unwrap();
        let b = fault_error(&rca, &cfg, &d, &add).unwrap();
        assert!(a.mse < b.mse, "{} vs {}", a.mse, b.mse);
    }

    #[test]
    fn improvement_examples() {
        assert_eq!(round_half_away(improvement(4000.0, 2586.0).unwrap()), 55);
        assert_eq!(improvement(4000.0, 2586.0).unwrap().trunc(), 54.0);
        assert_eq!(improvement(171072.0, 64860.0).unwrap().trunc(), 163.0);
        assert_eq!(improvement(7.0, 7.0).unwrap(), 0.0);
        assert!(improvement(1.0, 0.0).is_err());
        assert!(improvement(1.0, -2.0).is_err());
        let i = improvement_costs(&CostReport::new(10.0, 4.0), &CostReport::new(5.0, 4.0)).unwrap();
        assert_eq!((i.area, i.delay, i.adp), (100.0, 0.0, 100.0));
    }
}
