// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{AppError, Fixed, FixedPointFormat};
use crate::blocks::BlockSpec;
use crate::netlist::{cost, CostReport, CostWeights, FaultConfig, FaultPlan, Netlist, Simulator};
use crate::rng;

/// Which arithmetic blocks a datapath uses, and optionally how they fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArithConfig {
    /// Accumulating adder; its width is the accumulator width.
    pub adder: BlockSpec,
    /// Magnitude multiplier; its width must equal the format word length.
    pub multiplier: BlockSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultConfig>,
}

/// Smallest accumulator width that cannot overflow for `terms` full-scale products.
pub fn min_acc_width(wl: u32, terms: usize) -> u32 {
    min_acc_width_shifted(wl, 0, terms)
}

/// As [`min_acc_width`] when every product is shifted right by `shift` before accumulation.
pub fn min_acc_width_shifted(wl: u32, shift: u32, terms: usize) -> u32 {
    (2 * wl).saturating_sub(shift).max(1) + (terms.max(1) as u64).next_power_of_two().trailing_zeros()
}

impl ArithConfig {
    pub fn precise(wl: u32, acc_width: u32) -> Self {
        ArithConfig {
            adder: BlockSpec::Rca { wl: acc_width },
            multiplier: BlockSpec::ArrayMult { wl },
            fault: None,
        }
    }

    /// LOA accumulation with a broken-array multiplier.
    pub fn bic(wl: u32, acc_width: u32, lpl: u32, hbl: u32, vbl: u32) -> Self {
        ArithConfig {
            adder: BlockSpec::loa(acc_width, lpl),
            multiplier: BlockSpec::Bam { wl, hbl, vbl },
            fault: None,
        }
    }

    /// Relaxed-TMR adder and multiplier.
    pub fn rtmr(wl: u32, acc_width: u32, aul: u32, hul: u32, vul: u32) -> Self {
        ArithConfig {
            adder: BlockSpec::Rrca { wl: acc_width, aul },
            multiplier: BlockSpec::Ram { wl, hul, vul },
            fault: None,
        }
    }

    /// Fully triplicated adder and multiplier.
    pub fn full_tmr(wl: u32, acc_width: u32) -> Self {
        ArithConfig::rtmr(wl, acc_width, 0, 0, 0)
    }

    pub fn with_fault(mut self, fault: FaultConfig) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn acc_width(&self) -> u32 {
        self.adder.width()
    }

    /// Checks the blocks against a format, a term count and the product shift.
    pub fn validate(&self, format: &FixedPointFormat, terms: usize, shift: u32) -> Result<(), AppError> {
        format.validate()?;
        self.adder.validate()?;
        self.multiplier.validate()?;
        if !self.adder.is_adder() {
            return Err(AppError::Config(format!("{} is not an adder", self.adder.family())));
        }
        if self.multiplier.is_adder() {
            return Err(AppError::Config(format!(
                "{} is not a multiplier",
                self.multiplier.family()
            )));
        }
        if self.multiplier.width() != format.wl {
            return Err(AppError::Config(format!(
                "multiplier width {} differs from format word length {}",
                self.multiplier.width(),
                format.wl
            )));
        }
        if shift > 2 * format.wl {
            return Err(AppError::Config(format!("product shift {shift} exceeds 2·wl")));
        }
        let need = min_acc_width_shifted(format.wl, shift, terms);
        if self.acc_width() < need {
            return Err(AppError::Config(format!(
                "accumulator width {} below {need} needed for {terms} terms at wl={}",
                self.acc_width(),
                format.wl
            )));
        }
        if let Some(f) = &self.fault {
            f.validate()?;
            if f.fault_region.is_some() {
                return Err(AppError::Config("fault regions are not supported in datapaths".into()));
            }
        }
        Ok(())
    }

    /// Cost of one MAC unit: the multiplier followed by the accumulating adder.
    pub fn mac_cost(&self, weights: &CostWeights) -> Result<CostReport, AppError> {
        let m = cost(&self.multiplier.build()?, weights);
        let a = cost(&self.adder.build()?, weights);
        Ok(CostReport::new(m.area + a.area, m.delay + a.delay))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MacResult {
    /// Signed result in the product scale after the shift.
    pub value: i64,
    /// An accumulator overflowed and was clamped.
    pub saturated: bool,
}

struct Faulty {
    mult: Netlist,
    add: Netlist,
    mult_plan: FaultPlan,
    add_plan: FaultPlan,
}

/// A compiled [`ArithConfig`]. Without faults the blocks run through their
/// closed-form models; with faults every block evaluation goes through the
/// gate-level simulator with its own fault stream.
pub struct Datapath {
    cfg: ArithConfig,
    format: FixedPointFormat,
    shift: u32,
    faulty: Option<Faulty>,
}

impl Datapath {
    /// `shift` rescales every product before accumulation (normally `format.frac`).
    pub fn new(cfg: &ArithConfig, format: FixedPointFormat, shift: u32, max_terms: usize) -> Result<Self, AppError> {
        cfg.validate(&format, max_terms, shift)?;
        let faulty = match &cfg.fault {
            Some(f) if f.p_err > 0.0 => {
                let mult = cfg.multiplier.build()?;
                let add = cfg.adder.build()?;
                let mult_plan = FaultPlan::new(&mult, f)?;
                let add_plan = FaultPlan::new(&add, f)?;
                Some(Faulty {
                    mult,
                    add,
                    mult_plan,
                    add_plan,
                })
            }
            _ => None,
        };
        Ok(Datapath {
            cfg: cfg.clone(),
            format,
            shift,
            faulty,
        })
    }

    pub fn config(&self) -> &ArithConfig {
        &self.cfg
    }

    pub fn format(&self) -> &FixedPointFormat {
        &self.format
    }

    pub fn is_faulty(&self) -> bool {
        self.faulty.is_some()
    }

    /// Sign-magnitude multiply-accumulate: magnitudes go through the
    /// multiplier (weight on operand `a`, value on operand `b`, so the rows a
    /// broken array drops are the value's low bits), then positive and negative products are summed into two
    /// separate accumulators by the adder, and the result is their exact
    /// difference. `key` selects the fault streams and is ignored when the
    /// datapath is fault-free.
    pub fn mac(&self, values: &[Fixed], weights: &[Fixed], key: u64) -> Result<MacResult, AppError> {
        if values.len() != weights.len() || values.is_empty() {
            return Err(AppError::Shape(format!(
                "mac needs equal non-empty lists, got {} values and {} weights",
                values.len(),
                weights.len()
            )));
        }
        let max = self.format.max_magnitude();
        if let Some(v) = values.iter().chain(weights).find(|v| v.mag > max) {
            return Err(AppError::Shape(format!(
                "magnitude {} exceeds {}-bit format",
                v.mag, self.format.wl
            )));
        }
        Ok(match &self.faulty {
            None => self.mac_functional(values, weights),
            Some(f) => self.mac_faulty(f, values, weights, key),
        })
    }

    /// Sums non-negative values through the adder into one saturating accumulator.
    pub fn sum(&self, values: &[u64], key: u64) -> Result<MacResult, AppError> {
        let cap = (1u64 << self.acc_width()) - 1;
        if let Some(v) = values.iter().find(|&&v| v > cap) {
            return Err(AppError::Shape(format!(
                "{v} does not fit the {}-bit accumulator",
                self.acc_width()
            )));
        }
        let mut sim = self
            .faulty
            .as_ref()
            .map(|f| Simulator::new(&f.add, Some(f.add_plan.clone())));
        let mut acc = 0u64;
        let mut saturated = false;
        for (t, &v) in values.iter().enumerate() {
            let s = match &mut sim {
                None => self.cfg.adder.value(acc, v).expect("validated operands"),
                Some(sim) => sim.run(&[acc, v], rng::combine(key, t as u64))[0],
            };
            saturated |= s > cap;
            acc = s.min(cap);
        }
        Ok(MacResult {
            value: acc as i64,
            saturated,
        })
    }

    fn mac_functional(&self, values: &[Fixed], weights: &[Fixed]) -> MacResult {
        let w = self.acc_width();
        let cap = (1u64 << w) - 1;
        let mut acc = [0u64; 2];
        let mut saturated = false;
        for (x, y) in values.iter().zip(weights) {
            let p = self.cfg.multiplier.value(y.mag, x.mag).expect("validated operands") >> self.shift;
            let slot = &mut acc[(x.neg != y.neg) as usize];
            let s = self.cfg.adder.value(*slot, p).expect("validated operands");
            if s > cap {
                saturated = true;
                *slot = cap;
            } else {
                *slot = s;
            }
        }
        MacResult {
            value: acc[0] as i64 - acc[1] as i64,
            saturated,
        }
    }

    fn mac_faulty(&self, f: &Faulty, values: &[Fixed], weights: &[Fixed], key: u64) -> MacResult {
        let w = self.acc_width();
        let cap = (1u64 << w) - 1;
        let mut mult = Simulator::new(&f.mult, Some(f.mult_plan.clone()));
        let mut add = Simulator::new(&f.add, Some(f.add_plan.clone()));
        let mut acc = [0u64; 2];
        let mut saturated = false;
        for (t, (x, y)) in values.iter().zip(weights).enumerate() {
            let t = t as u64;
            let p = mult.run(&[y.mag, x.mag], rng::combine(key, 2 * t))[0] >> self.shift;
            // a faulty product can exceed the accumulator range only through the top bits
            let p = p.min(cap);
            let slot = &mut acc[(x.neg != y.neg) as usize];
            let s = add.run(&[*slot, p], rng::combine(key, 2 * t + 1))[0];
            if s > cap {
                saturated = true;
                *slot = cap;
            } else {
                *slot = s;
            }
        }
        MacResult {
            value: acc[0] as i64 - acc[1] as i64,
            saturated,
        }
    }

    fn acc_width(&self) -> u32 {
        self.cfg.acc_width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{bam_value, loa_value};
    use crate::rng::uniform_bits;

    fn ints(v: &[i64]) -> Vec<Fixed> {
        v.iter().map(|&x| Fixed::from_raw(x)).collect()
    }

    #[test]
    fn precise_integer_mac() {
        let f = FixedPointFormat::new(4, 0).unwrap();
        let cfg = ArithConfig::precise(4, min_acc_width(4, 3));
        let d = Datapath::new(&cfg, f, 0, 3).unwrap();
        let r = d.mac(&ints(&[1, 2, 3]), &ints(&[1, 1, 1]), 0).unwrap();
        assert_eq!(
            r,
            MacResult {
                value: 6,
                saturated: false
            }
        );
        let r = d.mac(&ints(&[1, -2, 3]), &ints(&[5, 1, -4]), 0).unwrap();
        assert_eq!(r.value, 5 - 2 - 12);
    }

    #[test]
    fn acc_width_rule() {
        assert_eq!(min_acc_width(9, 65), 25);
        assert_eq!(min_acc_width(4, 1), 8);
        assert_eq!(min_acc_width(4, 4), 10);
        let f = FixedPointFormat::new(4, 0).unwrap();
        assert!(ArithConfig::precise(4, 9).validate(&f, 3, 0).is_err());
        assert!(ArithConfig::precise(5, 12).validate(&f, 3, 0).is_err());
        assert!(ArithConfig::precise(4, 6).validate(&f, 3, 4).is_ok());
        assert_eq!(min_acc_width_shifted(9, 9, 65), 16);
    }

    #[test]
    fn saturation_is_flagged() {
        let f = FixedPointFormat::new(4, 0).unwrap();
        // accumulator sized for a single term
        let cfg = ArithConfig::precise(4, 8);
        let d = Datapath::new(&cfg, f, 0, 1).unwrap();
        let r = d.mac(&ints(&[15, 15, 15]), &ints(&[15, 15, 15]), 0).unwrap();
        assert!(r.saturated);
        assert_eq!(r.value, 255);
    }

    #[test]
    fn bic_mac_replays_block_models() {
        let f = FixedPointFormat::new(9, 0).unwrap();
        let acc = min_acc_width(9, 16);
        let d = Datapath::new(&ArithConfig::bic(9, acc, 2, 2, 6), f, 0, 16).unwrap();
        let xs: Vec<i64> = (0..16).map(|i| uniform_bits(3, 0, i, 9) as i64 - 255).collect();
        let ws: Vec<i64> = (0..16).map(|i| uniform_bits(3, 1, i, 9) as i64 - 255).collect();
        let got = d.mac(&ints(&xs), &ints(&ws), 0).unwrap();
        let (mut pos, mut neg) = (0u64, 0u64);
        for (x, w) in xs.iter().zip(&ws) {
            let p = bam_value(w.unsigned_abs(), x.unsigned_abs(), 9, 2, 6).unwrap();
            let slot = if (*x < 0) != (*w < 0) { &mut neg } else { &mut pos };
            *slot = loa_value(*slot, p, acc, 2).unwrap();
        }
        assert_eq!(got.value, pos as i64 - neg as i64);
        let exact: i64 = xs.iter().zip(&ws).map(|(x, w)| x * w).sum();
        assert_ne!(got.value, exact);
    }

    #[test]
    fn degenerate_bic_equals_precise() {
        let f = FixedPointFormat::new(8, 4).unwrap();
        let acc = min_acc_width(8, 8);
        let p = Datapath::new(&ArithConfig::precise(8, acc), f, 4, 8).unwrap();
        let b = Datapath::new(&ArithConfig::bic(8, acc, 0, 0, 0), f, 4, 8).unwrap();
        for k in 0..2000u64 {
            let xs: Vec<Fixed> = (0..8)
                .map(|i| Fixed::from_raw(uniform_bits(k, 7, i, 9) as i64 - 256))
                .collect();
            let ws: Vec<Fixed> = (0..8)
                .map(|i| Fixed::from_raw(uniform_bits(k, 8, i, 9) as i64 - 256))
                .collect();
            let xs: Vec<Fixed> = xs
                .into_iter()
                .map(|v| Fixed {
                    mag: v.mag.min(255),
                    ..v
                })
                .collect();
            let ws: Vec<Fixed> = ws
                .into_iter()
                .map(|v| Fixed {
                    mag: v.mag.min(255),
                    ..v
                })
                .collect();
            assert_eq!(p.mac(&xs, &ws, k).unwrap(), b.mac(&xs, &ws, k).unwrap());
        }
    }

    #[test]
    fn zero_probability_faults_equal_precise() {
        let f = FixedPointFormat::new(6, 0).unwrap();
        let acc = min_acc_width(6, 4);
        let p = Datapath::new(&ArithConfig::precise(6, acc), f, 0, 4).unwrap();
        let r = Datapath::new(
            &ArithConfig::rtmr(6, acc, 3, 2, 4).with_fault(FaultConfig::new(0.0, 1, 9)),
            f,
            0,
            4,
        )
        .unwrap();
        assert!(!r.is_faulty());
        let xs = ints(&[63, -7, 12, 0]);
        let ws = ints(&[-63, 5, 30, 9]);
        assert_eq!(p.mac(&xs, &ws, 1).unwrap(), r.mac(&xs, &ws, 1).unwrap());
    }

    #[test]
    fn faulty_mac_is_deterministic_and_noisy() {
        let f = FixedPointFormat::new(6, 0).unwrap();
        let acc = min_acc_width(6, 4);
        let cfg = ArithConfig::precise(6, acc).with_fault(FaultConfig::new(0.002, 1, 4));
        let d = Datapath::new(&cfg, f, 0, 4).unwrap();
        let xs = ints(&[63, -7, 12, 1]);
        let ws = ints(&[-63, 5, 30, 9]);
        let exact = -63 * 63 - 35 + 360 + 9;
        let runs: Vec<i64> = (0..200).map(|k| d.mac(&xs, &ws, k).unwrap().value).collect();
        let again: Vec<i64> = (0..200).map(|k| d.mac(&xs, &ws, k).unwrap().value).collect();
        assert_eq!(runs, again);
        assert!(runs.iter().any(|&v| v != exact));
        assert!(runs.contains(&exact));
    }

    #[test]
    fn sign_symmetry() {
        let f = FixedPointFormat::new(8, 0).unwrap();
        let acc = min_acc_width(8, 5);
        let d = Datapath::new(&ArithConfig::precise(8, acc), f, 0, 5).unwrap();
        let xs = ints(&[3, -100, 255, 17, -1]);
        let ws = ints(&[200, 9, -4, 0, 77]);
        let neg: Vec<Fixed> = ws.iter().map(|w| w.negate()).collect();
        assert_eq!(d.mac(&xs, &ws, 0).unwrap().value, -d.mac(&xs, &neg, 0).unwrap().value);
    }

    #[test]
    fn mac_cost_of_full_tmr_exceeds_twice_rtmr() {
        let w = CostWeights::default();
        let acc = min_acc_width(9, 65);
        let full = ArithConfig::full_tmr(9, acc).mac_cost(&w).unwrap();
        let relaxed = ArithConfig::rtmr(9, acc, 5, 8, 17).mac_cost(&w).unwrap();
        assert!(full.area / relaxed.area > 2.0, "{} / {}", full.area, relaxed.area);
    }
}
