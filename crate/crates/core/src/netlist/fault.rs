// SPDX-License-Identifier: Apache-2.0

//! Transient-fault injection.
//!
//! After each gate computes its output, the bit is flipped independently with
//! probability `p_err`. The draw for a gate is a hash of
//! `(base_seed, stream, site)`, where `site` is the gate's structural site name
//! (or its node id when it has none), so a trial is reproducible in isolation
//! and equivalent nodes of related netlists see the same random events.
//! Primary inputs and constant ties never flip.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Netlist, NetlistError, NodeId};
use crate::rng::{self, domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    pub p_err: f64,
    pub trials: u64,
    pub base_seed: u64,
    #[serde(default)]
    pub voters_fault_free: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_region: Option<BTreeSet<NodeId>>,
}

#[derive(Debug, Error)]
pub enum FaultError {
    #[error("p_err must lie in [0, 1], got {0}")]
    Probability(f64),
    #[error("trial count must be positive")]
    NoTrials,
    #[error("trial index {index} out of range for {trials} trials")]
    TrialOutOfRange { index: u64, trials: u64 },
    #[error("fault region node {0} is not a gate output")]
    RegionNode(NodeId),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

impl FaultConfig {
    pub fn new(p_err: f64, trials: u64, base_seed: u64) -> Self {
        FaultConfig {
            p_err,
            trials,
            base_seed,
            voters_fault_free: false,
            fault_region: None,
        }
    }

    pub fn with_voters_fault_free(mut self, on: bool) -> Self {
        self.voters_fault_free = on;
        self
    }

    pub fn with_region<I: IntoIterator<Item = NodeId>>(mut self, nodes: I) -> Self {
        self.fault_region = Some(nodes.into_iter().collect());
        self
    }

    pub fn validate(&self) -> Result<(), FaultError> {
        if !(0.0..=1.0).contains(&self.p_err) || self.p_err.is_nan() {
            return Err(FaultError::Probability(self.p_err));
        }
        if self.trials == 0 {
            return Err(FaultError::NoTrials);
        }
        Ok(())
    }

    pub fn validate_for(&self, netlist: &Netlist) -> Result<(), FaultError> {
        self.validate()?;
        if let Some(region) = &self.fault_region {
            if let Some(bad) = region.iter().find(|n| !netlist.is_gate_node(**n)) {
                return Err(FaultError::RegionNode(*bad));
            }
        }
        Ok(())
    }
}

/// A fault configuration compiled against one netlist.
#[derive(Debug, Clone)]
pub struct FaultPlan {
    seed_key: u64,
    /// `None` flips every eligible node.
    threshold: Option<u64>,
    eligible: Vec<bool>,
    any: bool,
}

impl FaultPlan {
    pub fn new(netlist: &Netlist, cfg: &FaultConfig) -> Result<Self, FaultError> {
        cfg.validate_for(netlist)?;
        let eligible: Vec<bool> = netlist
            .gates()
            .iter()
            .map(|g| {
                !g.kind.is_const()
                    && !(cfg.voters_fault_free && g.is_voter())
                    && cfg.fault_region.as_ref().is_none_or(|r| r.contains(&g.id))
            })
            .collect();
        let threshold = rng::probability_threshold(cfg.p_err);
        let any = threshold != Some(0) && eligible.iter().any(|&e| e);
        Ok(FaultPlan {
            seed_key: rng::combine(domain::FAULT, cfg.base_seed),
            threshold,
            eligible,
            any,
        })
    }

    /// True when no node can ever flip under this plan.
    pub fn is_inert(&self) -> bool {
        !self.any
    }

    #[inline]
    fn stream_key(&self, stream: u64) -> u64 {
        rng::combine(self.seed_key, stream)
    }

    /// Whether gate `index` flips in the given stream.
    #[inline]
    fn flips(&self, stream_key: u64, index: usize, site_key: u64) -> bool {
        self.eligible[index]
            && match self.threshold {
                None => true,
                Some(t) => rng::mix64(stream_key ^ site_key) < t,
            }
    }
}

/// Reusable evaluator holding scratch buffers; optionally injects faults.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    netlist: &'a Netlist,
    plan: Option<FaultPlan>,
    values: Vec<u64>,
    out: Vec<u64>,
}

impl<'a> Simulator<'a> {
    pub fn new(netlist: &'a Netlist, plan: Option<FaultPlan>) -> Self {
        Simulator {
            netlist,
            plan: plan.filter(|p| !p.is_inert()),
            values: vec![0; netlist.num_nodes().max(1)],
            out: vec![0; netlist.outputs().len()],
        }
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.netlist
    }

    /// Evaluates one input vector; `stream` selects the fault draws.
    ///
    /// Input values are assumed to fit their buses.
    pub fn run(&mut self, inputs: &[u64], stream: u64) -> &[u64] {
        let n = self.netlist;
        n.load_scalar(inputs, &mut self.values);
        match &self.plan {
            None => n.propagate(&mut self.values, |_| 0),
            Some(plan) => {
                let key = plan.stream_key(stream);
                let sites = n.site_keys();
                n.propagate(&mut self.values, |gi| plan.flips(key, gi, sites[gi]) as u64);
            }
        }
        for (slot, bus) in self.out.iter_mut().zip(n.outputs()) {
            *slot = bus
                .bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, b)| acc | ((self.values[b.index()] & 1) << i));
        }
        &self.out
    }
}

/// Evaluates `netlist` with transient faults for one trial.
pub fn inject_evaluate(
    netlist: &Netlist,
    inputs: &[u64],
    cfg: &FaultConfig,
    trial_index: u64,
) -> Result<Vec<u64>, FaultError> {
    if trial_index >= cfg.trials {
        return Err(FaultError::TrialOutOfRange {
            index: trial_index,
            trials: cfg.trials,
        });
    }
    netlist.check_inputs(inputs)?;
    let plan = FaultPlan::new(netlist, cfg)?;
    let mut sim = Simulator::new(netlist, Some(plan));
    Ok(sim.run(inputs, trial_index).to_vec())
}
