// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlists.
//!
//! A [`Netlist`] is an immutable DAG of two-input boolean gates with named
//! input and output buses. Node ids are dense: primary-input bits occupy
//! `0..input_bits` (bus by bus, LSB first) and every gate output owns one of
//! the following ids. The same structure is used for fault-free evaluation,
//! transient-fault injection and cost estimation.
//!
//! The JSON interchange form is [`NetlistDesc`]:
//!
//! ```text
//! {"inputs":[{"name":"a","width":4}],
//!  "gates":[{"id":4,"kind":"AND2","in":[0,1],"tag":"voter"}],
//!  "outputs":[{"name":"y","bits":[4]}]}
//! ```

mod builder;
mod cost;
mod fault;
pub(crate) mod tmr;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub use builder::NetlistBuilder;
pub use cost::{cost, CostReport, CostWeights};
pub use fault::{inject_evaluate, FaultConfig, FaultError, FaultPlan, Simulator};
pub use tmr::triplicate_with_vote;

/// Tag carried by majority-voter gates.
pub const TAG_VOTER: &str = "voter";
/// Tag carried by gates of an intentionally unprotected (fault-probable) region.
pub const TAG_UNPROTECTED: &str = "unprotected";

/// Widest bus accepted by the integer evaluation interface.
pub const MAX_BUS_WIDTH: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And2,
    Or2,
    Xor2,
    Not,
    Buf,
    Const0,
    Const1,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::And2,
        GateKind::Or2,
        GateKind::Xor2,
        GateKind::Not,
        GateKind::Buf,
        GateKind::Const0,
        GateKind::Const1,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::And2 | GateKind::Or2 | GateKind::Xor2 => 2,
            GateKind::Not | GateKind::Buf => 1,
            GateKind::Const0 | GateKind::Const1 => 0,
        }
    }

    pub fn is_const(self) -> bool {
        matches!(self, GateKind::Const0 | GateKind::Const1)
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    /// Bit-parallel evaluation over 64 lanes.
    #[inline]
    fn apply(self, x: u64, y: u64) -> u64 {
        match self {
            GateKind::And2 => x & y,
            GateKind::Or2 => x | y,
            GateKind::Xor2 => x ^ y,
            GateKind::Not => !x,
            GateKind::Buf => x,
            GateKind::Const0 => 0,
            GateKind::Const1 => !0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputBus {
    pub name: String,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDesc {
    pub id: NodeId,
    pub kind: GateKind,
    #[serde(rename = "in", default)]
    pub inputs: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    /// Structural site name; keys the per-node fault draw so that equivalent
    /// nodes of different netlists see the same random events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputBus {
    pub name: String,
    pub bits: Vec<NodeId>,
}

/// Unvalidated netlist in interchange form.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NetlistDesc {
    pub inputs: Vec<InputBus>,
    pub gates: Vec<GateDesc>,
    pub outputs: Vec<OutputBus>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Arity { expected: usize, found: usize },
    DuplicateId,
    CollidesWithInput,
    NotDense,
    TopologicalOrder,
    UndefinedNode,
    DanglingOutput,
    BusWidth,
    DuplicateBusName,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Arity { expected, found } => {
                write!(f, "arity: expected {expected} inputs, found {found}")
            }
            Rule::DuplicateId => f.write_str("duplicate id"),
            Rule::CollidesWithInput => f.write_str("id collides with primary input"),
            Rule::NotDense => f.write_str("ids not dense"),
            Rule::TopologicalOrder => f.write_str("topological order"),
            Rule::UndefinedNode => f.write_str("undefined node"),
            Rule::DanglingOutput => f.write_str("dangling output"),
            Rule::BusWidth => f.write_str("bus width"),
            Rule::DuplicateBusName => f.write_str("duplicate bus name"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: Option<NodeId>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(f, "{n}: {}", self.rule),
            None => write!(f, "{}", self.rule),
        }
    }
}

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("invalid netlist: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("input shape: {0}")]
    InputShape(String),
    #[error("netlist json: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl NetlistDesc {
    pub fn input_bits(&self) -> u32 {
        self.inputs.iter().map(|b| b.width).sum()
    }

    /// Checks every structural invariant; an empty result means the netlist is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut names = HashSet::new();
        for bus in self.inputs.iter() {
            if bus.width == 0 || bus.width > MAX_BUS_WIDTH {
                out.push(Violation {
                    node: None,
                    rule: Rule::BusWidth,
                });
            }
            if !names.insert(bus.name.as_str()) {
                out.push(Violation {
                    node: None,
                    rule: Rule::DuplicateBusName,
                });
            }
        }
        let mut out_names = HashSet::new();
        for bus in self.outputs.iter() {
            if bus.bits.is_empty() || bus.bits.len() > MAX_BUS_WIDTH as usize {
                out.push(Violation {
                    node: None,
                    rule: Rule::BusWidth,
                });
            }
            if !out_names.insert(bus.name.as_str()) {
                out.push(Violation {
                    node: None,
                    rule: Rule::DuplicateBusName,
                });
            }
        }

        let n_in = self.input_bits();
        let n_nodes = n_in as u64 + self.gates.len() as u64;
        let all_ids: HashSet<NodeId> = self.gates.iter().map(|g| g.id).collect();
        let mut defined: HashSet<NodeId> = HashSet::new();
        for g in &self.gates {
            if g.id.0 < n_in {
                out.push(Violation {
                    node: Some(g.id),
                    rule: Rule::CollidesWithInput,
                });
            } else if g.id.0 as u64 >= n_nodes {
                out.push(Violation {
                    node: Some(g.id),
                    rule: Rule::NotDense,
                });
            }
            if g.inputs.len() != g.kind.arity() {
                out.push(Violation {
                    node: Some(g.id),
                    rule: Rule::Arity {
                        expected: g.kind.arity(),
                        found: g.inputs.len(),
                    },
                });
            }
            for &src in &g.inputs {
                let ok = src.0 < n_in || defined.contains(&src);
                if !ok {
                    let rule = if all_ids.contains(&src) {
                        Rule::TopologicalOrder
                    } else {
                        Rule::UndefinedNode
                    };
                    out.push(Violation { node: Some(g.id), rule });
                }
            }
            if !defined.insert(g.id) {
                out.push(Violation {
                    node: Some(g.id),
                    rule: Rule::DuplicateId,
                });
            }
        }
        for bus in &self.outputs {
            for &bit in &bus.bits {
                if bit.0 >= n_in && !defined.contains(&bit) {
                    out.push(Violation {
                        node: Some(bit),
                        rule: Rule::DanglingOutput,
                    });
                }
            }
        }
        out
    }
}

/// A validated gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub id: NodeId,
    pub kind: GateKind,
    pub inputs: [NodeId; 2],
    pub tag: Option<String>,
    pub site: Option<String>,
}

impl Gate {
    pub fn is_voter(&self) -> bool {
        self.tag.as_deref() == Some(TAG_VOTER)
    }

    pub fn fan_in(&self) -> &[NodeId] {
        &self.inputs[..self.kind.arity()]
    }
}

/// Validated, immutable netlist.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    inputs: Vec<InputBus>,
    input_offsets: Vec<u32>,
    input_bits: u32,
    gates: Vec<Gate>,
    outputs: Vec<OutputBus>,
    site_keys: Vec<u64>,
}

impl TryFrom<NetlistDesc> for Netlist {
    type Error = NetlistError;

    fn try_from(desc: NetlistDesc) -> Result<Self, Self::Error> {
        let violations = desc.validate();
        if !violations.is_empty() {
            return Err(NetlistError::Invalid(violations));
        }
        let mut offsets = Vec::with_capacity(desc.inputs.len());
        let mut acc = 0u32;
        for bus in &desc.inputs {
            offsets.push(acc);
            acc += bus.width;
        }
        let gates: Vec<Gate> = desc
            .gates
            .into_iter()
            .map(|g| {
                let mut ins = [NodeId(0); 2];
                for (slot, src) in ins.iter_mut().zip(g.inputs.iter()) {
                    *slot = *src;
                }
                Gate {
                    id: g.id,
                    kind: g.kind,
                    inputs: ins,
                    tag: g.tag,
                    site: g.site,
                }
            })
            .collect();
        let site_keys = gates
            .iter()
            .map(|g| match &g.site {
                Some(s) => rng::hash_str(s),
                None => rng::hash_str(&format!("#{}", g.id.0)),
            })
            .collect();
        Ok(Netlist {
            inputs: desc.inputs,
            input_offsets: offsets,
            input_bits: acc,
            gates,
            outputs: desc.outputs,
            site_keys,
        })
    }
}

impl Netlist {
    pub fn from_json(text: &str) -> Result<Self, NetlistError> {
        let desc: NetlistDesc = serde_json::from_str(text)?;
        Netlist::try_from(desc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_desc()).expect("netlist serialization cannot fail")
    }

    pub fn to_desc(&self) -> NetlistDesc {
        NetlistDesc {
            inputs: self.inputs.clone(),
            gates: self
                .gates
                .iter()
                .map(|g| GateDesc {
                    id: g.id,
                    kind: g.kind,
                    inputs: g.fan_in().to_vec(),
                    tag: g.tag.clone(),
                    site: g.site.clone(),
                })
                .collect(),
            outputs: self.outputs.clone(),
        }
    }

    pub fn inputs(&self) -> &[InputBus] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[OutputBus] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn input_bits(&self) -> u32 {
        self.input_bits
    }

    pub fn num_nodes(&self) -> usize {
        self.input_bits as usize + self.gates.len()
    }

    /// Node ids of the given input bus, LSB first.
    pub fn input_nodes(&self, bus: usize) -> Vec<NodeId> {
        let off = self.input_offsets[bus];
        (0..self.inputs[bus].width).map(|i| NodeId(off + i)).collect()
    }

    pub fn output_bus(&self, name: &str) -> Option<&OutputBus> {
        self.outputs.iter().find(|b| b.name == name)
    }

    /// Gate-output nodes carrying the given tag.
    pub fn nodes_tagged(&self, tag: &str) -> Vec<NodeId> {
        self.gates
            .iter()
            .filter(|g| g.tag.as_deref() == Some(tag))
            .map(|g| g.id)
            .collect()
    }

    pub fn is_gate_node(&self, id: NodeId) -> bool {
        id.0 >= self.input_bits && (id.index()) < self.num_nodes()
    }

    pub(crate) fn site_keys(&self) -> &[u64] {
        &self.site_keys
    }

    fn check_inputs(&self, inputs: &[u64]) -> Result<(), NetlistError> {
        if inputs.len() != self.inputs.len() {
            return Err(NetlistError::InputShape(format!(
                "expected {} input buses, got {}",
                self.inputs.len(),
                inputs.len()
            )));
        }
        for (bus, &v) in self.inputs.iter().zip(inputs) {
            if bus.width < 64 && v >> bus.width != 0 {
                return Err(NetlistError::InputShape(format!(
                    "value {v} does not fit bus {} of width {}",
                    bus.name, bus.width
                )));
            }
        }
        Ok(())
    }

    /// Loads scalar bus values into lane 0 of the value array.
    fn load_scalar(&self, inputs: &[u64], values: &mut [u64]) {
        for (k, (&v, bus)) in inputs.iter().zip(&self.inputs).enumerate() {
            let off = self.input_offsets[k] as usize;
            for i in 0..bus.width as usize {
                values[off + i] = (v >> i) & 1;
            }
        }
    }

    fn collect_scalar(&self, values: &[u64]) -> Vec<u64> {
        self.outputs
            .iter()
            .map(|bus| {
                bus.bits
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, n)| acc | ((values[n.index()] & 1) << i))
            })
            .collect()
    }

    /// Runs one topological pass; `flip(gate_index)` returns a lane mask xored into the gate output.
    #[inline]
    fn propagate<F: FnMut(usize) -> u64>(&self, values: &mut [u64], mut flip: F) {
        for (gi, g) in self.gates.iter().enumerate() {
            let x = values[g.inputs[0].index()];
            let y = values[g.inputs[1].index()];
            values[g.id.index()] = g.kind.apply(x, y) ^ flip(gi);
        }
    }

    /// Fault-free evaluation: one integer per input bus in, one per output bus out.
    pub fn evaluate(&self, inputs: &[u64]) -> Result<Vec<u64>, NetlistError> {
        self.check_inputs(inputs)?;
        let mut values = vec![0u64; self.num_nodes().max(1)];
        self.load_scalar(inputs, &mut values);
        self.propagate(&mut values, |_| 0);
        Ok(self.collect_scalar(&values))
    }

    /// Bit-sliced evaluation of up to 64 input vectors at once.
    ///
    /// `inputs[bus][lane]`; every bus must supply the same number of lanes.
    /// Returns `outputs[bus][lane]`.
    pub fn evaluate_lanes(&self, inputs: &[&[u64]]) -> Result<Vec<Vec<u64>>, NetlistError> {
        if inputs.len() != self.inputs.len() {
            return Err(NetlistError::InputShape(format!(
                "expected {} input buses, got {}",
                self.inputs.len(),
                inputs.len()
            )));
        }
        let lanes = inputs.first().map_or(1, |v| v.len());
        if lanes > 64 || inputs.iter().any(|v| v.len() != lanes) {
            return Err(NetlistError::InputShape(
                "lane count must be equal across buses and at most 64".into(),
            ));
        }
        let mut values = vec![0u64; self.num_nodes().max(1)];
        for (k, (vals, bus)) in inputs.iter().zip(&self.inputs).enumerate() {
            let off = self.input_offsets[k] as usize;
            for (lane, &v) in vals.iter().enumerate() {
                if bus.width < 64 && v >> bus.width != 0 {
                    return Err(NetlistError::InputShape(format!(
                        "value {v} does not fit bus {} of width {}",
                        bus.name, bus.width
                    )));
                }
                for i in 0..bus.width as usize {
                    values[off + i] |= ((v >> i) & 1) << lane;
                }
            }
        }
        self.propagate(&mut values, |_| 0);
        Ok(self
            .outputs
            .iter()
            .map(|bus| {
                (0..lanes)
                    .map(|lane| {
                        bus.bits
                            .iter()
                            .enumerate()
                            .fold(0u64, |acc, (i, n)| acc | (((values[n.index()] >> lane) & 1) << i))
                    })
                    .collect()
            })
            .collect())
    }
}
