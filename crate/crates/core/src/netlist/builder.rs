// SPDX-License-Identifier: Apache-2.0

use super::{GateDesc, GateKind, InputBus, Netlist, NetlistDesc, NetlistError, NodeId, OutputBus};

/// Incremental netlist construction with ids assigned in creation order.
///
/// All input buses must be declared before the first gate.
#[derive(Debug, Default)]
pub struct NetlistBuilder {
    desc: NetlistDesc,
    input_bits: u32,
    tag: Option<String>,
    const0: Option<NodeId>,
}

impl NetlistBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, name: &str, width: u32) -> Vec<NodeId> {
        assert!(self.desc.gates.is_empty(), "inputs must be declared before gates");
        let first = self.input_bits;
        self.input_bits += width;
        self.desc.inputs.push(InputBus {
            name: name.to_string(),
            width,
        });
        (first..first + width).map(NodeId).collect()
    }

    /// Tag applied to every gate created until the next call.
    pub fn set_tag(&mut self, tag: Option<&str>) {
        self.tag = tag.map(str::to_string);
    }

    pub fn gate(&mut self, kind: GateKind, inputs: &[NodeId], site: impl Into<String>) -> NodeId {
        let tag = self.tag.clone();
        self.gate_tagged(kind, inputs, site, tag)
    }

    pub fn gate_tagged(
        &mut self,
        kind: GateKind,
        inputs: &[NodeId],
        site: impl Into<String>,
        tag: Option<String>,
    ) -> NodeId {
        debug_assert_eq!(inputs.len(), kind.arity());
        let id = NodeId(self.input_bits + self.desc.gates.len() as u32);
        self.desc.gates.push(GateDesc {
            id,
            kind,
            inputs: inputs.to_vec(),
            tag,
            site: Some(site.into()),
        });
        id
    }

    pub fn and2(&mut self, a: NodeId, b: NodeId, site: impl Into<String>) -> NodeId {
        self.gate(GateKind::And2, &[a, b], site)
    }

    pub fn or2(&mut self, a: NodeId, b: NodeId, site: impl Into<String>) -> NodeId {
        self.gate(GateKind::Or2, &[a, b], site)
    }

    pub fn xor2(&mut self, a: NodeId, b: NodeId, site: impl Into<String>) -> NodeId {
        self.gate(GateKind::Xor2, &[a, b], site)
    }

    pub fn not(&mut self, a: NodeId, site: impl Into<String>) -> NodeId {
        self.gate(GateKind::Not, &[a], site)
    }

    /// Shared constant-zero node, created untagged on first use.
    pub fn const0(&mut self) -> NodeId {
        if let Some(id) = self.const0 {
            return id;
        }
        let id = self.gate_tagged(GateKind::Const0, &[], "const0", None);
        self.const0 = Some(id);
        id
    }

    pub fn output(&mut self, name: &str, bits: Vec<NodeId>) {
        self.desc.outputs.push(OutputBus {
            name: name.to_string(),
            bits,
        });
    }

    pub fn gate_count(&self) -> usize {
        self.desc.gates.len()
    }

    pub fn finish(self) -> Result<Netlist, NetlistError> {
        Netlist::try_from(self.desc)
    }
}
