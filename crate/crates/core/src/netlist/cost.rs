// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{GateKind, Netlist};

/// Per-kind area and delay weights.
///
/// Area is a weighted gate count and delay a weighted topological depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    area: [f64; 7],
    delay: [f64; 7],
}

impl Default for CostWeights {
    fn default() -> Self {
        // AND2 OR2 XOR2 NOT BUF CONST0 CONST1
        let w = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
        CostWeights { area: w, delay: w }
    }
}

impl CostWeights {
    pub fn area(&self, kind: GateKind) -> f64 {
        self.area[kind.index()]
    }

    pub fn delay(&self, kind: GateKind) -> f64 {
        self.delay[kind.index()]
    }

    pub fn with_area(mut self, kind: GateKind, w: f64) -> Self {
        assert!(w >= 0.0, "area weight must be non-negative");
        self.area[kind.index()] = w;
        self
    }

    pub fn with_delay(mut self, kind: GateKind, w: f64) -> Self {
        assert!(w >= 0.0, "delay weight must be non-negative");
        self.delay[kind.index()] = w;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub area: f64,
    pub delay: f64,
    pub adp: f64,
}

impl CostReport {
    pub fn new(area: f64, delay: f64) -> Self {
        CostReport {
            area,
            delay,
            adp: area * delay,
        }
    }
}

/// Area is the weighted gate count; delay the longest weighted path from any
/// primary input to any output bit.
pub fn cost(netlist: &Netlist, weights: &CostWeights) -> CostReport {
    let mut arrival = vec![0.0f64; netlist.num_nodes().max(1)];
    let mut area = 0.0;
    for g in netlist.gates() {
        area += weights.area(g.kind);
        let start = g.fan_in().iter().map(|n| arrival[n.index()]).fold(0.0, f64::max);
        arrival[g.id.index()] = start + weights.delay(g.kind);
    }
    let delay = netlist
        .outputs()
        .iter()
        .flat_map(|b| b.bits.iter())
        .map(|n| arrival[n.index()])
        .fold(0.0, f64::max);
    CostReport::new(area, delay)
}
