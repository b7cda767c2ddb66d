// SPDX-License-Identifier: Apache-2.0

use super::{GateKind, Netlist, NetlistBuilder, NodeId, TAG_VOTER};

/// Builds a 2-of-3 majority voter `(a&b) | (a&c) | (b&c)` from 3 AND2 + 2 OR2,
/// every gate tagged as a voter.
pub(crate) fn majority(b: &mut NetlistBuilder, x: [NodeId; 3], site: &str) -> NodeId {
    let tag = || Some(TAG_VOTER.to_string());
    let ab = b.gate_tagged(GateKind::And2, &[x[0], x[1]], format!("{site}.ab"), tag());
    let ac = b.gate_tagged(GateKind::And2, &[x[0], x[2]], format!("{site}.ac"), tag());
    let bc = b.gate_tagged(GateKind::And2, &[x[1], x[2]], format!("{site}.bc"), tag());
    let o1 = b.gate_tagged(GateKind::Or2, &[ab, ac], format!("{site}.o1"), tag());
    b.gate_tagged(GateKind::Or2, &[o1, bc], format!("{site}.o2"), tag())
}

/// Whole-module triple modular redundancy.
///
/// The result holds three replicas sharing the primary inputs (gates of
/// replica `r` occupy positions `r*G..(r+1)*G` of the gate list, in the
/// original order) followed by one majority voter per output bit.
pub fn triplicate_with_vote(netlist: &Netlist) -> Netlist {
    let mut b = NetlistBuilder::new();
    for bus in netlist.inputs() {
        b.input(&bus.name, bus.width);
    }
    let n_in = netlist.input_bits();
    let mut maps: Vec<Vec<NodeId>> = Vec::with_capacity(3);
    for r in 0..3 {
        let mut map: Vec<NodeId> = (0..netlist.num_nodes() as u32).map(NodeId).collect();
        for g in netlist.gates() {
            let ins: Vec<NodeId> = g.fan_in().iter().map(|n| map[n.index()]).collect();
            let site = match &g.site {
                Some(s) => format!("r{r}.{s}"),
                None => format!("r{r}.#{}", g.id.0),
            };
            let id = b.gate_tagged(g.kind, &ins, site, g.tag.clone());
            map[g.id.index()] = id;
        }
        maps.push(map);
    }
    for bus in netlist.outputs() {
        let bits = bus
            .bits
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let rep = |r: usize| if n.0 < n_in { *n } else { maps[r][n.index()] };
                majority(&mut b, [rep(0), rep(1), rep(2)], &format!("vote.{}{i}", bus.name))
            })
            .collect();
        b.output(&bus.name, bits);
    }
    b.finish().expect("triplication preserves validity")
}
