// SPDX-License-Identifier: Apache-2.0

//! Array multipliers built from rows of carry-save cells.
//!
//! Cell `(i, j)` handles partial product `a_i & b_j` at weight `i + j`; `j`
//! indexes rows. Row 0 holds only the partial-product AND gates. Every later
//! row adds its partial products into the running sum with a ripple of full
//! adders, cell `(i, j)` consuming the running-sum bit of weight `i + j` and
//! the carry of cell `(i - 1, j)`. Signals that are known to be zero are folded
//! away, so omitted cells vanish together with their AND2 and adder gates.

use super::{check, check_mult_width, check_operands, BlockError};
use crate::netlist::{tmr::majority, Gate, Netlist, NetlistBuilder, NodeId, TAG_UNPROTECTED};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bit {
    Zero,
    Node(NodeId),
}

fn xor(b: &mut NetlistBuilder, x: Bit, y: Bit, site: String) -> Bit {
    match (x, y) {
        (Bit::Zero, o) | (o, Bit::Zero) => o,
        (Bit::Node(p), Bit::Node(q)) => Bit::Node(b.xor2(p, q, site)),
    }
}

fn and(b: &mut NetlistBuilder, x: Bit, y: Bit, site: String) -> Bit {
    match (x, y) {
        (Bit::Node(p), Bit::Node(q)) => Bit::Node(b.and2(p, q, site)),
        _ => Bit::Zero,
    }
}

fn or(b: &mut NetlistBuilder, x: Bit, y: Bit, site: String) -> Bit {
    match (x, y) {
        (Bit::Zero, o) | (o, Bit::Zero) => o,
        (Bit::Node(p), Bit::Node(q)) => Bit::Node(b.or2(p, q, site)),
    }
}

struct CellInputs {
    a: NodeId,
    b: NodeId,
    included: bool,
    first_row: bool,
    sum_in: Bit,
    carry_in: Bit,
}

/// One cell: partial-product AND followed by a zero-folding full adder.
fn cell(b: &mut NetlistBuilder, x: &CellInputs, site: &str) -> (Bit, Bit) {
    let pp = if x.included {
        Bit::Node(b.and2(x.a, x.b, format!("{site}.pp")))
    } else {
        Bit::Zero
    };
    if x.first_row {
        return (pp, Bit::Zero);
    }
    let s1 = xor(b, pp, x.sum_in, format!("{site}.x1"));
    let sum = xor(b, s1, x.carry_in, format!("{site}.x2"));
    let c1 = and(b, pp, x.sum_in, format!("{site}.a1"));
    let c2 = and(b, s1, x.carry_in, format!("{site}.a2"));
    let carry = or(b, c1, c2, format!("{site}.o"));
    (sum, carry)
}

fn build_array<I, P>(wl: u32, included: I, protected: P, tag_unprotected: bool) -> Netlist
where
    I: Fn(u32, u32) -> bool,
    P: Fn(u32, u32) -> bool,
{
    let mut b = NetlistBuilder::new();
    let a = b.input("a", wl);
    let bb = b.input("b", wl);
    let mut acc: Vec<Bit> = Vec::with_capacity(2 * wl as usize);
    for j in 0..wl {
        let mut carry = Bit::Zero;
        for i in 0..wl {
            let w = (i + j) as usize;
            let x = CellInputs {
                a: a[i as usize],
                b: bb[j as usize],
                included: included(i, j),
                first_row: j == 0,
                sum_in: acc.get(w).copied().unwrap_or(Bit::Zero),
                carry_in: carry,
            };
            let (s, c) = if protected(i, j) {
                let reps: Vec<(Bit, Bit)> = (0..3).map(|r| cell(&mut b, &x, &format!("r{r}.c{i}_{j}"))).collect();
                // pass-through wires and folded zeros are shared, not replicated
                let vote = |b: &mut NetlistBuilder, outs: [Bit; 3], tag: &str| match outs {
                    [Bit::Node(n0), Bit::Node(n1), Bit::Node(n2)] if outs[0] != x.sum_in && outs[0] != x.carry_in => {
                        Bit::Node(majority(b, [n0, n1, n2], &format!("vote.c{i}_{j}.{tag}")))
                    }
                    _ => outs[0],
                };
                let s = vote(&mut b, [reps[0].0, reps[1].0, reps[2].0], "s");
                let c = vote(&mut b, [reps[0].1, reps[1].1, reps[2].1], "c");
                (s, c)
            } else {
                if tag_unprotected {
                    b.set_tag(Some(TAG_UNPROTECTED));
                }
                let out = cell(&mut b, &x, &format!("r0.c{i}_{j}"));
                b.set_tag(None);
                out
            };
            if w < acc.len() {
                acc[w] = s;
            } else {
                acc.push(s);
            }
            carry = c;
        }
        if j > 0 {
            acc.push(carry);
        }
    }
    acc.resize(2 * wl as usize, Bit::Zero);
    let bits: Vec<NodeId> = acc
        .into_iter()
        .map(|bit| match bit {
            Bit::Node(n) => n,
            Bit::Zero => b.const0(),
        })
        .collect();
    b.output("prod", bits);
    b.finish().expect("generated netlist is valid")
}

/// Precise `wl × wl` array multiplier with a `2·wl`-bit `prod` output.
pub fn build_array_mult(wl: u32) -> Result<Netlist, BlockError> {
    check_mult_width(wl)?;
    Ok(build_array(wl, |_, _| true, |_, _| false, false))
}

fn check_levels(wl: u32, h: (&'static str, u32), v: (&'static str, u32)) -> Result<(), BlockError> {
    check_mult_width(wl)?;
    check(h.0, h.1, h.1 <= wl, || format!("{} ≤ WL (wl={wl})", h.0.to_uppercase()))?;
    check(v.0, v.1, v.1 < 2 * wl, || {
        format!("{} ≤ 2·WL−1 (wl={wl})", v.0.to_uppercase())
    })
}

/// Whether partial product `(i, j)` survives the break levels.
fn bam_included(i: u32, j: u32, hbl: u32, vbl: u32) -> bool {
    j >= hbl && i + j >= vbl
}

/// Broken-array multiplier: cell `(i, j)` is kept iff `j ≥ hbl` and `i + j ≥ vbl`.
pub fn build_bam(wl: u32, hbl: u32, vbl: u32) -> Result<Netlist, BlockError> {
    check_levels(wl, ("hbl", hbl), ("vbl", vbl))?;
    Ok(build_array(
        wl,
        |i, j| bam_included(i, j, hbl, vbl),
        |_, _| false,
        false,
    ))
}

/// Closed-form model of [`build_bam`].
pub fn bam_value(a: u64, b: u64, wl: u32, hbl: u32, vbl: u32) -> Result<u64, BlockError> {
    check_levels(wl, ("hbl", hbl), ("vbl", vbl))?;
    check_operands(a, b, wl)?;
    let mut sum = 0u64;
    for j in hbl..wl {
        if (b >> j) & 1 == 1 {
            // row j keeps columns i ≥ vbl − j
            let keep = !0u64 << vbl.saturating_sub(j);
            sum += (a & keep) << j;
        }
    }
    Ok(sum)
}

/// Relaxed-TMR array multiplier.
///
/// Cell `(i, j)` stays a single unprotected copy iff `j < hul` or `i + j < vul`;
/// every other cell is triplicated with a voter on each of its outputs.
pub fn build_ram(wl: u32, hul: u32, vul: u32) -> Result<Netlist, BlockError> {
    check_levels(wl, ("hul", hul), ("vul", vul))?;
    Ok(build_array(wl, |_, _| true, |i, j| !(j < hul || i + j < vul), true))
}

/// Cell coordinates `(i, j)` of a multiplier gate, parsed from its site name.
pub fn cell_coordinates(gate: &Gate) -> Option<(u32, u32)> {
    let site = gate.site.as_deref()?;
    let rest = site.split('.').find_map(|part| part.strip_prefix('c'))?;
    let (i, j) = rest.split_once('_')?;
    Some((i.parse().ok()?, j.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{cost, CostWeights, GateKind, TAG_VOTER};

    fn area(n: &Netlist) -> f64 {
        cost(n, &CostWeights::default()).area
    }

    #[test]
    fn array_mult_multiplies() {
        let n = build_array_mult(4).unwrap();
        assert_eq!(n.evaluate(&[7, 9]).unwrap(), vec![63]);
        assert_eq!(n.evaluate(&[15, 15]).unwrap(), vec![225]);
        let one = build_array_mult(1).unwrap();
        assert_eq!(one.evaluate(&[1, 1]).unwrap(), vec![1]);
    }

    #[test]
    fn partial_product_layer_has_wl_squared_ands() {
        for wl in 1..=8 {
            let n = build_array_mult(wl).unwrap();
            let pps = n
                .gates()
                .iter()
                .filter(|g| g.kind == GateKind::And2 && g.site.as_deref().is_some_and(|s| s.ends_with(".pp")))
                .count();
            assert_eq!(pps, (wl * wl) as usize);
        }
    }

    fn bam_brute(a: u64, b: u64, wl: u32, hbl: u32, vbl: u32) -> u64 {
        let mut sum = 0;
        for j in 0..wl {
            for i in 0..wl {
                if bam_included(i, j, hbl, vbl) {
                    sum += (((a >> i) & 1) * ((b >> j) & 1)) << (i + j);
                }
            }
        }
        sum
    }

    #[test]
    fn bam_value_matches_inclusion_set() {
        for (hbl, vbl) in [(0, 0), (1, 2), (2, 6), (3, 1), (4, 7)] {
            for a in 0..16 {
                for b in 0..16 {
                    assert_eq!(bam_value(a, b, 4, hbl, vbl).unwrap(), bam_brute(a, b, 4, hbl, vbl));
                }
            }
        }
    }

    #[test]
    fn bam_traces() {
        assert_eq!(bam_value(3, 3, 4, 0, 2).unwrap(), 4);
        assert_eq!(bam_value(3, 3, 4, 1, 0).unwrap(), 6);
        assert_eq!(bam_value(15, 15, 4, 2, 6).unwrap(), 64);
        let n = build_bam(4, 0, 2).unwrap();
        assert_eq!(n.evaluate(&[3, 3]).unwrap(), vec![4]);
        let n = build_bam(4, 1, 0).unwrap();
        assert_eq!(n.evaluate(&[3, 3]).unwrap(), vec![6]);
    }

    #[test]
    fn bam_everything_omitted() {
        let n = build_bam(3, 3, 0).unwrap();
        assert_eq!(area(&n), 0.0);
        assert_eq!(n.evaluate(&[7, 7]).unwrap(), vec![0]);
    }

    #[test]
    fn ram_without_protection_matches_array_gate_for_gate() {
        for wl in 1..=5 {
            let r = build_ram(wl, wl, 2 * wl - 1).unwrap();
            let m = build_array_mult(wl).unwrap();
            assert!(r.nodes_tagged(TAG_VOTER).is_empty());
            assert_eq!(r.gates().len(), m.gates().len());
            for (x, y) in r.gates().iter().zip(m.gates()) {
                assert_eq!((x.id, x.kind, x.inputs), (y.id, y.kind, y.inputs));
            }
            assert_eq!(r.outputs(), m.outputs());
        }
    }

    #[test]
    fn ram_full_protection_multiplies_and_costs_more() {
        let r = build_ram(4, 0, 0).unwrap();
        for a in 0..16 {
            for b in 0..16 {
                assert_eq!(r.evaluate(&[a, b]).unwrap(), vec![a * b]);
            }
        }
        assert!(area(&r) > 3.0 * area(&build_array_mult(4).unwrap()));
    }

    #[test]
    fn cell_coordinates_parse_sites() {
        let n = build_ram(3, 1, 0).unwrap();
        for g in n.gates().iter().filter(|g| !g.kind.is_const()) {
            let (i, j) = cell_coordinates(g).unwrap();
            assert!(i < 3 && j < 3);
        }
    }
}
