// SPDX-License-Identifier: Apache-2.0

use super::{check, check_adder_width, check_operands, BlockError, Protection, Section};
use crate::netlist::{tmr::majority, Netlist, NetlistBuilder, NodeId, TAG_UNPROTECTED};

/// 2 XOR2 + 2 AND2 + 1 OR2 full adder. Returns `(sum, carry)`.
pub(crate) fn full_adder(b: &mut NetlistBuilder, x: NodeId, y: NodeId, cin: NodeId, site: &str) -> (NodeId, NodeId) {
    let s1 = b.xor2(x, y, format!("{site}.x1"));
    let sum = b.xor2(s1, cin, format!("{site}.x2"));
    let c1 = b.and2(x, y, format!("{site}.a1"));
    let c2 = b.and2(s1, cin, format!("{site}.a2"));
    let cout = b.or2(c1, c2, format!("{site}.o"));
    (sum, cout)
}

/// Ripple-carry chain over operand bits `lo..hi`; sites are `{replica}.fa{bit}`.
fn ripple(
    b: &mut NetlistBuilder,
    a: &[NodeId],
    bb: &[NodeId],
    bits: std::ops::Range<usize>,
    cin: NodeId,
    replica: &str,
) -> (Vec<NodeId>, NodeId) {
    let mut carry = cin;
    let mut sums = Vec::with_capacity(bits.len());
    for k in bits {
        let (s, c) = full_adder(b, a[k], bb[k], carry, &format!("{replica}.fa{k}"));
        sums.push(s);
        carry = c;
    }
    (sums, carry)
}

fn operands(b: &mut NetlistBuilder, p: u32) -> (Vec<NodeId>, Vec<NodeId>) {
    let a = b.input("a", p);
    let bb = b.input("b", p);
    (a, bb)
}

/// Precise `p`-bit ripple-carry adder with a `p+1`-bit `sum` output.
pub fn build_rca(p: u32) -> Result<Netlist, BlockError> {
    check_adder_width(p)?;
    let mut b = NetlistBuilder::new();
    let (a, bb) = operands(&mut b, p);
    let cin = b.const0();
    let (mut sums, cout) = ripple(&mut b, &a, &bb, 0..p as usize, cin, "r0");
    sums.push(cout);
    b.output("sum", sums);
    Ok(b.finish().expect("generated netlist is valid"))
}

/// Lower-part OR adder.
pub fn build_loa(p: u32, lpl: u32) -> Result<Netlist, BlockError> {
    build_loa_with(p, lpl, true)
}

/// Lower-part OR adder; `carry_and = false` feeds the precise part a zero carry.
pub fn build_loa_with(p: u32, lpl: u32, carry_and: bool) -> Result<Netlist, BlockError> {
    check_adder_width(p)?;
    check("lpl", lpl, lpl <= p, || format!("LPL ≤ WL (wl={p})"))?;
    let mut b = NetlistBuilder::new();
    let (a, bb) = operands(&mut b, p);
    let lpl = lpl as usize;
    let mut bits: Vec<NodeId> = (0..lpl).map(|k| b.or2(a[k], bb[k], format!("lo.or{k}"))).collect();
    let cout = if lpl < p as usize {
        let cin = if lpl > 0 && carry_and {
            b.and2(a[lpl - 1], bb[lpl - 1], "lo.cand")
        } else {
            b.const0()
        };
        let (sums, cout) = ripple(&mut b, &a, &bb, lpl..p as usize, cin, "r0");
        bits.extend(sums);
        cout
    } else {
        b.const0()
    };
    bits.push(cout);
    b.output("sum", bits);
    Ok(b.finish().expect("generated netlist is valid"))
}

pub fn loa_value(a: u64, b: u64, p: u32, lpl: u32) -> Result<u64, BlockError> {
    loa_value_with(a, b, p, lpl, true)
}

/// Closed-form model of [`build_loa_with`].
pub fn loa_value_with(a: u64, b: u64, p: u32, lpl: u32, carry_and: bool) -> Result<u64, BlockError> {
    check_adder_width(p)?;
    check("lpl", lpl, lpl <= p, || format!("LPL ≤ WL (wl={p})"))?;
    check_operands(a, b, p)?;
    if lpl == p {
        return Ok(a | b);
    }
    let lo_mask = (1u64 << lpl) - 1;
    let carry = if lpl > 0 && carry_and {
        (a >> (lpl - 1)) & (b >> (lpl - 1)) & 1
    } else {
        0
    };
    let hi = (a >> lpl) + (b >> lpl) + carry;
    Ok((hi << lpl) | ((a | b) & lo_mask))
}

/// Relaxed-TMR ripple-carry adder: `aul` unprotected low bits, the rest under TMR.
pub fn build_rrca(p: u32, aul: u32) -> Result<Netlist, BlockError> {
    check_adder_width(p)?;
    check("aul", aul, aul <= p, || format!("AUL ≤ WL (wl={p})"))?;
    build_rft_adder(&[
        Section::new(aul, Protection::Unprotected),
        Section::new(p - aul, Protection::Tmr),
    ])
}

/// Generalized relaxed fault-tolerant adder.
///
/// Sections run from the least significant bit upward; zero-width sections are
/// skipped. The carry between sections is a single wire, fanned out to all
/// replicas of a following TMR section. A TMR section's carry-out is voted.
pub fn build_rft_adder(sections: &[Section]) -> Result<Netlist, BlockError> {
    if sections.iter().all(|s| s.width == 0) {
        return Err(BlockError::EmptySections);
    }
    let p: u32 = sections.iter().map(|s| s.width).sum();
    check_adder_width(p)?;
    let mut b = NetlistBuilder::new();
    let (a, bb) = operands(&mut b, p);
    let mut carry = b.const0();
    let mut bits = Vec::with_capacity(p as usize + 1);
    let mut lo = 0usize;
    for sec in sections.iter().filter(|s| s.width > 0) {
        let hi = lo + sec.width as usize;
        match sec.protection {
            Protection::Unprotected => {
                b.set_tag(Some(TAG_UNPROTECTED));
                let (sums, cout) = ripple(&mut b, &a, &bb, lo..hi, carry, "r0");
                b.set_tag(None);
                bits.extend(sums);
                carry = cout;
            }
            Protection::Tmr => {
                let reps: Vec<(Vec<NodeId>, NodeId)> = (0..3)
                    .map(|r| ripple(&mut b, &a, &bb, lo..hi, carry, &format!("r{r}")))
                    .collect();
                for (i, k) in (lo..hi).enumerate() {
                    let v = majority(
                        &mut b,
                        [reps[0].0[i], reps[1].0[i], reps[2].0[i]],
                        &format!("vote.s{k}"),
                    );
                    bits.push(v);
                }
                carry = majority(&mut b, [reps[0].1, reps[1].1, reps[2].1], &format!("vote.c{hi}"));
            }
        }
        lo = hi;
    }
    bits.push(carry);
    b.output("sum", bits);
    Ok(b.finish().expect("generated netlist is valid"))
}
