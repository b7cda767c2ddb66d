// SPDX-License-Identifier: Apache-2.0

//! Exhaustive agreement between generated netlists and their functional models.

use softreal::blocks::{
    bam_value, build_array_mult, build_bam, build_loa, build_ram, build_rca, build_rft_adder, build_rrca, loa_value,
    Protection, Section,
};
use softreal::metrics::{BinaryOp, NetlistOp};
use softreal::netlist::{cost, CostWeights, Netlist, TAG_VOTER};

/// Operand pairs where the netlist disagrees with `f`, over all of `[0, 2^w)²`.
fn mismatches(n: &Netlist, w: u32, f: impl Fn(u64, u64) -> u64) -> u64 {
    let op = NetlistOp::new(n).unwrap();
    let mut bad = 0;
    let mut got = vec![0u64; 1 << w];
    let bs: Vec<u64> = (0..1u64 << w).collect();
    for a in 0..1u64 << w {
        let r#as = vec![a; bs.len()];
        op.apply_batch(&r#as, &bs, &mut got);
        bad += bs.iter().zip(&got).filter(|(&b, &g)| g != f(a, b)).count() as u64;
    }
    bad
}

fn area(n: &Netlist) -> f64 {
    cost(n, &CostWeights::default()).area
}

#[test]
fn loa_netlists_match_model() {
    for p in 1..=8 {
        for lpl in 0..=p {
            let n = build_loa(p, lpl).unwrap();
            assert_eq!(
                mismatches(&n, p, |a, b| loa_value(a, b, p, lpl).unwrap()),
                0,
                "LOA({p},{lpl})"
            );
        }
    }
}

#[test]
fn bam_netlists_match_model() {
    for wl in 1..=6 {
        for hbl in 0..=wl {
            for vbl in 0..2 * wl {
                let n = build_bam(wl, hbl, vbl).unwrap();
                let bad = mismatches(&n, wl, |a, b| bam_value(a, b, wl, hbl, vbl).unwrap());
                assert_eq!(bad, 0, "BAM({wl},{hbl},{vbl})");
            }
        }
    }
}

#[test]
fn fault_free_relaxed_blocks_are_exact() {
    for p in 1..=8 {
        for aul in 0..=p {
            assert_eq!(
                mismatches(&build_rrca(p, aul).unwrap(), p, |a, b| a + b),
                0,
                "RRCA({p},{aul})"
            );
        }
    }
    for wl in 1..=5 {
        for hul in 0..=wl {
            for vul in 0..2 * wl {
                assert_eq!(
                    mismatches(&build_ram(wl, hul, vul).unwrap(), wl, |a, b| a * b),
                    0,
                    "RAM({wl},{hul},{vul})"
                );
            }
        }
    }
}

/// Every split of up to 8 bits into three sections, every protection pattern.
#[test]
fn rft_adders_are_exact() {
    use Protection::{Tmr, Unprotected};
    for p in 1..=8u32 {
        for q in 0..=p {
            for m in 0..=p - q {
                let widths = [q, m, p - q - m];
                for mask in 0..8u32 {
                    let sections: Vec<Section> = widths
                        .iter()
                        .enumerate()
                        .map(|(k, &w)| Section::new(w, if mask >> k & 1 == 1 { Tmr } else { Unprotected }))
                        .collect();
                    let n = build_rft_adder(&sections).unwrap();
                    assert_eq!(mismatches(&n, p, |a, b| a + b), 0, "{sections:?}");
                }
            }
        }
    }
}

#[test]
fn degenerate_parameters_reduce_to_precise_blocks() {
    for p in 1..=8 {
        let rca = build_rca(p).unwrap();
        assert_eq!(mismatches(&build_loa(p, 0).unwrap(), p, |a, b| a + b), 0);
        assert_eq!(area(&build_loa(p, 0).unwrap()), area(&rca));
        let plain = build_rrca(p, p).unwrap();
        assert!(plain.nodes_tagged(TAG_VOTER).is_empty());
        assert_eq!(area(&plain), area(&rca));
        let tmr = build_rrca(p, 0).unwrap();
        assert!(area(&tmr) >= 3.0 * area(&rca));
    }
    for wl in 1..=6 {
        let arr = build_array_mult(wl).unwrap();
        assert_eq!(mismatches(&build_bam(wl, 0, 0).unwrap(), wl, |a, b| a * b), 0);
        assert_eq!(area(&build_bam(wl, 0, 0).unwrap()), area(&arr));
        let open = build_ram(wl, wl, 2 * wl - 1).unwrap();
        assert!(open.nodes_tagged(TAG_VOTER).is_empty());
        assert_eq!(area(&open), area(&arr));
    }
}

#[test]
fn bam_never_overestimates() {
    for hbl in 0..=6 {
        for vbl in 0..12 {
            for a in 0..64 {
                for b in 0..64 {
                    assert!(bam_value(a, b, 6, hbl, vbl).unwrap() <= a * b);
                }
            }
        }
    }
}

#[test]
fn cost_monotonicity() {
    for p in 1..=12 {
        let areas: Vec<f64> = (0..=p).map(|l| area(&build_loa(p, l).unwrap())).collect();
        assert!(areas.windows(2).all(|w| w[1] < w[0]), "LOA({p}) {areas:?}");
        let areas: Vec<f64> = (0..=p).map(|a| area(&build_rrca(p, a).unwrap())).collect();
        assert!(areas.windows(2).all(|w| w[1] < w[0]), "RRCA({p}) {areas:?}");
    }
}
