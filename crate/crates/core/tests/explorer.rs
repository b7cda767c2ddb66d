// SPDX-License-Identifier: Apache-2.0

use softreal::explorer::{
    pareto_front, parse_csv, render, sweep, Family, Metric, Objective, ParamRange, SweepSpec, TableFormat,
};

const GOLDEN_LOA_P4: &str = include_str!("golden/loa_p4.csv");

fn loa_p4_spec() -> SweepSpec {
    SweepSpec::new(
        Family::Loa,
        &[("wl", ParamRange::single(4)), ("lpl", ParamRange::new(0, 4))],
        &Metric::ALL,
    )
}

/// Lower bits ORed, carry-in from the AND of the lower parts' top bits.
fn loa_reference(a: u64, b: u64, p: u32, l: u32) -> u64 {
    if l == p {
        return a | b;
    }
    let mask = (1 << l) - 1;
    let cin = if l == 0 { 0 } else { (a & b) >> (l - 1) & 1 };
    (((a >> l) + (b >> l) + cin) << l) | ((a | b) & mask)
}

#[test]
fn loa_sweep_matches_golden_file() {
    let rows = sweep(&loa_p4_spec()).unwrap();
    assert_eq!(render(&rows, TableFormat::Csv).unwrap(), GOLDEN_LOA_P4);
}

#[test]
fn golden_file_agrees_with_brute_force() {
    let rows = parse_csv(GOLDEN_LOA_P4).unwrap();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let l = r.param("lpl").unwrap();
        let (mut s1, mut s2, mut mx) = (0u64, 0u64, 0u64);
        for a in 0..16 {
            for b in 0..16 {
                let e = loa_reference(a, b, 4, l).abs_diff(a + b);
                s1 += e;
                s2 += e * e;
                mx = mx.max(e);
            }
        }
        let mae = s1 as f64 / 256.0;
        let mse = s2 as f64 / 256.0;
        assert_eq!(r.get(Metric::Mae), Some(mae), "lpl={l}");
        assert_eq!(r.get(Metric::Mse), Some(mse), "lpl={l}");
        assert_eq!(r.get(Metric::Aev), Some(mse - mae * mae), "lpl={l}");
        assert_eq!(r.get(Metric::MaxAbs), Some(mx as f64), "lpl={l}");
        assert_eq!(r.exhaustive, Some(true));
    }
}

fn bam_cells(wl: u32, hbl: u32, vbl: u32) -> usize {
    (0..wl)
        .flat_map(|j| (0..wl).map(move |i| (i, j)))
        .filter(|&(i, j)| j >= hbl && i + j >= vbl)
        .count()
}

#[test]
fn bam_area_drops_whenever_a_cell_is_omitted() {
    let spec = SweepSpec::new(
        Family::Bam,
        &[
            ("wl", ParamRange::single(6)),
            ("hbl", ParamRange::new(0, 2)),
            ("vbl", ParamRange::new(0, 6)),
        ],
        &[Metric::Area, Metric::Mae],
    );
    let rows = sweep(&spec).unwrap();
    assert_eq!(rows.len(), 21);
    let area = |h: u32, v: u32| rows[(h * 7 + v) as usize].get(Metric::Area).unwrap();
    let mut strict_steps = 0;
    for h in 0..=2 {
        for v in 0..=6 {
            let here = (bam_cells(6, h, v), area(h, v));
            for (nh, nv) in [(h + 1, v), (h, v + 1)] {
                if nh > 2 || nv > 6 {
                    continue;
                }
                let next = (bam_cells(6, nh, nv), area(nh, nv));
                if next.0 < here.0 {
                    assert!(next.1 < here.1, "({h},{v})→({nh},{nv}): {} !< {}", next.1, here.1);
                    strict_steps += 1;
                } else {
                    assert_eq!(next.1, here.1, "({h},{v})→({nh},{nv}) omits nothing");
                }
            }
        }
    }
    assert!(strict_steps > 20);
}

#[test]
fn rendered_sweep_round_trips() {
    let spec = SweepSpec::new(
        Family::Rrca,
        &[("wl", ParamRange::single(6)), ("aul", ParamRange::new(0, 6))],
        &[Metric::Mse, Metric::Area, Metric::Adp],
    );
    let mut spec = spec;
    spec.fault = Some(softreal::netlist::FaultConfig::new(0.01, 2000, 3));
    spec.samples = 2000;
    let rows = sweep(&spec).unwrap();
    let text = render(&rows, TableFormat::Csv).unwrap();
    assert_eq!(parse_csv(&text).unwrap(), rows);
    assert_eq!(render(&parse_csv(&text).unwrap(), TableFormat::Csv).unwrap(), text);
}

#[test]
fn loa_front_trades_error_for_area() {
    let rows = sweep(&loa_p4_spec()).unwrap();
    let front = pareto_front(&rows, &[Objective::min(Metric::Mae), Objective::min(Metric::Area)]).unwrap();
    // each extra OR bit is cheaper and less accurate, so nothing is dominated
    assert_eq!(front, rows);
    let front = pareto_front(&rows, &[Objective::min(Metric::Mae), Objective::max(Metric::Area)]).unwrap();
    assert_eq!(front.len(), 1);
    assert_eq!(front[0].param("lpl"), Some(0));
}

#[test]
fn sweep_is_schedule_independent() {
    let mut spec = SweepSpec::new(
        Family::Ram,
        &[
            ("wl", ParamRange::single(5)),
            ("hul", ParamRange::new(0, 5)),
            ("vul", ParamRange::new(0, 3)),
        ],
        &[Metric::Mae, Metric::Area],
    );
    spec.fault = Some(softreal::netlist::FaultConfig::new(0.02, 500, 9));
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| sweep(&spec).unwrap());
    let b = three.install(|| sweep(&spec).unwrap());
    assert_eq!(
        render(&a, TableFormat::Csv).unwrap(),
        render(&b, TableFormat::Csv).unwrap()
    );
}
