// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ExplorerError, Metric, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = ExplorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            _ => Err(ExplorerError::Spec(format!("unknown table format `{s}`"))),
        }
    }
}

fn header(first: &SweepRow) -> Vec<String> {
    let mut h = vec!["block".to_string()];
    h.extend(first.params.iter().map(|(k, _)| k.clone()));
    h.extend(first.metrics.iter().map(|(m, _)| m.to_string()));
    h.push("exhaustive".into());
    h.push("seed".into());
    h
}

fn check_schema(rows: &[SweepRow]) -> Result<&SweepRow, ExplorerError> {
    let first = rows.first().ok_or_else(|| ExplorerError::Render("no rows".into()))?;
    let same = |r: &SweepRow| {
        r.params.len() == first.params.len()
            && r.params.iter().zip(&first.params).all(|(a, b)| a.0 == b.0)
            && r.metrics.len() == first.metrics.len()
            && r.metrics.iter().zip(&first.metrics).all(|(a, b)| a.0 == b.0)
    };
    if let Some(r) = rows.iter().find(|r| !same(r)) {
        return Err(ExplorerError::Render(format!(
            "row for {} has different columns",
            r.block
        )));
    }
    Ok(first)
}

fn exhaustive_field(e: Option<bool>) -> &'static str {
    match e {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    }
}

/// Integers print exactly; other reals with four significant digits.
fn sig4(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{x}");
    }
    let a = x.abs();
    if !(1e-4..1e6).contains(&a) {
        return format!("{x:.3e}");
    }
    let decimals = (3 - a.log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

/// CSV keeps the shortest decimal form that parses back to the same value;
/// Markdown is for reading.
pub fn render(rows: &[SweepRow], format: TableFormat) -> Result<String, ExplorerError> {
    let first = check_schema(rows)?;
    match format {
        TableFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(header(first))?;
            for r in rows {
                let mut rec = vec![r.block.clone()];
                rec.extend(r.params.iter().map(|(_, v)| v.to_string()));
                rec.extend(r.metrics.iter().map(|(_, v)| v.to_string()));
                rec.push(exhaustive_field(r.exhaustive).into());
                rec.push(r.seed.to_string());
                w.write_record(rec)?;
            }
            let bytes = w.into_inner().map_err(|e| ExplorerError::Render(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("ascii fields"))
        }
        TableFormat::Markdown => {
            let h = header(first);
            let mut out = format!("| {} |\n", h.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(h.len()));
            for r in rows {
                let mut cells = vec![r.block.clone()];
                cells.extend(r.params.iter().map(|(_, v)| v.to_string()));
                cells.extend(r.metrics.iter().map(|(_, v)| sig4(*v)));
                cells.push(exhaustive_field(r.exhaustive).into());
                cells.push(r.seed.to_string());
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
            Ok(out)
        }
    }
}

/// Reads back a table written by [`render`] in CSV form.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>, ExplorerError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let h: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let n = h.len();
    if n < 3 || h[0] != "block" || h[n - 2] != "exhaustive" || h[n - 1] != "seed" {
        return Err(ExplorerError::Parse(
            "header must be block,<params>,<metrics>,exhaustive,seed".into(),
        ));
    }
    let split = h[1..n - 2]
        .iter()
        .position(|c| c.parse::<Metric>().is_ok())
        .map_or(n - 2, |i| i + 1);
    let metrics: Vec<Metric> = h[split..n - 2].iter().map(|c| c.parse()).collect::<Result<_, _>>()?;
    let bad = |what: &str, v: &str| ExplorerError::Parse(format!("bad {what} `{v}`"));
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let params = (1..split)
            .map(|i| {
                rec[i]
                    .parse()
                    .map(|v| (h[i].clone(), v))
                    .map_err(|_| bad(&h[i], &rec[i]))
            })
            .collect::<Result<_, _>>()?;
        let values = metrics
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                rec[split + k]
                    .parse()
                    .map(|v| (m, v))
                    .map_err(|_| bad(m.name(), &rec[split + k]))
            })
            .collect::<Result<_, _>>()?;
        let exhaustive = match &rec[n - 2] {
            "true" => Some(true),
            "false" => Some(false),
            "" => None,
            v => return Err(bad("exhaustive flag", v)),
        };
        rows.push(SweepRow {
            block: rec[0].to_string(),
            params,
            metrics: values,
            exhaustive,
            seed: rec[n - 1].parse().map_err(|_| bad("seed", &rec[n - 1]))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(lpl: u32, mae: f64) -> SweepRow {
        SweepRow {
            block: "loa".into(),
            params: vec![("wl".into(), 4), ("lpl".into(), lpl)],
            metrics: vec![(Metric::Mae, mae), (Metric::Area, 17.0)],
            exhaustive: Some(true),
            seed: 0,
        }
    }

    #[test]
    fn one_row_csv_is_two_lines() {
        let s = render(&[row(2, 0.5)], TableFormat::Csv).unwrap();
        assert_eq!(s, "block,wl,lpl,mae,area,exhaustive,seed\nloa,4,2,0.5,17,true,0\n");
    }

    #[test]
    fn markdown_rounds_reals_only() {
        let s = render(&[row(2, 0.123456), row(3, 1234.5678)], TableFormat::Markdown).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "| block | wl | lpl | mae | area | exhaustive | seed |");
        assert_eq!(lines[2], "| loa | 4 | 2 | 0.1235 | 17 | true | 0 |");
        assert_eq!(lines[3], "| loa | 4 | 3 | 1235 | 17 | true | 0 |");
        assert_eq!(sig4(2.5e-7), "2.500e-7");
    }

    #[test]
    fn empty_and_mixed_tables_rejected() {
        assert!(render(&[], TableFormat::Csv).is_err());
        let mut other = row(1, 1.0);
        other.metrics.pop();
        assert!(render(&[row(0, 0.0), other], TableFormat::Markdown).is_err());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_csv("a,b\n1,2\n").is_err());
        assert!(parse_csv("block,wl,mae,exhaustive,seed\nloa,x,1,true,0\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trips(vals in prop::collection::vec((0u32..9, any::<f64>().prop_filter("finite", |v| v.is_finite()), any::<Option<bool>>(), any::<u64>()), 1..20)) {
            let rows: Vec<SweepRow> = vals
                .iter()
                .map(|&(lpl, mae, ex, seed)| SweepRow { exhaustive: ex, seed, ..row(lpl, mae) })
                .collect();
            let text = render(&rows, TableFormat::Csv).unwrap();
            prop_assert_eq!(parse_csv(&text).unwrap(), rows);
        }
    }
}
