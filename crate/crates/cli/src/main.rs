// SPDX-License-Identifier: Apache-2.0

mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use softreal::apps::{
    defuzz_error_study, min_acc_width, min_acc_width_shifted, mlp_forward_with, mlp_train, wpa_acc_width, wpa_datapath,
    wpa_defuzzify_with, ArithConfig, Dataset, FixedPointFormat, MlpModel, PlateauSet,
};
use softreal::blocks::{BlockSpec, Protection, Section};
use softreal::explorer::{self, Objective, SweepSpec, TableFormat};
use softreal::metrics::{
    exhaustive_error, fault_error, improvement, monte_carlo_error, round_half_away, ErrorAccumulator,
    InputDistribution, NetlistOp, ReportRow, EXHAUSTIVE_CAP_BITS, REPORT_CSV_HEADER,
};
use softreal::netlist::{inject_evaluate, triplicate_with_vote, FaultConfig, Netlist, TAG_UNPROTECTED};
use softreal::rng;

use config::{ArithChoice, MlpConfig};

/// Bad invocation: exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(
    name = "softreal",
    version,
    about = "Imprecise and relaxed fault-tolerant arithmetic toolkit"
)]
struct Cli {
    /// Seed for every randomized step; printed with the results.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true, env = "SOFTREAL_JOBS")]
    jobs: Option<usize>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the netlist of a block as JSON.
    Build {
        #[command(flatten)]
        block: BlockArgs,
        /// Triplicate the whole netlist behind per-bit voters.
        #[arg(long)]
        tmr: bool,
    },
    /// Evaluate a netlist on one input assignment, optionally with faults.
    Eval {
        #[command(flatten)]
        source: SourceArgs,
        /// Input bus value as name=value; repeat per bus.
        #[arg(long = "input", value_parser = parse_assignment)]
        inputs: Vec<(String, u64)>,
        /// Per-node flip probability.
        #[arg(long)]
        p_err: Option<f64>,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Error statistics of a block against exact arithmetic.
    Error {
        #[command(flatten)]
        block: BlockArgs,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Report in percent of 2^width.
        #[arg(long)]
        percent: bool,
    },
    /// Fault-injection study against the fault-free netlist.
    Faultsim {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        p_err: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        voters_fault_free: bool,
        /// Restrict flips to nodes tagged unprotected.
        #[arg(long)]
        unprotected_only: bool,
        #[arg(long)]
        percent: bool,
    },
    /// Run a parameter sweep described by a JSON file.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Table::Csv)]
        format: Table,
        /// Keep only non-dominated rows, e.g. mae:min,area:min.
        #[arg(long, value_delimiter = ',')]
        pareto: Vec<String>,
    },
    /// Train and evaluate a fixed-point MLP.
    AppMlp {
        #[arg(long)]
        config: PathBuf,
        /// Dataset JSON; defaults to the synthetic set described in the config.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Evaluate this model instead of training one.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        save_model: Option<PathBuf>,
    },
    /// Weighted-plateau-average defuzzification.
    AppDefuzz {
        #[arg(long)]
        wl: u32,
        #[arg(long, value_enum, default_value_t = ArithKind::Precise)]
        arith: ArithKind,
        #[command(flatten)]
        params: ArithParams,
        #[arg(long)]
        acc_width: Option<u32>,
        #[arg(long)]
        p_err: Option<f64>,
        #[arg(long)]
        voters_fault_free: bool,
        /// Random plateau sets to compare against precise arithmetic.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Defuzzify this plateau set instead of running a study.
        #[arg(long)]
        plateaus: Option<PathBuf>,
    },
    /// Improvement percentages, 100·(reference − candidate)/candidate.
    Improve {
        /// One value, area,delay, or area,delay,adp.
        #[arg(long, value_delimiter = ',', required = true)]
        reference: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        candidate: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Exhaustive,
    MonteCarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArithKind {
    Precise,
    Bic,
    Rtmr,
    Tmr,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum BlockKind {
    Rca,
    #[value(alias = "array_mult")]
    ArrayMult,
    Loa,
    Bam,
    Rrca,
    Ram,
    #[value(alias = "rft_adder")]
    RftAdder,
}

#[derive(Args, Default)]
struct ArithParams {
    #[arg(long)]
    lpl: Option<u32>,
    #[arg(long)]
    hbl: Option<u32>,
    #[arg(long)]
    vbl: Option<u32>,
    #[arg(long)]
    aul: Option<u32>,
    #[arg(long)]
    hul: Option<u32>,
    #[arg(long)]
    vul: Option<u32>,
}

#[derive(Args)]
struct BlockArgs {
    #[arg(long, value_enum, required_unless_present = "spec")]
    block: Option<BlockKind>,
    #[arg(long)]
    wl: Option<u32>,
    #[command(flatten)]
    params: ArithParams,
    /// Sections of an RFT adder from the LSB up, e.g. 2:u/6:tmr.
    #[arg(long)]
    sections: Option<String>,
    /// Block description as JSON, e.g. {"block":"loa","wl":8,"lpl":3}.
    #[arg(long, conflicts_with = "block")]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct SourceArgs {
    #[arg(long, value_enum, required_unless_present_any = ["spec", "netlist"])]
    block: Option<BlockKind>,
    #[arg(long)]
    wl: Option<u32>,
    #[command(flatten)]
    params: ArithParams,
    #[arg(long)]
    sections: Option<String>,
    #[arg(long, conflicts_with_all = ["block", "netlist"])]
    spec: Option<PathBuf>,
    /// Netlist JSON file.
    #[arg(long, conflicts_with = "block")]
    netlist: Option<PathBuf>,
    /// Triplicate the whole netlist behind per-bit voters.
    #[arg(long)]
    tmr: bool,
}

fn parse_assignment(s: &str) -> Result<(String, u64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v = v.parse().map_err(|_| format!("`{v}` is not a non-negative integer"))?;
    Ok((k.to_string(), v))
}

fn parse_sections(s: &str) -> Result<Vec<Section>> {
    s.split(['/', ','])
        .map(|part| {
            let (w, p) = part
                .split_once(':')
                .ok_or_else(|| usage(format!("section `{part}` is not width:protection")))?;
            let width = w.parse().map_err(|_| usage(format!("bad section width `{w}`")))?;
            let protection = match p {
                "u" | "unprotected" => Protection::Unprotected,
                "tmr" => Protection::Tmr,
                _ => return Err(usage(format!("protection must be u or tmr, got `{p}`"))),
            };
            Ok(Section::new(width, protection))
        })
        .collect()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn block_spec(
    kind: Option<BlockKind>,
    wl: Option<u32>,
    p: &ArithParams,
    sections: &Option<String>,
    spec: &Option<PathBuf>,
) -> Result<BlockSpec> {
    if let Some(path) = spec {
        return read_json(path);
    }
    let kind = kind.ok_or_else(|| usage("--block is required"))?;
    let given = [
        ("lpl", p.lpl),
        ("hbl", p.hbl),
        ("vbl", p.vbl),
        ("aul", p.aul),
        ("hul", p.hul),
        ("vul", p.vul),
    ];
    let wanted: &[&str] = match kind {
        BlockKind::Rca | BlockKind::ArrayMult | BlockKind::RftAdder => &[],
        BlockKind::Loa => &["lpl"],
        BlockKind::Bam => &["hbl", "vbl"],
        BlockKind::Rrca => &["aul"],
        BlockKind::Ram => &["hul", "vul"],
    };
    for (name, v) in given {
        match (wanted.contains(&name), v) {
            (true, None) => return Err(usage(format!("--{name} is required for this block"))),
            (false, Some(_)) => return Err(usage(format!("--{name} does not apply to this block"))),
            _ => {}
        }
    }
    if kind == BlockKind::RftAdder {
        if wl.is_some() {
            return Err(usage("rft-adder takes --sections instead of --wl"));
        }
        let s = sections
            .as_deref()
            .ok_or_else(|| usage("--sections is required for rft-adder"))?;
        return Ok(BlockSpec::RftAdder {
            sections: parse_sections(s)?,
        });
    }
    if sections.is_some() {
        return Err(usage("--sections only applies to rft-adder"));
    }
    let wl = wl.ok_or_else(|| usage("--wl is required"))?;
    let v = |x: Option<u32>| x.expect("checked above");
    Ok(match kind {
        BlockKind::Rca => BlockSpec::Rca { wl },
        BlockKind::ArrayMult => BlockSpec::ArrayMult { wl },
        BlockKind::Loa => BlockSpec::loa(wl, v(p.lpl)),
        BlockKind::Bam => BlockSpec::Bam {
            wl,
            hbl: v(p.hbl),
            vbl: v(p.vbl),
        },
        BlockKind::Rrca => BlockSpec::Rrca { wl, aul: v(p.aul) },
        BlockKind::Ram => BlockSpec::Ram {
            wl,
            hul: v(p.hul),
            vul: v(p.vul),
        },
        BlockKind::RftAdder => unreachable!(),
    })
}

impl BlockArgs {
    fn resolve(&self) -> Result<BlockSpec> {
        let s = block_spec(self.block, self.wl, &self.params, &self.sections, &self.spec)?;
        s.validate()?;
        Ok(s)
    }
}

/// A netlist plus the names that identify it in report rows.
struct Source {
    netlist: Netlist,
    block: String,
    params: String,
}

impl SourceArgs {
    fn resolve(&self) -> Result<Source> {
        let (netlist, block, mut params) = match &self.netlist {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let name = path
                    .file_name()
                    .map(|s| s.to_string_lossy().replace([',', ';'], "_"))
                    .unwrap_or_default();
                (
                    Netlist::from_json(&text)?,
                    "netlist".to_string(),
                    format!("file={name}"),
                )
            }
            None => {
                let s = block_spec(self.block, self.wl, &self.params, &self.sections, &self.spec)?;
                s.validate()?;
                (s.build()?, s.family().to_string(), s.params())
            }
        };
        let netlist = if self.tmr {
            params.push_str(";tmr");
            triplicate_with_vote(&netlist)
        } else {
            netlist
        };
        Ok(Source { netlist, block, params })
    }
}

fn report_csv(rows: &[ReportRow]) -> String {
    let mut s = format!("{REPORT_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

fn fault_config(p_err: f64, trials: u64, seed: u64, voters_fault_free: bool) -> FaultConfig {
    FaultConfig::new(p_err, trials, seed).with_voters_fault_free(voters_fault_free)
}

fn run(cli: Cli) -> Result<String> {
    let seed = cli.seed;
    match cli.command {
        Command::Build { block, tmr } => {
            let spec = block.resolve()?;
            let n = spec.build()?;
            let n = if tmr { triplicate_with_vote(&n) } else { n };
            Ok(n.to_json() + "\n")
        }
        Command::Eval {
            source,
            inputs,
            p_err,
            trial,
        } => {
            let src = source.resolve()?;
            let n = &src.netlist;
            let mut values = Vec::with_capacity(n.inputs().len());
            for bus in n.inputs() {
                let v = inputs
                    .iter()
                    .find(|(k, _)| *k == bus.name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| usage(format!("missing --input {}=<value>", bus.name)))?;
                values.push(v);
            }
            if let Some((k, _)) = inputs.iter().find(|(k, _)| n.inputs().iter().all(|b| b.name != *k)) {
                return Err(usage(format!("netlist has no input bus `{k}`")));
            }
            let seed = seed.unwrap_or(1);
            let out = match p_err {
                None => n.evaluate(&values)?,
                Some(p) => inject_evaluate(n, &values, &FaultConfig::new(p, trial + 1, seed), trial)?,
            };
            let mut header: Vec<String> = n.inputs().iter().map(|b| b.name.clone()).collect();
            header.extend(n.outputs().iter().map(|b| b.name.clone()));
            let mut row: Vec<String> = values.iter().chain(&out).map(u64::to_string).collect();
            if let Some(p) = p_err {
                header.extend(["p_err", "trial", "seed"].map(String::from));
                row.extend([p.to_string(), trial.to_string(), seed.to_string()]);
            }
            Ok(format!("{}\n{}\n", header.join(","), row.join(",")))
        }
        Command::Error {
            block,
            mode,
            samples,
            percent,
        } => {
            let spec = block.resolve()?;
            let width = spec.width();
            let model = |a: u64, b: u64| spec.value(a, b).expect("operands in range");
            let exact = |a: u64, b: u64| spec.exact(a, b);
            let exhaustive = match mode {
                Mode::Auto => 2 * width <= EXHAUSTIVE_CAP_BITS,
                Mode::Exhaustive => true,
                Mode::MonteCarlo => false,
            };
            let seed = seed.unwrap_or(1);
            let report = if exhaustive {
                exhaustive_error(&model, &exact, width)?
            } else {
                monte_carlo_error(
                    &model,
                    &exact,
                    width,
                    &InputDistribution::UniformFullRange,
                    samples,
                    seed,
                )?
            };
            let report = if percent { report.to_percent() } else { report };
            let row = ReportRow {
                block: spec.family().into(),
                params: spec.params(),
                report,
                seed: (!exhaustive).then_some(seed),
            };
            Ok(report_csv(&[row]))
        }
        Command::Faultsim {
            source,
            p_err,
            trials,
            voters_fault_free,
            unprotected_only,
            percent,
        } => {
            let src = source.resolve()?;
            let seed = seed.unwrap_or(1);
            let mut cfg = fault_config(p_err, trials, seed, voters_fault_free);
            let mut params = format!("{};p_err={p_err};trials={trials}", src.params);
            if voters_fault_free {
                params.push_str(";voters_fault_free");
            }
            if unprotected_only {
                let region = src.netlist.nodes_tagged(TAG_UNPROTECTED);
                if region.is_empty() {
                    return Err(anyhow!("the netlist has no unprotected nodes"));
                }
                cfg = cfg.with_region(region);
                params.push_str(";unprotected_only");
            }
            let oracle = NetlistOp::new(&src.netlist)?;
            let report = fault_error(&src.netlist, &cfg, &InputDistribution::UniformFullRange, &oracle)?;
            let report = if percent { report.to_percent() } else { report };
            Ok(report_csv(&[ReportRow {
                block: src.block,
                params,
                report,
                seed: Some(seed),
            }]))
        }
        Command::Sweep { spec, format, pareto } => {
            let mut spec: SweepSpec = read_json(&spec)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let objectives: Vec<Objective> = pareto
                .iter()
                .map(|s| s.parse().map_err(|e: explorer::ExplorerError| usage(e.to_string())))
                .collect::<Result<_>>()?;
            let rows = explorer::sweep(&spec)?;
            let rows = if objectives.is_empty() {
                rows
            } else {
                explorer::pareto_front(&rows, &objectives)?
            };
            let format = match format {
                Table::Csv => TableFormat::Csv,
                Table::Markdown => TableFormat::Markdown,
            };
            Ok(explorer::render(&rows, format)?)
        }
        Command::AppMlp {
            config,
            dataset,
            model,
            save_model,
        } => {
            let cfg: MlpConfig = read_json(&config)?;
            app_mlp(&cfg, dataset.as_deref(), model.as_deref(), save_model.as_deref(), seed)
        }
        Command::AppDefuzz {
            wl,
            arith,
            params,
            acc_width,
            p_err,
            voters_fault_free,
            samples,
            plateaus,
        } => {
            let format = FixedPointFormat::new(wl, 0)?;
            let choice = arith_choice(arith, &params)?;
            let seed = seed.unwrap_or(1);
            let set: Option<PlateauSet> = plateaus.as_deref().map(read_json).transpose()?;
            let terms = set.as_ref().map_or(4, |s| s.plateaus.len().max(1));
            let acc = acc_width.unwrap_or(wpa_acc_width(wl).max(min_acc_width(wl, terms)));
            let mut cfg = choice.resolve(wl, acc);
            let mut params = format!("wl={wl};arith={};acc={acc}", choice.label());
            if let Some(p) = p_err {
                cfg = cfg.with_fault(fault_config(p, 1, seed, voters_fault_free));
                params.push_str(&format!(";p_err={p}"));
                if voters_fault_free {
                    params.push_str(";voters_fault_free");
                }
            }
            let report = match set {
                Some(set) => {
                    let got = wpa_defuzzify_with(&set, &wpa_datapath(&cfg, format, terms)?, seed)?;
                    let want =
                        wpa_defuzzify_with(&set, &wpa_datapath(&ArithConfig::precise(wl, acc), format, terms)?, 0)?;
                    params.push_str(&format!(";crisp={got};reference={want}"));
                    let mut a = ErrorAccumulator::default();
                    a.push(got as i128 - want as i128);
                    a.finish((1u64 << wl) as f64, false).to_percent()
                }
                None => {
                    params.push_str(&format!(";samples={samples}"));
                    defuzz_error_study(&cfg, format, samples, seed)?
                }
            };
            Ok(report_csv(&[ReportRow {
                block: "wpa".into(),
                params,
                report,
                seed: Some(seed),
            }]))
        }
        Command::Improve { reference, candidate } => {
            if reference.len() != candidate.len() {
                return Err(usage("--reference and --candidate need the same number of values"));
            }
            let with_adp = |v: &[f64]| {
                if v.len() == 2 {
                    vec![v[0], v[1], v[0] * v[1]]
                } else {
                    v.to_vec()
                }
            };
            let (r, c) = (with_adp(&reference), with_adp(&candidate));
            let names: &[&str] = match r.len() {
                1 => &["value"],
                3 => &["area", "delay", "adp"],
                _ => return Err(usage("give one value, area,delay or area,delay,adp")),
            };
            let mut out = String::from("quantity,reference,candidate,improvement,rounded\n");
            for ((name, a), b) in names.iter().zip(&r).zip(&c) {
                let imp = improvement(*a, *b)?;
                out.push_str(&format!("{name},{a},{b},{imp},{}\n", round_half_away(imp)));
            }
            Ok(out)
        }
    }
}

fn arith_choice(kind: ArithKind, p: &ArithParams) -> Result<ArithChoice> {
    let need = |v: Option<u32>, name: &str| v.ok_or_else(|| usage(format!("--{name} is required for this arithmetic")));
    Ok(match kind {
        ArithKind::Precise => ArithChoice::Precise,
        ArithKind::Tmr => ArithChoice::Tmr,
        ArithKind::Bic => ArithChoice::Bic {
            lpl: need(p.lpl, "lpl")?,
            hbl: need(p.hbl, "hbl")?,
            vbl: need(p.vbl, "vbl")?,
        },
        ArithKind::Rtmr => ArithChoice::Rtmr {
            aul: need(p.aul, "aul")?,
            hul: need(p.hul, "hul")?,
            vul: need(p.vul, "vul")?,
        },
    })
}

fn app_mlp(
    cfg: &MlpConfig,
    dataset: Option<&Path>,
    model: Option<&Path>,
    save_model: Option<&Path>,
    seed: Option<u64>,
) -> Result<String> {
    let format = FixedPointFormat::new(cfg.wl, cfg.frac)?;
    let data: Dataset = match dataset {
        Some(p) => read_json(p)?,
        None => cfg.blobs(),
    };
    data.validate()?;
    let terms = cfg.topology[..cfg.topology.len().saturating_sub(1)]
        .iter()
        .map(|n| n + 1)
        .max()
        .unwrap_or(1);
    let acc = cfg.acc_width.unwrap_or(min_acc_width_shifted(cfg.wl, cfg.frac, terms));
    let arith = cfg.arith.resolve(cfg.wl, acc);
    let mut train = cfg.train.clone();
    if let Some(s) = seed {
        train.seed = s;
    }
    let topo = cfg.topology.iter().map(usize::to_string).collect::<Vec<_>>().join("-");
    let mut params = format!(
        "topology={topo};wl={};frac={};arith={};acc={acc}",
        cfg.wl,
        cfg.frac,
        cfg.arith.label()
    );
    let model: MlpModel = match model {
        Some(p) => read_json(p)?,
        None => {
            let (m, report) = mlp_train(&data, &cfg.topology, format, &arith, &train)?;
            params.push_str(&format!(";epochs={}", report.epochs));
            m
        }
    };
    model.validate()?;
    if let Some(p) = save_model {
        fs::write(p, serde_json::to_string(&model)? + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    let eval = match &cfg.fault {
        Some(f) => {
            let mut f = f.clone();
            if let Some(s) = seed {
                f.base_seed = s;
            }
            params.push_str(&format!(";p_err={}", f.p_err));
            arith.with_fault(f)
        }
        None => arith,
    };
    let dp = model.datapath(&eval)?;
    let one = model.format.one().mag as i128;
    let mut acc_err = ErrorAccumulator::default();
    let mut correct = 0usize;
    for (i, (x, &label)) in data.quantized(&model.format).iter().zip(&data.labels).enumerate() {
        let y = mlp_forward_with(&model, x, &dp, rng::combine(train.seed, i as u64))?;
        for (k, v) in y.iter().enumerate() {
            acc_err.push(v.raw() as i128 - if k == label { one } else { 0 });
        }
        let best = y
            .iter()
            .enumerate()
            .fold(0, |b, (k, v)| if v.raw() > y[b].raw() { k } else { b });
        correct += (best == label) as usize;
    }
    params.push_str(&format!(
        ";correct_percent={}",
        100.0 * correct as f64 / data.len() as f64
    ));
    let report = acc_err.finish((1u64 << model.format.frac) as f64, false);
    Ok(report_csv(&[ReportRow {
        block: "mlp".into(),
        params,
        report,
        seed: Some(train.seed),
    }]))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let out = cli.out.clone();
    let result = run(cli).and_then(|text| match &out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
