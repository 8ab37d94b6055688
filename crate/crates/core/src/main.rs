//! Command-line interface: one subcommand per analysis, deterministic seeds,
//! machine-readable reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use loophole::avoidance::{
    brute_force_max_avoidance, eta_bound_from_log2_z, eta_paper_bound, first_closure_d,
    max_z_exact, threshold_report, z_greedy, AvoidanceSet, ExactSearchConfig, ZSizeUsed, ZSource,
};
use loophole::bell::{bell_value_from_table, bell_value_noisy, bell_value_quantum, QuantumProvider};
use loophole::bounds::bound_calculators;
use loophole::error::{Error, Result};
use loophole::feasibility::{eta_star_bisection, local_feasibility_lp, FeasibilityConfig};
use loophole::guessing::{analyze_mu_construction, fixture_protocol, EqualizedProtocol};
use loophole::lhv::{
    best_response_maximize, full_domain, lv_bell_value, popescu_model, verify_model_reproduces,
    StrategyPair,
};
use loophole::protocol::{average_communication_stats, chi_square_conditional, SampledLvModel};
use loophole::report::{
    curve_to_csv, to_csv, to_json, BellReport, CurveRow, EtaStarReport, FeasibilityReport,
    GuessReport, LhvValueReport, OptimizeReport, PopescuReport, RejectionReport, ScenarioReport,
    ZsetReport,
};
use loophole::sampling::estimate_bell_sampled_sharded;
use loophole::scenario::{load_explicit_scenario, EfficiencyModel, OutcomeIndex, Scenario};
use loophole::BitString;

#[derive(Parser)]
#[command(
    name = "loophole",
    version,
    about = "Bell-test analysis with inefficient detectors: exact values, avoidance sets, local-model feasibility, and communication bridges"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = rayon default). Never changes reported values.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and summarize an explicit scenario document.
    Scenario {
        #[command(subcommand)]
        cmd: ScenarioCmd,
    },
    /// Bell-expression values.
    Bell {
        #[command(subcommand)]
        cmd: BellCmd,
    },
    /// Avoidance sets and efficiency thresholds.
    Zset {
        #[command(subcommand)]
        cmd: ZsetCmd,
    },
    /// Local-variable models.
    Lhv {
        #[command(subcommand)]
        cmd: LhvCmd,
    },
    /// Communication-protocol bridges and bound calculators.
    Bridge {
        #[command(subcommand)]
        cmd: BridgeCmd,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    Validate {
        /// Scenario JSON document.
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Args)]
struct DimArgs {
    /// Exponent n; the dimension is d = 2^n.
    #[arg(long)]
    n: u32,
    /// Detector efficiency.
    #[arg(long)]
    eta: f64,
}

#[derive(Subcommand)]
enum BellCmd {
    /// Closed-form quantum value with the symmetry cross-check.
    Quantum {
        #[command(flatten)]
        dim: DimArgs,
    },
    /// Value summed from outcome tables.
    Table {
        #[command(flatten)]
        dim: DimArgs,
    },
    /// Closed-form value under white noise of weight w.
    Noisy {
        #[command(flatten)]
        dim: DimArgs,
        #[arg(long)]
        w: f64,
    },
    /// Stratified Monte Carlo estimate.
    Sample {
        #[command(flatten)]
        dim: DimArgs,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Logical shards; part of the estimator's identity.
        #[arg(long, default_value_t = loophole::sampling::DEFAULT_SHARDS)]
        shards: u32,
    },
}

#[derive(Subcommand)]
enum ZsetCmd {
    /// Exact maximum avoidance set by branch and bound.
    Exact {
        #[arg(long)]
        d: usize,
        /// Node-expansion budget.
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
        /// Cross-check the size against full subset enumeration (d <= 4).
        #[arg(long)]
        cross_check: bool,
        /// Fix the all-zero string into the set (symmetry breaking).
        #[arg(long)]
        assume_zero: bool,
        /// Write the witness as newline-separated bit strings.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Heuristic avoidance set.
    Greedy {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        restarts: u64,
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Threshold report for one dimension.
    Thresholds {
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value_t = SourceArg::FrBound)]
        source: SourceArg,
    },
    /// Threshold curve over a dimension range (CSV rows).
    Curve {
        #[arg(long, default_value_t = 4)]
        d_min: usize,
        #[arg(long, default_value_t = 2048)]
        d_max: usize,
        #[arg(long, default_value_t = 2)]
        step: usize,
        #[arg(long, value_enum, default_value_t = SourceArg::FrBound)]
        source: SourceArg,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum SourceArg {
    Exact,
    Greedy,
    FrBound,
}

#[derive(Subcommand)]
enum LhvCmd {
    /// Bell value of one deterministic strategy pair.
    Value {
        /// Dimension of the full label domain (d <= 4).
        #[arg(long)]
        d: usize,
        /// Constant strategy: both sides always answer this outcome.
        #[arg(long, conflicts_with = "pair_file")]
        constant: Option<u16>,
        /// JSON file {domain_a, domain_b, f, g} with explicit tables.
        #[arg(long)]
        pair_file: Option<PathBuf>,
    },
    /// Alternating per-label maximization of the deterministic value.
    Optimize {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        iterations: u32,
    },
    /// The 1/M quadruple model and its reproduction error.
    Popescu {
        #[arg(long)]
        n: u32,
        /// Number of measurement labels per party.
        #[arg(long)]
        m: u64,
    },
    /// LP feasibility of the detector model over strategy pairs.
    Lp {
        #[arg(long, conflicts_with = "scenario_file")]
        n: Option<u32>,
        #[arg(long)]
        m: Option<u64>,
        #[arg(long)]
        scenario_file: Option<PathBuf>,
        #[arg(long)]
        eta: f64,
        /// Strategy-pair cap.
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
        /// Write the certificate rows (weight, f-table, g-table) here.
        #[arg(long)]
        certificate_out: Option<PathBuf>,
    },
    /// Critical efficiency by LP bisection.
    Etastar {
        #[arg(long, conflicts_with = "scenario_file")]
        n: Option<u32>,
        #[arg(long)]
        m: Option<u64>,
        #[arg(long)]
        scenario_file: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
    },
}

#[derive(Subcommand)]
enum BridgeCmd {
    /// Rejection protocol statistics; eta must equal 1/M.
    Rejection {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-trial iteration cap.
        #[arg(long, default_value_t = loophole::protocol::DEFAULT_ITERATION_CAP)]
        cap: u64,
    },
    /// Exact analysis of the conversation-guessing construction on the
    /// index-exchange fixture protocol.
    Guess {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: u64,
        /// Pad the shorter side's messages so both parties share one rate.
        #[arg(long)]
        equalize: bool,
    },
    /// Closed-form bound calculators.
    Bounds {
        #[arg(long)]
        d: Option<u64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        m: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        // Report contents never depend on the pool size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExhausted { .. }
        | Error::CapExceeded { .. }
        | Error::IterationCapExceeded { .. } => 3,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<()> {
    let document = match &cli.command {
        Command::Scenario { cmd } => run_scenario(cmd, cli.format)?,
        Command::Bell { cmd } => run_bell(cmd, cli.format)?,
        Command::Zset { cmd } => run_zset(cmd, cli.format)?,
        Command::Lhv { cmd } => run_lhv(cmd, cli.format)?,
        Command::Bridge { cmd } => run_bridge(cmd, cli.format)?,
    };
    match &cli.out {
        Some(path) => fs::write(path, document)?,
        None => print!("{document}"),
    }
    Ok(())
}

fn emit<T: serde::Serialize>(report: &T, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
    }
}

fn run_scenario(cmd: &ScenarioCmd, format: Format) -> Result<String> {
    match cmd {
        ScenarioCmd::Validate { file } => {
            let s = load_explicit_scenario(file)?;
            let (a, b) = s.num_measurements();
            let report = ScenarioReport {
                valid: true,
                d: s.d(),
                alice_bases: a.unwrap_or(0) as usize,
                bob_bases: b.unwrap_or(0) as usize,
            };
            emit(&report, format)
        }
    }
}

fn run_bell(cmd: &BellCmd, format: Format) -> Result<String> {
    match cmd {
        BellCmd::Quantum { dim } => {
            let em = EfficiencyModel::new(dim.eta)?;
            let v = bell_value_quantum(1usize << dim.n, em)?;
            emit(&bell_report(v.d, dim.eta, None, v.normalized, v.raw), format)
        }
        BellCmd::Table { dim } => {
            let s = Scenario::bct(dim.n)?;
            let em = EfficiencyModel::new(dim.eta)?;
            let provider = QuantumProvider { scenario: &s, em };
            let v = bell_value_from_table(&provider)?;
            emit(&bell_report(v.d, dim.eta, None, v.normalized, v.raw), format)
        }
        BellCmd::Noisy { dim, w } => {
            let em = EfficiencyModel::new(dim.eta)?;
            let v = bell_value_noisy(1usize << dim.n, em, *w)?;
            emit(
                &bell_report(v.d, dim.eta, Some(*w), v.normalized, v.raw),
                format,
            )
        }
        BellCmd::Sample {
            dim,
            trials,
            seed,
            shards,
        } => {
            let s = Scenario::bct(dim.n)?;
            let em = EfficiencyModel::new(dim.eta)?;
            let est = estimate_bell_sampled_sharded(&s, em, *trials, *seed, *shards)?;
            let report = BellReport {
                d: s.d(),
                eta: dim.eta,
                w: None,
                normalized_value: est.mean,
                raw_value: None,
                samples: Some(est.samples),
                stderr: Some(est.stderr),
                seed: Some(est.seed),
            };
            emit(&report, format)
        }
    }
}

fn bell_report(d: usize, eta: f64, w: Option<f64>, normalized: f64, raw: Option<f64>) -> BellReport {
    BellReport {
        d,
        eta,
        w,
        normalized_value: normalized,
        raw_value: raw,
        samples: None,
        stderr: None,
        seed: None,
    }
}

fn write_witness(path: &Path, set: &AvoidanceSet) -> Result<()> {
    let mut text = String::new();
    for member in &set.members {
        text.push_str(&member.to_string());
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn run_zset(cmd: &ZsetCmd, format: Format) -> Result<String> {
    match cmd {
        ZsetCmd::Exact {
            d,
            budget,
            cross_check,
            assume_zero,
            witness_out,
        } => {
            let cfg = ExactSearchConfig {
                budget: *budget,
                assume_zero_member: *assume_zero,
                ..ExactSearchConfig::default()
            };
            let set = max_z_exact(*d, &cfg)?;
            if let Some(path) = witness_out {
                write_witness(path, &set)?;
            }
            let oracle_agreement = if *cross_check {
                let oracle = brute_force_max_avoidance(*d)?;
                Some(oracle.size() == set.size())
            } else {
                None
            };
            let bound = eta_bound_from_log2_z(*d, (set.size() as f64).log2());
            let report = ZsetReport {
                d: *d,
                method: "exact".into(),
                z_size: Some(set.size() as u64),
                z_size_log2: None,
                eta_exact_bound: bound,
                eta_paper_bound: eta_paper_bound(*d),
                closes_loophole: bound < 1.0,
                oracle_agreement,
                first_closure_d: None,
            };
            emit(&report, format)
        }
        ZsetCmd::Greedy {
            d,
            seed,
            restarts,
            witness_out,
        } => {
            let set = z_greedy(*d, *seed, *restarts)?;
            if let Some(path) = witness_out {
                write_witness(path, &set)?;
            }
            let bound = eta_bound_from_log2_z(*d, (set.size().max(1) as f64).log2());
            let report = ZsetReport {
                d: *d,
                method: "greedy".into(),
                z_size: Some(set.size() as u64),
                z_size_log2: None,
                eta_exact_bound: bound,
                eta_paper_bound: eta_paper_bound(*d),
                closes_loophole: bound < 1.0,
                oracle_agreement: None,
                first_closure_d: None,
            };
            emit(&report, format)
        }
        ZsetCmd::Thresholds { d, source } => {
            let src = match source {
                SourceArg::Exact => ZSource::Exact(ExactSearchConfig::default()),
                SourceArg::Greedy => ZSource::Greedy {
                    seed: 0,
                    restarts: 32,
                },
                SourceArg::FrBound => ZSource::FrBound,
            };
            let t = threshold_report(*d, &src)?;
            let (z_size, z_size_log2) = match t.z_size {
                ZSizeUsed::Exact(z) | ZSizeUsed::Greedy(z) => (Some(z), None),
                ZSizeUsed::FrBoundLog2(l) => (None, Some(l)),
            };
            let report = ZsetReport {
                d: t.d,
                method: match source {
                    SourceArg::Exact => "exact",
                    SourceArg::Greedy => "greedy",
                    SourceArg::FrBound => "fr_bound",
                }
                .into(),
                z_size,
                z_size_log2,
                eta_exact_bound: t.eta_exact_bound,
                eta_paper_bound: t.eta_paper_bound,
                closes_loophole: t.closes_loophole,
                oracle_agreement: None,
                first_closure_d: Some(first_closure_d()),
            };
            emit(&report, format)
        }
        ZsetCmd::Curve {
            d_min,
            d_max,
            step,
            source,
        } => {
            if d_min % 2 != 0 || step % 2 != 0 || *step == 0 || *d_min < 4 {
                return Err(Error::invalid(
                    "the curve needs even d values: even d_min >= 4 and even step >= 2",
                ));
            }
            if d_max < d_min {
                return Err(Error::invalid("d_max must be at least d_min"));
            }
            let mut dims: Vec<usize> = (*d_min..=*d_max).step_by(*step).collect();
            let crossing = first_closure_d();
            if !dims.contains(&crossing) {
                dims.push(crossing);
                dims.sort_unstable();
            }
            let mut rows = Vec::with_capacity(dims.len());
            for d in dims {
                let witness = match source {
                    SourceArg::FrBound => None,
                    SourceArg::Greedy => {
                        let set = z_greedy(d, 0, 8)?;
                        Some(eta_bound_from_log2_z(d, (set.size().max(1) as f64).log2()))
                    }
                    SourceArg::Exact => {
                        let set = max_z_exact(d, &ExactSearchConfig::default())?;
                        Some(eta_bound_from_log2_z(d, (set.size() as f64).log2()))
                    }
                };
                let paper = eta_paper_bound(d);
                rows.push(CurveRow {
                    d,
                    eta_paper_bound: paper,
                    eta_witness_bound: witness,
                    closes_loophole: paper < 1.0,
                });
            }
            match format {
                Format::Csv => Ok(curve_to_csv(&rows)),
                Format::Json => {
                    #[derive(serde::Serialize)]
                    struct JsonRow {
                        d: usize,
                        eta_paper_bound: f64,
                        #[serde(skip_serializing_if = "Option::is_none")]
                        eta_witness_bound: Option<f64>,
                        closes_loophole: bool,
                    }
                    let rows: Vec<JsonRow> = rows
                        .into_iter()
                        .map(|r| JsonRow {
                            d: r.d,
                            eta_paper_bound: r.eta_paper_bound,
                            eta_witness_bound: r.eta_witness_bound,
                            closes_loophole: r.closes_loophole,
                        })
                        .collect();
                    to_json(&rows)
                }
            }
        }
    }
}

#[derive(Deserialize)]
struct PairFile {
    domain_a: Vec<String>,
    domain_b: Vec<String>,
    f: Vec<u16>,
    g: Vec<u16>,
}

fn bct_labels(m: u64, d: usize) -> Result<Vec<BitString>> {
    if d < 64 && m > (1u64 << d) {
        return Err(Error::invalid(format!(
            "cannot take {m} labels from a domain of 2^{d}"
        )));
    }
    Ok((0..m).map(|v| BitString::from_index(v, d)).collect())
}

fn scenario_and_labels(
    n: Option<u32>,
    m: Option<u64>,
    file: Option<&PathBuf>,
) -> Result<(Scenario, Vec<BitString>, Vec<BitString>)> {
    match (n, file) {
        (Some(n), None) => {
            let m = m.ok_or_else(|| Error::invalid("--m is required with --n"))?;
            let s = Scenario::bct(n)?;
            let labels = bct_labels(m, s.d())?;
            Ok((s, labels.clone(), labels))
        }
        (None, Some(path)) => {
            let s = load_explicit_scenario(path)?;
            let (na, nb) = s.num_measurements();
            let to_labels = |count: u64, d: usize| -> Vec<BitString> {
                (0..count).map(|v| BitString::from_index(v, d)).collect()
            };
            let labels_a = to_labels(na.unwrap_or(0), s.d());
            let labels_b = to_labels(nb.unwrap_or(0), s.d());
            Ok((s, labels_a, labels_b))
        }
        _ => Err(Error::invalid(
            "give either --n (with --m) or --scenario-file",
        )),
    }
}

fn run_lhv(cmd: &LhvCmd, format: Format) -> Result<String> {
    match cmd {
        LhvCmd::Value {
            d,
            constant,
            pair_file,
        } => {
            let pair = match (constant, pair_file) {
                (Some(k), None) => {
                    if *k as usize > *d {
                        return Err(Error::invalid(format!("outcome {k} exceeds d = {d}")));
                    }
                    let labels = full_domain(*d)?;
                    StrategyPair::constant(labels.clone(), labels, *k)
                }
                (None, Some(path)) => {
                    let doc: PairFile = serde_json::from_str(&fs::read_to_string(path)?)?;
                    let parse = |v: &[String]| -> Result<Vec<BitString>> {
                        v.iter().map(|s| BitString::from_str(s)).collect()
                    };
                    let labels_a = parse(&doc.domain_a)?;
                    let labels_b = parse(&doc.domain_b)?;
                    StrategyPair::new(
                        labels_a.into(),
                        labels_b.into(),
                        doc.f.into_iter().map(OutcomeIndex).collect(),
                        doc.g.into_iter().map(OutcomeIndex).collect(),
                    )?
                }
                _ => {
                    return Err(Error::invalid(
                        "give exactly one of --constant or --pair-file",
                    ))
                }
            };
            let value = lv_bell_value(&pair)?;
            emit(&LhvValueReport { d: *d, value }, format)
        }
        LhvCmd::Optimize {
            d,
            seed,
            iterations,
        } => {
            let out = best_response_maximize(*d, *seed, *iterations)?;
            let z = max_z_exact(*d, &ExactSearchConfig::default())?;
            let report = OptimizeReport {
                d: *d,
                seed: *seed,
                half_steps: out.half_step_values.len() - 1,
                value: out.value,
                upper_bound: (*d * z.size()) as f64,
            };
            emit(&report, format)
        }
        LhvCmd::Popescu { n, m } => {
            let s = Scenario::bct(*n)?;
            let labels = bct_labels(*m, s.d())?;
            let (model, eta) = popescu_model(&labels, &labels, &s)?;
            let deviation = verify_model_reproduces(&model, &s, EfficiencyModel::new(eta)?)?;
            let report = PopescuReport {
                d: s.d(),
                m: *m as usize,
                eta,
                strategies: model.strategies.len(),
                max_deviation: deviation,
            };
            emit(&report, format)
        }
        LhvCmd::Lp {
            n,
            m,
            scenario_file,
            eta,
            cap,
            certificate_out,
        } => {
            let (s, labels_a, labels_b) = scenario_and_labels(*n, *m, scenario_file.as_ref())?;
            let cfg = FeasibilityConfig {
                strategy_cap: *cap as u128,
                ..FeasibilityConfig::default()
            };
            let em = EfficiencyModel::new(*eta)?;
            let result = local_feasibility_lp(&s, &labels_a, &labels_b, em, &cfg)?;
            let certificate_path = match (&result.certificate, certificate_out) {
                (Some(model), Some(path)) => {
                    let mut text = String::new();
                    for (w, pair) in &model.strategies {
                        let row = serde_json::json!({
                            "weight": w,
                            "f": pair.f.iter().map(|o| o.value()).collect::<Vec<_>>(),
                            "g": pair.g.iter().map(|o| o.value()).collect::<Vec<_>>(),
                        });
                        text.push_str(&serde_json::to_string(&row)?);
                        text.push('\n');
                    }
                    fs::write(path, text)?;
                    Some(path.display().to_string())
                }
                _ => None,
            };
            let report = FeasibilityReport {
                eta: result.eta,
                feasible: result.feasible,
                residual: result.residual,
                strategy_count: result.strategy_count as u64,
                certificate_path,
            };
            emit(&report, format)
        }
        LhvCmd::Etastar {
            n,
            m,
            scenario_file,
            tol,
            cap,
        } => {
            let (s, labels_a, labels_b) = scenario_and_labels(*n, *m, scenario_file.as_ref())?;
            let cfg = FeasibilityConfig {
                strategy_cap: *cap as u128,
                ..FeasibilityConfig::default()
            };
            let result = eta_star_bisection(&s, &labels_a, &labels_b, *tol, &cfg)?;
            let report = EtaStarReport {
                eta_star: result.eta_star,
                tol: *tol,
                no_violation: result.no_violation,
                lp_calls: result.lp_calls,
            };
            emit(&report, format)
        }
    }
}

fn run_bridge(cmd: &BridgeCmd, format: Format) -> Result<String> {
    match cmd {
        BridgeCmd::Rejection {
            n,
            eta,
            trials,
            seed,
            cap,
        } => {
            if *eta <= 0.0 || *eta > 1.0 {
                return Err(Error::invalid("eta must lie in (0, 1]"));
            }
            let m = (1.0 / eta).round() as u64;
            if m == 0 || (1.0 / m as f64 - eta).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "the quadruple model needs eta = 1/M for an integer M, got {eta}"
                )));
            }
            let s = Scenario::bct(*n)?;
            let labels = bct_labels(m, s.d())?;
            let model = SampledLvModel::from_popescu(&s, &labels, &labels)?;
            let mut pairs = Vec::new();
            for x in &labels {
                for y in &labels {
                    pairs.push((x.clone(), y.clone()));
                }
            }
            let stats = average_communication_stats(&model, &pairs, *trials, *seed, *cap)?;
            let chi = chi_square_conditional(&stats, &s, &pairs)?;
            let report = RejectionReport {
                eta: *eta,
                trials: *trials,
                mean_bits: stats.mean_bits,
                mean_iterations: stats.mean_iterations,
                chi2_p: chi.p_value,
            };
            emit(&report, format)
        }
        BridgeCmd::Guess { n, m, equalize } => {
            let s = Scenario::bct(*n)?;
            let labels = bct_labels(*m, s.d())?;
            let protocol = fixture_protocol(&s, &labels, &labels)?;
            let analysis = if *equalize {
                analyze_mu_construction(&EqualizedProtocol::new(protocol))?
            } else {
                analyze_mu_construction(&protocol)?
            };
            let report = GuessReport {
                bridge: analysis.bridge_label,
                c_alice: analysis.c_alice,
                c_bob: analysis.c_bob,
                eta_alice: analysis.eta_alice,
                eta_bob: analysis.eta_bob,
                alice_click_rate: analysis.alice_click_rate,
                bob_click_rate: analysis.bob_click_rate,
                joint_click_rate: analysis.joint_click_rate,
                joint_rate_deviation: analysis.joint_rate_deviation,
                conditional_deviation: analysis.conditional_deviation,
                marginal_deviation: analysis.marginal_deviation,
            };
            emit(&report, format)
        }
        BridgeCmd::Bounds { d, eta, c, m } => {
            let record = bound_calculators(*d, *eta, *c, *m)?;
            emit(&record, format)
        }
    }
}
