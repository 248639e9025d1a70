use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use unitree::harness::bench::{bench_network, bench_propagation, default_qs, BenchConfig, BenchRecord};
use unitree::harness::crossval::{crossval, CrossvalConfig};
use unitree::io::bif::{parse_dag, parse_network};
use unitree::io::data::{load_dataset, DataOptions, DiscreteDataset};
use unitree::propagation::PropagationOptions;
use unitree::{AssignRule, BayesianNetwork, CompileOptions, Dag, Error, Evidence, PropagationState, SmoothingPolicy};

#[derive(Parser, Debug)]
#[command(name = "unitree", version, about = "Junction tree inference with unity smoothing and unity propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Posterior marginals given evidence.
    Query(QueryArgs),
    /// k-fold class prediction error per number of observed features.
    Crossval(CrossvalArgs),
    /// Propagation with and without unity propagation on random evidence.
    BenchPropagation(BenchPropagationArgs),
    /// No-evidence propagation with and without unity propagation.
    BenchNetwork(BenchNetworkArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    MleUnity,
    Laplace,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AssignArg {
    Smallest,
    First,
}

impl From<AssignArg> for AssignRule {
    fn from(a: AssignArg) -> Self {
        match a {
            AssignArg::Smallest => AssignRule::Smallest,
            AssignArg::First => AssignRule::First,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// BIF network file.
    #[arg(long, value_name = "PATH")]
    network: Option<PathBuf>,
    /// DAG file (`parent -> child` lines), fitted to --data.
    #[arg(long, value_name = "PATH")]
    dag: Option<PathBuf>,
    /// Delimiter-separated data with a header row.
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Field delimiter of --data.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[arg(long, value_enum, default_value_t = PolicyArg::MleUnity)]
    policy: PolicyArg,
    /// Laplace pseudo-count.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Unity smoothing value.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = AssignArg::Smallest)]
    assign: AssignArg,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct QRange {
    #[arg(long)]
    q_min: Option<usize>,
    #[arg(long)]
    q_max: Option<usize>,
    #[arg(long)]
    q_step: Option<usize>,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Observations as `var=level,...`.
    #[arg(long, default_value = "")]
    evidence: String,
    /// Variables to report; every unobserved variable by default.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    up: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CrossvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    class: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[command(flatten)]
    q: QRange,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    up: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BenchPropagationArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    q: QRange,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BenchNetworkArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Degenerate(_) => 3,
        Error::Config(_) => 1,
        _ => 2,
    }
}

fn read(path: &Path) -> unitree::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn policies(m: &ModelArgs) -> Vec<SmoothingPolicy> {
    let unity = SmoothingPolicy { alpha: m.alpha, ..SmoothingPolicy::mle_unity(m.epsilon) };
    let laplace = SmoothingPolicy { epsilon: m.epsilon, ..SmoothingPolicy::laplace(m.alpha) };
    match m.policy {
        PolicyArg::MleUnity => vec![unity],
        PolicyArg::Laplace => vec![laplace],
        PolicyArg::Both => vec![unity, laplace],
    }
}

fn load_data(m: &ModelArgs) -> unitree::Result<(Dag, DiscreteDataset)> {
    let (Some(dag), Some(data)) = (&m.dag, &m.data) else {
        return Err(Error::Config("need --network, or --dag together with --data".into()));
    };
    let dag = parse_dag(&read(dag)?)?;
    if !m.delimiter.is_ascii() {
        return Err(Error::Config("the delimiter must be an ASCII character".into()));
    }
    let opts = DataOptions { delimiter: m.delimiter as u8, ..Default::default() };
    let data = load_dataset(&read(data)?, &opts)?;
    if data.inferred_levels() {
        eprintln!("warning: levelsets inferred from the data; unseen levels cannot be observed");
    }
    Ok((dag, data))
}

fn load_model(m: &ModelArgs) -> unitree::Result<BayesianNetwork> {
    if let Some(path) = &m.network {
        return parse_network(&read(path)?);
    }
    let policy = match policies(m).as_slice() {
        [p] => *p,
        _ => return Err(Error::Config("--policy both is only meaningful for crossval".into())),
    };
    let (dag, data) = load_data(m)?;
    BayesianNetwork::fit(&dag, &data, &policy)
}

fn q_values(r: &QRange, default: Vec<usize>, max: usize) -> unitree::Result<Vec<usize>> {
    if r.q_min.is_none() && r.q_max.is_none() && r.q_step.is_none() {
        return Ok(default);
    }
    let (lo, hi, step) = (r.q_min.unwrap_or(2), r.q_max.unwrap_or(max), r.q_step.unwrap_or(1));
    if step == 0 || lo > hi || hi > max {
        return Err(Error::Config(format!("q range {lo}..={hi} step {step} is invalid for at most {max} observations")));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn write_output(out: &OutputArgs, text: String) -> unitree::Result<()> {
    match &out.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn record_rows(records: &[BenchRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.q.to_string(),
                r.repetition.to_string(),
                if r.mode == unitree::harness::bench::Mode::Up { "up" } else { "no-up" }.to_string(),
                r.elapsed_ns.to_string(),
                r.counters.partial_multiplications.to_string(),
                r.counters.partial_divisions.to_string(),
                r.counters.projections.to_string(),
                r.counters.avoided_multiplications.to_string(),
                r.counters.avoided_divisions.to_string(),
                r.init_counters.performed().to_string(),
                r.performed.to_string(),
                r.eta.map(|e| format!("{e:?}")).unwrap_or_default(),
                r.smoothed.to_string(),
                r.degenerate.to_string(),
                r.evidence_digest.clone(),
            ]
        })
        .collect()
}

const RECORD_HEADER: [&str; 15] = [
    "q",
    "repetition",
    "mode",
    "elapsed_ns",
    "partial_multiplications",
    "partial_divisions",
    "projections",
    "avoided_multiplications",
    "avoided_divisions",
    "init_operations",
    "performed",
    "eta",
    "smoothed",
    "degenerate",
    "evidence_digest",
];

fn cmd_query(a: &QueryArgs) -> unitree::Result<()> {
    let bn = load_model(&a.model)?;
    let policy = policies(&a.model)[0];
    let evidence = Evidence::parse(&a.evidence, bn.variables())?;
    let jt = bn.compile(&CompileOptions { assign: a.model.assign.into(), target: None })?;
    let opts = PropagationOptions::for_policy(&policy, a.up);

    let t0 = Instant::now();
    let mut state = PropagationState::initialize(&jt, &bn, &evidence, opts)?;
    let t1 = Instant::now();
    state.collect().map_err(|e| match e {
        Error::Degenerate(m) if opts.epsilon.is_none() => {
            Error::Degenerate(format!("{m}; smoothing is off, use --policy mle-unity to smooth inconsistent CPTs"))
        }
        e => e,
    })?;
    let t2 = Instant::now();
    state.distribute()?;
    let t3 = Instant::now();

    let targets: Vec<String> = if a.targets.is_empty() {
        bn.variables().iter().map(|v| v.name().to_string()).filter(|n| !evidence.contains(n)).collect()
    } else {
        a.targets.clone()
    };
    let mut posteriors = BTreeMap::new();
    for t in &targets {
        let var = bn.variable(t)?;
        let p = state.posterior(t)?;
        let levels: serde_json::Map<String, Value> =
            var.levels().iter().zip(p).map(|(l, x)| (l.clone(), json!(x))).collect();
        posteriors.insert(t.clone(), Value::Object(levels));
    }
    let mut scenarios: BTreeMap<&str, usize> = ["i", "ii", "iii", "iv"].iter().map(|s| (*s, 0)).collect();
    for rec in state.log() {
        for s in &rec.scenarios {
            *scenarios.entry(s.tag()).or_default() += 1;
        }
    }
    let eta = state.prob_evidence()?;
    let evidence_map: BTreeMap<&str, &str> =
        evidence.iter().map(|(n, l)| (n, bn.variable(n).map(|v| v.levels()[l].as_str()).unwrap_or(""))).collect();
    let report = json!({
        "network": bn.name(),
        "evidence": evidence_map,
        "up_enabled": a.up,
        "policy": policy,
        "posteriors": posteriors,
        "eta": { "value": eta.value, "smoothed": eta.smoothed },
        "smoothing": state.smoothing_events(),
        "scenarios": scenarios,
        "counters": state.counters(),
        "init_counters": state.init_counters(),
        "performed": state.counters().performed() + state.init_counters().performed(),
        "timings_ns": {
            "initialize": (t1 - t0).as_nanos() as u64,
            "collect": (t2 - t1).as_nanos() as u64,
            "distribute": (t3 - t2).as_nanos() as u64,
        },
        "cliques": jt.len(),
        "unity_cliques": jt.unity_cliques().len(),
    });
    let text = match a.output.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut rows = Vec::new();
            for t in &targets {
                let var = bn.variable(t)?;
                for (l, x) in var.levels().iter().zip(state.posterior(t)?) {
                    rows.push(vec![t.clone(), l.clone(), format!("{x:?}")]);
                }
            }
            csv_text(&["variable", "level", "probability"], rows)
        }
    };
    write_output(&a.output, text)
}

fn cmd_crossval(a: &CrossvalArgs) -> unitree::Result<()> {
    let (dag, data) = load_data(&a.model)?;
    let features = dag.len().saturating_sub(1);
    let cfg = CrossvalConfig {
        class: a.class.clone(),
        folds: a.folds,
        qs: q_values(&a.q, (2..=features).collect(), features)?,
        seed: a.seed,
        policies: policies(&a.model),
        assign: a.model.assign.into(),
        up_enabled: a.up,
    };
    let report = crossval(&dag, &data, &cfg)?;
    let text = match a.output.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let rows = report
                .points
                .iter()
                .map(|p| {
                    let policy = match p.policy.kind {
                        unitree::SmoothingKind::MleUnity => "mle-unity",
                        unitree::SmoothingKind::Laplace => "laplace",
                    };
                    vec![policy.to_string(), p.q.to_string(), format!("{:?}", p.error), p.cases.to_string(), p.degenerate.to_string()]
                })
                .collect();
            csv_text(&["policy", "q", "error", "cases", "degenerate"], rows)
        }
    };
    write_output(&a.output, text)
}

fn cmd_bench_propagation(a: &BenchPropagationArgs) -> unitree::Result<()> {
    let bn = load_model(&a.model)?;
    let cfg = BenchConfig {
        qs: q_values(&a.q, default_qs(bn.len()), bn.len())?,
        repetitions: a.reps,
        seed: a.seed,
        epsilon: a.model.epsilon,
        assign: a.model.assign.into(),
    };
    let report = bench_propagation(&bn, &cfg)?;
    let text = match a.output.format {
        Format::Json => to_json(&report),
        Format::Csv => csv_text(&RECORD_HEADER, record_rows(&report.records)),
    };
    write_output(&a.output, text)
}

fn cmd_bench_network(a: &BenchNetworkArgs) -> unitree::Result<()> {
    let bn = load_model(&a.model)?;
    let report = bench_network(&bn, a.model.assign.into(), a.reps)?;
    let text = match a.output.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let Value::Object(map) = serde_json::to_value(&report).expect("serializable report") else {
                unreachable!("reports serialize to objects")
            };
            let header: Vec<&str> = map.keys().map(String::as_str).collect();
            let row = map.values().map(|v| v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string())).collect();
            csv_text(&header, vec![row])
        }
    };
    write_output(&a.output, text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Query(a) => cmd_query(a),
        Command::Crossval(a) => cmd_crossval(a),
        Command::BenchPropagation(a) => cmd_bench_propagation(a),
        Command::BenchNetwork(a) => cmd_bench_network(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
