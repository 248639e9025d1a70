//! Timing and operation-count comparisons of propagation with and without
//! unity propagation.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AssignRule, CompileOptions, JunctionTree};
use crate::harness::synth::{evidence_digest, uniform_evidence};
use crate::network::BayesianNetwork;
use crate::propagation::{PropagationOptions, PropagationState};
use crate::unity::OpCounter;
use crate::variable::Evidence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Up,
    NoUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub q: usize,
    pub repetition: usize,
    pub mode: Mode,
    pub elapsed_ns: u64,
    pub counters: OpCounter,
    pub init_counters: OpCounter,
    /// Performed operations including clique initialization.
    pub performed: u64,
    pub eta: Option<f64>,
    pub smoothed: bool,
    /// Evidence of probability zero under the model even after smoothing;
    /// distribute is skipped.
    pub degenerate: bool,
    pub evidence_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSummary {
    pub q: usize,
    pub up_performed: u64,
    pub no_up_performed: u64,
    pub counter_ratio: f64,
    pub up_time_ns: u64,
    pub no_up_time_ns: u64,
    pub time_ratio: f64,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationBench {
    pub network: String,
    pub variables: usize,
    pub cliques: usize,
    pub unity_cliques: usize,
    pub seed: u64,
    pub repetitions: usize,
    pub epsilon: f64,
    pub summary: Vec<QSummary>,
    pub records: Vec<BenchRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub qs: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub assign: AssignRule,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { qs: Vec::new(), repetitions: 200, seed: 0, epsilon: 1.0, assign: AssignRule::Smallest }
    }
}

/// `2, 4, ...` up to `n - 1`.
pub fn default_qs(n: usize) -> Vec<usize> {
    (2..n).step_by(2).collect()
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        if a == 0 { 1.0 } else { f64::INFINITY }
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub elapsed_ns: u64,
    pub counters: OpCounter,
    pub init_counters: OpCounter,
    pub message_counters: OpCounter,
    pub eta: Option<f64>,
    pub smoothed: bool,
    pub degenerate: bool,
}

impl RunOutcome {
    pub fn performed(&self) -> u64 {
        self.counters.performed() + self.init_counters.performed()
    }
}

/// Full propagation in one mode. Degenerate evidence stops after the failed
/// collect; the counters up to that point are kept.
pub fn timed_run(
    jt: &JunctionTree,
    bn: &BayesianNetwork<f64>,
    ev: &Evidence,
    opts: PropagationOptions,
) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut s = PropagationState::initialize(jt, bn, ev, opts)?;
    let (eta, degenerate) = match s.collect() {
        Ok(()) => {
            s.distribute()?;
            (Some(s.prob_evidence()?.value), false)
        }
        Err(Error::Degenerate(_)) => (None, true),
        Err(e) => return Err(e),
    };
    Ok(RunOutcome {
        elapsed_ns: start.elapsed().as_nanos() as u64,
        counters: s.counters(),
        init_counters: s.init_counters(),
        message_counters: s.message_counters(),
        eta,
        smoothed: !s.smoothing_events().is_empty(),
        degenerate,
    })
}

/// For each `q`, draws `repetitions` seeded evidence sets of `q` uniformly
/// chosen variables and levels and propagates each in both modes.
pub fn bench_propagation(bn: &BayesianNetwork<f64>, cfg: &BenchConfig) -> Result<PropagationBench> {
    if let Some(&q) = cfg.qs.iter().find(|&&q| q > bn.len()) {
        return Err(Error::Config(format!("q = {q} exceeds the {} variables", bn.len())));
    }
    let jt = bn.compile(&CompileOptions { assign: cfg.assign, target: None })?;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for &q in &cfg.qs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(q as u64);
        let (mut up_ops, mut no_ops, mut up_t, mut no_t, mut degenerate) = (0, 0, 0, 0, 0);
        for rep in 0..cfg.repetitions {
            let ev = uniform_evidence(bn.variables(), &mut rng, q)?;
            let digest = evidence_digest(&ev);
            for mode in [Mode::Up, Mode::NoUp] {
                let opts = PropagationOptions { up_enabled: mode == Mode::Up, epsilon: Some(cfg.epsilon), neglect_weights: false };
                let run = timed_run(&jt, bn, &ev, opts)?;
                let performed = run.performed();
                match mode {
                    Mode::Up => {
                        up_ops += performed;
                        up_t += run.elapsed_ns;
                        degenerate += run.degenerate as usize;
                    }
                    Mode::NoUp => {
                        no_ops += performed;
                        no_t += run.elapsed_ns;
                    }
                }
                records.push(BenchRecord {
                    q,
                    repetition: rep,
                    mode,
                    elapsed_ns: run.elapsed_ns,
                    counters: run.counters,
                    init_counters: run.init_counters,
                    performed,
                    eta: run.eta,
                    smoothed: run.smoothed,
                    degenerate: run.degenerate,
                    evidence_digest: digest.clone(),
                });
            }
        }
        summary.push(QSummary {
            q,
            up_performed: up_ops,
            no_up_performed: no_ops,
            counter_ratio: ratio(up_ops, no_ops),
            up_time_ns: up_t,
            no_up_time_ns: no_t,
            time_ratio: ratio(up_t, no_t),
            degenerate,
        });
    }
    Ok(PropagationBench {
        network: bn.name().to_string(),
        variables: bn.len(),
        cliques: jt.len(),
        unity_cliques: jt.unity_cliques().len(),
        seed: cfg.seed,
        repetitions: cfg.repetitions,
        epsilon: cfg.epsilon,
        summary,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkBench {
    pub network: String,
    pub variables: usize,
    pub cliques: usize,
    pub unity_cliques: usize,
    /// Variables in the largest clique.
    pub max_clique: usize,
    /// Variables in the largest unity clique, zero when there is none.
    pub max_unity_clique: usize,
    pub repetitions: usize,
    pub up_time_ns: u64,
    pub no_up_time_ns: u64,
    pub time_ratio: f64,
    /// All performed operations, initialization and normalization included.
    pub up_performed: u64,
    pub no_up_performed: u64,
    pub performed_ratio: f64,
    /// Operations spent on messages between cliques.
    pub up_message_ops: u64,
    pub no_up_message_ops: u64,
    pub counter_ratio: f64,
}

/// No-evidence propagation of a network in both modes.
pub fn bench_network(bn: &BayesianNetwork<f64>, assign: AssignRule, repetitions: usize) -> Result<NetworkBench> {
    let jt = bn.compile(&CompileOptions { assign, target: None })?;
    let ev = Evidence::new();
    let mut t = [0u64; 2];
    let mut ops = [0u64; 2];
    let mut msg = [0u64; 2];
    for _ in 0..repetitions.max(1) {
        for (k, up) in [true, false].into_iter().enumerate() {
            let opts = PropagationOptions { up_enabled: up, epsilon: Some(1.0), neglect_weights: false };
            let run = timed_run(&jt, bn, &ev, opts)?;
            t[k] += run.elapsed_ns;
            ops[k] = run.performed();
            msg[k] = run.message_counters.performed();
        }
    }
    Ok(NetworkBench {
        network: bn.name().to_string(),
        variables: bn.len(),
        cliques: jt.len(),
        unity_cliques: jt.unity_cliques().len(),
        max_clique: jt.max_clique_size(),
        max_unity_clique: jt.max_unity_clique_size(),
        repetitions: repetitions.max(1),
        up_time_ns: t[0],
        no_up_time_ns: t[1],
        time_ratio: ratio(t[0], t[1]),
        up_performed: ops[0],
        no_up_performed: ops[1],
        performed_ratio: ratio(ops[0], ops[1]),
        up_message_ops: msg[0],
        no_up_message_ops: msg[1],
        counter_ratio: ratio(msg[0], msg[1]),
    })
}
