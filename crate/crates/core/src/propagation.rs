//! Collect/distribute message passing over a junction tree.
//!
//! With unity propagation enabled, clique potentials are triples and every
//! shortcut of the triple algebra is taken. With it disabled, each clique is
//! an explicit potential over its evidence-reduced domain, unity cliques are
//! filled with ones and every product, division and projection is carried
//! out. Both modes report their work to an [`OpCounter`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{argmax, enter_evidence, scalar_from_f64, SmoothingCase, SmoothingKind, SmoothingPolicy};
use crate::graph::JunctionTree;
use crate::network::BayesianNetwork;
use crate::potential::Potential;
use crate::scalar::Scalar;
use crate::unity::{OpCounter, UnityPotential};
use crate::variable::{domain, Evidence, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub up_enabled: bool,
    /// Unity smoothing value; `None` leaves inconsistent CPTs null.
    pub epsilon: Option<f64>,
    /// Keep every weight at one. Disables the probability of evidence.
    pub neglect_weights: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions { up_enabled: true, epsilon: Some(1.0), neglect_weights: false }
    }
}

impl PropagationOptions {
    /// Smoothing follows the policy: unity smoothing for mle-unity, none for
    /// Laplace (whose CPTs are strictly positive).
    pub fn for_policy(policy: &SmoothingPolicy, up_enabled: bool) -> Self {
        let epsilon = match policy.kind {
            SmoothingKind::MleUnity => Some(policy.epsilon),
            SmoothingKind::Laplace => None,
        };
        PropagationOptions { up_enabled, epsilon, neglect_weights: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Initialized,
    Collected,
    Distributed,
}

/// Shortcut classes of the triple algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// The receiver needs no partial multiplication.
    #[serde(rename = "i")]
    NoMultiplication,
    /// The sender needs no partial division.
    #[serde(rename = "ii")]
    NoDivision,
    /// Partials are multiplied but unity variables stay symbolic.
    #[serde(rename = "iii")]
    SymbolicUnity,
    /// An inconsistent CPT entered as a unity triple.
    #[serde(rename = "iv")]
    SmoothedCpt,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::NoMultiplication => "i",
            Scenario::NoDivision => "ii",
            Scenario::SymbolicUnity => "iii",
            Scenario::SmoothedCpt => "iv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pass {
    Init,
    Collect,
    Distribute,
}

/// One logged step: a message between cliques, or a smoothed CPT entering
/// a clique at initialization (`from == to`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub pass: Pass,
    pub from: usize,
    pub to: usize,
    pub separator: Vec<String>,
    pub scenarios: Vec<Scenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cpt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothingEvent {
    pub child: String,
    pub clique: usize,
    pub case: SmoothingCase,
}

/// Probability of evidence; `smoothed` marks an ε-scaled value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbEvidence<T> {
    pub value: T,
    pub smoothed: bool,
}

#[derive(Debug, Clone)]
enum Cliques<T> {
    Up(Vec<UnityPotential<T>>),
    Plain(Vec<Potential<T>>),
}

#[derive(Debug, Clone)]
pub struct PropagationState<'a, T = f64> {
    jt: &'a JunctionTree,
    reduced: Vec<Vec<Variable>>,
    cliques: Cliques<T>,
    separators: Vec<UnityPotential<T>>,
    evidence: Evidence,
    eta: Option<T>,
    smoothing: Vec<SmoothingEvent>,
    counters: OpCounter,
    init_counters: OpCounter,
    message_counters: OpCounter,
    phase: Phase,
    opts: PropagationOptions,
    log: Vec<MessageRecord>,
}

impl<'a, T: Scalar> PropagationState<'a, T> {
    /// Enters evidence into every assigned CPT and builds the clique and
    /// separator potentials.
    pub fn initialize(
        jt: &'a JunctionTree,
        bn: &BayesianNetwork<T>,
        evidence: &Evidence,
        opts: PropagationOptions,
    ) -> Result<Self> {
        for (name, level) in evidence.iter() {
            let v = bn.variable(name)?;
            if level >= v.cardinality() {
                return Err(Error::UnknownLevel { var: name.into(), level: level.to_string() });
            }
        }
        let epsilon = opts.epsilon.map(scalar_from_f64::<T>).transpose()?;
        let reduced: Vec<Vec<Variable>> = jt
            .cliques()
            .iter()
            .map(|c| c.iter().filter(|v| !evidence.contains(v.name())).cloned().collect())
            .collect();
        let mut counters = OpCounter::default();
        let mut init_counters = OpCounter::default();
        let mut smoothing = Vec::new();
        let mut log = Vec::new();
        let mut up = Vec::new();
        let mut plain = Vec::new();

        for (c, cstar) in reduced.iter().enumerate() {
            let mut psi = UnityPotential::pure_unity(cstar.clone(), T::one())?;
            let mut acc: Option<Potential<T>> = None;
            for child in jt.assigned(c) {
                let cpt = bn.cpt(child)?;
                if !domain::is_subset(cpt.family(), jt.clique(c)) {
                    return Err(Error::Graph(format!("family of `{child}` is not inside clique {c}")));
                }
                let r = enter_evidence(cpt, evidence, epsilon)?;
                if let Some(case) = r.smoothed {
                    smoothing.push(SmoothingEvent { child: child.clone(), clique: c, case });
                    log.push(MessageRecord {
                        pass: Pass::Init,
                        from: c,
                        to: c,
                        separator: Vec::new(),
                        scenarios: if opts.up_enabled { vec![Scenario::SmoothedCpt] } else { Vec::new() },
                        cpt: Some(child.clone()),
                    });
                }
                if opts.up_enabled {
                    let ops = if r.smoothed.is_some() { &mut counters } else { &mut init_counters };
                    psi = psi.up_multiply(&r.potential, ops)?;
                } else {
                    let m = r.potential.materialize();
                    let ops = if r.smoothed.is_some() { &mut counters } else { &mut init_counters };
                    acc = Some(match acc {
                        None if r.smoothed.is_none() => m,
                        None => {
                            ops.partial_multiplications += 1;
                            m
                        }
                        Some(a) => {
                            ops.partial_multiplications += 1;
                            a.multiply(&m)?
                        }
                    });
                }
            }
            if opts.up_enabled {
                if opts.neglect_weights && !psi.weight().is_zero() {
                    psi = psi.with_weight(T::one());
                }
                up.push(psi);
            } else {
                let p = match acc {
                    None => Potential::unity(cstar.clone())?,
                    Some(a) => {
                        let rest = domain::difference(cstar, a.domain());
                        if rest.is_empty() {
                            a
                        } else {
                            counters.partial_multiplications += 1;
                            let ones = Potential::unity(rest)?.in_representation_of(&a);
                            a.multiply(&ones)?
                        }
                    }
                };
                plain.push(p);
            }
        }

        let separators = (0..jt.edges().len())
            .map(|e| {
                let s: Vec<Variable> = jt.separator(e).into_iter().filter(|v| !evidence.contains(v.name())).collect();
                UnityPotential::pure_unity(s, T::one())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PropagationState {
            jt,
            reduced,
            cliques: if opts.up_enabled { Cliques::Up(up) } else { Cliques::Plain(plain) },
            separators,
            evidence: evidence.clone(),
            eta: None,
            smoothing,
            counters,
            init_counters,
            message_counters: OpCounter::default(),
            phase: Phase::Initialized,
            opts,
            log,
        })
    }

    /// Initialize, collect and distribute.
    pub fn run(jt: &'a JunctionTree, bn: &BayesianNetwork<T>, evidence: &Evidence, opts: PropagationOptions) -> Result<Self> {
        let mut s = Self::initialize(jt, bn, evidence, opts)?;
        s.collect()?;
        s.distribute()?;
        Ok(s)
    }

    /// Inward pass to every root, depth-first post-order, then root
    /// normalization. Fails with a degenerate-evidence error when a root
    /// ends up with zero mass.
    pub fn collect(&mut self) -> Result<()> {
        if self.phase != Phase::Initialized {
            return Err(Error::Phase("collect requires an initialized state".into()));
        }
        let mut eta = T::one();
        for &root in self.jt.roots() {
            let mut order = Vec::new();
            post_order(self.jt, root, usize::MAX, &mut order);
            for (from, to) in order {
                self.send_collect(from, to)?;
            }
            let mass = self.mass(root);
            if mass.is_zero() {
                return Err(Error::Degenerate(format!(
                    "clique {root} has zero mass after collect: the evidence has probability zero"
                )));
            }
            eta *= mass;
            self.normalize_root(root, mass);
        }
        self.eta = Some(eta);
        self.phase = Phase::Collected;
        Ok(())
    }

    /// Outward pass from every root, depth-first pre-order. Messages are not
    /// renormalized.
    pub fn distribute(&mut self) -> Result<()> {
        if self.phase != Phase::Collected {
            return Err(Error::Phase("distribute requires a collected state".into()));
        }
        for &root in self.jt.roots() {
            let mut order = Vec::new();
            pre_order(self.jt, root, usize::MAX, &mut order);
            for (from, to) in order {
                self.send_distribute(from, to)?;
            }
        }
        self.phase = Phase::Distributed;
        Ok(())
    }

    fn separator_domain(&self, a: usize, b: usize) -> Vec<Variable> {
        domain::intersection(&self.reduced[a], &self.reduced[b])
    }

    fn send_collect(&mut self, from: usize, to: usize) -> Result<()> {
        let s = self.separator_domain(from, to);
        let mut scenarios = Vec::new();
        let mut ops = OpCounter::default();
        match &mut self.cliques {
            Cliques::Up(cl) => {
                let ops = &mut ops;
                let msg = cl[from].up_project(&s, ops)?;
                scenarios = classify(&cl[from], &cl[to], &msg, &s, true);
                cl[to] = cl[to].up_multiply(&msg, ops)?;
                cl[from] = cl[from].up_divide_update(&msg, ops)?;
                if self.opts.neglect_weights {
                    for c in [from, to] {
                        if !cl[c].weight().is_zero() {
                            cl[c] = cl[c].with_weight(T::one());
                        }
                    }
                }
            }
            Cliques::Plain(cl) => {
                let msg = plain_project(&cl[from], &s, &mut ops)?;
                ops.partial_multiplications += 1;
                cl[to] = cl[to].multiply(&msg)?;
                ops.partial_divisions += 1;
                cl[from] = cl[from].divide(&msg)?;
            }
        }
        self.counters.add(&ops);
        self.message_counters.add(&ops);
        self.log.push(MessageRecord {
            pass: Pass::Collect,
            from,
            to,
            separator: domain::names(&s),
            scenarios,
            cpt: None,
        });
        Ok(())
    }

    fn send_distribute(&mut self, from: usize, to: usize) -> Result<()> {
        let s = self.separator_domain(from, to);
        let edge = self.jt.edge_between(from, to).expect("tree edge");
        let mut scenarios = Vec::new();
        let mut ops = OpCounter::default();
        match &mut self.cliques {
            Cliques::Up(cl) => {
                let ops = &mut ops;
                let msg = cl[from].up_project(&s, ops)?;
                scenarios = classify(&cl[from], &cl[to], &msg, &s, false);
                cl[to] = cl[to].up_multiply(&msg, ops)?;
                self.separators[edge] = msg;
            }
            Cliques::Plain(cl) => {
                let msg = plain_project(&cl[from], &s, &mut ops)?;
                ops.partial_multiplications += 1;
                cl[to] = cl[to].multiply(&msg)?;
                self.separators[edge] = UnityPotential::from_potential(msg);
            }
        }
        self.counters.add(&ops);
        self.message_counters.add(&ops);
        self.log.push(MessageRecord {
            pass: Pass::Distribute,
            from,
            to,
            separator: domain::names(&s),
            scenarios,
            cpt: None,
        });
        Ok(())
    }

    fn mass(&self, c: usize) -> T {
        match &self.cliques {
            Cliques::Up(cl) => cl[c].total_mass(),
            Cliques::Plain(cl) => cl[c].total_mass(),
        }
    }

    fn normalize_root(&mut self, root: usize, mass: T) {
        match &mut self.cliques {
            Cliques::Up(cl) => {
                self.counters.avoided_divisions += 1;
                cl[root] = cl[root].with_weight(cl[root].weight() / mass);
            }
            Cliques::Plain(cl) => {
                self.counters.partial_divisions += 1;
                cl[root] = cl[root].scale(T::one() / mass);
            }
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn options(&self) -> PropagationOptions {
        self.opts
    }

    pub fn junction_tree(&self) -> &JunctionTree {
        self.jt
    }

    /// Operations of message passing, root normalization and evidence
    /// smoothing.
    pub fn counters(&self) -> OpCounter {
        self.counters
    }

    /// Products of CPTs placed in the same clique.
    pub fn init_counters(&self) -> OpCounter {
        self.init_counters
    }

    /// The part of [`counters`](Self::counters) spent on messages between
    /// cliques.
    pub fn message_counters(&self) -> OpCounter {
        self.message_counters
    }

    pub fn smoothing_events(&self) -> &[SmoothingEvent] {
        &self.smoothing
    }

    pub fn log(&self) -> &[MessageRecord] {
        &self.log
    }

    /// The evidence-reduced domain `C*` of a clique.
    pub fn reduced_domain(&self, c: usize) -> &[Variable] {
        &self.reduced[c]
    }

    /// The current potential of clique `c` as a triple.
    pub fn clique_potential(&self, c: usize) -> UnityPotential<T> {
        match &self.cliques {
            Cliques::Up(cl) => cl[c].clone(),
            Cliques::Plain(cl) => UnityPotential::from_potential(cl[c].clone()),
        }
    }

    pub fn separator_potential(&self, edge: usize) -> &UnityPotential<T> {
        &self.separators[edge]
    }

    /// The probability of evidence recorded by collect.
    pub fn prob_evidence(&self) -> Result<ProbEvidence<T>> {
        if self.opts.neglect_weights {
            return Err(Error::Config("weights were neglected; the probability of evidence is unavailable".into()));
        }
        let value = self.eta.ok_or_else(|| Error::Phase("the probability of evidence needs a collect pass".into()))?;
        Ok(ProbEvidence { value, smoothed: !self.smoothing.is_empty() })
    }

    /// Smallest clique holding all of `vars`. Before distribute only roots
    /// qualify.
    fn clique_for(&self, vars: &[&str]) -> Result<usize> {
        let roots_only = match self.phase {
            Phase::Initialized => return Err(Error::Phase("queries need a collect pass".into())),
            Phase::Collected => true,
            Phase::Distributed => false,
        };
        (0..self.jt.len())
            .filter(|&c| !roots_only || self.jt.roots().contains(&c))
            .filter(|&c| vars.iter().all(|v| domain::contains(&self.reduced[c], v)))
            .min_by_key(|&c| (domain::state_space(&self.reduced[c]), c))
            .ok_or_else(|| {
                let whence = if roots_only { "root clique" } else { "clique" };
                Error::Query(format!("no {whence} contains {{{}}}", vars.join(", ")))
            })
    }

    /// Normalized posterior over `vars` given the evidence, with the domain
    /// in the requested order.
    pub fn query_marginal(&self, vars: &[&str]) -> Result<Potential<T>> {
        if vars.is_empty() {
            return Err(Error::Query("empty query".into()));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::Query(format!("`{v}` queried twice")));
            }
            if self.evidence.contains(v) {
                return Err(Error::Query(format!("`{v}` is observed")));
            }
            if !self.jt.cliques().iter().any(|c| domain::contains(c, v)) {
                return Err(Error::UnknownVariable(v.to_string()));
            }
        }
        let c = self.clique_for(vars)?;
        let onto: Vec<Variable> =
            vars.iter().map(|v| self.reduced[c][domain::position(&self.reduced[c], v).expect("in clique")].clone()).collect();
        let mut scratch = OpCounter::default();
        let p = match &self.cliques {
            Cliques::Up(cl) => cl[c].up_project(&onto, &mut scratch)?.materialize(),
            Cliques::Plain(cl) => cl[c].project(&onto)?,
        };
        let (p, _) = p.normalize()?;
        p.permute(vars)
    }

    /// Posterior vector of one variable in level order.
    pub fn posterior(&self, var: &str) -> Result<Vec<T>> {
        Ok(self.query_marginal(&[var])?.dense_values())
    }

    /// Structured text log, one step per line.
    pub fn log_text(&self) -> String {
        let mut s = String::new();
        for r in &self.log {
            let tags: Vec<&str> = r.scenarios.iter().map(|t| t.tag()).collect();
            let pass = match r.pass {
                Pass::Init => "init",
                Pass::Collect => "collect",
                Pass::Distribute => "distribute",
            };
            if let Some(cpt) = &r.cpt {
                let _ = writeln!(s, "pass={pass} clique={} cpt={cpt} scenarios={}", r.to, tags.join(","));
            } else {
                let _ = writeln!(
                    s,
                    "pass={pass} from={} to={} separator={} scenarios={}",
                    r.from,
                    r.to,
                    r.separator.join(","),
                    tags.join(",")
                );
            }
        }
        s
    }
}

fn classify<T: Scalar>(
    sender: &UnityPotential<T>,
    receiver: &UnityPotential<T>,
    msg: &UnityPotential<T>,
    s: &[Variable],
    collecting: bool,
) -> Vec<Scenario> {
    let a1 = sender.partial_domain();
    let a2 = receiver.partial_domain();
    let a1s = domain::intersection(a1, s);
    let mut out = Vec::new();
    let no_mult = a1s.is_empty() || a2.is_empty();
    if no_mult {
        out.push(Scenario::NoMultiplication);
    }
    if collecting && domain::is_subset(a1, s) {
        out.push(Scenario::NoDivision);
    }
    if !no_mult {
        let b: Vec<&str> = msg.unity_vars().iter().chain(receiver.unity_vars()).map(Variable::name).collect();
        if b.iter().any(|v| !domain::contains(&a1s, v) && !domain::contains(a2, v)) {
            out.push(Scenario::SymbolicUnity);
        }
    }
    out
}

fn plain_project<T: Scalar>(p: &Potential<T>, s: &[Variable], ops: &mut OpCounter) -> Result<Potential<T>> {
    if domain::same_set(p.domain(), s) {
        Ok(p.clone())
    } else {
        ops.projections += 1;
        p.project(s)
    }
}

fn post_order(jt: &JunctionTree, c: usize, parent: usize, out: &mut Vec<(usize, usize)>) {
    for n in jt.neighbors(c) {
        if n != parent {
            post_order(jt, n, c, out);
            out.push((n, c));
        }
    }
}

fn pre_order(jt: &JunctionTree, c: usize, parent: usize, out: &mut Vec<(usize, usize)>) {
    for n in jt.neighbors(c) {
        if n != parent {
            out.push((c, n));
            pre_order(jt, n, c, out);
        }
    }
}

/// Most probable level of `class` after a collect pass to a root holding it.
/// `jt` must be rooted at a clique containing the class.
pub fn predict_class<T: Scalar>(
    jt: &JunctionTree,
    bn: &BayesianNetwork<T>,
    observation: &Evidence,
    class: &str,
    opts: PropagationOptions,
) -> Result<usize> {
    if observation.contains(class) {
        return Err(Error::Query(format!("class variable `{class}` is observed")));
    }
    bn.variable(class)?;
    let mut s = PropagationState::initialize(jt, bn, observation, opts)?;
    s.collect()?;
    let post = s.posterior(class)?;
    Ok(argmax(&post).expect("class has levels"))
}
