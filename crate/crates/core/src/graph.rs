//! Secondary structure: moral graph, triangulation, maximal cliques and the
//! junction tree (forest) the propagation runs on.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variable::{domain, Variable};

/// Directed acyclic graph over named nodes. Parents keep insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<String>,
    parents: Vec<Vec<usize>>,
}

impl Dag {
    /// Builds the graph and rejects cycles, self-loops, duplicate edges and
    /// edges touching undeclared nodes.
    pub fn new<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)]) -> Result<Self> {
        let nodes: Vec<String> = nodes.iter().map(|n| n.as_ref().to_string()).collect();
        for (i, n) in nodes.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::Graph("empty node name".into()));
            }
            if nodes[..i].contains(n) {
                return Err(Error::Graph(format!("node `{n}` declared twice")));
            }
        }
        let idx = |n: &str| nodes.iter().position(|m| m == n).ok_or_else(|| Error::UnknownVariable(n.to_string()));
        let mut parents = vec![Vec::new(); nodes.len()];
        for (p, c) in edges {
            let (p, c) = (idx(p.as_ref())?, idx(c.as_ref())?);
            if p == c {
                return Err(Error::Graph(format!("self-loop on `{}`", nodes[p])));
            }
            if parents[c].contains(&p) {
                return Err(Error::Graph(format!("duplicate edge {} -> {}", nodes[p], nodes[c])));
            }
            parents[c].push(p);
        }
        let dag = Dag { nodes, parents };
        dag.topological_order()?;
        Ok(dag)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn parents(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.index_of(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Ok(self.parents[i].iter().map(|&p| self.nodes[p].as_str()).collect())
    }

    pub fn parent_indices(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    /// All edges as `(parent, child)` index pairs, grouped by child.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents.iter().enumerate().flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c))).collect()
    }

    /// Kahn's algorithm, smallest index first among ready nodes.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (p, c) in self.edges() {
            children[p].push(c);
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != n {
            let stuck: Vec<&str> = (0..n).filter(|i| !order.contains(i)).map(|i| self.nodes[i].as_str()).collect();
            return Err(Error::Graph(format!("cycle through {}", stuck.join(", "))));
        }
        Ok(order)
    }
}

/// Simple undirected graph over named nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    nodes: Vec<String>,
    adj: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn new(nodes: Vec<String>) -> Self {
        let adj = vec![BTreeSet::new(); nodes.len()];
        UndirectedGraph { nodes, adj }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::Graph(format!("self-loop on `{}`", self.nodes[a])));
        }
        self.adj[a].insert(b);
        self.adj[b].insert(a);
        Ok(())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn neighbors(&self, a: usize) -> &BTreeSet<usize> {
        &self.adj[a]
    }

    /// Edges as `(low, high)` index pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len()).flat_map(|a| self.adj[a].range(a + 1..).map(move |&b| (a, b))).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_complete_on(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &a)| set[i + 1..].iter().all(|&b| self.has_edge(a, b)))
    }
}

/// Drops directions and marries co-parents.
pub fn moralize(g: &Dag) -> UndirectedGraph {
    let mut m = UndirectedGraph::new(g.nodes.clone());
    for (c, ps) in g.parents.iter().enumerate() {
        for (i, &p) in ps.iter().enumerate() {
            m.add_edge(p, c).expect("dag has no self-loops");
            for &q in &ps[i + 1..] {
                m.add_edge(p, q).expect("distinct parents");
            }
        }
    }
    m
}

/// Node indices in the order they were eliminated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationOrder(pub Vec<usize>);

/// Min-fill triangulation. Ties go to the smaller state space of the node
/// and its remaining neighbours, then to the lexicographically smaller name.
/// `cards[i]` is the cardinality of node `i`.
pub fn triangulate(g: &UndirectedGraph, cards: &[usize]) -> (UndirectedGraph, EliminationOrder) {
    assert_eq!(cards.len(), g.len(), "one cardinality per node");
    let n = g.len();
    let mut work = g.adj.clone();
    let mut out = g.clone();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !alive.is_empty() {
        let best = alive
            .iter()
            .map(|&v| {
                let nb: Vec<usize> = work[v].iter().copied().collect();
                let mut fill = 0usize;
                for (i, &a) in nb.iter().enumerate() {
                    fill += nb[i + 1..].iter().filter(|&&b| !work[a].contains(&b)).count();
                }
                let space = nb.iter().fold(cards[v] as u128, |acc, &u| acc.saturating_mul(cards[u] as u128));
                (fill, space, g.nodes[v].as_str(), v)
            })
            .min()
            .map(|t| t.3)
            .expect("non-empty");
        let nb: Vec<usize> = work[best].iter().copied().collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if work[a].insert(b) {
                    work[b].insert(a);
                    out.add_edge(a, b).expect("distinct");
                }
            }
        }
        for &a in &nb {
            work[a].remove(&best);
        }
        work[best].clear();
        alive.remove(&best);
        order.push(best);
    }
    (out, EliminationOrder(order))
}

/// Maximal cliques of a chordal graph read off a perfect elimination order.
/// Each clique lists node indices in ascending order; cliques appear in the
/// order their first node was eliminated.
pub fn max_cliques(gt: &UndirectedGraph, order: &EliminationOrder) -> Result<Vec<Vec<usize>>> {
    let n = gt.len();
    let mut pos = vec![usize::MAX; n];
    for (k, &v) in order.0.iter().enumerate() {
        if v >= n || pos[v] != usize::MAX {
            return Err(Error::Graph("elimination order is not a permutation of the nodes".into()));
        }
        pos[v] = k;
    }
    if order.0.len() != n {
        return Err(Error::Graph("elimination order is not a permutation of the nodes".into()));
    }
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(n);
    for &v in &order.0 {
        let later: Vec<usize> = gt.adj[v].iter().copied().filter(|&u| pos[u] > pos[v]).collect();
        if !gt.is_complete_on(&later) {
            return Err(Error::Graph(format!(
                "graph is not chordal under this order: neighbours of `{}` are not complete",
                gt.nodes[v]
            )));
        }
        let mut c = later;
        c.push(v);
        c.sort_unstable();
        candidates.push(c);
    }
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let dominated = candidates.iter().enumerate().any(|(j, d)| {
            j != i && d.len() >= c.len() && is_sorted_subset(c, d) && (d.len() > c.len() || j < i)
        });
        if !dominated {
            cliques.push(c.clone());
        }
    }
    assert!(cliques.len() <= n.max(1), "a chordal graph has at most |V| maximal cliques");
    Ok(cliques)
}

fn is_sorted_subset(a: &[usize], b: &[usize]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

/// Which containing clique receives a CPT.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignRule {
    /// The containing clique with the smallest state space, ties by index.
    #[default]
    Smallest,
    /// The containing clique with the lowest index.
    First,
}

impl std::str::FromStr for AssignRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smallest" => Ok(AssignRule::Smallest),
            "first" => Ok(AssignRule::First),
            _ => Err(Error::Config(format!("unknown assignment rule `{s}`"))),
        }
    }
}

/// A CPT family as seen by the structure: the child and its parents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub child: String,
    pub members: Vec<String>,
}

/// Junction tree over evidence-free cliques; a forest when the clique graph
/// is disconnected, with one root per component.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionTree {
    cliques: Vec<Vec<Variable>>,
    edges: Vec<(usize, usize)>,
    roots: Vec<usize>,
    assignments: Vec<Vec<String>>,
    component: Vec<usize>,
}

impl JunctionTree {
    /// Maximum-weight spanning forest over the clique graph, separator size
    /// as weight. Equal weights prefer the smaller combined clique index.
    pub fn build(cliques: Vec<Vec<Variable>>) -> Result<Self> {
        if cliques.is_empty() {
            return Err(Error::Graph("no cliques".into()));
        }
        let k = cliques.len();
        let mut cand = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let w = domain::intersection(&cliques[i], &cliques[j]).len();
                if w > 0 {
                    cand.push((w, i, j));
                }
            }
        }
        cand.sort_by(|a, b| b.0.cmp(&a.0).then((a.1 + a.2).cmp(&(b.1 + b.2))).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut uf: Vec<usize> = (0..k).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut y = x;
            while uf[y] != r {
                let next = uf[y];
                uf[y] = r;
                y = next;
            }
            r
        }
        let mut edges = Vec::new();
        for (_, i, j) in cand {
            let (ri, rj) = (find(&mut uf, i), find(&mut uf, j));
            if ri != rj {
                uf[ri] = rj;
                edges.push((i, j));
            }
        }
        let assignments = vec![Vec::new(); k];
        let mut jt = JunctionTree { cliques, edges, roots: Vec::new(), assignments, component: Vec::new() };
        jt.index_components();
        jt.roots = jt.choose_roots(None)?;
        jt.check_running_intersection()?;
        Ok(jt)
    }

    /// A tree from explicit parts. Edges must form a forest with exactly one
    /// listed root per component; assignments name CPT children per clique.
    pub fn from_parts(
        cliques: Vec<Vec<Variable>>,
        edges: Vec<(usize, usize)>,
        roots: Vec<usize>,
        assignments: Vec<Vec<String>>,
    ) -> Result<Self> {
        let k = cliques.len();
        if assignments.len() != k {
            return Err(Error::Graph("one assignment list per clique expected".into()));
        }
        if edges.iter().any(|&(a, b)| a >= k || b >= k || a == b) {
            return Err(Error::Graph("edge endpoint out of range".into()));
        }
        let mut jt = JunctionTree { cliques, edges, roots: Vec::new(), assignments, component: Vec::new() };
        jt.index_components();
        let comps = jt.component_count();
        if jt.edges.len() + comps != k {
            return Err(Error::Graph("edges do not form a forest".into()));
        }
        jt.set_roots(roots)?;
        jt.check_running_intersection()?;
        Ok(jt)
    }

    fn index_components(&mut self) {
        let k = self.cliques.len();
        let mut comp = vec![usize::MAX; k];
        let mut next = 0;
        for s in 0..k {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut queue = VecDeque::from([s]);
            comp[s] = next;
            while let Some(c) = queue.pop_front() {
                for n in self.neighbors(c) {
                    if comp[n] == usize::MAX {
                        comp[n] = next;
                        queue.push_back(n);
                    }
                }
            }
            next += 1;
        }
        self.component = comp;
    }

    fn check_running_intersection(&self) -> Result<()> {
        let mut vars: BTreeSet<&str> = BTreeSet::new();
        for c in &self.cliques {
            vars.extend(c.iter().map(Variable::name));
        }
        for v in vars {
            let holding: Vec<usize> =
                (0..self.cliques.len()).filter(|&i| domain::contains(&self.cliques[i], v)).collect();
            let mut seen = BTreeSet::from([holding[0]]);
            let mut queue = VecDeque::from([holding[0]]);
            while let Some(c) = queue.pop_front() {
                for n in self.neighbors(c) {
                    if domain::contains(&self.cliques[n], v) && seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
            if seen.len() != holding.len() {
                return Err(Error::Graph(format!("running intersection fails for `{v}`")));
            }
        }
        Ok(())
    }

    pub fn cliques(&self) -> &[Vec<Variable>] {
        &self.cliques
    }

    pub fn clique(&self, i: usize) -> &[Variable] {
        &self.cliques[i]
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn separator(&self, edge: usize) -> Vec<Variable> {
        let (a, b) = self.edges[edge];
        domain::intersection(&self.cliques[a], &self.cliques[b])
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn component_of(&self, clique: usize) -> usize {
        self.component[clique]
    }

    pub fn component_count(&self) -> usize {
        self.component.iter().max().map_or(0, |m| m + 1)
    }

    /// Neighbouring cliques in ascending index order.
    pub fn neighbors(&self, c: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| if a == c { Some(b) } else if b == c { Some(a) } else { None })
            .collect();
        n.sort_unstable();
        n
    }

    /// Index of the edge joining `a` and `b`.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.iter().position(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    }

    pub fn assignments(&self) -> &[Vec<String>] {
        &self.assignments
    }

    pub fn assigned(&self, clique: usize) -> &[String] {
        &self.assignments[clique]
    }

    pub fn is_unity_clique(&self, clique: usize) -> bool {
        self.assignments[clique].is_empty()
    }

    pub fn unity_cliques(&self) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.is_unity_clique(c)).collect()
    }

    pub fn state_space(&self, clique: usize) -> usize {
        domain::state_space(&self.cliques[clique])
    }

    /// Places every family in one containing clique according to `rule`.
    pub fn assign_cpts(&mut self, families: &[Family], rule: AssignRule) -> Result<()> {
        let mut assignments = vec![Vec::new(); self.len()];
        for f in families {
            let holders = (0..self.len()).filter(|&c| f.members.iter().all(|m| domain::contains(&self.cliques[c], m)));
            let chosen = match rule {
                AssignRule::First => holders.min(),
                AssignRule::Smallest => holders.min_by_key(|&c| (self.state_space(c), c)),
            }
            .ok_or_else(|| Error::Graph(format!("family of `{}` is contained in no clique", f.child)))?;
            assignments[chosen].push(f.child.clone());
        }
        self.assignments = assignments;
        Ok(())
    }

    /// Moves the CPT of `child` to `clique`, which must contain its family.
    pub fn reassign(&mut self, child: &str, clique: usize, family: &[String]) -> Result<()> {
        if !family.iter().all(|m| domain::contains(&self.cliques[clique], m)) {
            return Err(Error::Graph(format!("clique {clique} does not contain the family of `{child}`")));
        }
        for a in &mut self.assignments {
            a.retain(|c| c != child);
        }
        self.assignments[clique].push(child.to_string());
        Ok(())
    }

    /// One root per component. The component holding `target` is rooted at
    /// the smallest clique containing it; the others at their largest clique
    /// by state space. Ties go to the lowest index.
    pub fn choose_roots(&self, target: Option<&str>) -> Result<Vec<usize>> {
        let target_clique = match target {
            None => None,
            Some(t) => Some(
                (0..self.len())
                    .filter(|&c| domain::contains(&self.cliques[c], t))
                    .min_by_key(|&c| (self.state_space(c), c))
                    .ok_or_else(|| Error::Query(format!("target `{t}` is in no clique")))?,
            ),
        };
        let mut roots = Vec::new();
        for comp in 0..self.component_count() {
            let members = (0..self.len()).filter(|&c| self.component[c] == comp);
            let root = match target_clique {
                Some(tc) if self.component[tc] == comp => tc,
                _ => members.max_by_key(|&c| (self.state_space(c), std::cmp::Reverse(c))).expect("non-empty"),
            };
            roots.push(root);
        }
        Ok(roots)
    }

    pub fn choose_root(&mut self, target: Option<&str>) -> Result<()> {
        self.roots = self.choose_roots(target)?;
        Ok(())
    }

    pub fn set_roots(&mut self, roots: Vec<usize>) -> Result<()> {
        let mut hit = vec![false; self.component_count()];
        for &r in &roots {
            if r >= self.len() || std::mem::replace(&mut hit[self.component[r]], true) {
                return Err(Error::Graph("roots must pick exactly one clique per component".into()));
            }
        }
        if hit.iter().any(|h| !h) {
            return Err(Error::Graph("every component needs a root".into()));
        }
        self.roots = roots;
        Ok(())
    }

    /// Root of the component holding `clique`.
    pub fn root_of(&self, clique: usize) -> usize {
        *self.roots.iter().find(|&&r| self.component[r] == self.component[clique]).expect("rooted component")
    }

    /// Largest clique by number of variables.
    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_unity_clique_size(&self) -> usize {
        self.unity_cliques().into_iter().map(|c| self.cliques[c].len()).max().unwrap_or(0)
    }

    /// Key-value text summary, one record per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cliques={} edges={} roots={}", self.len(), self.edges.len(), join_idx(&self.roots));
        for (i, c) in self.cliques.iter().enumerate() {
            let _ = writeln!(
                s,
                "clique={i} vars={} states={} cpts={}",
                domain::names(c).join(","),
                self.state_space(i),
                self.assignments[i].join(",")
            );
        }
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let _ = writeln!(s, "edge={a}-{b} separator={}", domain::names(&self.separator(e)).join(","));
        }
        s
    }
}

fn join_idx(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Structure options for compiling a network into a junction tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompileOptions {
    pub assign: AssignRule,
    pub target: Option<String>,
}

/// Moralize, triangulate, extract cliques, build the tree, place families
/// and pick roots. `variables` is aligned with the DAG nodes.
pub fn compile(dag: &Dag, variables: &[Variable], families: &[Family], opts: &CompileOptions) -> Result<JunctionTree> {
    if variables.len() != dag.len() || variables.iter().zip(dag.nodes()).any(|(v, n)| v.name() != n) {
        return Err(Error::Graph("variables must align with the dag nodes".into()));
    }
    if dag.is_empty() {
        return Err(Error::Graph("empty network".into()));
    }
    let cards: Vec<usize> = variables.iter().map(Variable::cardinality).collect();
    let (gt, order) = triangulate(&moralize(dag), &cards);
    let cliques: Vec<Vec<Variable>> = max_cliques(&gt, &order)?
        .into_iter()
        .map(|c| c.into_iter().map(|i| variables[i].clone()).collect())
        .collect();
    let mut jt = JunctionTree::build(cliques)?;
    jt.assign_cpts(families, opts.assign)?;
    jt.choose_root(opts.target.as_deref())?;
    Ok(jt)
}

/// Number of nodes per maximal clique, keyed by clique size.
pub fn clique_size_histogram(jt: &JunctionTree) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for c in jt.cliques() {
        *h.entry(c.len()).or_insert(0) += 1;
    }
    h
}
