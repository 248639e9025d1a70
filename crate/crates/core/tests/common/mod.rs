//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use unitree::graph::{Dag, JunctionTree, UndirectedGraph};
use unitree::{BayesianNetwork, Cpt, Evidence, Potential, Scalar, Variable};

pub fn asia_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/asia.bif")
}

pub fn asia() -> BayesianNetwork<f64> {
    unitree::io::bif::parse_network(&std::fs::read_to_string(asia_path()).unwrap()).unwrap()
}

/// Every joint cell of `vars`, first variable fastest.
pub fn all_cells(vars: &[Variable]) -> Vec<Vec<usize>> {
    let total: usize = vars.iter().map(Variable::cardinality).product();
    (0..total)
        .map(|mut i| {
            vars.iter()
                .map(|v| {
                    let l = i % v.cardinality();
                    i /= v.cardinality();
                    l
                })
                .collect()
        })
        .collect()
}

/// Joint probability of a full assignment, read cell by cell from the CPTs.
pub fn joint_prob<T: Scalar>(bn: &BayesianNetwork<T>, cell: &[usize]) -> T {
    let vars = bn.variables();
    let mut p = T::one();
    for cpt in bn.cpts() {
        let fam: Vec<usize> = cpt
            .family()
            .iter()
            .map(|v| cell[vars.iter().position(|w| w.name() == v.name()).unwrap()])
            .collect();
        p *= cpt.table().get(&fam);
    }
    p
}

/// Brute-force posterior of `var` given `ev` plus the evidence probability.
pub fn brute_posterior<T: Scalar>(bn: &BayesianNetwork<T>, ev: &Evidence, var: &str) -> (Vec<T>, T) {
    let vars = bn.variables();
    let k = vars.iter().position(|v| v.name() == var).unwrap();
    let mut post = vec![T::zero(); vars[k].cardinality()];
    let mut total = T::zero();
    for cell in all_cells(vars) {
        if ev.iter().any(|(n, l)| cell[vars.iter().position(|v| v.name() == n).unwrap()] != l) {
            continue;
        }
        let p = joint_prob(bn, &cell);
        post[cell[k]] += p;
        total += p;
    }
    if !total.is_zero() {
        post.iter_mut().for_each(|x| *x = *x / total);
    }
    (post, total)
}

/// Chordality via maximum cardinality search: the reverse visiting order
/// must be a perfect elimination order.
pub fn is_chordal(g: &UndirectedGraph) -> bool {
    let n = g.len();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n).filter(|&v| !visited[v]).max_by_key(|&v| (weight[v], std::cmp::Reverse(v))).unwrap();
        visited[v] = true;
        order.push(v);
        for &u in g.neighbors(v) {
            if !visited[u] {
                weight[u] += 1;
            }
        }
    }
    // For each vertex, its neighbours visited earlier must form a clique.
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    for &v in &order {
        let earlier: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| pos[u] < pos[v]).collect();
        for (i, &a) in earlier.iter().enumerate() {
            for &b in &earlier[i + 1..] {
                if !g.has_edge(a, b) {
                    return false;
                }
            }
        }
    }
    true
}

/// Unique tree path between two cliques, found by breadth-first search.
pub fn tree_path(jt: &JunctionTree, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; jt.len()];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(c) = queue.pop_front() {
        if c == to {
            let mut path = vec![to];
            let mut x = to;
            while x != from {
                x = prev[x];
                path.push(x);
            }
            return Some(path);
        }
        for &(a, b) in jt.edges() {
            let n = if a == c { b } else if b == c { a } else { continue };
            if prev[n] == usize::MAX {
                prev[n] = c;
                queue.push_back(n);
            }
        }
    }
    None
}

/// Running intersection by enumerating the path between every clique pair.
pub fn rip_holds(jt: &JunctionTree) -> bool {
    for i in 0..jt.len() {
        for j in i + 1..jt.len() {
            let shared: BTreeSet<&str> = jt
                .clique(i)
                .iter()
                .map(Variable::name)
                .filter(|n| jt.clique(j).iter().any(|v| v.name() == *n))
                .collect();
            if shared.is_empty() {
                continue;
            }
            let Some(path) = tree_path(jt, i, j) else { return false };
            for c in path {
                if !shared.iter().all(|n| jt.clique(c).iter().any(|v| v.name() == *n)) {
                    return false;
                }
            }
        }
    }
    true
}

/// Random DAG over `n` nodes; each ordered pair becomes an edge with
/// probability `p`.
pub fn random_dag(rng: &mut impl rand::Rng, n: usize, p: f64) -> Dag {
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for c in 0..n {
        for q in 0..c {
            if rng.gen_bool(p) {
                edges.push((names[q].clone(), names[c].clone()));
            }
        }
    }
    Dag::new(&names, &edges).unwrap()
}

/// The six-node network with cliques `def`, `bde`, `bce`, `abd`. The CPT of
/// `c` has no mass on `c1` when `b = b0`, so evidence `{b0, c1}` is
/// inconsistent there.
pub fn six_node<T: Scalar>() -> BayesianNetwork<T> {
    let v = |n: &str| Variable::new(n, [format!("{n}0"), format!("{n}1")]).unwrap();
    let (a, b, c, d, e, f) = (v("a"), v("b"), v("c"), v("d"), v("e"), v("f"));
    let r = |num: i64, den: i64| T::from_f64(num as f64).unwrap() / T::from_f64(den as f64).unwrap();
    let cpt = |dom: Vec<Variable>, vals: Vec<T>| Cpt::new(Potential::dense(dom, vals).unwrap(), 1e-12).unwrap();
    let pb = cpt(vec![b.clone()], vec![r(3, 10), r(7, 10)]);
    let pe = cpt(vec![e.clone()], vec![r(1, 4), r(3, 4)]);
    let pa = cpt(vec![a.clone(), b.clone()], vec![r(1, 5), r(4, 5), r(2, 3), r(1, 3)]);
    let pd = cpt(
        vec![d.clone(), a.clone(), b.clone()],
        vec![r(1, 2), r(1, 2), r(1, 10), r(9, 10), r(3, 5), r(2, 5), r(1, 1), r(0, 1)],
    );
    let pc = cpt(
        vec![c.clone(), b.clone(), e.clone()],
        vec![r(1, 1), r(0, 1), r(1, 3), r(2, 3), r(1, 1), r(0, 1), r(1, 2), r(1, 2)],
    );
    let pf = cpt(
        vec![f.clone(), d.clone(), e.clone()],
        vec![r(1, 8), r(7, 8), r(1, 2), r(1, 2), r(0, 1), r(1, 1), r(2, 5), r(3, 5)],
    );
    BayesianNetwork::new("six-node", vec![a, b, c, d, e, f], vec![pa, pb, pc, pd, pe, pf]).unwrap()
}

/// Cliques `C1 = def`, `C2 = bde`, `C3 = bce`, `C4 = abd` at indices 0..3,
/// rooted at `C1`, with `p_b` placed in `C4` so that `C2` is a unity clique.
pub fn six_node_tree<T: Scalar>(bn: &BayesianNetwork<T>) -> JunctionTree {
    let vars = |names: &str| -> Vec<Variable> {
        names.chars().map(|c| bn.variable(&c.to_string()).unwrap().clone()).collect()
    };
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    JunctionTree::from_parts(
        vec![vars("def"), vars("bde"), vars("bce"), vars("abd")],
        vec![(3, 1), (2, 1), (1, 0)],
        vec![0],
        vec![s(&["e", "f"]), vec![], s(&["c"]), s(&["b", "a", "d"])],
    )
    .unwrap()
}

pub fn six_node_evidence<T: Scalar>(bn: &BayesianNetwork<T>) -> Evidence {
    Evidence::parse("b=b0,c=c1", bn.variables()).unwrap()
}
