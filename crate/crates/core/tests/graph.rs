mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unitree::graph::{compile, max_cliques, moralize, triangulate, AssignRule, CompileOptions, Family, JunctionTree};
use unitree::Variable;

fn families(dag: &unitree::Dag) -> Vec<Family> {
    dag.nodes()
        .iter()
        .map(|n| {
            let mut members = vec![n.clone()];
            members.extend(dag.parents(n).unwrap().into_iter().map(String::from));
            Family { child: n.clone(), members }
        })
        .collect()
}

fn binary_vars(dag: &unitree::Dag, rng: &mut impl Rng) -> Vec<Variable> {
    dag.nodes().iter().map(|n| Variable::with_cardinality(n.clone(), rng.gen_range(2..=3)).unwrap()).collect()
}

#[test]
fn moral_graph_is_skeleton_plus_married_parents() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let n = rng.gen_range(1..12);
        let dag = random_dag(&mut rng, n, 0.3);
        let mut expect = BTreeSet::new();
        for (p, c) in dag.edges() {
            expect.insert((p.min(c), p.max(c)));
        }
        for c in 0..dag.len() {
            let ps = dag.parent_indices(c);
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    expect.insert((a.min(b), a.max(b)));
                }
            }
        }
        let got: BTreeSet<_> = moralize(&dag).edges().into_iter().collect();
        assert_eq!(got, expect);
    }
}

#[test]
fn triangulation_is_chordal_and_keeps_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let (n, p) = (rng.gen_range(2..15), rng.gen_range(0.1..0.5));
        let dag = random_dag(&mut rng, n, p);
        let m = moralize(&dag);
        let cards: Vec<usize> = (0..dag.len()).map(|_| rng.gen_range(2..4)).collect();
        let (gt, order) = triangulate(&m, &cards);
        assert!(is_chordal(&gt));
        assert!(m.edges().iter().all(|&(a, b)| gt.has_edge(a, b)));
        let cliques = max_cliques(&gt, &order).unwrap();
        assert!(cliques.len() <= dag.len());
        for c in &cliques {
            assert!(gt.is_complete_on(c));
            // maximal: no outside node is adjacent to every member
            assert!(!(0..gt.len()).any(|v| !c.contains(&v) && c.iter().all(|&u| gt.has_edge(u, v))));
        }
    }
}

#[test]
fn oracle_rejects_a_four_cycle() {
    let mut g = unitree::graph::UndirectedGraph::new(["a", "b", "c", "d"].map(String::from).to_vec());
    for (x, y) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
        g.add_edge(x, y).unwrap();
    }
    assert!(!is_chordal(&g));
}

#[test]
fn junction_trees_satisfy_running_intersection() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (n, p) = (rng.gen_range(1..15), rng.gen_range(0.05..0.4));
        let dag = random_dag(&mut rng, n, p);
        let vars = binary_vars(&dag, &mut rng);
        let jt = compile(&dag, &vars, &families(&dag), &CompileOptions::default()).unwrap();
        assert!(rip_holds(&jt));
        assert_eq!(jt.edges().len() + jt.component_count(), jt.len());
        let total: usize = jt.assignments().iter().map(Vec::len).sum();
        assert_eq!(total, dag.len());
        for (c, assigned) in jt.assignments().iter().enumerate() {
            for child in assigned {
                let fam = families(&dag).into_iter().find(|f| &f.child == child).unwrap();
                assert!(fam.members.iter().all(|m| jt.clique(c).iter().any(|v| v.name() == m)));
            }
        }
    }
}

#[test]
fn rip_oracle_rejects_a_bad_tree() {
    let v = |n: &str| Variable::with_cardinality(n, 2).unwrap();
    let bad = JunctionTree::from_parts(
        vec![vec![v("a"), v("b")], vec![v("c")], vec![v("a"), v("c")]],
        vec![(0, 1), (1, 2)],
        vec![0],
        vec![vec![], vec![], vec![]],
    );
    assert!(bad.is_err());
}

#[test]
fn assignment_rules_differ_only_in_placement() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let dag = random_dag(&mut rng, 8, 0.3);
        let vars = binary_vars(&dag, &mut rng);
        let fams = families(&dag);
        let a = compile(&dag, &vars, &fams, &CompileOptions { assign: AssignRule::First, target: None }).unwrap();
        let b = compile(&dag, &vars, &fams, &CompileOptions { assign: AssignRule::Smallest, target: None }).unwrap();
        assert_eq!(a.cliques(), b.cliques());
        for (c, assigned) in b.assignments().iter().enumerate() {
            for child in assigned {
                let fam = fams.iter().find(|f| &f.child == child).unwrap();
                let best = (0..b.len())
                    .filter(|&k| fam.members.iter().all(|m| b.clique(k).iter().any(|v| v.name() == m)))
                    .map(|k| b.state_space(k))
                    .min()
                    .unwrap();
                assert_eq!(b.state_space(c), best);
            }
        }
    }
}

#[test]
fn target_root_contains_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let dag = random_dag(&mut rng, 9, 0.25);
        let vars = binary_vars(&dag, &mut rng);
        let t = dag.nodes()[rng.gen_range(0..dag.len())].clone();
        let opts = CompileOptions { assign: AssignRule::Smallest, target: Some(t.clone()) };
        let jt = compile(&dag, &vars, &families(&dag), &opts).unwrap();
        let holder = (0..jt.len()).find(|&c| jt.clique(c).iter().any(|v| v.name() == t)).unwrap();
        assert!(jt.clique(jt.root_of(holder)).iter().any(|v| v.name() == t));
    }
}

#[test]
fn naive_bayes_has_cliques_around_the_class() {
    let names = ["c", "x", "y", "z"];
    let dag = unitree::Dag::new(&names, &[("c", "x"), ("c", "y"), ("c", "z")]).unwrap();
    let vars: Vec<Variable> = names.iter().map(|n| Variable::with_cardinality(*n, 2).unwrap()).collect();
    let jt = compile(&dag, &vars, &families(&dag), &CompileOptions::default()).unwrap();
    assert_eq!(jt.len(), 3);
    assert!(jt.cliques().iter().all(|c| c.iter().any(|v| v.name() == "c")));
    assert!(jt.unity_cliques().is_empty());
}

#[test]
fn asia_structure() {
    let bn = asia();
    let jt = bn.compile(&CompileOptions::default()).unwrap();
    assert_eq!(jt.max_clique_size(), 3);
    assert!(rip_holds(&jt));
    let text = jt.to_text();
    assert!(text.starts_with(&format!("cliques={}", jt.len())));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_dag_compiles_to_a_valid_tree(seed in any::<u64>(), n in 1usize..12, p in 0.0f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_dag(&mut rng, n, p);
        let vars = binary_vars(&dag, &mut rng);
        let jt = compile(&dag, &vars, &families(&dag), &CompileOptions::default()).unwrap();
        prop_assert!(rip_holds(&jt));
        let (gt, _) = triangulate(&moralize(&dag), &vars.iter().map(Variable::cardinality).collect::<Vec<_>>());
        prop_assert!(is_chordal(&gt));
    }
}
