use proptest::prelude::*;
use unitree::unity::OpCounter;
use unitree::{Evidence, Potential, UnityPotential, Variable};

fn pool() -> Vec<Variable> {
    [("a", 2), ("b", 3), ("c", 2), ("d", 2), ("e", 3)]
        .iter()
        .map(|&(n, k)| Variable::with_cardinality(n, k).unwrap())
        .collect()
}

fn pick(mask: u8, rot: usize) -> Vec<Variable> {
    let p = pool();
    let mut d: Vec<Variable> = (0..5).filter(|i| mask >> i & 1 == 1).map(|i| p[i].clone()).collect();
    if !d.is_empty() {
        let r = rot % d.len();
        d.rotate_left(r);
    }
    d
}

fn potential(mask: u8, rot: usize, vals: &[u8], sparse: bool) -> Potential {
    let dom = pick(mask, rot);
    let n: usize = dom.iter().map(Variable::cardinality).product();
    let values: Vec<f64> = (0..n).map(|i| (vals[i % vals.len()] % 5) as f64).collect();
    let p = Potential::dense(dom, values).unwrap();
    if sparse { p.to_sparse() } else { p }
}

fn arb_potential() -> impl Strategy<Value = Potential> {
    (0u8..32, 0usize..5, prop::collection::vec(any::<u8>(), 1..40), any::<bool>())
        .prop_map(|(m, r, v, s)| potential(m, r, &v, s))
}

fn arb_triple() -> impl Strategy<Value = UnityPotential> {
    (arb_potential(), 0u8..32, 1u8..4).prop_map(|(p, umask, w)| {
        let unity: Vec<Variable> = pick(umask, 0).into_iter().filter(|v| !p.names().contains(&v.name().to_string())).collect();
        UnityPotential::new(p, unity, w as f64).unwrap()
    })
}

fn arb_subset() -> impl Strategy<Value = u8> {
    0u8..32
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn product_is_commutative(f in arb_potential(), g in arb_potential()) {
        prop_assert!(f.multiply(&g).unwrap().approx_eq(&g.multiply(&f).unwrap(), 0.0));
    }

    #[test]
    fn product_is_associative(f in arb_potential(), g in arb_potential(), h in arb_potential()) {
        let l = f.multiply(&g).unwrap().multiply(&h).unwrap();
        let r = f.multiply(&g.multiply(&h).unwrap()).unwrap();
        prop_assert!(l.approx_eq(&r, 0.0));
    }

    #[test]
    fn dense_and_sparse_agree(f in arb_potential(), g in arb_potential(), m in arb_subset()) {
        let (fd, fs) = (f.to_dense(), f.to_sparse());
        let (gd, gs) = (g.to_dense(), g.to_sparse());
        let pd = fd.multiply(&gd).unwrap();
        let ps = fs.multiply(&gs).unwrap();
        prop_assert!(ps.is_sparse() || fs.domain().is_empty() || gs.domain().is_empty());
        prop_assert!(pd.approx_eq(&ps, 0.0));
        let onto: Vec<Variable> = pick(m, 0).into_iter().filter(|v| pd.names().contains(&v.name().to_string())).collect();
        prop_assert!(pd.project(&onto).unwrap().approx_eq(&ps.project(&onto).unwrap(), 1e-12));
        let msg_d = pd.project(&onto).unwrap();
        let msg_s = ps.project(&onto).unwrap();
        prop_assert!(pd.divide(&msg_d).unwrap().approx_eq(&ps.divide(&msg_s).unwrap(), 1e-12));
        prop_assert_eq!(pd.nonzero_cells().len(), ps.stored_len());
    }

    #[test]
    fn projection_preserves_mass(f in arb_potential(), m in arb_subset()) {
        let onto: Vec<Variable> = pick(m, 0).into_iter().filter(|v| f.names().contains(&v.name().to_string())).collect();
        let p = f.project(&onto).unwrap();
        prop_assert!((p.total_mass() - f.total_mass()).abs() < 1e-9);
    }

    #[test]
    fn evidence_commutes_with_product(f in arb_potential(), g in arb_potential(), m in arb_subset(), lv in any::<u8>()) {
        let mut ev = Evidence::new();
        for v in pick(m, 0) {
            ev.observe_index(&v, lv as usize % v.cardinality()).unwrap();
        }
        let l = f.multiply(&g).unwrap().evidence_reduce(&ev);
        let r = f.evidence_reduce(&ev).multiply(&g.evidence_reduce(&ev)).unwrap();
        prop_assert!(l.approx_eq(&r, 0.0));
    }

    #[test]
    fn triple_product_materializes_to_product(s in arb_triple(), t in arb_triple()) {
        let mut ops = OpCounter::default();
        let r = s.up_multiply(&t, &mut ops).unwrap();
        let expect = s.materialize().multiply(&t.materialize()).unwrap();
        prop_assert!(r.materialize().approx_eq(&expect, 1e-12));
        prop_assert!(r.unity_vars().iter().all(|v| !r.partial().names().contains(&v.name().to_string())));
    }

    #[test]
    fn triple_projection_materializes_to_projection(s in arb_triple(), m in arb_subset()) {
        let dom = s.domain();
        let onto: Vec<Variable> = pick(m, 0).into_iter().filter(|v| dom.iter().any(|d| d.name() == v.name())).collect();
        let mut ops = OpCounter::default();
        let r = s.up_project(&onto, &mut ops).unwrap();
        let expect = s.materialize().project(&onto).unwrap();
        prop_assert!(r.materialize().approx_eq(&expect, 1e-12));
    }

    #[test]
    fn divide_update_materializes_to_quotient(s in arb_triple(), m in arb_subset()) {
        let dom = s.domain();
        let onto: Vec<Variable> = pick(m, 0).into_iter().filter(|v| dom.iter().any(|d| d.name() == v.name())).collect();
        let mut ops = OpCounter::default();
        let msg = s.up_project(&onto, &mut ops).unwrap();
        let r = s.up_divide_update(&msg, &mut ops).unwrap();
        let full = s.materialize();
        let expect = full.divide(&full.project(&onto).unwrap()).unwrap();
        // Off the support the quotient is 0/0 = 0 while the symbolic form may
        // carry ones; both agree wherever the original potential is positive.
        let got = r.materialize();
        for (cell, _) in full.nonzero_cells() {
            let names: Vec<String> = full.names();
            let labeled: Vec<(&str, String)> = names.iter().zip(&cell).map(|(n, &l)| (n.as_str(), l.to_string())).collect();
            let pairs: Vec<(&str, &str)> = labeled.iter().map(|(n, l)| (*n, l.as_str())).collect();
            let a = got.get_labeled(&pairs).unwrap();
            let b = expect.get_labeled(&pairs).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
        // Multiplying the message back restores the original.
        let back = r.up_multiply(&msg, &mut ops).unwrap().materialize();
        prop_assert!(back.approx_eq(&full, 1e-9));
    }
}
