//! Seeded random networks, forward sampling and evidence generation.

use rand::seq::index::sample;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::estimation::Cpt;
use crate::io::data::DiscreteDataset;
use crate::network::BayesianNetwork;
use crate::potential::Potential;
use crate::variable::{Evidence, Variable};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub variables: usize,
    pub min_levels: usize,
    pub max_levels: usize,
    pub max_parents: usize,
    /// Range of the per-network probability that a CPT cell is zero.
    pub sparsity: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { variables: 8, min_levels: 2, max_levels: 3, max_parents: 3, sparsity: (0.0, 0.8) }
    }
}

/// Random network over `x0..x{n-1}`. Parents are drawn among earlier nodes.
/// Each CPT cell is zeroed with the network's sparsity, keeping at least one
/// positive cell per column. Tables are dense.
pub fn random_network<R: Rng>(rng: &mut R, cfg: &SynthConfig) -> Result<BayesianNetwork<f64>> {
    let n = cfg.variables;
    let sparsity = if cfg.sparsity.1 > cfg.sparsity.0 { rng.gen_range(cfg.sparsity.0..cfg.sparsity.1) } else { cfg.sparsity.0 };
    let vars: Vec<Variable> = (0..n)
        .map(|i| {
            let k = rng.gen_range(cfg.min_levels..=cfg.max_levels);
            Variable::new(format!("x{i}"), (0..k).map(|l| l.to_string()))
        })
        .collect::<Result<_>>()?;
    let mut cpts = Vec::with_capacity(n);
    for i in 0..n {
        let np = rng.gen_range(0..=cfg.max_parents.min(i));
        let mut parents: Vec<usize> = sample(rng, i.max(1), np.min(i)).into_vec();
        parents.sort_unstable();
        let mut family = vec![vars[i].clone()];
        family.extend(parents.iter().map(|&p| vars[p].clone()));
        let k = vars[i].cardinality();
        let ncols: usize = parents.iter().map(|&p| vars[p].cardinality()).product();
        let mut values = Vec::with_capacity(k * ncols);
        for _ in 0..ncols {
            let keep = rng.gen_range(0..k);
            let mut col: Vec<f64> = (0..k)
                .map(|j| if j != keep && rng.gen_bool(sparsity) { 0.0 } else { rng.gen_range(0.05..1.0) })
                .collect();
            let s: f64 = col.iter().sum();
            col.iter_mut().for_each(|v| *v /= s);
            values.extend(col);
        }
        cpts.push(Cpt::new(Potential::dense(family, values)?, 1e-9)?);
    }
    BayesianNetwork::new("synthetic", vars, cpts)
}

/// One joint draw, indexed like `bn.variables()`.
pub fn sample_case<R: Rng>(bn: &BayesianNetwork<f64>, rng: &mut R) -> Result<Vec<usize>> {
    let mut row = vec![usize::MAX; bn.len()];
    for i in bn.dag().topological_order()? {
        let cpt = &bn.cpts()[i];
        let pcell: Vec<usize> = bn.dag().parent_indices(i).iter().map(|&p| row[p]).collect();
        let order: Vec<usize> = cpt
            .parents()
            .iter()
            .map(|v| bn.dag().parent_indices(i).iter().position(|&p| bn.variables()[p].name() == v.name()).expect("parent"))
            .collect();
        let cell: Vec<usize> = order.iter().map(|&k| pcell[k]).collect();
        let col = cpt.column(&cell);
        let mut u: f64 = rng.gen();
        let mut pick = col.len() - 1;
        for (j, p) in col.iter().enumerate() {
            if u < *p {
                pick = j;
                break;
            }
            u -= p;
        }
        if col[pick] == 0.0 {
            pick = col.iter().rposition(|&p| p > 0.0).expect("column has mass");
        }
        row[i] = pick;
    }
    Ok(row)
}

pub fn forward_sample<R: Rng>(bn: &BayesianNetwork<f64>, rng: &mut R, rows: usize) -> Result<DiscreteDataset> {
    let data = (0..rows).map(|_| sample_case(bn, rng)).collect::<Result<Vec<_>>>()?;
    DiscreteDataset::new(bn.variables().to_vec(), data)
}

/// Evidence on `q` random variables taken from one joint draw, hence never
/// inconsistent.
pub fn consistent_evidence<R: Rng>(bn: &BayesianNetwork<f64>, rng: &mut R, q: usize) -> Result<Evidence> {
    let row = sample_case(bn, rng)?;
    evidence_from_row(bn.variables(), &row, rng, q, None)
}

/// Evidence on `q` random variables with uniformly drawn levels.
pub fn uniform_evidence<R: Rng>(vars: &[Variable], rng: &mut R, q: usize) -> Result<Evidence> {
    let mut ev = Evidence::new();
    let mut idx = sample(rng, vars.len(), q.min(vars.len())).into_vec();
    idx.sort_unstable();
    for i in idx {
        let l = rng.gen_range(0..vars[i].cardinality());
        ev.observe_index(&vars[i], l)?;
    }
    Ok(ev)
}

/// Evidence on `q` random columns of `row`, never touching `exclude`.
pub fn evidence_from_row<R: Rng>(
    columns: &[Variable],
    row: &[usize],
    rng: &mut R,
    q: usize,
    exclude: Option<usize>,
) -> Result<Evidence> {
    let pool: Vec<usize> = (0..columns.len()).filter(|&i| Some(i) != exclude).collect();
    let mut picked: Vec<usize> = sample(rng, pool.len(), q.min(pool.len())).into_iter().map(|k| pool[k]).collect();
    picked.sort_unstable();
    let mut ev = Evidence::new();
    for i in picked {
        ev.observe_index(&columns[i], row[i])?;
    }
    Ok(ev)
}

/// Short stable digest of an evidence set.
pub fn evidence_digest(ev: &Evidence) -> String {
    let mut h = Sha256::new();
    for (name, level) in ev.iter() {
        h.update(name.as_bytes());
        h.update(b"=");
        h.update(level.to_string().as_bytes());
        h.update(b";");
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}
