//! k-fold prediction error as a function of the number of observed
//! features.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{argmax, SmoothingPolicy};
use crate::graph::{AssignRule, CompileOptions, Dag, JunctionTree};
use crate::harness::synth::evidence_from_row;
use crate::io::data::DiscreteDataset;
use crate::network::BayesianNetwork;
use crate::propagation::{predict_class, PropagationOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalConfig {
    pub class: String,
    pub folds: usize,
    /// Numbers of observed non-class features to evaluate.
    pub qs: Vec<usize>,
    pub seed: u64,
    pub policies: Vec<SmoothingPolicy>,
    pub assign: AssignRule,
    pub up_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalPoint {
    pub policy: SmoothingPolicy,
    pub q: usize,
    pub error: f64,
    pub cases: usize,
    /// Cases whose evidence had probability zero under the fitted model even
    /// after smoothing; these fall back to the training class prior.
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub class: String,
    pub folds: usize,
    pub seed: u64,
    pub rows: usize,
    pub dropped_rows: usize,
    pub points: Vec<CrossvalPoint>,
}

/// Fold index of every row: a seeded shuffle dealt round-robin.
pub fn fold_assignment(rows: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..rows).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; rows];
    for (k, &r) in perm.iter().enumerate() {
        fold[r] = k % folds;
    }
    fold
}

struct FoldModel {
    bn: BayesianNetwork<f64>,
    jt: JunctionTree,
    prior: usize,
}

pub fn crossval(dag: &Dag, data: &DiscreteDataset, cfg: &CrossvalConfig) -> Result<CrossvalReport> {
    let class_col = data.column_index(&cfg.class)?;
    if dag.index_of(&cfg.class).is_none() {
        return Err(Error::UnknownVariable(cfg.class.clone()));
    }
    if cfg.folds < 2 || cfg.folds > data.len() {
        return Err(Error::Config(format!("need 2 <= folds <= rows, got {} folds for {} rows", cfg.folds, data.len())));
    }
    let features: Vec<usize> = dag
        .nodes()
        .iter()
        .filter(|n| *n != &cfg.class)
        .map(|n| data.column_index(n))
        .collect::<Result<_>>()?;
    if let Some(&q) = cfg.qs.iter().find(|&&q| q > features.len()) {
        return Err(Error::Config(format!("q = {q} exceeds the {} non-class variables", features.len())));
    }
    if cfg.policies.is_empty() {
        return Err(Error::Config("no smoothing policy given".into()));
    }
    let columns: Vec<_> = features.iter().map(|&i| data.columns()[i].clone()).collect();
    let fold = fold_assignment(data.len(), cfg.folds, cfg.seed);
    let opts = CompileOptions { assign: cfg.assign, target: Some(cfg.class.clone()) };

    let mut models: Vec<Vec<FoldModel>> = Vec::with_capacity(cfg.folds);
    for f in 0..cfg.folds {
        let train: Vec<usize> = (0..data.len()).filter(|&r| fold[r] != f).collect();
        let train = data.select_rows(&train);
        let mut counts = vec![0usize; data.columns()[class_col].cardinality()];
        for row in train.rows() {
            counts[row[class_col]] += 1;
        }
        let prior = argmax(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>()).expect("class has levels");
        let mut per_policy = Vec::new();
        for policy in &cfg.policies {
            let bn = BayesianNetwork::fit(dag, &train, policy)?;
            let jt = bn.compile(&opts)?;
            per_policy.push(FoldModel { bn, jt, prior });
        }
        models.push(per_policy);
    }

    let mut points = Vec::new();
    for &q in &cfg.qs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(q as u64 + 1);
        let mut wrong = vec![0usize; cfg.policies.len()];
        let mut degenerate = vec![0usize; cfg.policies.len()];
        for f in 0..cfg.folds {
            for (r, row) in data.rows().iter().enumerate() {
                if fold[r] != f {
                    continue;
                }
                let frow: Vec<usize> = features.iter().map(|&i| row[i]).collect();
                let ev = evidence_from_row(&columns, &frow, &mut rng, q, None)?;
                for (p, policy) in cfg.policies.iter().enumerate() {
                    let m = &models[f][p];
                    let popts = PropagationOptions::for_policy(policy, cfg.up_enabled);
                    let guess = match predict_class(&m.jt, &m.bn, &ev, &cfg.class, popts) {
                        Ok(g) => g,
                        Err(Error::Degenerate(_)) => {
                            degenerate[p] += 1;
                            m.prior
                        }
                        Err(e) => return Err(e),
                    };
                    if guess != row[class_col] {
                        wrong[p] += 1;
                    }
                }
            }
        }
        for (p, policy) in cfg.policies.iter().enumerate() {
            points.push(CrossvalPoint {
                policy: *policy,
                q,
                error: wrong[p] as f64 / data.len() as f64,
                cases: data.len(),
                degenerate: degenerate[p],
            });
        }
    }
    Ok(CrossvalReport {
        class: cfg.class.clone(),
        folds: cfg.folds,
        seed: cfg.seed,
        rows: data.len(),
        dropped_rows: data.dropped_rows(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_rows() {
        let f = fold_assignment(23, 5, 1);
        for k in 0..5 {
            let n = f.iter().filter(|&&x| x == k).count();
            assert!(n == 4 || n == 5);
        }
        assert_eq!(f, fold_assignment(23, 5, 1));
    }
}
