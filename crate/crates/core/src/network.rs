//! A Bayesian network: a DAG with one CPT per node.

use crate::error::{Error, Result};
use crate::estimation::{self, Cpt, SmoothingPolicy};
use crate::graph::{self, CompileOptions, Dag, Family, JunctionTree};
use crate::io::data::DiscreteDataset;
use crate::potential::Potential;
use crate::scalar::Scalar;
use crate::variable::{domain, Variable};

#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork<T = f64> {
    name: String,
    dag: Dag,
    variables: Vec<Variable>,
    cpts: Vec<Cpt<T>>,
}

impl<T: Scalar> BayesianNetwork<T> {
    /// Assembles a network from CPTs; the DAG is read off their families.
    /// Variables keep the order of `variables`.
    pub fn new(name: impl Into<String>, variables: Vec<Variable>, cpts: Vec<Cpt<T>>) -> Result<Self> {
        if cpts.len() != variables.len() {
            return Err(Error::Data(format!("{} variables but {} CPTs", variables.len(), cpts.len())));
        }
        let mut ordered = Vec::with_capacity(cpts.len());
        let mut slots: Vec<Option<Cpt<T>>> = cpts.into_iter().map(Some).collect();
        for v in &variables {
            let k = slots
                .iter()
                .position(|c| c.as_ref().is_some_and(|c| c.child().name() == v.name()))
                .ok_or_else(|| Error::Data(format!("no CPT for `{}`", v.name())))?;
            ordered.push(slots[k].take().expect("unused slot"));
        }
        let mut edges = Vec::new();
        for cpt in &ordered {
            for u in cpt.family() {
                let declared = variables
                    .iter()
                    .find(|w| w.name() == u.name())
                    .ok_or_else(|| Error::UnknownVariable(u.name().to_string()))?;
                if declared != u {
                    return Err(Error::Data(format!("levels of `{}` differ between declarations", u.name())));
                }
            }
            for p in cpt.parents() {
                edges.push((p.name().to_string(), cpt.child().name().to_string()));
            }
        }
        let names = domain::names(&variables);
        let dag = Dag::new(&names, &edges)?;
        Ok(BayesianNetwork { name: name.into(), dag, variables, cpts: ordered })
    }

    /// Estimates one CPT per DAG node from complete data. Parents follow the
    /// DAG's edge order.
    pub fn fit(dag: &Dag, data: &DiscreteDataset, policy: &SmoothingPolicy) -> Result<Self> {
        policy.validate()?;
        let mut variables = Vec::with_capacity(dag.len());
        let mut cpts = Vec::with_capacity(dag.len());
        for node in dag.nodes() {
            variables.push(data.column(node)?.clone());
            let parents = dag.parents(node)?;
            let counts = estimation::count(data, node, &parents)?;
            cpts.push(policy.estimate(&counts)?);
        }
        Self::new("fitted", variables, cpts)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        self.variables.iter().find(|v| v.name() == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn cpts(&self) -> &[Cpt<T>] {
        &self.cpts
    }

    pub fn cpt(&self, child: &str) -> Result<&Cpt<T>> {
        self.cpts.iter().find(|c| c.child().name() == child).ok_or_else(|| Error::UnknownVariable(child.to_string()))
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn families(&self) -> Vec<Family> {
        self.cpts
            .iter()
            .map(|c| Family { child: c.child().name().to_string(), members: domain::names(c.family()) })
            .collect()
    }

    pub fn compile(&self, opts: &CompileOptions) -> Result<JunctionTree> {
        graph::compile(&self.dag, &self.variables, &self.families(), opts)
    }

    /// Product of all CPTs, i.e. the full joint. Exponential in the number
    /// of variables.
    pub fn joint(&self) -> Result<Potential<T>> {
        let mut acc = Potential::scalar(T::one());
        for c in &self.cpts {
            acc = acc.multiply(&c.table().to_dense())?;
        }
        Ok(acc)
    }

    pub fn to_sparse(&self) -> Self {
        self.with_cpts(self.cpts.iter().map(Cpt::to_sparse).collect())
    }

    pub fn to_dense(&self) -> Self {
        self.with_cpts(self.cpts.iter().map(Cpt::to_dense).collect())
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U) -> BayesianNetwork<U> {
        BayesianNetwork {
            name: self.name.clone(),
            dag: self.dag.clone(),
            variables: self.variables.clone(),
            cpts: self.cpts.iter().map(|c| c.map_scalar(&f)).collect(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn with_cpts(&self, cpts: Vec<Cpt<T>>) -> Self {
        BayesianNetwork { name: self.name.clone(), dag: self.dag.clone(), variables: self.variables.clone(), cpts }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::data::{load_dataset, DataOptions};

    #[test]
    fn naive_bayes_fit_matches_hand_counts() {
        let text = "c,x,y\n0,a,p\n0,a,q\n0,b,p\n1,b,q\n1,b,q\n";
        let ds = load_dataset(text, &DataOptions::default()).unwrap();
        let dag = Dag::new(&["c", "x", "y"], &[("c", "x"), ("c", "y")]).unwrap();
        let bn: BayesianNetwork = BayesianNetwork::fit(&dag, &ds, &SmoothingPolicy::default()).unwrap();
        assert!(bn.cpt("x").unwrap().table().is_sparse());
        let px = bn.cpt("x").unwrap();
        assert!((px.table().get_labeled(&[("x", "a"), ("c", "0")]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(px.table().get_labeled(&[("x", "a"), ("c", "1")]).unwrap(), 0.0);
        let pc = bn.cpt("c").unwrap();
        assert_eq!(pc.column(&[]), vec![0.6, 0.4]);
        assert!((bn.joint().unwrap().total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(bn.compile(&CompileOptions::default()).unwrap().len(), 2);
    }

    #[test]
    fn laplace_fit_is_dense() {
        let ds = load_dataset("a,b\n0,0\n0,1\n", &DataOptions::default()).unwrap();
        let dag = Dag::new(&["a", "b"], &[("a", "b")]).unwrap();
        let bn: BayesianNetwork = BayesianNetwork::fit(&dag, &ds, &SmoothingPolicy::laplace(1.0)).unwrap();
        assert!(!bn.cpt("b").unwrap().table().is_sparse());
        assert_eq!(bn.cpt("b").unwrap().column(&[0]), vec![0.5, 0.5]);
    }
}
