//! Potentials: non-negative functions over the joint levelset of a domain.
//!
//! A potential is stored either densely (every cell, first domain variable
//! varying fastest) or sparsely (only nonzero cells, sorted). All operations
//! are defined on values and return new potentials; the representation of the
//! result follows the operands (sparse only when both are sparse).

mod dense;
mod sparse;

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::variable::{domain, Evidence, Variable};

pub(crate) use dense::checked_div;
use sparse::SparseTable;

#[derive(Debug, Clone, PartialEq)]
enum Storage<T> {
    Dense(Vec<T>),
    Sparse(SparseTable<T>),
}

#[derive(Clone, PartialEq)]
pub struct Potential<T = f64> {
    domain: Vec<Variable>,
    storage: Storage<T>,
}

fn check_domain(dom: &[Variable]) -> Result<()> {
    for (i, v) in dom.iter().enumerate() {
        if dom[..i].iter().any(|u| u.name() == v.name()) {
            return Err(Error::InvalidVariable(format!("`{}` repeated in domain", v.name())));
        }
    }
    Ok(())
}

fn check_value<T: Scalar>(v: T) -> Result<()> {
    if v >= T::zero() {
        Ok(())
    } else {
        Err(Error::Data(format!("potential values must be non-negative, got {v}")))
    }
}

impl<T: Scalar> Potential<T> {
    /// Dense potential from values in dense cell order.
    pub fn dense(domain: Vec<Variable>, values: Vec<T>) -> Result<Self> {
        check_domain(&domain)?;
        let n = domain::state_space(&domain);
        if values.len() != n {
            return Err(Error::Data(format!("expected {n} values, got {}", values.len())));
        }
        values.iter().try_for_each(|&v| check_value(v))?;
        Ok(Potential { domain, storage: Storage::Dense(values) })
    }

    /// Dense potential whose cell values come from `f(cell)`.
    pub fn from_fn(domain: Vec<Variable>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let cards = dense::cards(&domain);
        let n: usize = cards.iter().product();
        let values = (0..n).map(|i| f(&dense::cell_of(i, &cards))).collect();
        Self::dense(domain, values)
    }

    /// Sparse potential from `(cell, value)` pairs; zero values are dropped.
    pub fn sparse(domain: Vec<Variable>, entries: impl IntoIterator<Item = (Vec<usize>, T)>) -> Result<Self> {
        check_domain(&domain)?;
        let cards = dense::cards(&domain);
        let mut raw = Vec::new();
        for (cell, v) in entries {
            if cell.len() != domain.len() || cell.iter().zip(&cards).any(|(&l, &c)| l >= c) {
                return Err(Error::Data(format!("cell {cell:?} outside levelset")));
            }
            check_value(v)?;
            raw.push((cell.into_iter().map(|l| l as u32).collect(), v));
        }
        let table = SparseTable::from_entries(domain.len(), raw)?;
        Ok(Potential { domain, storage: Storage::Sparse(table) })
    }

    /// The empty-domain potential carrying `value`.
    pub fn scalar(value: T) -> Self {
        Potential { domain: Vec::new(), storage: Storage::Dense(vec![value]) }
    }

    pub fn unity(domain: Vec<Variable>) -> Result<Self> {
        let n = domain::state_space(&domain);
        Self::dense(domain, vec![T::one(); n])
    }

    pub fn null(domain: Vec<Variable>, sparse: bool) -> Result<Self> {
        if sparse {
            Self::sparse(domain, std::iter::empty())
        } else {
            let n = domain::state_space(&domain);
            Self::dense(domain, vec![T::zero(); n])
        }
    }

    pub fn domain(&self) -> &[Variable] {
        &self.domain
    }

    pub fn names(&self) -> Vec<String> {
        domain::names(&self.domain)
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Number of cells in the full levelset `|I_A|`.
    pub fn state_space(&self) -> usize {
        domain::state_space(&self.domain)
    }

    /// Number of physically stored values.
    pub fn stored_len(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Sparse(t) => t.len(),
        }
    }

    /// Value at `cell`, given as level indices in domain order.
    pub fn get(&self, cell: &[usize]) -> T {
        assert_eq!(cell.len(), self.domain.len(), "cell arity");
        match &self.storage {
            Storage::Dense(v) => v[dense::index_of(cell, &dense::cards(&self.domain))],
            Storage::Sparse(t) => {
                let key: Vec<u32> = cell.iter().map(|&l| l as u32).collect();
                t.lookup(self.domain.len(), &key).unwrap_or_else(T::zero)
            }
        }
    }

    /// Value at a cell named by `(variable, level label)` pairs, in any order.
    pub fn get_labeled(&self, assignment: &[(&str, &str)]) -> Result<T> {
        let mut cell = vec![usize::MAX; self.domain.len()];
        for &(name, label) in assignment {
            let p = domain::position(&self.domain, name).ok_or_else(|| Error::UnknownVariable(name.into()))?;
            cell[p] = self.domain[p].level_index(label).ok_or_else(|| Error::UnknownLevel {
                var: name.into(),
                level: label.into(),
            })?;
        }
        if cell.contains(&usize::MAX) {
            return Err(Error::Query("assignment does not cover the domain".into()));
        }
        Ok(self.get(&cell))
    }

    /// All nonzero cells with their values, sorted lexicographically.
    pub fn nonzero_cells(&self) -> Vec<(Vec<usize>, T)> {
        match &self.storage {
            Storage::Sparse(t) => (0..t.len())
                .map(|i| (t.cell(i, self.domain.len()).iter().map(|&l| l as usize).collect(), t.values[i]))
                .collect(),
            Storage::Dense(v) => {
                let cards = dense::cards(&self.domain);
                let mut out: Vec<_> = v
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(i, &x)| (dense::cell_of(i, &cards), x))
                    .collect();
                out.sort_by(|a, b| a.0.cmp(&b.0));
                out
            }
        }
    }

    /// Values in dense cell order over this potential's own domain.
    pub fn dense_values(&self) -> Vec<T> {
        match &self.storage {
            Storage::Dense(v) => v.clone(),
            Storage::Sparse(t) => {
                let cards = dense::cards(&self.domain);
                let mut out = vec![T::zero(); cards.iter().product()];
                let a = self.domain.len();
                for i in 0..t.len() {
                    let c: Vec<usize> = t.cell(i, a).iter().map(|&l| l as usize).collect();
                    out[dense::index_of(&c, &cards)] = t.values[i];
                }
                out
            }
        }
    }

    /// |φ|, the sum of all cell values.
    pub fn total_mass(&self) -> T {
        let vals = match &self.storage {
            Storage::Dense(v) => v.as_slice(),
            Storage::Sparse(t) => t.values.as_slice(),
        };
        vals.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn is_null(&self) -> bool {
        match &self.storage {
            Storage::Dense(v) => v.iter().all(|x| x.is_zero()),
            Storage::Sparse(t) => t.len() == 0,
        }
    }

    pub fn to_dense(&self) -> Self {
        Potential { domain: self.domain.clone(), storage: Storage::Dense(self.dense_values()) }
    }

    pub fn to_sparse(&self) -> Self {
        match &self.storage {
            Storage::Sparse(_) => self.clone(),
            Storage::Dense(_) => {
                let entries = self
                    .nonzero_cells()
                    .into_iter()
                    .map(|(c, v)| (c.into_iter().map(|l| l as u32).collect(), v))
                    .collect();
                let table = SparseTable::from_entries(self.domain.len(), entries).expect("unique dense cells");
                Potential { domain: self.domain.clone(), storage: Storage::Sparse(table) }
            }
        }
    }

    /// Converts to the representation of `like`.
    pub fn in_representation_of(&self, like: &Potential<T>) -> Self {
        if like.is_sparse() {
            self.to_sparse()
        } else {
            self.to_dense()
        }
    }

    fn result_is_sparse(&self, other: &Self) -> bool {
        match (self.domain.is_empty(), other.domain.is_empty()) {
            (true, true) => self.is_sparse() && other.is_sparse(),
            (true, false) => other.is_sparse(),
            (false, true) => self.is_sparse(),
            (false, false) => self.is_sparse() && other.is_sparse(),
        }
    }

    fn sparse_table(&self) -> SparseTable<T> {
        match self.to_sparse().storage {
            Storage::Sparse(t) => t,
            Storage::Dense(_) => unreachable!(),
        }
    }

    /// Cell-wise product over the union of the domains.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let dom = domain::union(&self.domain, &other.domain)?;
        if self.result_is_sparse(other) {
            let t = sparse::multiply(&self.domain, &self.sparse_table(), &other.domain, &other.sparse_table());
            return Ok(Potential { domain: dom, storage: Storage::Sparse(t) });
        }
        let v = dense::combine(&dom, &self.domain, &self.dense_values(), &other.domain, &other.dense_values(), |a, b| {
            Ok(a * b)
        })?;
        Ok(Potential { domain: dom, storage: Storage::Dense(v) })
    }

    /// Cell-wise quotient with `0/0 = 0`; a nonzero cell over a zero cell is
    /// an error.
    pub fn divide(&self, other: &Self) -> Result<Self> {
        let dom = domain::union(&self.domain, &other.domain)?;
        let sparse_out = self.result_is_sparse(other);
        if sparse_out && domain::is_subset(&other.domain, &self.domain) {
            let t = sparse::divide_subset(&self.domain, &self.sparse_table(), &other.domain, &other.sparse_table())?;
            return Ok(Potential { domain: dom, storage: Storage::Sparse(t) });
        }
        let v = dense::combine(&dom, &self.domain, &self.dense_values(), &other.domain, &other.dense_values(), checked_div)?;
        let out = Potential { domain: dom, storage: Storage::Dense(v) };
        Ok(if sparse_out { out.to_sparse() } else { out })
    }

    /// Marginal onto `onto` (which must be a subset of the domain). The result
    /// keeps this potential's variable order.
    pub fn project(&self, onto: &[Variable]) -> Result<Self> {
        domain::check_subset(onto, &self.domain)?;
        let kept = domain::intersection(&self.domain, onto);
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(dense::project(&self.domain, v, &kept)),
            Storage::Sparse(t) => Storage::Sparse(sparse::project(&self.domain, t, &kept)),
        };
        Ok(Potential { domain: kept, storage })
    }

    /// Sums out the named variables.
    pub fn marginalize_out(&self, names: &[&str]) -> Result<Self> {
        let kept: Vec<Variable> = self.domain.iter().filter(|v| !names.contains(&v.name())).cloned().collect();
        self.project(&kept)
    }

    /// Zeroes cells disagreeing with `ev`, then drops the observed
    /// dimensions. Evidence on variables outside the domain is ignored.
    pub fn evidence_reduce(&self, ev: &Evidence) -> Self {
        let fixed: Vec<(usize, usize)> = self
            .domain
            .iter()
            .enumerate()
            .filter_map(|(p, v)| ev.get(v.name()).map(|l| (p, l)))
            .collect();
        if fixed.is_empty() {
            return self.clone();
        }
        let kept: Vec<Variable> = self.domain.iter().filter(|v| !ev.contains(v.name())).cloned().collect();
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(dense::reduce(&self.domain, v, &kept, &fixed)),
            Storage::Sparse(t) => Storage::Sparse(sparse::reduce(&self.domain, t, &fixed)),
        };
        Potential { domain: kept, storage }
    }

    /// `(φ / |φ|, |φ|)`; zero mass is a degenerate model.
    pub fn normalize(&self) -> Result<(Self, T)> {
        let mass = self.total_mass();
        if mass.is_zero() {
            return Err(Error::Degenerate("cannot normalize a null potential".into()));
        }
        Ok((self.map_values(|v| v / mass), mass))
    }

    /// Multiplies every cell by `factor`.
    pub fn scale(&self, factor: T) -> Self {
        if factor.is_zero() {
            return Potential::null(self.domain.clone(), self.is_sparse()).expect("valid domain");
        }
        self.map_values(|v| v * factor)
    }

    fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(v.iter().map(|&x| f(x)).collect()),
            Storage::Sparse(t) => {
                let mut t = t.clone();
                t.values.iter_mut().for_each(|x| *x = f(*x));
                if t.values.iter().any(|x| x.is_zero()) {
                    let arity = self.domain.len();
                    let entries = (0..t.len()).map(|i| (t.cell(i, arity).to_vec(), t.values[i])).collect();
                    t = SparseTable::from_entries(arity, entries).expect("unique cells");
                }
                Storage::Sparse(t)
            }
        };
        Potential { domain: self.domain.clone(), storage }
    }

    /// Same potential with its domain reordered to `order` (names).
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        let new: Vec<Variable> = order
            .iter()
            .map(|n| {
                domain::position(&self.domain, n)
                    .map(|p| self.domain[p].clone())
                    .ok_or_else(|| Error::UnknownVariable(n.to_string()))
            })
            .collect::<Result<_>>()?;
        if new.len() != self.domain.len() {
            return Err(Error::Query("permutation must name every domain variable once".into()));
        }
        check_domain(&new)?;
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(dense::permute(&self.domain, v, &new)),
            Storage::Sparse(t) => Storage::Sparse(sparse::permute(&self.domain, t, &new)),
        };
        Ok(Potential { domain: new, storage })
    }

    /// Converts cell values to another scalar type, keeping representation.
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U) -> Potential<U> {
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(v.iter().map(|&x| f(x)).collect()),
            Storage::Sparse(t) => {
                let arity = self.domain.len();
                let entries = (0..t.len()).map(|i| (t.cell(i, arity).to_vec(), f(t.values[i]))).collect();
                Storage::Sparse(SparseTable::from_entries(arity, entries).expect("unique cells"))
            }
        };
        Potential { domain: self.domain.clone(), storage }
    }

    /// Cell-for-cell comparison, independent of representation and domain
    /// order, with relative tolerance `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if !domain::same_set(&self.domain, &other.domain) {
            return false;
        }
        let order: Vec<&str> = self.domain.iter().map(Variable::name).collect();
        let Ok(other) = other.permute(&order) else { return false };
        if self.domain.iter().zip(other.domain()).any(|(a, b)| !a.same_levels(b)) {
            return false;
        }
        self.dense_values()
            .iter()
            .zip(other.dense_values())
            .all(|(a, b)| crate::scalar::approx_eq(a.as_f64(), b.as_f64(), tol))
    }

    /// Largest absolute cell difference against `other` (domains must match
    /// as sets).
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let order: Vec<&str> = self.domain.iter().map(Variable::name).collect();
        let other = other.permute(&order)?;
        Ok(self
            .dense_values()
            .iter()
            .zip(other.dense_values())
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max))
    }
}

impl<T: fmt::Debug> fmt::Debug for Potential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.domain.iter().map(Variable::name).collect();
        match &self.storage {
            Storage::Dense(v) => write!(f, "Potential<dense>{names:?} {v:?}"),
            Storage::Sparse(t) => write!(f, "Potential<sparse>{names:?} {:?} {:?}", t.cells, t.values),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(name: &str) -> Variable {
        Variable::new(name, [format!("{name}+"), format!("{name}-")]).unwrap()
    }

    /// Sparse `phi(a, b)` with one zero cell.
    fn phi_ab() -> Potential {
        let (a, b) = (bin("a"), bin("b"));
        Potential::sparse(vec![a, b], [(vec![0, 0], 5.0), (vec![0, 1], 7.0), (vec![1, 0], 6.0)]).unwrap()
    }

    /// Sparse `phi(b, c)` with one zero cell.
    fn phi_bc() -> Potential {
        let (b, c) = (bin("b"), bin("c"));
        Potential::sparse(vec![b, c], [(vec![0, 0], 3.0), (vec![1, 0], 8.0), (vec![1, 1], 4.0)]).unwrap()
    }

    #[test]
    fn product_reproduces_partial_potential_table() {
        let abc = phi_ab().multiply(&phi_bc()).unwrap();
        assert_eq!(abc.names(), ["a", "b", "c"]);
        assert_eq!(abc.get_labeled(&[("a", "a+"), ("b", "b+"), ("c", "c+")]).unwrap(), 15.0);
        assert_eq!(abc.get_labeled(&[("a", "a-"), ("b", "b+"), ("c", "c+")]).unwrap(), 18.0);
        assert_eq!(abc.get_labeled(&[("a", "a+"), ("b", "b-"), ("c", "c-")]).unwrap(), 28.0);
        assert_eq!(abc.get_labeled(&[("a", "a-"), ("b", "b-"), ("c", "c+")]).unwrap(), 0.0);
        assert_eq!(abc.stored_len(), 4);
        let dense = phi_ab().to_dense().multiply(&phi_bc().to_dense()).unwrap();
        assert!(!dense.is_sparse());
        assert!(dense.approx_eq(&abc, 0.0));
    }

    #[test]
    fn unity_and_null_products() {
        let f = phi_ab();
        let u = Potential::unity(vec![bin("b")]).unwrap();
        assert!(f.multiply(&u).unwrap().approx_eq(&f, 0.0));
        let z = Potential::null(vec![bin("d")], true).unwrap();
        let fz = f.multiply(&z).unwrap();
        assert!(fz.is_null());
        assert_eq!(fz.names(), ["a", "b", "d"]);
    }

    #[test]
    fn domain_mismatch_on_shared_variable() {
        let b3 = Variable::new("b", ["x", "y", "z"]).unwrap();
        let g = Potential::unity(vec![b3]).unwrap();
        assert!(matches!(phi_ab().multiply(&g), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn division_conventions() {
        let abc = phi_ab().multiply(&phi_bc()).unwrap();
        let support = abc.divide(&abc).unwrap();
        for (cell, v) in support.to_dense().nonzero_cells() {
            assert_eq!(v, 1.0, "{cell:?}");
        }
        assert_eq!(support.stored_len(), 4);

        let bc = abc.project(&[bin("b"), bin("c")]).unwrap();
        let q = abc.divide(&bc).unwrap();
        assert_eq!(q.get_labeled(&[("a", "a+"), ("b", "b+"), ("c", "c+")]).unwrap(), 15.0 / 33.0);
        assert_eq!(q.get_labeled(&[("a", "a+"), ("b", "b+"), ("c", "c-")]).unwrap(), 0.0);

        let zero = Potential::<f64>::null(vec![bin("a")], false).unwrap();
        assert!(matches!(phi_ab().divide(&zero), Err(Error::UndefinedDivision)));
        assert!(matches!(phi_ab().to_sparse().divide(&zero.to_sparse()), Err(Error::UndefinedDivision)));
    }

    #[test]
    fn projection_examples() {
        let abc = phi_ab().multiply(&phi_bc()).unwrap();
        let a = abc.project(&[bin("a")]).unwrap();
        assert_eq!(a.get(&[0]), 99.0);
        assert_eq!(a.get(&[1]), 18.0);
        assert!(abc.project(abc.domain()).unwrap().approx_eq(&abc, 0.0));
        let s = abc.project(&[]).unwrap();
        assert!(s.domain().is_empty());
        assert_eq!(s.get(&[]), 117.0);
        assert!(matches!(phi_ab().project(&[bin("c")]), Err(Error::NotInDomain { .. })));
    }

    #[test]
    fn evidence_reduction_examples() {
        let ev = Evidence::new().with(&bin("b"), "b+").unwrap();
        let c = phi_bc().evidence_reduce(&ev);
        assert_eq!(c.names(), ["c"]);
        assert_eq!((c.get(&[0]), c.get(&[1])), (3.0, 0.0));

        let abc = phi_ab().multiply(&phi_bc()).unwrap();
        let ev = Evidence::new().with(&bin("b"), "b+").unwrap().with(&bin("c"), "c-").unwrap();
        let r = abc.evidence_reduce(&ev);
        assert_eq!(r.names(), ["a"]);
        assert!(r.is_null());
        assert!(abc.to_dense().evidence_reduce(&ev).is_null());

        let other = Evidence::new().with(&bin("z"), "z+").unwrap();
        assert!(phi_ab().evidence_reduce(&other).approx_eq(&phi_ab(), 0.0));
    }

    #[test]
    fn mass_and_normalization() {
        assert_eq!(phi_ab().total_mass(), 18.0);
        assert_eq!(Potential::<f64>::null(vec![bin("a")], true).unwrap().total_mass(), 0.0);
        let u = Potential::<f64>::unity(vec![bin("a"), bin("b"), bin("c")]).unwrap();
        assert_eq!(u.total_mass(), 8.0);

        let p = Potential::dense(vec![bin("a")], vec![2.0, 2.0]).unwrap();
        let (n, k) = p.normalize().unwrap();
        assert_eq!(k, 4.0);
        assert_eq!(n.dense_values(), vec![0.5, 0.5]);
        let (n, k) = phi_ab().normalize().unwrap();
        assert_eq!(k, 18.0);
        assert_eq!(n.get(&[0, 1]), 7.0 / 18.0);
        assert!(matches!(
            Potential::<f64>::null(vec![bin("a")], false).unwrap().normalize(),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn representation_conversion() {
        let abc = phi_ab().to_dense().multiply(&phi_bc().to_dense()).unwrap();
        let s = abc.to_sparse();
        assert_eq!(s.stored_len(), 4);
        assert_eq!(
            s.nonzero_cells().into_iter().map(|(c, _)| c).collect::<Vec<_>>(),
            vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 1, 1], vec![1, 0, 0]]
        );
        assert!(s.to_dense().approx_eq(&abc, 0.0));
        assert_eq!(Potential::<f64>::null(vec![bin("a")], false).unwrap().to_sparse().stored_len(), 0);
    }

    #[test]
    fn permute_keeps_values() {
        let abc = phi_ab().multiply(&phi_bc()).unwrap();
        for p in [abc.clone(), abc.to_dense()] {
            let q = p.permute(&["c", "a", "b"]).unwrap();
            assert_eq!(q.get_labeled(&[("a", "a+"), ("b", "b-"), ("c", "c+")]).unwrap(), 56.0);
            assert!(q.approx_eq(&p, 0.0));
        }
    }

    #[test]
    fn negative_values_rejected() {
        assert!(Potential::dense(vec![bin("a")], vec![1.0, -1.0]).is_err());
        assert!(Potential::dense(vec![bin("a")], vec![1.0, f64::NAN]).is_err());
        assert!(Potential::sparse(vec![bin("a")], [(vec![2], 1.0)]).is_err());
    }
}
