//! Coordinate-list kernels: only nonzero cells are stored, sorted
//! lexicographically with the first domain variable most significant.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::variable::{domain, Variable};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseTable<T> {
    /// Row-major cell coordinates, `arity` level indices per entry.
    pub(crate) cells: Vec<u32>,
    pub(crate) values: Vec<T>,
}

impl<T: Scalar> SparseTable<T> {
    pub(crate) fn empty() -> Self {
        SparseTable { cells: Vec::new(), values: Vec::new() }
    }

    pub(crate) fn len(&self) -> usize {
        self.values.len()
    }

    pub(crate) fn cell(&self, i: usize, arity: usize) -> &[u32] {
        &self.cells[i * arity..(i + 1) * arity]
    }

    /// Builds a table from unsorted entries, dropping exact zeros. Duplicate
    /// cells are rejected.
    pub(crate) fn from_entries(arity: usize, mut entries: Vec<(Vec<u32>, T)>) -> Result<Self> {
        entries.retain(|(_, v)| !v.is_zero());
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Data(format!("duplicate sparse cell {:?}", w[0].0)));
            }
        }
        let mut cells = Vec::with_capacity(entries.len() * arity);
        let mut values = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            debug_assert_eq!(c.len(), arity);
            cells.extend_from_slice(&c);
            values.push(v);
        }
        Ok(SparseTable { cells, values })
    }

    fn from_sorted_map(map: BTreeMap<Vec<u32>, T>) -> Self {
        let mut cells = Vec::new();
        let mut values = Vec::with_capacity(map.len());
        for (c, v) in map {
            if !v.is_zero() {
                cells.extend_from_slice(&c);
                values.push(v);
            }
        }
        SparseTable { cells, values }
    }

    pub(crate) fn lookup(&self, arity: usize, cell: &[u32]) -> Option<T> {
        let n = self.len();
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.cell(mid, arity).cmp(cell) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(self.values[mid]),
            }
        }
        None
    }
}

fn positions(of: &[Variable], within: &[Variable]) -> Vec<usize> {
    of.iter().map(|v| domain::position(within, v.name()).expect("variable in domain")).collect()
}

/// Hash join on the shared variables. Result domain is `fd` followed by the
/// variables only `gd` carries.
pub(crate) fn multiply<T: Scalar>(
    fd: &[Variable],
    f: &SparseTable<T>,
    gd: &[Variable],
    g: &SparseTable<T>,
) -> SparseTable<T> {
    let shared = domain::intersection(fd, gd);
    let g_only = domain::difference(gd, fd);
    let f_shared = positions(&shared, fd);
    let g_shared = positions(&shared, gd);
    let g_rest = positions(&g_only, gd);
    let (fa, ga) = (fd.len(), gd.len());

    let mut index: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for j in 0..g.len() {
        let c = g.cell(j, ga);
        index.entry(g_shared.iter().map(|&p| c[p]).collect()).or_default().push(j);
    }

    let mut entries = Vec::new();
    let mut key = Vec::with_capacity(f_shared.len());
    for i in 0..f.len() {
        let fc = f.cell(i, fa);
        key.clear();
        key.extend(f_shared.iter().map(|&p| fc[p]));
        if let Some(matches) = index.get(&key) {
            for &j in matches {
                let gc = g.cell(j, ga);
                let mut cell = fc.to_vec();
                cell.extend(g_rest.iter().map(|&p| gc[p]));
                entries.push((cell, f.values[i] * g.values[j]));
            }
        }
    }
    SparseTable::from_entries(fa + g_rest.len(), entries).expect("join produces unique cells")
}

/// `f / g` for `gd ⊆ fd`. Missing `g` cells are zeros, so a stored `f` cell
/// meeting one is a nonzero-by-zero division.
pub(crate) fn divide_subset<T: Scalar>(
    fd: &[Variable],
    f: &SparseTable<T>,
    gd: &[Variable],
    g: &SparseTable<T>,
) -> Result<SparseTable<T>> {
    let g_pos = positions(gd, fd);
    let (fa, ga) = (fd.len(), gd.len());
    let mut key = Vec::with_capacity(ga);
    let mut out = SparseTable::empty();
    for i in 0..f.len() {
        let fc = f.cell(i, fa);
        key.clear();
        key.extend(g_pos.iter().map(|&p| fc[p]));
        let d = g.lookup(ga, &key).ok_or(Error::UndefinedDivision)?;
        let v = f.values[i] / d;
        if !v.is_zero() {
            out.cells.extend_from_slice(fc);
            out.values.push(v);
        }
    }
    Ok(out)
}

pub(crate) fn project<T: Scalar>(fd: &[Variable], f: &SparseTable<T>, kept: &[Variable]) -> SparseTable<T> {
    let keep = positions(kept, fd);
    let fa = fd.len();
    let mut acc: BTreeMap<Vec<u32>, T> = BTreeMap::new();
    for i in 0..f.len() {
        let c = f.cell(i, fa);
        *acc.entry(keep.iter().map(|&p| c[p]).collect()).or_insert_with(T::zero) += f.values[i];
    }
    SparseTable::from_sorted_map(acc)
}

/// Keeps entries agreeing with `fixed` (position, level) and drops those
/// columns; the survivors stay sorted.
pub(crate) fn reduce<T: Scalar>(fd: &[Variable], f: &SparseTable<T>, fixed: &[(usize, usize)]) -> SparseTable<T> {
    let fa = fd.len();
    let kept: Vec<usize> = (0..fa).filter(|p| !fixed.iter().any(|&(q, _)| q == *p)).collect();
    let mut out = SparseTable::empty();
    for i in 0..f.len() {
        let c = f.cell(i, fa);
        if fixed.iter().all(|&(p, l)| c[p] as usize == l) {
            out.cells.extend(kept.iter().map(|&p| c[p]));
            out.values.push(f.values[i]);
        }
    }
    out
}

pub(crate) fn permute<T: Scalar>(fd: &[Variable], f: &SparseTable<T>, order: &[Variable]) -> SparseTable<T> {
    let pos = positions(order, fd);
    let fa = fd.len();
    let entries = (0..f.len())
        .map(|i| {
            let c = f.cell(i, fa);
            (pos.iter().map(|&p| c[p]).collect(), f.values[i])
        })
        .collect();
    SparseTable::from_entries(fa, entries).expect("permutation keeps cells unique")
}
