//! Kernels over the dense layout: one value per cell, first domain variable
//! varying fastest.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::variable::{domain, Variable};

pub(crate) fn cards(dom: &[Variable]) -> Vec<usize> {
    dom.iter().map(Variable::cardinality).collect()
}

pub(crate) fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(cards.len());
    let mut acc = 1;
    for &c in cards {
        s.push(acc);
        acc *= c;
    }
    s
}

/// Strides of `operand`'s layout expressed along the axes of `target`;
/// zero for target axes the operand does not carry.
pub(crate) fn strides_along(target: &[Variable], operand: &[Variable]) -> Vec<usize> {
    let own = strides(&cards(operand));
    target
        .iter()
        .map(|v| domain::position(operand, v.name()).map_or(0, |p| own[p]))
        .collect()
}

/// Visits every cell of a layout with the given cardinalities, in dense
/// order, passing the running offsets into each operand.
pub(crate) fn walk<F: FnMut(usize, &[usize])>(cards: &[usize], operands: &[Vec<usize>], mut f: F) {
    let total: usize = cards.iter().product();
    let mut counter = vec![0usize; cards.len()];
    let mut offsets = vec![0usize; operands.len()];
    for idx in 0..total {
        f(idx, &offsets);
        for k in 0..cards.len() {
            counter[k] += 1;
            for (o, s) in operands.iter().enumerate() {
                offsets[o] += s[k];
            }
            if counter[k] < cards[k] {
                break;
            }
            for (o, s) in operands.iter().enumerate() {
                offsets[o] -= s[k] * cards[k];
            }
            counter[k] = 0;
        }
    }
}

pub(crate) fn cell_of(mut idx: usize, cards: &[usize]) -> Vec<usize> {
    cards
        .iter()
        .map(|&c| {
            let l = idx % c;
            idx /= c;
            l
        })
        .collect()
}

pub(crate) fn index_of(cell: &[usize], cards: &[usize]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for (&l, &c) in cell.iter().zip(cards) {
        idx += l * stride;
        stride *= c;
    }
    idx
}

pub(crate) fn combine<T: Scalar>(
    result: &[Variable],
    fd: &[Variable],
    fv: &[T],
    gd: &[Variable],
    gv: &[T],
    op: impl Fn(T, T) -> Result<T>,
) -> Result<Vec<T>> {
    let rc = cards(result);
    let ops = [strides_along(result, fd), strides_along(result, gd)];
    let mut out = Vec::with_capacity(rc.iter().product());
    let mut err = None;
    walk(&rc, &ops, |_, off| {
        if err.is_some() {
            return;
        }
        match op(fv[off[0]], gv[off[1]]) {
            Ok(v) => out.push(v),
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

pub(crate) fn project<T: Scalar>(fd: &[Variable], fv: &[T], kept: &[Variable]) -> Vec<T> {
    let fc = cards(fd);
    let ops = [strides_along(fd, kept)];
    let mut out = vec![T::zero(); domain::state_space(kept)];
    walk(&fc, &ops, |idx, off| out[off[0]] += fv[idx]);
    out
}

pub(crate) fn reduce<T: Scalar>(
    fd: &[Variable],
    fv: &[T],
    kept: &[Variable],
    fixed: &[(usize, usize)],
) -> Vec<T> {
    let own = strides(&cards(fd));
    let base: usize = fixed.iter().map(|&(pos, level)| own[pos] * level).sum();
    let ops = [strides_along(kept, fd)];
    let mut out = Vec::with_capacity(domain::state_space(kept));
    walk(&cards(kept), &ops, |_, off| out.push(fv[base + off[0]]));
    out
}

/// Values of `fd`/`fv` re-laid out along `order` (a permutation of `fd`).
pub(crate) fn permute<T: Scalar>(fd: &[Variable], fv: &[T], order: &[Variable]) -> Vec<T> {
    let ops = [strides_along(order, fd)];
    let mut out = Vec::with_capacity(fv.len());
    walk(&cards(order), &ops, |_, off| out.push(fv[off[0]]));
    out
}

pub(crate) fn checked_div<T: Scalar>(a: T, b: T) -> Result<T> {
    if b.is_zero() {
        if a.is_zero() {
            Ok(T::zero())
        } else {
            Err(Error::UndefinedDivision)
        }
    } else {
        Ok(a / b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_enumerates_first_axis_fastest() {
        let cards = [2, 3];
        let mut cells = Vec::new();
        walk(&cards, &[strides(&cards)], |idx, off| {
            assert_eq!(idx, off[0]);
            cells.push(cell_of(idx, &cards));
        });
        assert_eq!(cells[1], vec![1, 0]);
        assert_eq!(cells[2], vec![0, 1]);
        for (i, c) in cells.iter().enumerate() {
            assert_eq!(index_of(c, &cards), i);
        }
    }
}
