//! Lovász extension machinery: sorted-chain decomposition, extension values,
//! chain subgradients and threshold rounding.
//!
//! For `x` sorted as `x[π(1)] >= ... >= x[π(n)]` with levels
//! `B_k = {π(1), .., π(k)}`, the extension is
//!
//! ```text
//! f^L(x, y) = (1 - x[π(1)]) f(B_0, y) + Σ_{k<n} (x[π(k)] - x[π(k+1)]) f(B_k, y) + x[π(n)] f(B_n, y)
//! ```
//!
//! and `g[π(k)] = f(B_k, y) - f(B_{k-1}, y)` is a subgradient in `x`.
//! Both come out of one sweep of `n + 1` oracle queries.

use crate::error::{Error, Result};
use crate::setfn::{SetFunctionInstance, Subset};
use crate::scalar::Scalar;

/// Maximal chain associated with a point of the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDecomposition<T> {
    order: Vec<usize>,
    sorted: Vec<T>,
}

impl<T: Scalar> ChainDecomposition<T> {
    /// The permutation `π`, zero-based.
    pub fn permutation(&self) -> &[usize] {
        &self.order
    }

    /// Coordinates in decreasing order.
    pub fn sorted_values(&self) -> &[T] {
        &self.sorted
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    /// Level `B_k`, `0 <= k <= n`.
    pub fn level(&self, k: usize) -> Subset {
        Subset::from_indices(self.order[..k].iter().copied())
    }

    pub fn levels(&self) -> Vec<Subset> {
        (0..=self.n()).map(|k| self.level(k)).collect()
    }

    /// Weights on `B_0, .., B_n`; nonnegative and summing to one.
    pub fn weights(&self) -> Vec<T> {
        let n = self.n();
        let mut w = Vec::with_capacity(n + 1);
        w.push(T::one() - self.sorted.first().copied().unwrap_or(T::zero()));
        for k in 1..n {
            w.push(self.sorted[k - 1] - self.sorted[k]);
        }
        if n > 0 {
            w.push(self.sorted[n - 1]);
        }
        w
    }

    /// Sub-chain of levels carrying positive weight, with those weights.
    pub fn distinct_chain(&self) -> Vec<(Subset, T)> {
        self.weights()
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > T::zero())
            .map(|(k, w)| (self.level(k), w))
            .collect()
    }

    /// `Σ_k λ_k χ_{B_k}`; recovers the decomposed point.
    pub fn reconstruct(&self) -> Vec<T> {
        let n = self.n();
        let mut x = vec![T::zero(); n];
        let w = self.weights();
        // χ_{B_k} covers π(1..k), so coordinate π(j) collects weights k >= j.
        let mut tail = T::zero();
        for k in (1..=n).rev() {
            tail = tail + w[k];
            x[self.order[k - 1]] = tail;
        }
        x
    }
}

pub fn check_unit_cube<T: Scalar>(x: &[T]) -> Result<()> {
    let tol = T::membership_tol();
    for (i, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        if v < -tol || v > T::one() + tol {
            return Err(Error::OutsideUnitCube {
                index: i,
                value: v.as_f64(),
            });
        }
    }
    Ok(())
}

/// Sorted chain for `x`; ties broken by ascending index.
pub fn decompose<T: Scalar>(x: &[T]) -> Result<ChainDecomposition<T>> {
    check_unit_cube(x)?;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).expect("finite").then(a.cmp(&b)));
    let sorted = order
        .iter()
        .map(|&i| x[i].max(T::zero()).min(T::one()))
        .collect();
    Ok(ChainDecomposition { order, sorted })
}

fn check_x_len<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T]) -> Result<()> {
    if x.len() != inst.n() {
        return Err(Error::DimensionMismatch {
            expected: inst.n(),
            got: x.len(),
        });
    }
    Ok(())
}

fn sweep<T: Scalar>(
    inst: &SetFunctionInstance<T>,
    x: &[T],
    y: &[T],
) -> Result<(ChainDecomposition<T>, Vec<T>)> {
    check_x_len(inst, x)?;
    let chain = decompose(x)?;
    let values = inst.query_chain(chain.permutation(), y)?;
    Ok((chain, values))
}

fn combine<T: Scalar>(chain: &ChainDecomposition<T>, values: &[T]) -> T {
    chain
        .weights()
        .iter()
        .zip(values)
        .map(|(&w, &v)| w * v)
        .sum()
}

/// `f^L(x, y)` for `x` in the unit cube and `y` in `Y`; `n + 1` queries.
pub fn lovasz_value<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], y: &[T]) -> Result<T> {
    inst.check_in_domain(y)?;
    extension_value(inst, x, y)
}

/// `f^L(x, y)` for any finite `y` (no membership check on `y`).
pub fn extension_value<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], y: &[T]) -> Result<T> {
    let (chain, values) = sweep(inst, x, y)?;
    Ok(combine(&chain, &values))
}

/// Chain subgradient in `x`; `n + 1` queries.
pub fn lovasz_subgradient<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], y: &[T]) -> Result<Vec<T>> {
    subgradient_with_value(inst, x, y).map(|(g, _)| g)
}

/// Chain subgradient together with `f^L(x, y)`, from one sweep of `n + 1`
/// queries. `y` may lie outside `Y`.
pub fn subgradient_with_value<T: Scalar>(
    inst: &SetFunctionInstance<T>,
    x: &[T],
    y: &[T],
) -> Result<(Vec<T>, T)> {
    let (chain, values) = sweep(inst, x, y)?;
    let mut g = vec![T::zero(); x.len()];
    for (k, &i) in chain.permutation().iter().enumerate() {
        g[i] = values[k + 1] - values[k];
    }
    Ok((g, combine(&chain, &values)))
}

/// `E_τ[f(S_τ, y)]` with `S_τ = {i : x_i > τ}`, `τ ~ U[0,1]`, integrated
/// exactly over the breakpoint intervals. Independent of the chain code;
/// intended as a test oracle.
pub fn expected_rounded_value<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], y: &[T]) -> Result<T> {
    check_x_len(inst, x)?;
    check_unit_cube(x)?;
    inst.check_in_domain(y)?;
    let mut cuts: Vec<T> = x.iter().map(|&v| v.max(T::zero()).min(T::one())).collect();
    cuts.push(T::zero());
    cuts.push(T::one());
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    cuts.dedup();
    let mut total = T::zero();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        // On [lo, hi) no coordinate lies strictly inside, so S_τ = {x_i > lo}.
        let set = Subset::from_indices((0..x.len()).filter(|&i| x[i] > lo));
        total = total + (hi - lo) * inst.evaluate(&set, y)?;
    }
    Ok(total)
}

/// Strict super-level set `{i : x_i > τ}`.
pub fn round_threshold<T: Scalar>(x: &[T], tau: T) -> Subset {
    Subset::from_indices((0..x.len()).filter(|&i| x[i] > tau))
}
