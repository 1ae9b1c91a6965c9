//! Constraint sets for the maximizing block and the joint domain
//! `Z = [0,1]^n x Y`, with Euclidean projections and diameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{all_finite, distance, Scalar};

/// Compact convex set in `R^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSet<T> {
    /// Axis-aligned box `lower <= y <= upper`.
    Box { lower: Vec<T>, upper: Vec<T> },
    /// Closed Euclidean ball.
    Ball { center: Vec<T>, radius: T },
    /// `{ y in [0,1]^dim : sum(y) <= budget }`.
    CappedSimplex { dim: usize, budget: T },
    /// Cartesian product, blocks laid out in order.
    Product(Vec<ConstraintSet<T>>),
}

impl<T: Scalar> ConstraintSet<T> {
    pub fn unit_box(m: usize) -> Self {
        ConstraintSet::Box {
            lower: vec![T::zero(); m],
            upper: vec![T::one(); m],
        }
    }

    pub fn capped_simplex(dim: usize, budget: T) -> Self {
        ConstraintSet::CappedSimplex { dim, budget }
    }

    /// Joint domain `[0,1]^n x Y`.
    pub fn joint(n: usize, y_set: &ConstraintSet<T>) -> Self {
        ConstraintSet::Product(vec![Self::unit_box(n), y_set.clone()])
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Box { lower, .. } => lower.len(),
            ConstraintSet::Ball { center, .. } => center.len(),
            ConstraintSet::CappedSimplex { dim, .. } => *dim,
            ConstraintSet::Product(parts) => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// Checks that the set is nonempty, convex and compact.
    pub fn validate(&self) -> Result<()> {
        match self {
            ConstraintSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.len(),
                        got: upper.len(),
                    });
                }
                if !all_finite(lower) || !all_finite(upper) {
                    return Err(Error::InvalidParameter("box bounds must be finite".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| l > u) {
                    return Err(Error::InvalidParameter("box lower bound exceeds upper bound".into()));
                }
            }
            ConstraintSet::Ball { center, radius } => {
                if !all_finite(center) || !radius.is_finite() || *radius <= T::zero() {
                    return Err(Error::InvalidParameter("ball needs a finite center and radius > 0".into()));
                }
            }
            ConstraintSet::CappedSimplex { budget, .. } => {
                if !budget.is_finite() || *budget < T::zero() {
                    return Err(Error::InvalidParameter("capped simplex budget must be finite and >= 0".into()));
                }
            }
            ConstraintSet::Product(parts) => {
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Largest constraint violation of `p` (zero inside the set).
    pub fn violation(&self, p: &[T]) -> T {
        let zero = T::zero();
        match self {
            ConstraintSet::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&v, (&l, &u))| (l - v).max(v - u).max(zero))
                .fold(zero, T::max),
            ConstraintSet::Ball { center, radius } => (distance(p, center) - *radius).max(zero),
            ConstraintSet::CappedSimplex { budget, .. } => {
                let coord = p
                    .iter()
                    .map(|&v| (-v).max(v - T::one()).max(zero))
                    .fold(zero, T::max);
                let sum: T = p.iter().copied().sum();
                coord.max(sum - *budget)
            }
            ConstraintSet::Product(parts) => {
                let mut offset = 0;
                let mut worst = zero;
                for part in parts {
                    let d = part.dim();
                    worst = worst.max(part.violation(&p[offset..offset + d]));
                    offset += d;
                }
                worst
            }
        }
    }

    pub fn contains(&self, p: &[T], tol: T) -> bool {
        p.len() == self.dim() && all_finite(p) && self.violation(p) <= tol
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, p: &[T]) -> Result<Vec<T>> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if p.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite);
        }
        Ok(self.project_unchecked(p))
    }

    fn project_unchecked(&self, p: &[T]) -> Vec<T> {
        match self {
            ConstraintSet::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&v, (&l, &u))| v.max(l).min(u))
                .collect(),
            ConstraintSet::Ball { center, radius } => {
                let d = distance(p, center);
                if d <= *radius {
                    p.to_vec()
                } else {
                    let s = *radius / d;
                    p.iter().zip(center).map(|(&v, &c)| c + (v - c) * s).collect()
                }
            }
            ConstraintSet::CappedSimplex { budget, .. } => project_capped_simplex(p, *budget),
            ConstraintSet::Product(parts) => {
                let mut out = Vec::with_capacity(p.len());
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    out.extend(part.project_unchecked(&p[offset..offset + d]));
                    offset += d;
                }
                out
            }
        }
    }

    /// Exact Euclidean diameter.
    pub fn diameter(&self) -> T {
        match self {
            ConstraintSet::Box { lower, upper } => distance(upper, lower),
            ConstraintSet::Ball { radius, .. } => *radius * T::of(2.0),
            ConstraintSet::CappedSimplex { dim, budget } => capped_simplex_diameter(*dim, *budget),
            ConstraintSet::Product(parts) => parts
                .iter()
                .map(|p| {
                    let d = p.diameter();
                    d * d
                })
                .sum::<T>()
                .sqrt(),
        }
    }

    /// `max_{z in set} ||p - z||`, exact for every variant.
    pub fn farthest_distance(&self, p: &[T]) -> T {
        match self {
            ConstraintSet::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&v, (&l, &u))| {
                    let d = (v - l).abs().max((u - v).abs());
                    d * d
                })
                .sum::<T>()
                .sqrt(),
            ConstraintSet::Ball { center, radius } => distance(p, center) + *radius,
            ConstraintSet::CappedSimplex { budget, .. } => capped_simplex_farthest(p, *budget),
            ConstraintSet::Product(parts) => {
                let mut offset = 0;
                let mut total = T::zero();
                for part in parts {
                    let d = part.dim();
                    let r = part.farthest_distance(&p[offset..offset + d]);
                    total = total + r * r;
                    offset += d;
                }
                total.sqrt()
            }
        }
    }

    /// Smallest axis-aligned box enclosing the set.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        match self {
            ConstraintSet::Box { lower, upper } => (lower.clone(), upper.clone()),
            ConstraintSet::Ball { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
            ConstraintSet::CappedSimplex { dim, budget } => {
                let hi = T::one().min(*budget);
                (vec![T::zero(); *dim], vec![hi; *dim])
            }
            ConstraintSet::Product(parts) => {
                let mut lo = Vec::new();
                let mut hi = Vec::new();
                for p in parts {
                    let (l, h) = p.bounding_box();
                    lo.extend(l);
                    hi.extend(h);
                }
                (lo, hi)
            }
        }
    }

    /// Projection of the bounding-box center onto the set.
    pub fn centered_point(&self) -> Vec<T> {
        let (lo, hi) = self.bounding_box();
        let half = T::of(0.5);
        let c: Vec<T> = lo.iter().zip(&hi).map(|(&l, &h)| (l + h) * half).collect();
        self.project_unchecked(&c)
    }
}

const BISECTION_ITERATIONS: usize = 100;

/// Projection onto `{y in [0,1]^m : sum(y) <= budget}` by bisection on the
/// multiplier of the budget constraint.
fn project_capped_simplex<T: Scalar>(p: &[T], budget: T) -> Vec<T> {
    let clamp = |v: T| v.max(T::zero()).min(T::one());
    let clipped: Vec<T> = p.iter().map(|&v| clamp(v)).collect();
    let total: T = clipped.iter().copied().sum();
    if total <= budget {
        return clipped;
    }
    let shifted_sum = |lambda: T| p.iter().map(|&v| clamp(v - lambda)).sum::<T>();
    let mut lo = T::zero();
    let mut hi = p.iter().copied().fold(T::zero(), T::max);
    let gap = T::of(1e-12);
    for _ in 0..BISECTION_ITERATIONS {
        if hi - lo <= gap {
            break;
        }
        let mid = (lo + hi) * T::of(0.5);
        if shifted_sum(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The upper end of the bracket is always feasible.
    p.iter().map(|&v| clamp(v - hi)).collect()
}

/// Largest `sum(d_i^2)` over `k` coordinates in `[0,1]` with `sum(d_i) <= budget`.
fn best_square_mass<T: Scalar>(k: usize, budget: T) -> T {
    let kt = T::of_usize(k);
    if kt <= budget {
        return kt;
    }
    let whole = budget.floor();
    let frac = budget - whole;
    whole + frac * frac
}

fn capped_simplex_diameter<T: Scalar>(m: usize, budget: T) -> T {
    // Optimal pairs have disjoint supports; enumerate the support split.
    (0..=m)
        .map(|a| best_square_mass(a, budget) + best_square_mass(m - a, budget))
        .fold(T::zero(), T::max)
        .sqrt()
}

fn capped_simplex_farthest<T: Scalar>(p: &[T], budget: T) -> T {
    let m = p.len();
    let base: T = p.iter().map(|&v| v * v).sum();
    let whole = budget.floor();
    let ones = whole.to_usize().unwrap_or(usize::MAX).min(m);
    let frac = if T::of_usize(m) <= whole { T::zero() } else { budget - whole };

    let gain = |i: usize| T::one() - T::of(2.0) * p[i];
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| gain(b).partial_cmp(&gain(a)).unwrap().then(a.cmp(&b)));
    let mut prefix = vec![T::zero(); m + 1];
    for (k, &i) in order.iter().enumerate() {
        prefix[k + 1] = prefix[k] + gain(i);
    }

    // 0/1 vertices with at most `ones` coordinates set.
    let mut best = base
        + order
            .iter()
            .take(ones)
            .map(|&i| gain(i).max(T::zero()))
            .sum::<T>();

    // Vertices with exactly `ones` unit coordinates plus one at `frac`.
    if frac > T::zero() && ones < m {
        for (pos, &j) in order.iter().enumerate() {
            let unit = if pos < ones {
                prefix[ones + 1] - gain(j)
            } else {
                prefix[ones]
            };
            let v = base + unit + frac * frac - T::of(2.0) * frac * p[j];
            best = best.max(v);
        }
    }
    best.max(T::zero()).sqrt()
}
