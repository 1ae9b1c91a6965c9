//! Random submodular-concave instances for property tests.
//!
//! `f(S, y) = c + α |S|^p + cut_W(S) + Σ_{i∈S} (a_i + b_i·y) - q ‖y - y0‖²`
//! with `p ∈ (0, 1]`, `α, q >= 0` and nonnegative symmetric `W`. Each term is
//! submodular in `S` (concave of cardinality, cut, modular) and concave in
//! `y`, so every draw is certified without checking.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::ConstraintSet;
use crate::scalar::Scalar;
use crate::setfn::{ProblemConstants, SetFunction, SetFunctionInstance, Subset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSubmodularSpec {
    pub n: usize,
    pub m: usize,
    /// Probability that a pair carries a cut edge.
    pub edge_density: f64,
    /// Upper bound on the curvature weight `q`; zero gives objectives affine in `y`.
    pub max_curvature: f64,
}

impl RandomSubmodularSpec {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            edge_density: 0.5,
            max_curvature: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomSubmodular<T> {
    n: usize,
    offset: T,
    alpha: T,
    power: T,
    weights: Vec<Vec<T>>,
    linear: Vec<T>,
    coupling: Vec<Vec<T>>,
    curvature: T,
    center: Vec<T>,
}

impl<T: Scalar> RandomSubmodular<T> {
    fn cardinality(&self, k: usize) -> T {
        if k == 0 {
            T::zero()
        } else {
            self.alpha * T::of_usize(k).powf(self.power)
        }
    }

    fn concave_part(&self, y: &[T]) -> T {
        let d: T = y.iter().zip(&self.center).map(|(&a, &b)| (a - b) * (a - b)).sum();
        self.offset - self.curvature * d
    }

    fn element(&self, i: usize, y: &[T]) -> T {
        self.linear[i] + self.coupling[i].iter().zip(y).map(|(&b, &v)| b * v).sum::<T>()
    }

    /// Conservative `(L0x, L0y, M)` over `x ∈ [0,1]^n`, `y ∈ [0,1]^m`.
    fn bounds(&self) -> (T, T, T) {
        let m = self.center.len();
        let max_dist2: T = self.center.iter().map(|&c| c.max(T::one() - c).powi(2)).sum();
        let cut_total: T = (0..self.n).flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j))).map(|(i, j)| self.weights[i][j]).sum();
        let elem_bound = |i: usize| self.linear[i].abs() + self.coupling[i].iter().map(|b| b.abs()).sum::<T>();
        let m_bound = self.offset.abs()
            + self.curvature * max_dist2
            + self.cardinality(self.n)
            + cut_total
            + (0..self.n).map(elem_bound).sum::<T>();
        let max_step = (1..=self.n)
            .map(|k| self.cardinality(k) - self.cardinality(k - 1))
            .fold(T::zero(), T::max);
        let l0x = (0..self.n)
            .map(|i| {
                let degree: T = self.weights[i].iter().copied().sum();
                let b = max_step + degree + elem_bound(i);
                b * b
            })
            .sum::<T>()
            .sqrt();
        let coupling_norm: T = (0..self.n)
            .map(|i| self.coupling[i].iter().map(|&b| b * b).sum::<T>().sqrt())
            .sum();
        let l0y = coupling_norm + T::of(2.0) * self.curvature * max_dist2.sqrt();
        let _ = m;
        (l0x, l0y, m_bound)
    }
}

impl<T: Scalar> SetFunction<T> for RandomSubmodular<T> {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, set: &Subset, y: &[T]) -> T {
        let inside = set.membership(self.n);
        let mut v = self.concave_part(y) + self.cardinality(set.len());
        for &i in set.indices() {
            v = v + self.element(i, y);
            for j in 0..self.n {
                if !inside[j] {
                    v = v + self.weights[i][j];
                }
            }
        }
        v
    }
}

fn symmetric_unit<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    T::of(rng.random_range(-1.0..1.0))
}

pub fn random_submodular<T: Scalar>(spec: &RandomSubmodularSpec, rng: &mut ChaCha8Rng) -> SetFunctionInstance<T> {
    let (n, m) = (spec.n, spec.m);
    let mut weights = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(spec.edge_density.clamp(0.0, 1.0)) {
                let w = T::of(rng.random_range(0.0..1.0));
                weights[i][j] = w;
                weights[j][i] = w;
            }
        }
    }
    let f = RandomSubmodular {
        n,
        offset: symmetric_unit(rng),
        alpha: T::of(rng.random_range(0.0..2.0)),
        power: T::of(rng.random_range(0.2..=1.0)),
        weights,
        linear: (0..n).map(|_| symmetric_unit(rng)).collect(),
        coupling: (0..n).map(|_| (0..m).map(|_| symmetric_unit(rng)).collect()).collect(),
        curvature: T::of(rng.random_range(0.0..=spec.max_curvature.max(0.0))),
        center: (0..m).map(|_| T::of(rng.random_range(0.0..1.0))).collect(),
    };
    let (l0x, l0y, m_bound) = f.bounds();
    let set = ConstraintSet::unit_box(m);
    let constants = ProblemConstants::new(l0x, l0y, m_bound, set.diameter()).expect("nonnegative bounds");
    SetFunctionInstance::new("random", Arc::new(f), set, constants).expect("valid instance")
}
