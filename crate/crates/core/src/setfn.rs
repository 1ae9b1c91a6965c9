//! Value-oracle representation of submodular-concave objectives `f(S, y)`.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConstraintSet;
use crate::lovasz;
use crate::rng::{self, Domain, Half};
use crate::scalar::{all_finite, distance, norm, Scalar};

/// Subset of the ground set `{0, .., n-1}`, stored as sorted distinct indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn empty() -> Self {
        Subset(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        Subset((0..n).collect())
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Subset(v)
    }

    /// Subset encoded by the low `n` bits of `mask` (bit `i` = element `i`).
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Subset((0..n.min(64)).filter(|&i| mask >> i & 1 == 1).collect())
    }

    /// Bitmask form; `None` when an element does not fit in 64 bits.
    pub fn to_mask(&self) -> Option<u64> {
        self.0.iter().try_fold(0u64, |acc, &i| (i < 64).then(|| acc | 1 << i))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &Subset) -> Subset {
        Subset::from_indices(self.0.iter().chain(&other.0).copied())
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        Subset(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&i) if i >= n => Err(Error::IndexOutOfRange { index: i, n }),
            _ => Ok(()),
        }
    }

    /// Dense membership vector of length `n`.
    pub fn membership(&self, n: usize) -> Vec<bool> {
        let mut out = vec![false; n];
        for &i in &self.0 {
            if i < n {
                out[i] = true;
            }
        }
        out
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Characteristic vector of `set` in `{0,1}^n`.
pub fn charvec<T: Scalar>(set: &Subset, n: usize) -> Result<Vec<T>> {
    set.check_within(n)?;
    Ok(set
        .membership(n)
        .into_iter()
        .map(|b| if b { T::one() } else { T::zero() })
        .collect())
}

/// Inverse of [`charvec`]: the support of `v`.
pub fn from_charvec<T: Scalar>(v: &[T]) -> Subset {
    Subset(
        v.iter()
            .enumerate()
            .filter(|(_, &c)| c != T::zero())
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Raw value oracle. Implementations must be deterministic and thread-safe.
pub trait SetFunction<T: Scalar>: Send + Sync {
    fn ground_size(&self) -> usize;

    fn dim(&self) -> usize;

    fn value(&self, set: &Subset, y: &[T]) -> T;

    /// Values on the chain `{} ⊂ {order[0]} ⊂ {order[0], order[1]} ⊂ ...`,
    /// `order.len() + 1` entries. Override when the chain can be swept
    /// incrementally; the result must match repeated [`SetFunction::value`].
    fn chain_values(&self, order: &[usize], y: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(order.len() + 1);
        let mut members: Vec<usize> = Vec::with_capacity(order.len());
        out.push(self.value(&Subset::empty(), y));
        for &i in order {
            members.push(i);
            out.push(self.value(&Subset::from_indices(members.iter().copied()), y));
        }
        out
    }

    /// True when `y -> f(S, y)` is affine for every `S`.
    fn is_affine_in_y(&self) -> bool {
        false
    }
}

/// Closure-backed oracle.
pub struct FnSetFunction<F> {
    n: usize,
    m: usize,
    affine: bool,
    f: F,
}

impl<F> FnSetFunction<F> {
    pub fn new(n: usize, m: usize, f: F) -> Self {
        Self { n, m, affine: false, f }
    }

    pub fn affine(mut self) -> Self {
        self.affine = true;
        self
    }
}

impl<T, F> SetFunction<T> for FnSetFunction<F>
where
    T: Scalar,
    F: Fn(&Subset, &[T]) -> T + Send + Sync,
{
    fn ground_size(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.m
    }

    fn value(&self, set: &Subset, y: &[T]) -> T {
        (self.f)(set, y)
    }

    fn is_affine_in_y(&self) -> bool {
        self.affine
    }
}

/// Problem-level constants driving the step-size schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants<T> {
    l0x: T,
    l0y: T,
    m_bound: T,
    dy: T,
    l0: T,
}

impl<T: Scalar> ProblemConstants<T> {
    /// `l0x`/`l0y`: Lipschitz constants of the extension in `x`/`y`;
    /// `m_bound`: uniform bound on `|f^L|`; `dy`: diameter of `Y`.
    pub fn new(l0x: T, l0y: T, m_bound: T, dy: T) -> Result<Self> {
        for (name, v) in [("l0x", l0x), ("l0y", l0y), ("m", m_bound), ("dy", dy)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidParameter(format!("constant {name} must be finite and >= 0")));
            }
        }
        Ok(Self {
            l0x,
            l0y,
            m_bound,
            dy,
            l0: l0x.min(T::of(4.0) * m_bound),
        })
    }

    pub fn l0x(&self) -> T {
        self.l0x
    }

    pub fn l0y(&self) -> T {
        self.l0y
    }

    pub fn m_bound(&self) -> T {
        self.m_bound
    }

    pub fn dy(&self) -> T {
        self.dy
    }

    /// `min{L0x, 4M}`.
    pub fn l0(&self) -> T {
        self.l0
    }

    pub fn with_l0x(self, l0x: T) -> Result<Self> {
        Self::new(l0x, self.l0y, self.m_bound, self.dy)
    }

    pub fn with_l0y(self, l0y: T) -> Result<Self> {
        Self::new(self.l0x, l0y, self.m_bound, self.dy)
    }

    pub fn with_m_bound(self, m_bound: T) -> Result<Self> {
        Self::new(self.l0x, self.l0y, m_bound, self.dy)
    }
}

/// Atomic count of set-function evaluations.
#[derive(Debug, Default)]
pub struct QueryCounter(AtomicU64);

impl QueryCounter {
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn add(&self, k: u64) {
        self.0.fetch_add(k, Ordering::Relaxed);
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

/// Closed-form `max_{y in Y} f^L(x, y)`, returning the maximizer and value.
pub type AnalyticInnerMax<T> = Arc<dyn Fn(&[T]) -> (Vec<T>, T) + Send + Sync>;

/// Exact `min_S f(S, y)` that does not go through the value oracle.
pub type ExactSetMinimizer<T> = Arc<dyn Fn(&[T]) -> (Subset, T) + Send + Sync>;

/// A joint objective together with its domain, constants and query counter.
///
/// Clones share the query counter; use [`SetFunctionInstance::detached`] for
/// an independent one.
#[derive(Clone)]
pub struct SetFunctionInstance<T: Scalar> {
    name: String,
    oracle: Arc<dyn SetFunction<T>>,
    constraint: ConstraintSet<T>,
    constants: ProblemConstants<T>,
    counter: Arc<QueryCounter>,
    inner_max: Option<AnalyticInnerMax<T>>,
    set_minimizer: Option<ExactSetMinimizer<T>>,
    extension_saddle: Option<(Vec<T>, Vec<T>)>,
    set_saddle: Option<(Subset, Vec<T>)>,
}

impl<T: Scalar> fmt::Debug for SetFunctionInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetFunctionInstance")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("m", &self.m())
            .field("constraint", &self.constraint)
            .field("constants", &self.constants)
            .field("queries", &self.queries())
            .finish()
    }
}

impl<T: Scalar> SetFunctionInstance<T> {
    pub fn new(
        name: impl Into<String>,
        oracle: Arc<dyn SetFunction<T>>,
        constraint: ConstraintSet<T>,
        constants: ProblemConstants<T>,
    ) -> Result<Self> {
        constraint.validate()?;
        if constraint.dim() != oracle.dim() {
            return Err(Error::DimensionMismatch {
                expected: oracle.dim(),
                got: constraint.dim(),
            });
        }
        if oracle.ground_size() == 0 {
            return Err(Error::InvalidParameter("ground set must be nonempty".into()));
        }
        Ok(Self {
            name: name.into(),
            oracle,
            constraint,
            constants,
            counter: Arc::new(QueryCounter::default()),
            inner_max: None,
            set_minimizer: None,
            extension_saddle: None,
            set_saddle: None,
        })
    }

    pub fn from_fn<F>(
        name: impl Into<String>,
        n: usize,
        constraint: ConstraintSet<T>,
        constants: ProblemConstants<T>,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&Subset, &[T]) -> T + Send + Sync + 'static,
    {
        let m = constraint.dim();
        Self::new(name, Arc::new(FnSetFunction::new(n, m, f)), constraint, constants)
    }

    pub fn with_inner_max(mut self, f: AnalyticInnerMax<T>) -> Self {
        self.inner_max = Some(f);
        self
    }

    pub fn with_set_minimizer(mut self, f: ExactSetMinimizer<T>) -> Self {
        self.set_minimizer = Some(f);
        self
    }

    /// Saddle point `(x*, y*)` of the extension, when known in closed form.
    pub fn with_extension_saddle(mut self, x: Vec<T>, y: Vec<T>) -> Self {
        self.extension_saddle = Some((x, y));
        self
    }

    /// Saddle point `(S*, y*)` of the set function itself.
    pub fn with_set_saddle(mut self, s: Subset, y: Vec<T>) -> Self {
        self.set_saddle = Some((s, y));
        self
    }

    pub fn with_constants(mut self, constants: ProblemConstants<T>) -> Self {
        self.constants = constants;
        self
    }

    /// Copy with its own, zeroed query counter.
    pub fn detached(&self) -> Self {
        let mut c = self.clone();
        c.counter = Arc::new(QueryCounter::default());
        c
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.oracle.ground_size()
    }

    pub fn m(&self) -> usize {
        self.oracle.dim()
    }

    pub fn constraint(&self) -> &ConstraintSet<T> {
        &self.constraint
    }

    pub fn constants(&self) -> &ProblemConstants<T> {
        &self.constants
    }

    pub fn inner_max(&self) -> Option<&AnalyticInnerMax<T>> {
        self.inner_max.as_ref()
    }

    pub fn set_minimizer(&self) -> Option<&ExactSetMinimizer<T>> {
        self.set_minimizer.as_ref()
    }

    pub fn extension_saddle(&self) -> Option<&(Vec<T>, Vec<T>)> {
        self.extension_saddle.as_ref()
    }

    pub fn set_saddle(&self) -> Option<&(Subset, Vec<T>)> {
        self.set_saddle.as_ref()
    }

    pub fn is_affine_in_y(&self) -> bool {
        self.oracle.is_affine_in_y()
    }

    pub fn queries(&self) -> u64 {
        self.counter.get()
    }

    pub fn reset_queries(&self) {
        self.counter.reset()
    }

    pub fn counter(&self) -> &QueryCounter {
        &self.counter
    }

    pub fn check_y_shape(&self, y: &[T]) -> Result<()> {
        if y.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: y.len(),
            });
        }
        if !all_finite(y) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn check_in_domain(&self, y: &[T]) -> Result<()> {
        self.check_y_shape(y)?;
        let violation = self.constraint.violation(y);
        if violation > T::membership_tol() {
            return Err(Error::OutsideConstraint {
                violation: violation.as_f64(),
            });
        }
        Ok(())
    }

    /// `f(S, y)` for `y` in `Y`. Counts one query.
    pub fn evaluate(&self, set: &Subset, y: &[T]) -> Result<T> {
        self.check_in_domain(y)?;
        self.query(set, y)
    }

    /// `f(S, y)` for any finite `y`; the built-in objectives are defined on
    /// all of `R^m`. Counts one query.
    pub fn query(&self, set: &Subset, y: &[T]) -> Result<T> {
        set.check_within(self.n())?;
        self.check_y_shape(y)?;
        self.counter.add(1);
        Ok(self.oracle.value(set, y))
    }

    /// Values on the chain induced by `order`; counts `order.len() + 1` queries.
    pub fn query_chain(&self, order: &[usize], y: &[T]) -> Result<Vec<T>> {
        let n = self.n();
        if let Some(&bad) = order.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        self.check_y_shape(y)?;
        self.counter.add(order.len() as u64 + 1);
        Ok(self.oracle.chain_values(order, y))
    }
}

pub const DEFAULT_SUBMODULARITY_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SubmodularityCheck<T> {
    pub holds: bool,
    /// First violating pair in mask order, with the violation amount.
    pub violation: Option<(Subset, Subset, T)>,
}

/// Exhaustive check of `f(S) + f(T) >= f(S ∩ T) + f(S ∪ T)` at fixed `y`.
pub fn check_submodular_at<T: Scalar>(
    inst: &SetFunctionInstance<T>,
    y: &[T],
    cap: usize,
) -> Result<SubmodularityCheck<T>> {
    let n = inst.n();
    if n > cap || n > 20 {
        return Err(Error::CapExceeded { n, cap: cap.min(20) });
    }
    let size = 1usize << n;
    let values = (0..size)
        .map(|mask| inst.evaluate(&Subset::from_mask(mask as u64, n), y))
        .collect::<Result<Vec<T>>>()?;
    let scale = values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let tol = T::of(1e-9).max(T::epsilon() * T::of(16.0) * scale);
    for s in 0..size {
        for t in 0..size {
            let lhs = values[s] + values[t];
            let rhs = values[s & t] + values[s | t];
            if lhs < rhs - tol {
                return Ok(SubmodularityCheck {
                    holds: false,
                    violation: Some((
                        Subset::from_mask(s as u64, n),
                        Subset::from_mask(t as u64, n),
                        rhs - lhs,
                    )),
                });
            }
        }
    }
    Ok(SubmodularityCheck {
        holds: true,
        violation: None,
    })
}

/// Explicit values that take precedence over sampled estimates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantOverrides<T> {
    pub l0x: Option<T>,
    pub l0y: Option<T>,
    pub m_bound: Option<T>,
}

/// Point in `Y` drawn by projecting a uniform sample of its bounding box.
pub fn sample_in_domain<T: Scalar>(set: &ConstraintSet<T>, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<T> {
    let (lo, hi) = set.bounding_box();
    let raw: Vec<T> = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| l + (h - l) * rng::uniform::<T>(rng))
        .collect();
    set.project(&raw).expect("bounding-box samples are finite")
}

/// Sampled lower estimates of `L0x`, `L0y` and `M`.
///
/// Every estimate is a maximum over observed quantities that the true
/// constant bounds, so estimates never exceed the exact values. Overrides
/// replace the corresponding estimate.
pub fn estimate_constants<T: Scalar>(
    inst: &SetFunctionInstance<T>,
    samples: usize,
    seed: u64,
    overrides: &ConstantOverrides<T>,
) -> Result<ProblemConstants<T>> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let n = inst.n();
    let set = inst.constraint();
    let mut rng = rng::substream(seed, Domain::Estimation, Half::Probe, 0, 0);
    let (mut l0x, mut l0y, mut m_bound) = (T::zero(), T::zero(), T::zero());
    let step = T::of(1e-3) * set.diameter().max(T::of(1e-6));
    for _ in 0..samples {
        let x: Vec<T> = (0..n).map(|_| rng::uniform::<T>(&mut rng)).collect();
        let y = sample_in_domain(set, &mut rng);
        let (g, v) = lovasz::subgradient_with_value(inst, &x, &y)?;
        l0x = l0x.max(norm(&g));
        m_bound = m_bound.max(v.abs());

        let far = sample_in_domain(set, &mut rng);
        let dir: Vec<T> = (0..y.len()).map(|_| rng::uniform::<T>(&mut rng) - T::of(0.5)).collect();
        let dn = norm(&dir);
        let near = if dn > T::zero() {
            let moved: Vec<T> = y.iter().zip(&dir).map(|(&a, &d)| a + step * d / dn).collect();
            set.project(&moved)?
        } else {
            y.clone()
        };
        for other in [far, near] {
            let d = distance(&other, &y);
            if d > T::epsilon() {
                let w = lovasz::lovasz_value(inst, &x, &other)?;
                m_bound = m_bound.max(w.abs());
                l0y = l0y.max((w - v).abs() / d);
            }
        }
    }
    ProblemConstants::new(
        overrides.l0x.unwrap_or(l0x),
        overrides.l0y.unwrap_or(l0y),
        overrides.m_bound.unwrap_or(m_bound),
        set.diameter(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::examples::{make_example_b1, make_example_b2};

    fn table_instance(values: [f64; 4]) -> SetFunctionInstance<f64> {
        let constants = ProblemConstants::new(1.0, 0.0, 1.0, 1.0).unwrap();
        SetFunctionInstance::from_fn("table", 2, ConstraintSet::unit_box(1), constants, move |s, _| {
            values[s.to_mask().unwrap() as usize]
        })
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let b1 = make_example_b1::<f64>();
        assert!((b1.evaluate(&Subset::empty(), &[0.3]).unwrap() - 0.7).abs() < 1e-15);
        assert!((b1.evaluate(&Subset::from_indices([0]), &[0.3]).unwrap() - 0.3).abs() < 1e-15);
        let b2 = make_example_b2::<f64>();
        assert!((b2.evaluate(&Subset::empty(), &[0.5]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn evaluate_counts_and_checks_domain() {
        let b1 = make_example_b1::<f64>();
        b1.reset_queries();
        b1.evaluate(&Subset::empty(), &[0.2]).unwrap();
        b1.evaluate(&Subset::empty(), &[1.0 + 1e-13]).unwrap();
        assert_eq!(b1.queries(), 2);
        assert!(matches!(
            b1.evaluate(&Subset::empty(), &[1.5]),
            Err(Error::OutsideConstraint { .. })
        ));
        assert!(matches!(
            b1.evaluate(&Subset::from_indices([1]), &[0.5]),
            Err(Error::IndexOutOfRange { index: 1, n: 1 })
        ));
        assert_eq!(b1.queries(), 2);
        b1.query(&Subset::empty(), &[1.5]).unwrap();
        assert_eq!(b1.queries(), 3);
    }

    #[test]
    fn charvec_examples() {
        assert_eq!(charvec::<f64>(&Subset::empty(), 3).unwrap(), vec![0.0; 3]);
        assert_eq!(
            charvec::<f64>(&Subset::from_indices([0, 2]), 3).unwrap(),
            vec![1.0, 0.0, 1.0]
        );
        assert!(matches!(
            charvec::<f64>(&Subset::from_indices([3]), 3),
            Err(Error::IndexOutOfRange { .. })
        ));
        for mask in 0..16u64 {
            let s = Subset::from_mask(mask, 4);
            assert_eq!(from_charvec(&charvec::<f64>(&s, 4).unwrap()), s);
            assert_eq!(s.to_mask(), Some(mask));
        }
    }

    #[test]
    fn submodularity_examples() {
        let b1 = make_example_b1::<f64>();
        assert!(check_submodular_at(&b1, &[0.2], DEFAULT_SUBMODULARITY_CAP).unwrap().holds);

        let bad = table_instance([0.0, 0.0, 0.0, 1.0]);
        let check = check_submodular_at(&bad, &[0.0], DEFAULT_SUBMODULARITY_CAP).unwrap();
        assert!(!check.holds);
        let (s, t, _) = check.violation.unwrap();
        assert_eq!((s, t), (Subset::from_indices([0]), Subset::from_indices([1])));

        // Cut of a single edge between the two nodes.
        let cut = table_instance([0.0, 1.0, 1.0, 0.0]);
        assert!(check_submodular_at(&cut, &[0.0], DEFAULT_SUBMODULARITY_CAP).unwrap().holds);
    }

    #[test]
    fn submodularity_cap() {
        let b1 = make_example_b1::<f64>();
        assert!(matches!(
            check_submodular_at(&b1, &[0.2], 0),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn constants_l0_tracks_updates() {
        let c = ProblemConstants::new(3.0f64, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(c.l0(), 2.0);
        let c = c.with_m_bound(2.0).unwrap();
        assert_eq!(c.l0(), 3.0);
        let c = c.with_l0x(1.0).unwrap();
        assert_eq!(c.l0(), 1.0);
        assert!(ProblemConstants::new(-1.0f64, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn estimated_constants_b1() {
        let b1 = make_example_b1::<f64>();
        let c = estimate_constants(&b1, 2000, 3, &ConstantOverrides::default()).unwrap();
        for (est, exact) in [(c.m_bound(), 1.0), (c.l0x(), 1.0), (c.l0y(), 1.0)] {
            assert!(est <= exact + 1e-9, "{est} > {exact}");
            assert!(est >= 0.9, "{est} too loose");
        }
        assert_eq!(c.dy(), 1.0);
        let over = ConstantOverrides {
            l0x: Some(5.0),
            ..Default::default()
        };
        let c = estimate_constants(&b1, 10, 3, &over).unwrap();
        assert_eq!(c.l0x(), 5.0);
        assert_eq!(c.l0(), 4.0 * c.m_bound());
    }

    #[test]
    fn estimated_constants_constant_function() {
        let constants = ProblemConstants::new(0.0, 0.0, 2.5, 1.0).unwrap();
        let inst = SetFunctionInstance::from_fn("const", 3, ConstraintSet::unit_box(2), constants, |_, _| -2.5)
            .unwrap();
        let c = estimate_constants(&inst, 50, 1, &ConstantOverrides::default()).unwrap();
        assert_eq!(c.l0x(), 0.0);
        assert_eq!(c.l0y(), 0.0);
        assert!((c.m_bound() - 2.5f64).abs() <= 1e-12);
    }

    #[test]
    fn estimated_constants_b2() {
        let b2 = make_example_b2::<f64>();
        let c = estimate_constants(&b2, 500, 11, &ConstantOverrides::default()).unwrap();
        assert!(c.l0y() <= 1.0 + 1e-9);
    }

    #[test]
    fn chain_default_matches_value() {
        let inst = table_instance([0.5, 1.0, 2.0, 0.25]);
        let chain = inst.query_chain(&[1, 0], &[0.0]).unwrap();
        assert_eq!(chain, vec![0.5, 2.0, 0.25]);
        assert_eq!(inst.queries(), 3);
    }
}
