//! Zeroth-order extragradient iterations on the lifted problem
//! `min_{x ∈ [0,1]^n} max_{y ∈ Y} f^L(x, y)`.
//!
//! The operator is `G(z) = [g_x(z); -g_μ(z)]` with the chain subgradient on
//! top and a smoothed two-point estimate below. Each iteration probes
//! `ẑ = Proj(z - h1 G(z))` and then moves `z⁺ = Proj(z - h2 G(ẑ))`, drawing
//! fresh directions for both halves.

mod offline;
mod online;
mod schedule;

pub use offline::{solve_offline, BestIterate, GapSample, SelectionRule, Trace, TraceRow};
pub use online::{solve_online, FnStream, OnlineConfig, OnlineRecord, OnlineTrace, ProblemStream, VecStream};
pub use schedule::{derive_hyperparameters, online_step_size, DerivedSchedule};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConstraintSet;
use crate::lovasz::{extension_value, subgradient_with_value};
use crate::scalar::{all_finite, Scalar};
use crate::setfn::SetFunctionInstance;
use crate::smoothing::{oracle_batch_at, OracleConfig, StreamPosition};
use crate::rng::Half;
use crate::verify::InnerMethod;

/// Iterate `z = (x, y)` with `x ∈ [0,1]^n` and `y ∈ Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Scalar> JointState<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Self {
        Self { x, y }
    }

    /// `(½·1, center of Y)`.
    pub fn centered(inst: &SetFunctionInstance<T>) -> Self {
        Self::new(vec![T::of(0.5); inst.n()], inst.constraint().centered_point())
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn from_slice(z: &[T], n: usize) -> Self {
        Self::new(z[..n].to_vec(), z[n..].to_vec())
    }

    pub fn check_feasible(&self, inst: &SetFunctionInstance<T>) -> Result<()> {
        if self.x.len() != inst.n() {
            return Err(Error::DimensionMismatch {
                expected: inst.n(),
                got: self.x.len(),
            });
        }
        crate::lovasz::check_unit_cube(&self.x)?;
        inst.check_in_domain(&self.y)
    }

    pub fn is_feasible(&self, y_set: &ConstraintSet<T>, tol: T) -> bool {
        self.x.iter().all(|&v| v >= -tol && v <= T::one() + tol) && y_set.contains(&self.y, tol)
    }
}

/// Step sizes, either fixed or one per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSchedule<T> {
    Constant(T),
    PerIteration(Vec<T>),
}

impl<T: Scalar> StepSchedule<T> {
    pub fn at(&self, k: usize) -> T {
        match self {
            StepSchedule::Constant(h) => *h,
            StepSchedule::PerIteration(v) => v[k.min(v.len() - 1)],
        }
    }

    fn validate(&self, name: &str, iterations: usize) -> Result<()> {
        let ok = |h: &T| *h > T::zero() && h.is_finite();
        match self {
            StepSchedule::Constant(h) if ok(h) => Ok(()),
            StepSchedule::PerIteration(v) if v.len() > iterations && v.iter().all(ok) => Ok(()),
            StepSchedule::PerIteration(v) if v.len() <= iterations => Err(Error::InvalidParameter(format!(
                "{name} schedule has {} entries, need {}",
                v.len(),
                iterations + 1
            ))),
            _ => Err(Error::InvalidParameter(format!("{name} must be positive and finite"))),
        }
    }
}

/// How iterates are scored while solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapTracking {
    Off,
    /// Exact gaps from enumeration or a registered minimizer.
    Exact,
    /// Norm of the operator averaged over a fresh batch of directions.
    Residual,
    /// `Exact` when `n <= 14` or an exact set minimizer is registered,
    /// otherwise `Residual`.
    #[default]
    Auto,
}

pub const EXACT_GAP_MAX_N: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub h1: StepSchedule<T>,
    pub h2: StepSchedule<T>,
    pub oracle: OracleConfig<T>,
    /// Last iteration index `N`; iterations `0..=N` are run.
    pub iterations: usize,
    pub record_every: usize,
    #[serde(default)]
    pub gaps: GapTracking,
    #[serde(default)]
    pub inner: InnerMethod,
    /// Draw thresholds and record rounded sets.
    #[serde(default = "yes")]
    pub rounding: bool,
}

fn yes() -> bool {
    true
}

impl<T: Scalar> SolverConfig<T> {
    pub fn constant(h1: T, h2: T, oracle: OracleConfig<T>, iterations: usize) -> Self {
        Self {
            h1: StepSchedule::Constant(h1),
            h2: StepSchedule::Constant(h2),
            oracle,
            iterations,
            record_every: 1,
            gaps: GapTracking::Auto,
            inner: InnerMethod::Auto,
            rounding: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.h1.validate("h1", self.iterations)?;
        self.h2.validate("h2", self.iterations)?;
        self.oracle.validate()?;
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// One evaluation of the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorEval<T> {
    /// `[g_x; -g_μ]`, length `n + m`.
    pub g: Vec<T>,
    /// `f^L(x, y)` from the subgradient sweep.
    pub value: T,
    /// Set-function queries spent.
    pub queries: u64,
}

/// `G(z)` with directions from the batch stream at `pos`.
///
/// Costs `(t + 1)(n + 1)` queries for one-sided schemes and
/// `(2t + 1)(n + 1)` for the central scheme.
pub fn assemble_g<T: Scalar>(
    inst: &SetFunctionInstance<T>,
    z: &JointState<T>,
    oracle: &OracleConfig<T>,
    pos: StreamPosition,
) -> Result<OperatorEval<T>> {
    assemble_g_split(inst, inst, z, oracle, pos)
}

/// `G(z)` whose subgradient and base value come from `base`, with the
/// perturbed values taken from `probe`. Equal instances give [`assemble_g`].
pub fn assemble_g_split<T: Scalar>(
    base: &SetFunctionInstance<T>,
    probe: &SetFunctionInstance<T>,
    z: &JointState<T>,
    oracle: &OracleConfig<T>,
    pos: StreamPosition,
) -> Result<OperatorEval<T>> {
    let (gx, value) = subgradient_with_value(base, &z.x, &z.y)?;
    let est = oracle_batch_at(|y: &[T]| extension_value(probe, &z.x, y), &z.y, oracle, pos, Some(value))?;
    let per_sweep = base.n() as u64 + 1;
    let mut g = gx;
    g.extend(est.gradient.into_iter().map(|v| -v));
    if !all_finite(&g) {
        return Err(Error::NonFinite);
    }
    Ok(OperatorEval {
        g,
        value,
        queries: per_sweep * (1 + est.evaluations as u64),
    })
}

/// `Proj_Z(z - h·g)` for `Z = [0,1]^n × Y`.
pub fn project_step<T: Scalar>(y_set: &ConstraintSet<T>, z: &JointState<T>, h: T, g: &[T]) -> Result<JointState<T>> {
    let n = z.x.len();
    let x = z
        .x
        .iter()
        .zip(&g[..n])
        .map(|(&a, &d)| (a - h * d).max(T::zero()).min(T::one()))
        .collect();
    let moved: Vec<T> = z.y.iter().zip(&g[n..]).map(|(&a, &d)| a - h * d).collect();
    Ok(JointState::new(x, y_set.project(&moved)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub z_hat: JointState<T>,
    pub z_next: JointState<T>,
    /// `f^L(z_k)`.
    pub value: T,
    /// `f^L(ẑ_k)`.
    pub value_hat: T,
    pub queries: u64,
}

/// One extragradient iteration at index `k`.
pub fn extragradient_step<T: Scalar>(
    inst: &SetFunctionInstance<T>,
    z: &JointState<T>,
    h1: T,
    h2: T,
    oracle: &OracleConfig<T>,
    k: u64,
) -> Result<StepOutcome<T>> {
    step_with(inst, inst, inst, z, h1, h2, oracle, k)
}

/// Extragradient iteration where the correction half takes its subgradient
/// and base value from `correction_base` and perturbed values from `inst`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn step_with<T: Scalar>(
    inst: &SetFunctionInstance<T>,
    correction_base: &SetFunctionInstance<T>,
    correction_probe: &SetFunctionInstance<T>,
    z: &JointState<T>,
    h1: T,
    h2: T,
    oracle: &OracleConfig<T>,
    k: u64,
) -> Result<StepOutcome<T>> {
    let probe = assemble_g(inst, z, oracle, StreamPosition::new(k, Half::Probe))?;
    let z_hat = project_step(inst.constraint(), z, h1, &probe.g)?;
    let corr = assemble_g_split(
        correction_base,
        correction_probe,
        &z_hat,
        oracle,
        StreamPosition::new(k, Half::Correction),
    )?;
    let z_next = project_step(inst.constraint(), z, h2, &corr.g)?;
    Ok(StepOutcome {
        z_hat,
        z_next,
        value: probe.value,
        value_hat: corr.value,
        queries: probe.queries + corr.queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::examples::make_example_b1;
    use crate::scalar::norm;
    use crate::setfn::{ProblemConstants, Subset};
    use crate::smoothing::DifferenceScheme;

    fn modular_constant_in_y() -> SetFunctionInstance<f64> {
        let w = [0.5, -1.0, 2.0];
        let c = ProblemConstants::new(3.0, 0.0, 4.0, 1.0).unwrap();
        SetFunctionInstance::from_fn("modular", 3, ConstraintSet::unit_box(2), c, move |s: &Subset, _| {
            s.indices().iter().map(|&i| w[i]).sum()
        })
        .unwrap()
    }

    #[test]
    fn operator_at_b1_saddle_is_small() {
        let b1 = make_example_b1::<f64>();
        let z = JointState::new(vec![0.5], vec![0.5]);
        let oracle = OracleConfig::new(0.05, 20_000, 3);
        let g = assemble_g(&b1, &z, &oracle, StreamPosition::default()).unwrap();
        assert!(g.g[0].abs() < 1e-12);
        // f^L is linear in y with slope 2x - 1 = 0 here, so every sample is 0.
        assert!(g.g[1].abs() < 1e-12);
    }

    #[test]
    fn operator_of_modular_objective() {
        let inst = modular_constant_in_y();
        let z = JointState::new(vec![0.2, 0.9, 0.4], vec![0.1, 0.7]);
        let g = assemble_g(&inst, &z, &OracleConfig::new(0.1, 5, 0), StreamPosition::default()).unwrap();
        assert_eq!(&g.g[..3], &[0.5, -1.0, 2.0]);
        assert_eq!(&g.g[3..], &[0.0, 0.0]);
    }

    #[test]
    fn operator_query_accounting() {
        let inst = modular_constant_in_y();
        let z = JointState::new(vec![0.2, 0.9, 0.4], vec![0.1, 0.7]);
        for (t, scheme, per) in [(1, DifferenceScheme::Forward, 2), (7, DifferenceScheme::Backward, 8), (3, DifferenceScheme::Central, 7)] {
            let mut oracle = OracleConfig::new(0.1, t, 0);
            oracle.scheme = scheme;
            inst.reset_queries();
            let g = assemble_g(&inst, &z, &oracle, StreamPosition::default()).unwrap();
            assert_eq!(g.queries, per * 4);
            assert_eq!(inst.queries(), per * 4);
        }
    }

    #[test]
    fn constant_objective_is_fixed_point() {
        let c = ProblemConstants::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let inst = SetFunctionInstance::from_fn("const", 2, ConstraintSet::capped_simplex(3, 1.5), c, |_, _| 1.0).unwrap();
        let z = JointState::new(vec![0.3, 0.8], vec![0.2, 0.5, 0.1]);
        let out = extragradient_step(&inst, &z, 0.5, 0.5, &OracleConfig::new(0.1, 4, 9), 0).unwrap();
        assert_eq!(out.z_hat, z);
        assert_eq!(out.z_next, z);
    }

    #[test]
    fn interior_step_is_unprojected() {
        let b1 = make_example_b1::<f64>();
        let z = JointState::new(vec![0.4], vec![0.7]);
        let oracle = OracleConfig::new(0.01, 3, 4);
        let h = 1e-4;
        let out = extragradient_step(&b1, &z, h, h, &oracle, 5).unwrap();
        let g0 = assemble_g(&b1, &z, &oracle, StreamPosition::new(5, Half::Probe)).unwrap();
        assert!((out.z_hat.x[0] - (0.4 - h * g0.g[0])).abs() <= 1e-12);
        assert!((out.z_hat.y[0] - (0.7 - h * g0.g[1])).abs() <= 1e-12);
        let g1 = assemble_g(&b1, &out.z_hat, &oracle, StreamPosition::new(5, Half::Correction)).unwrap();
        assert!((out.z_next.x[0] - (0.4 - h * g1.g[0])).abs() <= 1e-12);
        assert!((out.z_next.y[0] - (0.7 - h * g1.g[1])).abs() <= 1e-12);
    }

    #[test]
    fn steps_stay_feasible() {
        let inst = modular_constant_in_y();
        let z = JointState::new(vec![0.0, 1.0, 0.5], vec![0.5, 0.5]);
        let out = extragradient_step(&inst, &z, 10.0, 10.0, &OracleConfig::new(0.1, 2, 1), 0).unwrap();
        assert!(out.z_hat.is_feasible(inst.constraint(), 1e-9));
        assert!(out.z_next.is_feasible(inst.constraint(), 1e-9));
        assert!(norm(&out.z_next.x) > 0.0);
    }

    #[test]
    fn schedules_validate() {
        let o = OracleConfig::new(0.1, 1, 0);
        assert!(SolverConfig::constant(0.1, 0.1, o, 3).validate().is_ok());
        assert!(SolverConfig::constant(0.0, 0.1, o, 3).validate().is_err());
        let mut c = SolverConfig::constant(0.1, 0.1, o, 3);
        c.h1 = StepSchedule::PerIteration(vec![0.1; 3]);
        assert!(c.validate().is_err());
        c.h1 = StepSchedule::PerIteration(vec![0.1; 4]);
        assert!(c.validate().is_ok());
        c.record_every = 0;
        assert!(c.validate().is_err());
    }
}
