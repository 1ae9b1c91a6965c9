//! Step sizes, smoothing and iteration budget from problem constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConstraintSet;
use crate::scalar::Scalar;
use crate::setfn::ProblemConstants;
use crate::smoothing::OracleConfig;

use super::{JointState, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedSchedule<T> {
    pub mu: T,
    pub h1: T,
    pub h2: T,
    /// `N`.
    pub iterations: usize,
    /// `r̄0 = max_{z ∈ Z} ‖z0 - z‖`.
    pub r0: T,
    /// `L0² + L0y² (m + 4)²`.
    pub operator_bound: T,
}

impl<T: Scalar> DerivedSchedule<T> {
    pub fn into_config(self, samples: usize, seed: u64) -> SolverConfig<T> {
        SolverConfig::constant(self.h1, self.h2, OracleConfig::new(self.mu, samples, seed), self.iterations)
    }
}

fn operator_bound(constants: &ProblemConstants<f64>, m: usize) -> f64 {
    let k = (m + 4) as f64;
    constants.l0().powi(2) + constants.l0y().powi(2) * k * k
}

fn to_f64<T: Scalar>(c: &ProblemConstants<T>) -> ProblemConstants<f64> {
    ProblemConstants::new(c.l0x().as_f64(), c.l0y().as_f64(), c.m_bound().as_f64(), c.dy().as_f64())
        .expect("already validated")
}

/// Offline schedule for target accuracy `epsilon`:
///
/// ```text
/// μ  = ε / (2 L0y √m)
/// h1 = 1 / (√(N+1) √K)
/// h2 = r̄0 / (√(N+1) √K)
/// N  = max(0, ⌈4 (r̄0 + 1)² K / ε² - 1⌉),   K = L0² + L0y² (m + 4)²
/// ```
///
/// `L0 = min(L0x, 4M)` stands in for the Lipschitz constant of the operator.
/// With `L0y = 0` the objective does not depend on `y` and `μ = ε` is used.
pub fn derive_hyperparameters<T: Scalar>(
    epsilon: T,
    constants: &ProblemConstants<T>,
    m: usize,
    z0: &JointState<T>,
    joint: &ConstraintSet<T>,
) -> Result<DerivedSchedule<T>> {
    let eps = epsilon.as_f64();
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {eps}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("y block must be nonempty".into()));
    }
    let c = to_f64(constants);
    let k = operator_bound(&c, m);
    if !(k > 0.0) {
        return Err(Error::InvalidParameter("all Lipschitz constants are zero".into()));
    }
    let r0 = joint.farthest_distance(&z0.to_vec()).as_f64();
    let raw = (4.0 * (r0 + 1.0).powi(2) * k / (eps * eps) - 1.0).ceil();
    if !raw.is_finite() || raw >= usize::MAX as f64 {
        return Err(Error::InvalidParameter("iteration budget overflows".into()));
    }
    let iterations = raw.max(0.0) as usize;
    let mu = if c.l0y() > 0.0 {
        eps / (2.0 * c.l0y() * (m as f64).sqrt())
    } else {
        eps
    };
    let denom = ((iterations + 1) as f64).sqrt() * k.sqrt();
    Ok(DerivedSchedule {
        mu: T::of(mu),
        h1: T::of(1.0 / denom),
        h2: T::of(r0 / denom),
        iterations,
        r0: T::of(r0),
        operator_bound: T::of(k),
    })
}

/// Online step sizes `(h1, h2)` for `N` frames with initial comparator
/// distance bound `e0`, joint diameter `dz` and path-length bound `p_bar`:
/// `h2 = √(e0² + 3 dz P̄) / (√K √(N+1))`, `h1 = 1 / (√K √(N+1))`.
pub fn online_step_size<T: Scalar>(
    e0: T,
    dz: T,
    p_bar: T,
    constants: &ProblemConstants<T>,
    m: usize,
    iterations: usize,
) -> Result<(T, T)> {
    let k = operator_bound(&to_f64(constants), m);
    if !(k > 0.0) {
        return Err(Error::InvalidParameter("all Lipschitz constants are zero".into()));
    }
    let (e0, dz, p) = (e0.as_f64(), dz.as_f64(), p_bar.as_f64());
    if e0 < 0.0 || dz < 0.0 || p < 0.0 {
        return Err(Error::InvalidParameter("distances must be nonnegative".into()));
    }
    let denom = k.sqrt() * ((iterations + 1) as f64).sqrt();
    let h2 = (e0 * e0 + 3.0 * dz * p).sqrt() / denom;
    if !(h2 > 0.0) {
        return Err(Error::InvalidParameter("zero step size".into()));
    }
    Ok((T::of(1.0 / denom), T::of(h2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::examples::{make_example_b1, make_example_b2};

    fn b1_schedule(eps: f64) -> DerivedSchedule<f64> {
        let b1 = make_example_b1::<f64>();
        let z0 = JointState::centered(&b1);
        let joint = ConstraintSet::joint(1, b1.constraint());
        derive_hyperparameters(eps, b1.constants(), 1, &z0, &joint).unwrap()
    }

    #[test]
    fn b1_at_one_tenth() {
        let s = b1_schedule(0.1);
        assert_eq!(s.iterations, 30307);
        assert_eq!(s.mu, 0.05);
        assert!((s.r0 - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.operator_bound, 26.0);
        // Independent recomputation of the budget.
        let r0 = 0.5f64.sqrt();
        let hand = (4.0 * (1.0 + r0) * (1.0 + r0) * 26.0 / 0.01 - 1.0).ceil();
        assert_eq!(hand, 30307.0);
        let denom = (30308.0f64 * 26.0).sqrt();
        assert!((s.h1 - 1.0 / denom).abs() < 1e-18);
        assert!((s.h2 - r0 / denom).abs() < 1e-18);
    }

    #[test]
    fn huge_epsilon_gives_zero_iterations() {
        assert_eq!(b1_schedule(1e6).iterations, 0);
    }

    #[test]
    fn budget_grows_quadratically_in_radius() {
        let c = ProblemConstants::new(1.0f64, 1.0, 1.0, 1.0).unwrap();
        let n_for = |side: f64| {
            let set = ConstraintSet::Box {
                lower: vec![0.0],
                upper: vec![side],
            };
            let joint = ConstraintSet::joint(1, &set);
            let z0 = JointState::new(vec![0.5], vec![side / 2.0]);
            derive_hyperparameters(0.1, &c, 1, &z0, &joint).unwrap()
        };
        let a = n_for(200.0);
        let b = n_for(400.0);
        let ratio = b.iterations as f64 / a.iterations as f64;
        assert!((b.r0 / a.r0 - 2.0).abs() < 0.01);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_epsilon() {
        let b2 = make_example_b2::<f64>();
        let z0 = JointState::centered(&b2);
        let joint = ConstraintSet::joint(1, b2.constraint());
        assert!(derive_hyperparameters(0.0, b2.constants(), 1, &z0, &joint).is_err());
        assert!(derive_hyperparameters(-1.0, b2.constants(), 1, &z0, &joint).is_err());
    }

    #[test]
    fn online_sizes() {
        let c = ProblemConstants::new(1.0f64, 1.0, 1.0, 1.0).unwrap();
        let (h1, h2) = online_step_size(1.0, 2.0, 0.5, &c, 1, 99).unwrap();
        let denom = 26f64.sqrt() * 10.0;
        assert!((h1 - 1.0 / denom).abs() < 1e-15);
        assert!((h2 - 4f64.sqrt() / denom).abs() < 1e-15);
    }
}
