//! Drifting version of the `b1` toy for online experiments.
//!
//! `f_k(∅, y) = 1 - (y - o_k)`, `f_k({1}, y) = y - o_k` with
//! `o_k = A sin(2πk / T) exp(-k / τ)`. The extension saddle is
//! `(1/2, 1/2 + o_k)` and the total saddle movement stays bounded.

use std::marker::PhantomData;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConstraintSet;
use crate::scalar::Scalar;
use crate::setfn::{ProblemConstants, SetFunctionInstance};
use crate::solver::ProblemStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub amplitude: f64,
    pub period: f64,
    pub decay: f64,
}

impl Default for DriftSpec {
    fn default() -> Self {
        Self {
            amplitude: 0.2,
            period: 200.0,
            decay: 500.0,
        }
    }
}

impl DriftSpec {
    pub fn offset(&self, k: usize) -> f64 {
        let k = k as f64;
        self.amplitude * (std::f64::consts::TAU * k / self.period).sin() * (-k / self.decay).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.amplitude) || !(self.period > 0.0) || !(self.decay > 0.0) {
            return Err(Error::InvalidParameter(
                "drift needs amplitude in [0, 0.5] and positive period and decay".into(),
            ));
        }
        Ok(())
    }
}

/// Shifted toy objective with offset `o`.
pub fn drifting_b1<T: Scalar>(offset: f64, amplitude: f64) -> SetFunctionInstance<T> {
    let o = T::of(offset);
    let constants = ProblemConstants::new(
        T::of(1.0 + 2.0 * amplitude),
        T::one(),
        T::of(1.0 + amplitude),
        T::one(),
    )
    .expect("nonnegative");
    SetFunctionInstance::from_fn("b1-drift", 1, ConstraintSet::unit_box(1), constants, move |s, y| {
        if s.is_empty() {
            T::one() - (y[0] - o)
        } else {
            y[0] - o
        }
    })
    .expect("valid instance")
    .with_inner_max(Arc::new(move |x: &[T]| {
        let two = T::of(2.0);
        let base = T::one() - x[0] + o - two * x[0] * o;
        if x[0] >= T::of(0.5) {
            (vec![T::one()], base + two * x[0] - T::one())
        } else {
            (vec![T::zero()], base)
        }
    }))
    .with_extension_saddle(vec![T::of(0.5)], vec![T::of(0.5 + offset)])
}

pub struct DriftingB1<T> {
    spec: DriftSpec,
    _scalar: PhantomData<T>,
}

impl<T: Scalar> DriftingB1<T> {
    pub fn new(spec: DriftSpec) -> Self {
        Self {
            spec,
            _scalar: PhantomData,
        }
    }

    pub fn spec(&self) -> &DriftSpec {
        &self.spec
    }

    /// `max_y f^L(x, y) - min_S f(S, y)` for offset `o`, by hand.
    pub fn closed_form_gap(o: f64, x: f64, y: f64) -> f64 {
        let upper = if x >= 0.5 { x + o - 2.0 * x * o } else { 1.0 - x + o - 2.0 * x * o };
        upper - (1.0 - y + o).min(y - o)
    }
}

impl<T: Scalar> ProblemStream<T> for DriftingB1<T> {
    fn objective(&mut self, k: usize) -> Result<Option<SetFunctionInstance<T>>> {
        self.spec.validate()?;
        Ok(Some(drifting_b1(self.spec.offset(k), self.spec.amplitude)))
    }
}
