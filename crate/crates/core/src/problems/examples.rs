//! One-element toy problems on `Y = [0, 1]`.
//!
//! `b1`: `f(∅, y) = 1 - y`, `f({1}, y) = y`. Extension `2xy - x - y + 1`,
//! saddle of the extension at `(1/2, 1/2)`, no saddle of the set function.
//!
//! `b2`: `f(∅, y) = 0.4 - (y - 1/2)²`, `f({1}, y) = 1`. Extension
//! `0.4 + 0.6x + (x - 1)(y - 1/2)²`, saddle `(∅, 1/2)` with value 0.4.

use std::sync::Arc;

use crate::geometry::ConstraintSet;
use crate::scalar::Scalar;
use crate::setfn::{ProblemConstants, SetFunctionInstance, Subset};

pub fn b1_value<T: Scalar>(set: &Subset, y: T) -> T {
    if set.is_empty() {
        T::one() - y
    } else {
        y
    }
}

pub fn b2_value<T: Scalar>(set: &Subset, y: T) -> T {
    let h = T::of(0.5);
    if set.is_empty() {
        T::of(0.4) - (y - h) * (y - h)
    } else {
        T::one()
    }
}

pub fn make_example_b1<T: Scalar>() -> SetFunctionInstance<T> {
    let constants = ProblemConstants::new(T::one(), T::one(), T::one(), T::one()).expect("nonnegative");
    let half = T::of(0.5);
    SetFunctionInstance::from_fn("b1", 1, ConstraintSet::unit_box(1), constants, |s, y| b1_value(s, y[0]))
        .expect("valid instance")
        .with_inner_max(Arc::new(|x: &[T]| {
            // f^L(x, y) = (2x - 1) y + 1 - x
            if x[0] >= T::of(0.5) {
                (vec![T::one()], x[0])
            } else {
                (vec![T::zero()], T::one() - x[0])
            }
        }))
        .with_extension_saddle(vec![half], vec![half])
}

pub fn make_example_b2<T: Scalar>() -> SetFunctionInstance<T> {
    // |∂f^L/∂x| = 0.6 + (y - 1/2)² <= 0.85 on [0, 1].
    let constants = ProblemConstants::new(T::of(0.85), T::one(), T::one(), T::one()).expect("nonnegative");
    let half = T::of(0.5);
    SetFunctionInstance::from_fn("b2", 1, ConstraintSet::unit_box(1), constants, |s, y| b2_value(s, y[0]))
        .expect("valid instance")
        .with_inner_max(Arc::new(|x: &[T]| (vec![T::of(0.5)], T::of(0.4) + T::of(0.6) * x[0])))
        .with_extension_saddle(vec![T::zero()], vec![half])
        .with_set_saddle(Subset::empty(), vec![half])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lovasz::lovasz_value;
    use crate::setfn::{check_submodular_at, DEFAULT_SUBMODULARITY_CAP};

    #[test]
    fn extensions_match_closed_forms() {
        let b1 = make_example_b1::<f64>();
        let b2 = make_example_b2::<f64>();
        for i in 0..20 {
            for j in 0..20 {
                let (x, y) = (i as f64 / 19.0, j as f64 / 19.0);
                let v1 = lovasz_value(&b1, &[x], &[y]).unwrap();
                assert!((v1 - (2.0 * x * y - x - y + 1.0)).abs() <= 1e-12);
                let v2 = lovasz_value(&b2, &[x], &[y]).unwrap();
                assert!((v2 - (0.4 + 0.6 * x + (x - 1.0) * (y - 0.5) * (y - 0.5))).abs() <= 1e-12);
            }
        }
        assert!((lovasz_value(&b2, &[0.0], &[0.5]).unwrap() - 0.4).abs() <= 1e-15);
    }

    #[test]
    fn analytic_inner_max_matches_scan() {
        for inst in [make_example_b1::<f64>(), make_example_b2::<f64>()] {
            let inner = inst.inner_max().unwrap().clone();
            for i in 0..=10 {
                let x = i as f64 / 10.0;
                let (_, v) = inner(&[x]);
                let scan = (0..=1000)
                    .map(|j| lovasz_value(&inst, &[x], &[j as f64 / 1000.0]).unwrap())
                    .fold(f64::MIN, f64::max);
                assert!((v - scan).abs() <= 1e-6, "{} x={x}: {v} vs {scan}", inst.name());
            }
        }
    }

    #[test]
    fn submodular_everywhere() {
        for inst in [make_example_b1::<f64>(), make_example_b2::<f64>()] {
            for j in 0..50 {
                let y = [j as f64 / 49.0];
                assert!(check_submodular_at(&inst, &y, DEFAULT_SUBMODULARITY_CAP).unwrap().holds);
            }
        }
    }

    #[test]
    fn f32_instances() {
        let b1 = make_example_b1::<f32>();
        assert!((lovasz_value(&b1, &[0.5f32], &[0.5]).unwrap() - 0.5).abs() < 1e-6);
    }
}
