use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lovasz::round_threshold;
use crate::rng::{self, Domain, Half};
use crate::scalar::{norm, Scalar};
use crate::setfn::{SetFunctionInstance, Subset};
use crate::smoothing::StreamPosition;
use crate::verify::{self, InnerMethod, BRUTE_FORCE_CAP};

use super::{assemble_g, extragradient_step, GapTracking, JointState, SolverConfig, EXACT_GAP_MAX_N};

/// How the returned iterate was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Smallest exact `D_τ(ẑ_k)` among recorded iterates.
    ExactGap,
    /// Smallest operator residual among recorded iterates.
    Residual,
    /// The last probe iterate.
    FinalIterate,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GapSample<T> {
    /// `D(Ŝ_k, ŷ_k)` for the rounded probe set.
    pub d: Option<T>,
    /// `R(Ŝ_k, ŷ_k)`, when the instance has a set saddle.
    pub r: Option<T>,
    /// `D_τ(x̂_k, ŷ_k)`, equal to `D^L(ẑ_k)`.
    pub dtau: Option<T>,
    /// `‖G(ẑ_k)‖` over a fresh batch.
    pub residual: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow<T> {
    pub k: usize,
    pub z: JointState<T>,
    pub z_hat: JointState<T>,
    /// `f^L(z_k)`.
    pub f_z: T,
    /// `f^L(ẑ_k)`.
    pub f_hat: T,
    pub tau: Option<T>,
    pub tau_hat: Option<T>,
    pub set: Option<Subset>,
    pub set_hat: Option<Subset>,
    pub gap: GapSample<T>,
    /// Set-function queries since the start of the run, gaps included.
    pub queries: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestIterate<T> {
    pub k: usize,
    pub state: JointState<T>,
    pub set: Option<Subset>,
    /// `f^L(x̄, ȳ)`.
    pub value: T,
    pub score: Option<T>,
    pub rule: SelectionRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace<T> {
    pub rows: Vec<TraceRow<T>>,
    pub best: BestIterate<T>,
    /// `z_{N+1}`.
    pub final_state: JointState<T>,
    /// `(1/(N+1)) Σ_k ẑ_k` over every iteration.
    pub average: JointState<T>,
    /// Queries spent by the iterations themselves.
    pub solver_queries: u64,
    /// Queries spent on gaps and residuals.
    pub gap_queries: u64,
    /// Mean of `D_τ(ẑ_k)` over recorded iterates.
    pub mean_gap: Option<T>,
}

fn choose_rule<T: Scalar>(inst: &SetFunctionInstance<T>, config: &SolverConfig<T>) -> Result<SelectionRule> {
    let exact_ok = |strict: bool| -> Result<bool> {
        let small = inst.n() <= if strict { BRUTE_FORCE_CAP } else { EXACT_GAP_MAX_N };
        let sets = small || inst.set_minimizer().is_some();
        match verify::resolve_method(inst, config.inner) {
            Ok(_) if sets => Ok(true),
            Err(e) if strict => Err(e),
            _ if strict => Err(Error::CapExceeded {
                n: inst.n(),
                cap: BRUTE_FORCE_CAP,
            }),
            _ => Ok(false),
        }
    };
    Ok(match config.gaps {
        GapTracking::Off => SelectionRule::FinalIterate,
        GapTracking::Residual => SelectionRule::Residual,
        GapTracking::Exact => {
            exact_ok(true)?;
            SelectionRule::ExactGap
        }
        GapTracking::Auto if exact_ok(false)? => SelectionRule::ExactGap,
        GapTracking::Auto => SelectionRule::Residual,
    })
}

fn exact_gaps<T: Scalar>(
    inst: &SetFunctionInstance<T>,
    z_hat: &JointState<T>,
    set_hat: Option<&Subset>,
    method: InnerMethod,
) -> Result<GapSample<T>> {
    let lower = verify::min_over_sets(inst, &z_hat.y)?.1;
    let dtau = verify::inner_max_y(inst, &z_hat.x, method)?.value - lower;
    let (d, r) = match set_hat {
        Some(s) => (
            Some(verify::inner_max_set(inst, s, method)?.value - lower),
            verify::restricted_gap(inst, s, &z_hat.y)?,
        ),
        None => (None, None),
    };
    Ok(GapSample {
        d,
        r,
        dtau: Some(dtau),
        residual: None,
    })
}

fn threshold<T: Scalar>(seed: u64, half: Half, k: usize) -> T {
    rng::uniform(&mut rng::substream(seed, Domain::Threshold, half, k as u64, 0))
}

/// Runs iterations `k = 0..=N` from `z0`, recording every `record_every`-th
/// iterate and the last one.
///
/// Gap evaluations go through the same counted oracle and are reported in
/// [`Trace::gap_queries`]; the iterations alone cost exactly
/// `2 (N + 1)` operator evaluations. Concurrent runs should use
/// [`SetFunctionInstance::detached`] copies so that counts stay separate.
pub fn solve_offline<T: Scalar>(
    inst: &SetFunctionInstance<T>,
    config: &SolverConfig<T>,
    z0: &JointState<T>,
) -> Result<Trace<T>> {
    config.validate()?;
    z0.check_feasible(inst)?;
    let rule = choose_rule(inst, config)?;
    let seed = config.oracle.seed;
    let start_queries = inst.queries();
    let clock = Instant::now();
    let mut solver_queries = 0u64;
    let mut gap_queries = 0u64;
    let mut rows = Vec::new();
    let mut z = z0.clone();
    let mut sum_x = vec![T::zero(); inst.n()];
    let mut sum_y = vec![T::zero(); inst.m()];
    let last = config.iterations;
    for k in 0..=last {
        let out = extragradient_step(inst, &z, config.h1.at(k), config.h2.at(k), &config.oracle, k as u64)?;
        solver_queries += out.queries;
        for (s, v) in sum_x.iter_mut().zip(&out.z_hat.x) {
            *s = *s + *v;
        }
        for (s, v) in sum_y.iter_mut().zip(&out.z_hat.y) {
            *s = *s + *v;
        }
        if k % config.record_every == 0 || k == last {
            let (tau, tau_hat) = if config.rounding {
                (Some(threshold::<T>(seed, Half::Probe, k)), Some(threshold::<T>(seed, Half::Correction, k)))
            } else {
                (None, None)
            };
            let set = tau.map(|t| round_threshold(&z.x, t));
            let set_hat = tau_hat.map(|t| round_threshold(&out.z_hat.x, t));
            let before = inst.queries();
            let gap = match rule {
                SelectionRule::ExactGap => exact_gaps(inst, &out.z_hat, set_hat.as_ref(), config.inner)?,
                SelectionRule::Residual => {
                    let g = assemble_g(inst, &out.z_hat, &config.oracle, StreamPosition::residual(k as u64))?;
                    GapSample {
                        residual: Some(norm(&g.g)),
                        ..Default::default()
                    }
                }
                SelectionRule::FinalIterate => GapSample::default(),
            };
            gap_queries += inst.queries() - before;
            rows.push(TraceRow {
                k,
                z: z.clone(),
                z_hat: out.z_hat.clone(),
                f_z: out.value,
                f_hat: out.value_hat,
                tau,
                tau_hat,
                set,
                set_hat,
                gap,
                queries: inst.queries() - start_queries,
                wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            });
        }
        z = out.z_next;
    }

    let score = |r: &TraceRow<T>| match rule {
        SelectionRule::ExactGap => r.gap.dtau,
        SelectionRule::Residual => r.gap.residual,
        SelectionRule::FinalIterate => None,
    };
    let mut best_row = rows.last().expect("at least one row");
    if rule != SelectionRule::FinalIterate {
        for r in &rows {
            if let (Some(a), Some(b)) = (score(r), score(best_row)) {
                if a < b || (a == b && r.k < best_row.k) {
                    best_row = r;
                }
            }
        }
    }
    let best = BestIterate {
        k: best_row.k,
        state: best_row.z_hat.clone(),
        set: best_row.set_hat.clone(),
        value: best_row.f_hat,
        score: score(best_row),
        rule,
    };
    let gaps: Vec<T> = rows.iter().filter_map(|r| r.gap.dtau).collect();
    let mean_gap = (!gaps.is_empty()).then(|| gaps.iter().copied().sum::<T>() / T::of_usize(gaps.len()));
    let count = T::of_usize(last + 1);
    let average = JointState::new(
        sum_x.into_iter().map(|v| v / count).collect(),
        sum_y.into_iter().map(|v| v / count).collect(),
    );
    Ok(Trace {
        rows,
        best,
        final_state: z,
        average,
        solver_queries,
        gap_queries,
        mean_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConstraintSet;
    use crate::problems::examples::{make_example_b1, make_example_b2};
    use crate::problems::random::{random_submodular, RandomSubmodularSpec};
    use crate::smoothing::OracleConfig;
    use crate::solver::derive_hyperparameters;
    use rand::SeedableRng;

    #[test]
    fn zero_iterations_record_one_row() {
        let b1 = make_example_b1::<f64>();
        let cfg = SolverConfig::constant(0.1, 0.1, OracleConfig::new(0.05, 1, 0), 0);
        let z0 = JointState::new(vec![0.9], vec![0.9]);
        let trace = solve_offline(&b1, &cfg, &z0).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0].z, z0);
        assert_eq!(trace.rows[0].k, 0);
    }

    #[test]
    fn query_budget_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let inst = random_submodular::<f64>(&RandomSubmodularSpec::new(4, 2), &mut rng);
        for (t, gaps, every) in [(1, GapTracking::Off, 1), (3, GapTracking::Exact, 4), (2, GapTracking::Residual, 3)] {
            let mut cfg = SolverConfig::constant(0.05, 0.05, OracleConfig::new(0.01, t, 5), 17);
            cfg.gaps = gaps;
            cfg.record_every = every;
            inst.reset_queries();
            let trace = solve_offline(&inst, &cfg, &JointState::centered(&inst)).unwrap();
            let expected = 2 * 18 * (t as u64 + 1) * 5;
            assert_eq!(trace.solver_queries, expected);
            assert_eq!(inst.queries(), expected + trace.gap_queries);
            assert_eq!(trace.rows.last().unwrap().queries, inst.queries());
            if gaps == GapTracking::Off {
                assert_eq!(trace.gap_queries, 0);
            }
        }
    }

    #[test]
    fn iterates_stay_feasible_and_are_deterministic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let inst = random_submodular::<f64>(&RandomSubmodularSpec::new(3, 2), &mut rng);
        let cfg = SolverConfig::constant(0.3, 0.3, OracleConfig::new(0.05, 2, 42), 50);
        let z0 = JointState::centered(&inst);
        let a = solve_offline(&inst, &cfg, &z0).unwrap();
        let b = solve_offline(&inst.detached(), &cfg, &z0).unwrap();
        for row in &a.rows {
            assert!(row.z.is_feasible(inst.constraint(), 1e-9));
            assert!(row.z_hat.is_feasible(inst.constraint(), 1e-9));
        }
        let bits = |t: &Trace<f64>| {
            t.rows
                .iter()
                .flat_map(|r| r.z_hat.to_vec().into_iter().chain(r.z.to_vec()))
                .map(f64::to_bits)
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn rounding_toggle_leaves_iterates_unchanged() {
        let b2 = make_example_b2::<f64>();
        let mut cfg = SolverConfig::constant(0.05, 0.05, OracleConfig::new(0.05, 1, 1), 40);
        let z0 = JointState::centered(&b2);
        let a = solve_offline(&b2, &cfg, &z0).unwrap();
        cfg.rounding = false;
        let b = solve_offline(&b2, &cfg, &z0).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert!(b.rows[0].set_hat.is_none());
        assert!(a.rows[0].set_hat.is_some());
    }

    #[test]
    fn b1_golden_trace() {
        let b1 = make_example_b1::<f64>();
        let cfg = SolverConfig::constant(0.1, 0.1, OracleConfig::new(0.05, 1, 0), 4);
        let trace = solve_offline(&b1, &cfg, &JointState::new(vec![0.9], vec![0.9])).unwrap();
        let got: Vec<[u64; 4]> = trace
            .rows
            .iter()
            .map(|r| [r.z_hat.x[0].to_bits(), r.z_hat.y[0].to_bits(), r.z.x[0].to_bits(), r.z.y[0].to_bits()])
            .collect();
        let golden: Vec<[u64; 4]> = GOLDEN_B1.to_vec();
        assert_eq!(got, golden, "{got:?}");
    }

    // (x̂_k, ŷ_k, x_k, y_k) bit patterns, recorded once.
    const GOLDEN_B1: [[u64; 4]; 5] = [
        [4605561122934164030, 4606754786898891864, 4606281698874543309, 4606281698874543309],
        [4604742381266791478, 4607129904761998015, 4605466505329294318, 4606299439485161109],
        [4603845904122229981, 4606540496191550508, 4604576288211424097, 4606330739618617491],
        [4603045493786655867, 4606484923303352177, 4603803952807643378, 4606471114277584467],
        [4601884951162322054, 4606511107140353866, 4603042731981502325, 4606483053242736122],
    ];

    #[test]
    fn b2_converges_to_the_saddle() {
        let b2 = make_example_b2::<f64>();
        let z0 = JointState::centered(&b2);
        let joint = ConstraintSet::joint(1, b2.constraint());
        let sched = derive_hyperparameters(0.1, b2.constants(), 1, &z0, &joint).unwrap();
        let trace = solve_offline(&b2, &sched.into_config(1, 0), &z0).unwrap();
        assert!(trace.best.state.x[0] < 0.05);
        assert!((trace.best.state.y[0] - 0.5).abs() < 0.05);
        assert!((trace.best.value - 0.4).abs() < 0.05);
        assert_eq!(trace.best.rule, SelectionRule::ExactGap);
    }
}
