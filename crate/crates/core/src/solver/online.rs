use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::setfn::SetFunctionInstance;
use crate::smoothing::OnlineOracle;
use crate::verify::{self, GapReport, OnlineStep};

use super::{step_with, JointState, SolverConfig, StepOutcome};

/// Source of time-varying objectives `f_0, f_1, ...`.
pub trait ProblemStream<T: Scalar> {
    /// Objective for step `k`, or `None` once the stream is exhausted.
    /// Called with `k = 0, 1, 2, ...` in order.
    fn objective(&mut self, k: usize) -> Result<Option<SetFunctionInstance<T>>>;
}

/// Stream over a fixed list of objectives.
pub struct VecStream<T: Scalar>(pub Vec<SetFunctionInstance<T>>);

impl<T: Scalar> ProblemStream<T> for VecStream<T> {
    fn objective(&mut self, k: usize) -> Result<Option<SetFunctionInstance<T>>> {
        Ok(self.0.get(k).cloned())
    }
}

/// Stream backed by a closure.
pub struct FnStream<F>(pub F);

impl<T, F> ProblemStream<T> for FnStream<F>
where
    T: Scalar,
    F: FnMut(usize) -> Result<Option<SetFunctionInstance<T>>>,
{
    fn objective(&mut self, k: usize) -> Result<Option<SetFunctionInstance<T>>> {
        (self.0)(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig<T> {
    /// Step sizes are indexed by frame; `iterations` caps the frame count at
    /// `iterations + 1`.
    pub solver: SolverConfig<T>,
    pub steps_per_frame: usize,
    #[serde(default)]
    pub variant: OnlineOracle,
    /// Accumulate exact per-frame gaps (needs small `n` or a registered minimizer).
    #[serde(default)]
    pub track_gaps: bool,
}

impl<T: Scalar> OnlineConfig<T> {
    pub fn new(solver: SolverConfig<T>) -> Self {
        Self {
            solver,
            steps_per_frame: 1,
            variant: OnlineOracle::SameFunction,
            track_gaps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineRecord<T> {
    pub k: usize,
    /// `z_k` before the frame's update; kept on recorded frames only.
    pub z: Option<JointState<T>>,
    /// Last probe iterate `ẑ_k`; kept on recorded frames only.
    pub z_hat: Option<JointState<T>>,
    /// `f_k^L(ẑ_k)`.
    pub f_hat: T,
    pub dual_gap: Option<T>,
    pub rd_gap: Option<T>,
    /// Queries spent by the update of this frame.
    pub queries: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineTrace<T> {
    pub records: Vec<OnlineRecord<T>>,
    pub report: GapReport<T>,
    pub final_state: JointState<T>,
    pub solver_queries: u64,
    pub gap_queries: u64,
}

/// Runs `steps_per_frame` extragradient iterations per incoming objective.
///
/// `observer` sees every frame's record together with the probe iterate and
/// the objective, whether or not the record keeps its states.
pub fn solve_online<T, S, O>(
    stream: &mut S,
    config: &OnlineConfig<T>,
    z0: &JointState<T>,
    mut observer: O,
) -> Result<OnlineTrace<T>>
where
    T: Scalar,
    S: ProblemStream<T> + ?Sized,
    O: FnMut(&OnlineRecord<T>, &JointState<T>, &SetFunctionInstance<T>),
{
    let cfg = &config.solver;
    cfg.validate()?;
    let steps = config.steps_per_frame.max(1);
    let mut report = GapReport {
        rd_gap_terms: config.track_gaps.then(Vec::new),
        ..GapReport::default()
    };
    let mut saddles: Option<Vec<Vec<T>>> = Some(Vec::new());
    let mut records = Vec::new();
    let (mut solver_queries, mut gap_queries) = (0u64, 0u64);
    let mut z = z0.clone();
    let mut current = stream.objective(0)?;
    if let Some(first) = &current {
        z0.check_feasible(first)?;
    }
    let mut k = 0usize;
    while let Some(inst) = current.take() {
        if k > cfg.iterations {
            break;
        }
        let next = stream.objective(k + 1)?;
        let clock = Instant::now();
        let start_z = z.clone();
        let (h1, h2) = (cfg.h1.at(k), cfg.h2.at(k));
        let mut last: Option<StepOutcome<T>> = None;
        let mut spent = 0u64;
        for j in 0..steps {
            let iteration = (k * steps + j) as u64;
            let cross = config.variant == OnlineOracle::CrossStep && j + 1 == steps;
            let base = match (&next, cross) {
                (Some(n), true) => n,
                _ => &inst,
            };
            let out = step_with(&inst, base, &inst, &z, h1, h2, &cfg.oracle, iteration)?;
            spent += out.queries;
            z = out.z_next.clone();
            last = Some(out);
        }
        let out = last.expect("at least one step");
        solver_queries += spent;

        let (mut dual_gap, mut rd_gap) = (None, None);
        if config.track_gaps {
            let before = inst.queries();
            let step = OnlineStep {
                objective: inst.clone(),
                x: out.z_hat.x.clone(),
                y: out.z_hat.y.clone(),
            };
            let (d, rd, used) = verify::online_terms(&step, cfg.inner)?;
            gap_queries += inst.queries() - before;
            dual_gap = Some(d);
            rd_gap = rd;
            report.dual_gap_terms.push(d);
            report.dual_gap_total = report.dual_gap_total + d;
            if !report.methods.contains(&used) {
                report.methods.push(used);
            }
            match (rd, report.rd_gap_terms.as_mut()) {
                (Some(v), Some(t)) => t.push(v),
                _ => report.rd_gap_terms = None,
            }
        }
        match (inst.extension_saddle(), saddles.as_mut()) {
            (Some((xs, ys)), Some(path)) => path.push(xs.iter().chain(ys).copied().collect()),
            _ => saddles = None,
        }

        let keep = k % cfg.record_every == 0;
        let record = OnlineRecord {
            k,
            z: keep.then(|| start_z.clone()),
            z_hat: keep.then(|| out.z_hat.clone()),
            f_hat: out.value_hat,
            dual_gap,
            rd_gap,
            queries: spent,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        };
        observer(&record, &out.z_hat, &inst);
        records.push(record);
        current = next;
        k += 1;
    }
    if records.is_empty() {
        report.rd_gap_terms = None;
    }
    report.rd_gap_total = report.rd_gap_terms.as_ref().map(|t| t.iter().copied().sum());
    if let Some(path) = saddles.filter(|p| !p.is_empty()) {
        report.add_path_length("saddle", &path)?;
    }
    Ok(OnlineTrace {
        records,
        report,
        final_state: z,
        solver_queries,
        gap_queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::drift::{DriftSpec, DriftingB1};
    use crate::problems::examples::make_example_b2;
    use crate::smoothing::OracleConfig;
    use crate::solver::solve_offline;

    #[test]
    fn constant_stream_matches_offline() {
        let b2 = make_example_b2::<f64>();
        let mut cfg = SolverConfig::constant(0.05, 0.07, OracleConfig::new(0.05, 2, 9), 30);
        cfg.gaps = crate::solver::GapTracking::Off;
        let z0 = JointState::new(vec![0.8], vec![0.1]);
        let offline = solve_offline(&b2, &cfg, &z0).unwrap();
        let mut stream = VecStream(vec![b2.clone(); 31]);
        let online = solve_online(&mut stream, &OnlineConfig::new(cfg), &z0, |_, _, _| {}).unwrap();
        assert_eq!(online.final_state, offline.final_state);
        assert_eq!(online.records.len(), 31);
        for (a, b) in online.records.iter().zip(&offline.rows) {
            assert_eq!(a.z_hat.as_ref(), Some(&b.z_hat));
        }
        assert_eq!(online.solver_queries, offline.solver_queries);
    }

    #[test]
    fn stream_length_and_budget_cap() {
        let b2 = make_example_b2::<f64>();
        let cfg = SolverConfig::constant(0.05, 0.05, OracleConfig::new(0.05, 1, 0), 4);
        let z0 = JointState::centered(&b2);
        let mut long = VecStream(vec![b2.clone(); 10]);
        assert_eq!(solve_online(&mut long, &OnlineConfig::new(cfg.clone()), &z0, |_, _, _| {}).unwrap().records.len(), 5);
        let mut short = VecStream(vec![b2.clone(); 2]);
        assert_eq!(solve_online(&mut short, &OnlineConfig::new(cfg), &z0, |_, _, _| {}).unwrap().records.len(), 2);
    }

    #[test]
    fn drifting_path_length_matches_closed_form() {
        let spec = DriftSpec::default();
        let frames = 300;
        let cfg = SolverConfig::constant(0.05, 0.05, OracleConfig::new(0.01, 1, 3), frames - 1);
        let mut online = OnlineConfig::new(cfg);
        online.track_gaps = true;
        let mut stream = DriftingB1::<f64>::new(spec);
        let z0 = JointState::new(vec![0.5], vec![0.5]);
        let trace = solve_online(&mut stream, &online, &z0, |_, _, _| {}).unwrap();
        let closed: f64 = (1..frames).map(|k| (spec.offset(k) - spec.offset(k - 1)).abs()).sum();
        let got = trace.report.path_length("saddle").unwrap();
        assert!((got - closed).abs() <= 1e-9, "{got} vs {closed}");
        assert_eq!(trace.report.dual_gap_terms.len(), frames);
        assert!(trace.report.rd_gap_total.is_none());
    }

    #[test]
    fn drifting_gap_terms_match_closed_form() {
        let spec = DriftSpec::default();
        let mut stream = DriftingB1::<f64>::new(spec);
        let mut cfg = SolverConfig::constant(0.05, 0.05, OracleConfig::new(0.01, 1, 1), 99);
        cfg.record_every = 1;
        let mut online = OnlineConfig::new(cfg);
        online.track_gaps = true;
        let trace = solve_online(&mut stream, &online, &JointState::new(vec![0.2], vec![0.9]), |_, _, _| {}).unwrap();
        for (k, rec) in trace.records.iter().enumerate() {
            let zh = rec.z_hat.as_ref().unwrap();
            let want = DriftingB1::<f64>::closed_form_gap(spec.offset(k), zh.x[0], zh.y[0]);
            assert!((rec.dual_gap.unwrap() - want).abs() <= 1e-9);
        }
    }

    #[test]
    fn cross_step_variant_runs() {
        let spec = DriftSpec::default();
        let mut stream = DriftingB1::<f64>::new(spec);
        let cfg = SolverConfig::constant(0.05, 0.05, OracleConfig::new(0.01, 1, 1), 50);
        let mut online = OnlineConfig::new(cfg);
        online.variant = OnlineOracle::CrossStep;
        online.steps_per_frame = 2;
        let trace = solve_online(&mut stream, &online, &JointState::new(vec![0.5], vec![0.5]), |_, _, _| {}).unwrap();
        assert_eq!(trace.records.len(), 51);
        assert!(trace.final_state.is_feasible(&crate::geometry::ConstraintSet::unit_box(1), 1e-12));
    }
}
