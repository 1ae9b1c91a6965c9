//! Solver planning and offline result files shared by the subcommands.

use anyhow::Result;
use serde_json::{json, Value};
use zoeg::lovasz::lovasz_value;
use zoeg::solver::{derive_hyperparameters, solve_offline, DerivedSchedule};
use zoeg::{Config, Constraint, Instance, OfflineTrace, Oracle, State, VERSION};

use crate::config::{config_error, ExperimentConfig};
use crate::output::{num, opt, Csv, SCHEMA_VERSION};

/// Parameters used when a segmentation config names no solver.
#[derive(Debug, Clone, Copy)]
pub enum Defaults {
    None,
    Offline,
    Online { frames: usize },
}

/// Step sizes tuned on 2500-pixel frames, rescaled to `n` pixels.
pub fn scaled_step(h: f64, n: usize) -> f64 {
    h * (2500.0 / n as f64).sqrt()
}

pub const OFFLINE_ITERATIONS: usize = 500;

pub struct Plan {
    pub config: Config,
    pub schedule: Option<DerivedSchedule<f64>>,
    pub z0: State,
}

pub fn plan(cfg: &ExperimentConfig, inst: &Instance, seed: u64, defaults: Defaults) -> Result<Plan> {
    let z0 = match &cfg.start {
        Some(s) => State::new(s.x.clone(), s.y.clone()),
        None => State::centered(inst),
    };
    z0.check_feasible(inst).map_err(|e| config_error(format!("start point: {e}")))?;
    let n = inst.n();
    let (mut config, schedule) = if let Some(s) = &cfg.solver {
        let oracle = Oracle {
            mu: s.mu,
            samples: s.samples,
            scheme: s.scheme,
            seed,
        };
        let mut c = Config::constant(0.0, 0.0, oracle, s.iterations);
        c.h1 = s.h1.clone();
        c.h2 = s.h2.clone();
        (c, None)
    } else if let Some(t) = &cfg.theorem1 {
        let joint = Constraint::joint(n, inst.constraint());
        let sched = derive_hyperparameters(t.epsilon(), inst.constants(), inst.m(), &z0, &joint)
            .map_err(|e| config_error(format!("theorem1: {e}")))?;
        (sched.into_config(t.samples(), seed), Some(sched))
    } else {
        match defaults {
            Defaults::Offline => {
                let h = scaled_step(1e-3, n);
                (Config::constant(h, h, Oracle::new(1e-5, 20, seed), OFFLINE_ITERATIONS), None)
            }
            Defaults::Online { frames } => {
                let h = scaled_step(3e-2, n);
                (Config::constant(h, h, Oracle::new(1e-3, 10, seed), frames.saturating_sub(1)), None)
            }
            Defaults::None => return Err(config_error("solver parameters missing")),
        }
    };
    let seg = !matches!(defaults, Defaults::None);
    config.record_every = cfg.gaps.record_every.unwrap_or(if seg { 10 } else { 1 });
    config.gaps = cfg.gaps.tracking;
    config.inner = cfg.gaps.inner;
    config.rounding = cfg.gaps.rounding;
    config.validate().map_err(|e| config_error(e.to_string()))?;
    Ok(Plan { config, schedule, z0 })
}

pub fn run_offline(inst: &Instance, plan: &Plan) -> Result<OfflineTrace> {
    Ok(solve_offline(inst, &plan.config, &plan.z0)?)
}

pub const TRACE_HEADER: [&str; 7] = ["k", "fL", "gap_D", "gap_R", "gap_Dtau", "queries", "wall_ms"];

/// `fL` is `f^L(ẑ_k)`; `wall_ms` is 0 unless timing is on.
pub fn trace_csv(trace: &OfflineTrace, timing: bool) -> Csv {
    let mut csv = Csv::new(&TRACE_HEADER);
    for r in &trace.rows {
        csv.row(&[
            r.k.to_string(),
            num(r.f_hat),
            opt(r.gap.d),
            opt(r.gap.r),
            opt(r.gap.dtau),
            r.queries.to_string(),
            num(if timing { r.wall_ms } else { 0.0 }),
        ]);
    }
    csv
}

pub fn offline_summary(command: &str, cfg: &ExperimentConfig, inst: &Instance, plan: &Plan, trace: &OfflineTrace, seed: u64) -> Result<Value> {
    let avg = &trace.average;
    let avg_value = lovasz_value(inst, &avg.x, &avg.y)?;
    let final_value = lovasz_value(inst, &trace.final_state.x, &trace.final_state.y)?;
    let b = &trace.best;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "version": VERSION,
        "command": command,
        "problem": inst.name(),
        "seed": seed,
        "n": inst.n(),
        "m": inst.m(),
        "iterations_run": plan.config.iterations + 1,
        "solver": plan.config,
        "schedule": plan.schedule,
        "best": {
            "k": b.k,
            "x": b.state.x,
            "y": b.state.y,
            "set": b.set,
            "value": b.value,
            "score": b.score,
            "rule": b.rule,
        },
        "average": { "x": avg.x, "y": avg.y, "value": avg_value },
        "final": { "x": trace.final_state.x, "y": trace.final_state.y, "value": final_value },
        "mean_gap_dtau": trace.mean_gap,
        "queries": {
            "solver": trace.solver_queries,
            "gaps": trace.gap_queries,
            "total": trace.solver_queries + trace.gap_queries,
        },
        "config": cfg,
    }))
}
