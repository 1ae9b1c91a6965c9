use anyhow::Result;
use rayon::prelude::*;

use crate::config::{config_error, ExperimentConfig, ProblemKind};
use crate::output::{ensure_dir, write_json};
use crate::problem::offline_instance;
use crate::run::{offline_summary, plan, run_offline, trace_csv, Defaults};

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<()> {
    let kind = cfg.problem.unwrap_or(ProblemKind::B1);
    if kind == ProblemKind::SegmentationOnline {
        return Err(config_error("use `segment-online` for streams"));
    }
    cfg.validate(kind)?;
    let defaults = if kind == ProblemKind::Segmentation { Defaults::Offline } else { Defaults::None };
    let jobs = cfg
        .seeds
        .iter()
        .map(|&seed| {
            let inst = offline_instance(kind, cfg)?;
            let p = plan(cfg, &inst, seed, defaults)?;
            Ok((seed, inst, p))
        })
        .collect::<Result<Vec<_>>>()?;

    let results = jobs
        .par_iter()
        .map(|(seed, inst, p)| {
            let trace = run_offline(inst, p)?;
            let summary = offline_summary("solve", cfg, inst, p, &trace, *seed)?;
            Ok((*seed, trace, summary))
        })
        .collect::<Result<Vec<_>>>()?;

    for (seed, trace, summary) in &results {
        let dir = cfg.seed_dir(*seed);
        ensure_dir(&dir)?;
        trace_csv(trace, cfg.timing).write(&dir.join("trace.csv"))?;
        write_json(&dir.join("summary.json"), summary)?;
        println!(
            "seed {seed}: {} iterations, avg y = {:?}, mean D_tau = {}, queries {} + {}",
            trace.rows.last().map_or(0, |r| r.k + 1),
            trace.average.y,
            trace.mean_gap.map_or("n/a".into(), |g| format!("{g:.6}")),
            trace.solver_queries,
            trace.gap_queries
        );
    }
    Ok(())
}
