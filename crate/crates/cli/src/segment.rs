use std::time::Instant;

use anyhow::Result;
use rayon::prelude::*;
use serde_json::json;
use zoeg::problems::metrics::{segmentation_metrics, SegmentationMetrics};
use zoeg::problems::pgm::write_mask;
use zoeg::problems::segmentation::SegmentationStream;
use zoeg::problems::synth::Mask;
use zoeg::solver::{solve_online, GapTracking, OnlineConfig};
use zoeg::verify::duality_gap_l;
use zoeg::VERSION;

use crate::config::{config_error, dedup_grid, ExperimentConfig, ProblemKind};
use crate::output::{ensure_dir, num, opt, write_json, Csv, SCHEMA_VERSION};
use crate::problem::{load_image, load_stream};
use crate::run::{offline_summary, plan, run_offline, trace_csv, Defaults};

pub const MASK_THRESHOLD: f64 = 0.5;

fn require(cfg: &ExperimentConfig, want: ProblemKind) -> Result<()> {
    let kind = cfg.problem.unwrap_or(want);
    if kind != want {
        return Err(config_error(format!("this command runs {want:?} problems, config names {kind:?}")));
    }
    cfg.validate(kind)
}

fn metrics_json(m: &SegmentationMetrics, rho: f64, lambda: f64) -> serde_json::Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "version": VERSION,
        "iou": m.iou,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "rho": rho,
        "lambda": lambda,
        "threshold": MASK_THRESHOLD,
    })
}

pub fn cmd_segment(cfg: &ExperimentConfig) -> Result<()> {
    require(cfg, ProblemKind::Segmentation)?;
    let input = load_image(&cfg.segmentation.source)?;
    let params = cfg.segmentation.params;
    let jobs = cfg
        .seeds
        .iter()
        .map(|&seed| {
            let inst = input.instance(&params)?;
            let p = plan(cfg, &inst, seed, Defaults::Offline)?;
            Ok((seed, inst, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let results = jobs
        .par_iter()
        .map(|(seed, inst, p)| {
            let trace = run_offline(inst, p)?;
            let summary = offline_summary("segment", cfg, inst, p, &trace, *seed)?;
            let mask = Mask::from_x(&trace.final_state.x, input.image.width, input.image.height, MASK_THRESHOLD)?;
            let metrics = input.truth.as_ref().map(|t| segmentation_metrics(&mask, t)).transpose()?;
            Ok((*seed, trace, summary, mask, metrics))
        })
        .collect::<Result<Vec<_>>>()?;
    for (seed, trace, summary, mask, metrics) in &results {
        let dir = cfg.seed_dir(*seed);
        ensure_dir(&dir)?;
        write_mask(&dir.join("mask.pgm"), mask)?;
        trace_csv(trace, cfg.timing).write(&dir.join("trace.csv"))?;
        write_json(&dir.join("summary.json"), summary)?;
        match metrics {
            Some(m) => {
                write_json(&dir.join("metrics.json"), &metrics_json(m, params.rho, params.lambda))?;
                println!("seed {seed}: IoU {:.4}, F1 {:.4}", m.iou, m.f1);
            }
            None => println!("seed {seed}: no ground truth, mask written"),
        }
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
}

pub const DEFAULT_RHO_GRID: [f64; 5] = [0.0, 2.0, 4.0, 6.0, 8.0];

/// One row per distinct `ρ`: medians over seeds of the IoU of the final mask
/// and of `D^L` at the final iterate.
pub fn cmd_sweep_rho(cfg: &ExperimentConfig) -> Result<()> {
    require(cfg, ProblemKind::Segmentation)?;
    let grid = dedup_grid(cfg.rho_grid.as_deref().unwrap_or(&DEFAULT_RHO_GRID));
    let input = load_image(&cfg.segmentation.source)?;
    let mut jobs = Vec::new();
    for &rho in &grid {
        let params = zoeg::problems::segmentation::SegmentationParams { rho, ..cfg.segmentation.params };
        for &seed in &cfg.seeds {
            let inst = input.instance(&params)?;
            let mut p = plan(cfg, &inst, seed, Defaults::Offline)?;
            p.config.gaps = GapTracking::Off;
            p.config.rounding = false;
            p.config.record_every = p.config.iterations + 1;
            jobs.push((rho, inst, p));
        }
    }
    let runs = jobs
        .par_iter()
        .map(|(rho, inst, p)| {
            let trace = run_offline(inst, p)?;
            let z = &trace.final_state;
            let gap = duality_gap_l(inst, &z.x, &z.y, p.config.inner)?;
            let mask = Mask::from_x(&z.x, input.image.width, input.image.height, MASK_THRESHOLD)?;
            let iou = input.truth.as_ref().map(|t| segmentation_metrics(&mask, t)).transpose()?.map(|m| m.iou);
            Ok((*rho, iou, gap))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["rho", "iou", "gap"]);
    for &rho in &grid {
        let mine: Vec<_> = runs.iter().filter(|r| r.0 == rho).collect();
        let iou = median(mine.iter().filter_map(|r| r.1).collect());
        let gap = median(mine.iter().map(|r| r.2).collect());
        csv.row(&[num(rho), opt(iou), opt(gap)]);
        println!("rho {rho}: IoU {}, gap {}", opt(iou), opt(gap));
    }
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    csv.write(&dir.join("rho_sweep.csv"))
}

pub fn cmd_segment_online(cfg: &ExperimentConfig) -> Result<()> {
    require(cfg, ProblemKind::SegmentationOnline)?;
    let input = load_stream(&cfg.online.source)?;
    let Some(first) = input.frames.first() else {
        return Err(config_error("stream has no frames"));
    };
    let params = cfg.online.params;
    let (w, h) = (first.image.width, first.image.height);
    let frames: Vec<_> = input.frames.iter().map(|f| (f.image.clone(), f.seeds.clone())).collect();
    let mut jobs = Vec::new();
    for &seed in &cfg.seeds {
        let stream = SegmentationStream::<f64>::new(frames.clone(), params)?;
        let inst = first.instance(&params)?;
        let p = plan(cfg, &inst, seed, Defaults::Online { frames: frames.len() })?;
        let mut online = OnlineConfig::new(p.config.clone());
        online.steps_per_frame = cfg.online.steps_per_frame;
        online.variant = cfg.online.variant;
        online.track_gaps = cfg.gaps.tracking != GapTracking::Off;
        jobs.push((seed, stream, p, online));
    }
    let results = jobs
        .into_par_iter()
        .map(|(seed, mut stream, p, online)| {
            let mut per_frame = Vec::new();
            let clock = Instant::now();
            let trace = solve_online(&mut stream, &online, &p.z0, |rec, z_hat, _| {
                per_frame.push((rec.k, Mask::from_x(&z_hat.x, w, h, MASK_THRESHOLD)));
            })?;
            let elapsed = clock.elapsed().as_secs_f64();
            Ok((seed, trace, per_frame, elapsed, online))
        })
        .collect::<Result<Vec<_>>>()?;

    for (seed, trace, per_frame, elapsed, online) in results {
        let dir = cfg.seed_dir(seed);
        let mask_dir = dir.join("masks");
        ensure_dir(&mask_dir)?;
        let mut csv = Csv::new(&["k", "iou", "precision", "recall", "f1", "dual_gap", "queries", "wall_ms"]);
        let mut ious = Vec::new();
        for ((k, mask), rec) in per_frame.into_iter().zip(&trace.records) {
            let mask = mask?;
            write_mask(&mask_dir.join(format!("mask_{k:04}.pgm")), &mask)?;
            let m = input.frames[k].truth.as_ref().map(|t| segmentation_metrics(&mask, t)).transpose()?;
            if let Some(m) = &m {
                ious.push(m.iou);
            }
            csv.row(&[
                k.to_string(),
                opt(m.map(|m| m.iou)),
                opt(m.map(|m| m.precision)),
                opt(m.map(|m| m.recall)),
                opt(m.map(|m| m.f1)),
                opt(rec.dual_gap),
                rec.queries.to_string(),
                num(if cfg.timing { rec.wall_ms } else { 0.0 }),
            ]);
        }
        csv.write(&dir.join("online_metrics.csv"))?;
        let frames_done = trace.records.len();
        let fps = frames_done as f64 / elapsed.max(1e-9);
        let mean_iou = (!ious.is_empty()).then(|| ious.iter().sum::<f64>() / ious.len() as f64);
        let summary = json!({
            "schema_version": SCHEMA_VERSION,
            "version": VERSION,
            "command": "segment-online",
            "seed": seed,
            "frames": frames_done,
            "source_fps": input.fps,
            "achieved_fps": cfg.timing.then_some(fps),
            "mean_iou": mean_iou,
            "final_iou": ious.last(),
            "dual_gap_total": trace.report.dual_gap_total,
            "rd_gap_total": trace.report.rd_gap_total,
            "queries": { "solver": trace.solver_queries, "gaps": trace.gap_queries },
            "solver": online,
            "config": cfg,
        });
        write_json(&dir.join("summary.json"), &summary)?;
        println!(
            "seed {seed}: {frames_done} frames at {fps:.1} updates/s, mean IoU {}",
            opt(mean_iou)
        );
    }
    Ok(())
}
