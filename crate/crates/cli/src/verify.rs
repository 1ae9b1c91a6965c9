//! Property suites behind `zoeg verify`.

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use zoeg::lovasz::{expected_rounded_value, lovasz_subgradient, lovasz_value};
use zoeg::problems::examples::{make_example_b1, make_example_b2};
use zoeg::problems::random::{random_submodular, RandomSubmodularSpec};
use zoeg::problems::segmentation::{make_segmentation, SegmentationParams};
use zoeg::problems::synth::{Image, Seeds};
use zoeg::setfn::{check_submodular_at, sample_in_domain, DEFAULT_SUBMODULARITY_CAP};
use zoeg::smoothing::{oracle_statistics, second_moment_bound, StreamPosition};
use zoeg::verify::{brute_saddle_check, grid_points, SADDLE_CHECK_MAX_N};
use zoeg::{DifferenceScheme, Instance};

use crate::config::{config_error, ExperimentConfig, ProblemKind};
use crate::problem::TableProblem;

pub const SUITES: [&str; 4] = ["submodularity", "lovasz", "duality", "oracle"];

/// `Err` carries the serialized counterexample.
type Outcome = std::result::Result<String, Value>;

fn extra_instance(cfg: &ExperimentConfig) -> Result<Option<Instance>> {
    match (cfg.problem, &cfg.custom_file) {
        (Some(ProblemKind::CustomFromFile), Some(p)) | (None, Some(p)) => Ok(Some(TableProblem::load(p)?.build()?)),
        (Some(ProblemKind::CustomFromFile), None) => Err(config_error("custom-from-file needs `custom_file`")),
        _ => Ok(None),
    }
}

fn test_points(inst: &Instance, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if inst.m() <= 2 {
        let res = if inst.m() == 1 { 0.1 } else { 0.25 };
        let pts = grid_points(inst.constraint(), res);
        if !pts.is_empty() {
            return pts;
        }
    }
    (0..count).map(|_| sample_in_domain(inst.constraint(), rng)).collect()
}

fn random_image(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Image {
    Image::new(w, h, (0..w * h).map(|_| rng.random_range(0..=255u8)).collect()).expect("sized")
}

fn submodularity(extra: Option<&Instance>) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases: Vec<Instance> = vec![make_example_b1(), make_example_b2()];
    for i in 0..20 {
        let spec = RandomSubmodularSpec::new(2 + i % 7, 1 + i % 3);
        cases.push(random_submodular(&spec, &mut rng));
    }
    let crop = random_image(3, 3, &mut rng);
    let seeds = Seeds {
        positions: vec![0, 4, 8],
        labels: vec![1, 0, 1],
    };
    cases.push(make_segmentation(&crop, &seeds, &SegmentationParams { rho: 2.0, ..Default::default() })?);
    cases.extend(extra.cloned());
    let mut checked = 0;
    for inst in &cases {
        for y in test_points(inst, 10, &mut rng) {
            let c = check_submodular_at(inst, &y, DEFAULT_SUBMODULARITY_CAP.max(inst.n()))?;
            if let Some((s, t, v)) = c.violation {
                return Ok(Err(json!({
                    "suite": "submodularity",
                    "instance": inst.name(),
                    "y": y,
                    "S": s.indices(),
                    "T": t.indices(),
                    "violation": v,
                })));
            }
            checked += 1;
        }
    }
    Ok(Ok(format!("{} instances, {checked} points", cases.len())))
}

fn lovasz(extra: Option<&Instance>) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut cases: Vec<Instance> = (0..200)
        .map(|i| random_submodular(&RandomSubmodularSpec::new(1 + i % 6, 1 + i % 2), &mut rng))
        .collect();
    cases.extend(extra.cloned());
    let mut pairs = 0;
    for inst in &cases {
        let n = inst.n();
        let y = sample_in_domain(inst.constraint(), &mut rng);
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let a = lovasz_value(inst, &x, &y)?;
        let b = expected_rounded_value(inst, &x, &y)?;
        if (a - b).abs() > 1e-12 {
            return Ok(Err(json!({"suite": "lovasz", "instance": inst.name(), "x": x, "y": y, "chain": a, "rounded": b})));
        }
        let g = lovasz_subgradient(inst, &x, &y)?;
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bound = 4.0 * inst.constants().m_bound() + 1e-9;
        if norm > bound {
            return Ok(Err(json!({"suite": "lovasz", "instance": inst.name(), "x": x, "y": y, "subgradient_norm": norm, "bound": bound})));
        }
        for _ in 0..5 {
            let other: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let v = lovasz_value(inst, &other, &y)?;
            let lin = a + g.iter().zip(other.iter().zip(&x)).map(|(gi, (o, xi))| gi * (o - xi)).sum::<f64>();
            if v - lin < -1e-9 {
                return Ok(Err(json!({"suite": "lovasz", "instance": inst.name(), "x": x, "x2": other, "y": y, "slack": v - lin})));
            }
            pairs += 1;
        }
    }
    Ok(Ok(format!("{} instances, {pairs} subgradient pairs", cases.len())))
}

fn duality(extra: Option<&Instance>) -> Result<Outcome> {
    let b1 = brute_saddle_check(&make_example_b1::<f64>(), None)?;
    if b1.has_saddle || (b1.max_min - 0.5).abs() > 1e-3 || (b1.min_max - 1.0).abs() > 1e-3 {
        return Ok(Err(json!({"suite": "duality", "instance": "b1", "report": b1})));
    }
    let b2 = brute_saddle_check(&make_example_b2::<f64>(), None)?;
    if !b2.has_saddle || (b2.max_min - 0.4).abs() > 1e-3 {
        return Ok(Err(json!({"suite": "duality", "instance": "b2", "report": b2})));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut cases: Vec<Instance> = (0..10)
        .map(|i| random_submodular(&RandomSubmodularSpec::new(1 + i % 4, 1), &mut rng))
        .collect();
    cases.extend(extra.filter(|e| e.n() <= SADDLE_CHECK_MAX_N && e.m() <= 2).cloned());
    for inst in &cases {
        let r = brute_saddle_check(inst, None)?;
        if r.max_min > r.min_max + r.tolerance {
            return Ok(Err(json!({"suite": "duality", "instance": inst.name(), "report": r})));
        }
    }
    Ok(Ok(format!("b1 gap {:.3}, b2 value {:.3}, {} random", b1.min_max - b1.max_min, b2.max_min, cases.len())))
}

fn oracle() -> Result<Outcome> {
    const SAMPLES: usize = 20_000;
    let mut lines = Vec::new();
    for m in [1usize, 5] {
        let y: Vec<f64> = (0..m).map(|i| 0.3 - 0.1 * i as f64).collect();
        let quad = |v: &[f64]| Ok(-v.iter().map(|a| a * a).sum::<f64>());
        let s = oracle_statistics(quad, &y, 0.05, DifferenceScheme::Forward, SAMPLES, 21, StreamPosition::default())?;
        for (j, (mean, se)) in s.mean.iter().zip(&s.std_err).enumerate() {
            let want = -2.0 * y[j];
            if (mean - want).abs() > 4.0 * se {
                return Ok(Err(json!({"suite": "oracle", "m": m, "coordinate": j, "mean": mean, "expected": want, "std_err": se})));
            }
        }
        let lip = |v: &[f64]| Ok(v.iter().map(|a| a * a).sum::<f64>().sqrt());
        let s = oracle_statistics(lip, &y, 0.05, DifferenceScheme::Forward, SAMPLES, 22, StreamPosition::default())?;
        let bound = second_moment_bound(1.0, m);
        if s.second_moment > 1.05 * bound {
            return Ok(Err(json!({"suite": "oracle", "m": m, "second_moment": s.second_moment, "bound": bound})));
        }
        lines.push(format!("m={m}: E|g|^2 {:.2} <= {bound:.0}", s.second_moment));
    }
    Ok(Ok(lines.join("; ")))
}

pub fn cmd_verify(cfg: &ExperimentConfig, suite: Option<&str>) -> Result<()> {
    let selected: Vec<&str> = match suite {
        Some(s) if SUITES.contains(&s) => vec![s],
        Some(s) => bail!(config_error(format!("unknown suite {s:?}; choose from {}", SUITES.join(", ")))),
        None => SUITES.to_vec(),
    };
    let extra = extra_instance(cfg)?;
    let mut failures = Vec::new();
    println!("{:<14} {:<6} detail", "suite", "status");
    for name in selected {
        let outcome = match name {
            "submodularity" => submodularity(extra.as_ref())?,
            "lovasz" => lovasz(extra.as_ref())?,
            "duality" => duality(extra.as_ref())?,
            _ => oracle()?,
        };
        match outcome {
            Ok(detail) => println!("{name:<14} {:<6} {detail}", "PASS"),
            Err(counter) => {
                println!("{name:<14} {:<6} {}", "FAIL", serde_json::to_string(&counter)?);
                failures.push(name);
            }
        }
    }
    if !failures.is_empty() {
        bail!("{} suite(s) failed: {}", failures.len(), failures.join(", "));
    }
    Ok(())
}
