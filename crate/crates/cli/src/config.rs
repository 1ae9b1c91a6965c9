//! Experiment configuration files.
//!
//! A config is one JSON object. Every field is optional except that the
//! solver must be given either explicitly (`solver`) or as the offline
//! schedule for a target accuracy (`theorem1`), never both. Segmentation
//! problems fall back to built-in defaults when neither is present.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zoeg::problems::segmentation::SegmentationParams;
use zoeg::problems::synth::{Motion, SynthSpec};
use zoeg::solver::{GapTracking, StepSchedule};
use zoeg::verify::InnerMethod;
use zoeg::{DifferenceScheme, OnlineOracle};

/// Rejected before any output is written; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    B1,
    B2,
    Segmentation,
    SegmentationOnline,
    #[serde(alias = "custom")]
    CustomFromFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSolver {
    pub h1: StepSchedule<f64>,
    pub h2: StepSchedule<f64>,
    pub mu: f64,
    #[serde(default = "one")]
    pub samples: usize,
    /// Last iteration index; `iterations + 1` extragradient steps run.
    pub iterations: usize,
    #[serde(default)]
    pub scheme: DifferenceScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theorem1 {
    Epsilon(f64),
    Full {
        epsilon: f64,
        #[serde(default = "one")]
        samples: usize,
    },
}

impl Theorem1 {
    pub fn epsilon(&self) -> f64 {
        match self {
            Theorem1::Epsilon(e) | Theorem1::Full { epsilon: e, .. } => *e,
        }
    }

    pub fn samples(&self) -> usize {
        match self {
            Theorem1::Epsilon(_) => 1,
            Theorem1::Full { samples, .. } => *samples,
        }
    }
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapOptions {
    #[serde(default)]
    pub tracking: GapTracking,
    #[serde(default)]
    pub inner: InnerMethod,
    /// Defaults to 1, or 10 for segmentation.
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default = "yes")]
    pub rounding: bool,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            tracking: GapTracking::Auto,
            inner: InnerMethod::Auto,
            record_every: None,
            rounding: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Where an offline segmentation image comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ImageSource {
    /// Frame of a manifest directory.
    Fixture {
        dir: PathBuf,
        #[serde(default)]
        frame: usize,
    },
    /// PGM file with explicit seeds and an optional ground-truth mask.
    Pgm {
        path: PathBuf,
        seeds: Vec<(usize, u8)>,
        #[serde(default)]
        truth: Option<PathBuf>,
    },
    Synth { spec: SynthSpec, seed: u64 },
}

impl Default for ImageSource {
    fn default() -> Self {
        ImageSource::Synth {
            spec: SynthSpec::disk(16, 16, 8),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationOptions {
    #[serde(default)]
    pub source: ImageSource,
    #[serde(default)]
    pub params: SegmentationParams,
}

impl Default for SegmentationOptions {
    fn default() -> Self {
        Self {
            source: ImageSource::default(),
            params: SegmentationParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamSource {
    Fixture { dir: PathBuf },
    Synth {
        spec: SynthSpec,
        frames: usize,
        #[serde(default)]
        motion: Motion,
        #[serde(default = "default_fps")]
        fps: f64,
        seed: u64,
    },
}

fn default_fps() -> f64 {
    60.0
}

impl Default for StreamSource {
    fn default() -> Self {
        StreamSource::Synth {
            spec: SynthSpec::disk(16, 16, 8),
            frames: 30,
            motion: Motion {
                dx: 0.08,
                dy: 0.04,
                dtheta: 0.0,
            },
            fps: 60.0,
            seed: 7,
        }
    }
}

pub fn online_params() -> SegmentationParams {
    SegmentationParams {
        lambda: 10.0,
        rho: 25.0,
        ..SegmentationParams::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineOptions {
    #[serde(default)]
    pub source: StreamSource,
    #[serde(default = "online_params")]
    pub params: SegmentationParams,
    #[serde(default = "one")]
    pub steps_per_frame: usize,
    #[serde(default)]
    pub variant: OnlineOracle,
}

impl Default for OnlineOptions {
    fn default() -> Self {
        Self {
            source: StreamSource::default(),
            params: online_params(),
            steps_per_frame: 1,
            variant: OnlineOracle::SameFunction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: Option<ProblemKind>,
    /// Table file for `custom-from-file`.
    #[serde(default)]
    pub custom_file: Option<PathBuf>,
    #[serde(default)]
    pub solver: Option<ExplicitSolver>,
    #[serde(default)]
    pub theorem1: Option<Theorem1>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub gaps: GapOptions,
    #[serde(default)]
    pub start: Option<StartPoint>,
    #[serde(default)]
    pub segmentation: SegmentationOptions,
    #[serde(default)]
    pub online: OnlineOptions,
    #[serde(default)]
    pub rho_grid: Option<Vec<f64>>,
    /// Record wall-clock times; off keeps outputs byte-identical across runs.
    #[serde(default)]
    pub timing: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields default")
    }
}

/// Command-line values that override file fields.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub rho_grid: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        // Relative paths inside the file resolve against its directory.
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.custom_file.as_mut() {
            fix(p);
        }
        match &mut self.segmentation.source {
            ImageSource::Fixture { dir, .. } => fix(dir),
            ImageSource::Pgm { path, truth, .. } => {
                fix(path);
                if let Some(t) = truth.as_mut() {
                    fix(t);
                }
            }
            ImageSource::Synth { .. } => {}
        }
        if let StreamSource::Fixture { dir } = &mut self.online.source {
            fix(dir);
        }
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(s) = o.seed {
            self.seeds = vec![s];
        }
        if let Some(out) = o.out {
            self.out = Some(out);
        }
        if let Some(e) = o.epsilon {
            self.solver = None;
            self.theorem1 = Some(match self.theorem1.take() {
                Some(Theorem1::Full { samples, .. }) => Theorem1::Full { epsilon: e, samples },
                _ => Theorem1::Epsilon(e),
            });
        }
        if let Some(g) = o.rho_grid {
            self.rho_grid = Some(g);
        }
    }

    pub fn validate(&self, problem: ProblemKind) -> anyhow::Result<()> {
        if self.solver.is_some() && self.theorem1.is_some() {
            return Err(config_error("give either explicit solver parameters or theorem1, not both"));
        }
        let segmentation = matches!(problem, ProblemKind::Segmentation | ProblemKind::SegmentationOnline);
        if self.solver.is_none() && self.theorem1.is_none() && !segmentation {
            return Err(config_error("solver parameters missing: give `solver` or `theorem1`"));
        }
        if let Some(t) = &self.theorem1 {
            if !(t.epsilon() > 0.0) || !t.epsilon().is_finite() {
                return Err(config_error("theorem1 epsilon must be > 0"));
            }
            if t.samples() == 0 {
                return Err(config_error("theorem1 samples must be >= 1"));
            }
        }
        if self.seeds.is_empty() {
            return Err(config_error("seeds list is empty"));
        }
        if self.gaps.record_every == Some(0) {
            return Err(config_error("record_every must be >= 1"));
        }
        if problem == ProblemKind::CustomFromFile && self.custom_file.is_none() {
            return Err(config_error("custom-from-file needs `custom_file`"));
        }
        if let Some(g) = &self.rho_grid {
            if g.is_empty() || g.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
                return Err(config_error("rho grid must be a nonempty list of values >= 0"));
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Output directory for one seed: the root for single-seed runs,
    /// `seed_<s>/` below it otherwise.
    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        if self.seeds.len() == 1 {
            self.out_dir()
        } else {
            self.out_dir().join(format!("seed_{seed}"))
        }
    }
}

/// Parses `0,2,4.5` into a list.
pub fn parse_rho_grid(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad rho value {t:?}: {e}")))
        .collect()
}

/// Keeps the first occurrence of each value.
pub fn dedup_grid(grid: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(grid.len());
    for &r in grid {
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_schedules_rejected() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"problem": "b1", "theorem1": 0.1,
                "solver": {"h1": 0.1, "h2": 0.1, "mu": 0.05, "iterations": 3}}"#,
        )
        .unwrap();
        let err = cfg.validate(ProblemKind::B1).unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
    }

    #[test]
    fn epsilon_flag_replaces_explicit_solver() {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(r#"{"solver": {"h1": 0.1, "h2": 0.1, "mu": 0.05, "iterations": 3}}"#).unwrap();
        cfg.apply(Overrides {
            epsilon: Some(0.2),
            ..Default::default()
        });
        assert!(cfg.solver.is_none());
        assert_eq!(cfg.theorem1.as_ref().map(Theorem1::epsilon), Some(0.2));
        cfg.validate(ProblemKind::B1).unwrap();
    }

    #[test]
    fn grid_parsing_and_dedup() {
        assert_eq!(parse_rho_grid("0, 2,4.5").unwrap(), vec![0.0, 2.0, 4.5]);
        assert!(parse_rho_grid("1,x").is_err());
        assert_eq!(dedup_grid(&[2.0, 0.0, 2.0, 8.0, 0.0]), vec![2.0, 0.0, 8.0]);
    }

    #[test]
    fn theorem1_forms() {
        let a: Theorem1 = serde_json::from_str("0.1").unwrap();
        let b: Theorem1 = serde_json::from_str(r#"{"epsilon": 0.1, "samples": 3}"#).unwrap();
        assert_eq!((a.epsilon(), a.samples()), (0.1, 1));
        assert_eq!((b.epsilon(), b.samples()), (0.1, 3));
    }
}
