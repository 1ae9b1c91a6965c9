//! Instances named by a config.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use zoeg::problems::examples::{make_example_b1, make_example_b2};
use zoeg::problems::pgm::{read_mask, read_pgm, read_stream};
use zoeg::problems::segmentation::{make_segmentation, SegmentationParams};
use zoeg::problems::synth::{synth_image, synth_stream, Image, Mask, Seeds};
use zoeg::setfn::FnSetFunction;
use zoeg::{Constants, Constraint, Instance, Subset};

use crate::config::{config_error, ExperimentConfig, ImageSource, ProblemKind, StreamSource};

/// `f(S, y) = a_S + b_S · y` given as a table over all `2^n` masks.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableProblem {
    #[serde(default = "default_name")]
    pub name: String,
    pub n: usize,
    pub y_set: Constraint,
    /// Row `mask` holds `[a_S, b_S1, .., b_Sm]`, bit `i` of `mask` is element `i`.
    pub table: Vec<Vec<f64>>,
    #[serde(default)]
    pub constants: Option<[f64; 3]>,
}

fn default_name() -> String {
    "custom".into()
}

pub const TABLE_MAX_N: usize = 16;

impl TableProblem {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    pub fn build(&self) -> Result<Instance> {
        let (n, m) = (self.n, self.y_set.dim());
        if n == 0 || n > TABLE_MAX_N {
            bail!(config_error(format!("table problems need 1 <= n <= {TABLE_MAX_N}, got {n}")));
        }
        if self.table.len() != 1 << n || self.table.iter().any(|r| r.len() != m + 1) {
            bail!(config_error(format!("table must have {} rows of {} numbers", 1usize << n, m + 1)));
        }
        if self.table.iter().flatten().any(|v| !v.is_finite()) {
            bail!(config_error("table entries must be finite"));
        }
        self.y_set.validate().map_err(|e| config_error(e.to_string()))?;
        let (lo, hi) = self.y_set.bounding_box();
        let reach: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l.abs().max(h.abs())).collect();
        let mut m_bound: f64 = 0.0;
        let mut l0y: f64 = 0.0;
        for row in &self.table {
            let b = &row[1..];
            m_bound = m_bound.max(row[0].abs() + b.iter().zip(&reach).map(|(v, r)| v.abs() * r).sum::<f64>());
            l0y = l0y.max(b.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let l0x = 2.0 * m_bound * (n as f64).sqrt();
        let [l0x, l0y, m_bound] = self.constants.unwrap_or([l0x, l0y, m_bound]);
        let constants = Constants::new(l0x, l0y, m_bound, self.y_set.diameter()).map_err(|e| config_error(e.to_string()))?;
        let table = self.table.clone();
        let oracle = FnSetFunction::new(n, m, move |s: &Subset, y: &[f64]| {
            let row = &table[s.to_mask().expect("n <= 16") as usize];
            row[0] + row[1..].iter().zip(y).map(|(b, v)| b * v).sum::<f64>()
        })
        .affine();
        Ok(Instance::new(self.name.clone(), std::sync::Arc::new(oracle), self.y_set.clone(), constants)?)
    }
}

/// Segmentation frame with its optional ground truth.
pub struct SegmentationInput {
    pub image: Image,
    pub seeds: Seeds,
    pub truth: Option<Mask>,
}

impl SegmentationInput {
    pub fn instance(&self, params: &SegmentationParams) -> Result<Instance> {
        Ok(make_segmentation(&self.image, &self.seeds, params)?)
    }
}

pub fn load_image(source: &ImageSource) -> Result<SegmentationInput> {
    Ok(match source {
        ImageSource::Synth { spec, seed } => {
            let s = synth_image(spec, *seed)?;
            SegmentationInput {
                image: s.image,
                seeds: s.seeds,
                truth: Some(s.truth),
            }
        }
        ImageSource::Fixture { dir, frame } => {
            let (_, mut frames) = read_stream(dir).with_context(|| format!("reading {}", dir.display()))?;
            if *frame >= frames.len() {
                bail!(config_error(format!("{} has {} frames, asked for frame {frame}", dir.display(), frames.len())));
            }
            let f = frames.swap_remove(*frame);
            SegmentationInput {
                image: f.image,
                seeds: f.seeds,
                truth: f.truth,
            }
        }
        ImageSource::Pgm { path, seeds, truth } => SegmentationInput {
            image: read_pgm(path).with_context(|| format!("reading {}", path.display()))?,
            seeds: Seeds {
                positions: seeds.iter().map(|s| s.0).collect(),
                labels: seeds.iter().map(|s| s.1).collect(),
            },
            truth: truth
                .as_ref()
                .map(|t| read_mask(t).with_context(|| format!("reading {}", t.display())))
                .transpose()?,
        },
    })
}

pub struct StreamInput {
    pub frames: Vec<SegmentationInput>,
    pub fps: f64,
}

pub fn load_stream(source: &StreamSource) -> Result<StreamInput> {
    Ok(match source {
        StreamSource::Fixture { dir } => {
            let (manifest, frames) = read_stream(dir).with_context(|| format!("reading {}", dir.display()))?;
            StreamInput {
                frames: frames
                    .into_iter()
                    .map(|f| SegmentationInput {
                        image: f.image,
                        seeds: f.seeds,
                        truth: f.truth,
                    })
                    .collect(),
                fps: manifest.fps,
            }
        }
        StreamSource::Synth {
            spec,
            frames,
            motion,
            fps,
            seed,
        } => {
            let stream = synth_stream(spec, *frames, *motion, *fps, *seed)?;
            let frames = (0..stream.len())
                .map(|k| {
                    let f = stream.frame(k)?;
                    Ok(SegmentationInput {
                        image: f.image,
                        seeds: f.seeds,
                        truth: Some(f.truth),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            StreamInput { frames, fps: *fps }
        }
    })
}

/// The offline instance a config describes.
pub fn offline_instance(kind: ProblemKind, cfg: &ExperimentConfig) -> Result<Instance> {
    match kind {
        ProblemKind::B1 => Ok(make_example_b1()),
        ProblemKind::B2 => Ok(make_example_b2()),
        ProblemKind::CustomFromFile => {
            let path = cfg.custom_file.as_ref().ok_or_else(|| config_error("custom_file missing"))?;
            TableProblem::load(path)?.build()
        }
        ProblemKind::Segmentation => load_image(&cfg.segmentation.source)?.instance(&cfg.segmentation.params),
        ProblemKind::SegmentationOnline => Err(config_error("segmentation-online runs through `segment-online`")),
    }
}
