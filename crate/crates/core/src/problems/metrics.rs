use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::synth::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationMetrics {
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Confusion-matrix scores. Empty denominators score 1 when both masks are
/// empty on the relevant side and 0 otherwise.
pub fn segmentation_metrics(predicted: &Mask, truth: &Mask) -> Result<SegmentationMetrics> {
    if (predicted.width, predicted.height) != (truth.width, truth.height) || predicted.data.len() != truth.data.len() {
        return Err(Error::ShapeMismatch(format!(
            "predicted {}x{} vs truth {}x{}",
            predicted.width, predicted.height, truth.width, truth.height
        )));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &t) in predicted.data.iter().zip(&truth.data) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let iou = ratio(tp, tp + fp + fneg);
    let precision = if tp + fp == 0 { if fneg == 0 { 1.0 } else { 0.0 } } else { ratio(tp, tp + fp) };
    let recall = if tp + fneg == 0 { if fp == 0 { 1.0 } else { 0.0 } } else { ratio(tp, tp + fneg) };
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(SegmentationMetrics { iou, precision, recall, f1 })
}
