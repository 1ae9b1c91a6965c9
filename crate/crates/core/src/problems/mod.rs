//! Built-in problem instances, image generators and segmentation metrics.

pub mod examples;
pub mod random;
pub mod drift;
pub mod segmentation;
pub mod synth;
pub mod metrics;
pub mod pgm;
