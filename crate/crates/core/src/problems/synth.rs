//! Synthetic two-region images and moving-shape frame streams.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Domain, GaussianSampler, Half};
use crate::scalar::Scalar;

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        let img = Self { width, height, data };
        img.validate()?;
        Ok(img)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("image dimensions must be positive".into()));
        }
        if self.data.len() != self.width * self.height {
            return Err(Error::DimensionMismatch {
                expected: self.width * self.height,
                got: self.data.len(),
            });
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// Binary mask, row-major; `true` is foreground.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    /// Pixels with `x_i > tau`.
    pub fn from_x<T: Scalar>(x: &[T], width: usize, height: usize, tau: T) -> Result<Self> {
        Self::new(width, height, x.iter().map(|&v| v > tau).collect())
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn to_image(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    /// Pixels at or above 128 are foreground.
    pub fn from_image(img: &Image) -> Self {
        Self {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| v >= 128).collect(),
        }
    }
}

/// Labelled seed pixels; label 1 is foreground.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub positions: Vec<usize>,
    pub labels: Vec<u8>,
}

impl Seeds {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Foreground region in pixel coordinates (column, row).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Disk { cx: f64, cy: f64, r: f64 },
    /// Rectangle with half-extents `hw`, `hh`, rotated by `angle` radians.
    Rect { cx: f64, cy: f64, hw: f64, hh: f64, angle: f64 },
}

impl Shape {
    pub fn contains(&self, c: f64, r: f64) -> bool {
        match *self {
            Shape::Disk { cx, cy, r: rad } => (c - cx).powi(2) + (r - cy).powi(2) <= rad * rad,
            Shape::Rect { cx, cy, hw, hh, angle } => {
                let (s, co) = angle.sin_cos();
                let (dx, dy) = (c - cx, r - cy);
                let u = co * dx + s * dy;
                let v = -s * dx + co * dy;
                u.abs() <= hw && v.abs() <= hh
            }
        }
    }

    /// `(min_c, max_c, min_r, max_r)` of the region.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        match *self {
            Shape::Disk { cx, cy, r } => (cx - r, cx + r, cy - r, cy + r),
            Shape::Rect { cx, cy, hw, hh, angle } => {
                let (s, co) = angle.sin_cos();
                let ex = (co * hw).abs() + (s * hh).abs();
                let ey = (s * hw).abs() + (co * hh).abs();
                (cx - ex, cx + ex, cy - ey, cy + ey)
            }
        }
    }

    pub fn moved(&self, motion: &Motion, k: usize) -> Shape {
        let t = k as f64;
        match *self {
            Shape::Disk { cx, cy, r } => Shape::Disk {
                cx: cx + t * motion.dx,
                cy: cy + t * motion.dy,
                r,
            },
            Shape::Rect { cx, cy, hw, hh, angle } => Shape::Rect {
                cx: cx + t * motion.dx,
                cy: cy + t * motion.dy,
                hw,
                hh,
                angle: angle + t * motion.dtheta,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Disk { cx, cy, r } => cx.is_finite() && cy.is_finite() && r > 0.0 && r.is_finite(),
            Shape::Rect { cx, cy, hw, hh, angle } => {
                [cx, cy, angle].iter().all(|v| v.is_finite()) && hw > 0.0 && hh > 0.0 && hw.is_finite() && hh.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad shape {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub shape: Shape,
    pub foreground: f64,
    pub background: f64,
    /// Standard deviation of the additive Gaussian noise, in intensity units.
    pub noise: f64,
    pub seeds_per_class: usize,
}

impl SynthSpec {
    /// `w × h` frame with a centred disk of radius `min(w, h) / 3.5`.
    pub fn disk(width: usize, height: usize, seeds_per_class: usize) -> Self {
        Self {
            width,
            height,
            shape: Shape::Disk {
                cx: (width as f64 - 1.0) / 2.0,
                cy: (height as f64 - 1.0) / 2.0,
                r: width.min(height) as f64 / 3.5,
            },
            foreground: 170.0,
            background: 85.0,
            noise: 10.0,
            seeds_per_class,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("image dimensions must be positive".into()));
        }
        for v in [self.foreground, self.background] {
            if !(0.0..=255.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("intensity {v} outside [0, 255]")));
            }
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::InvalidParameter("noise level must be >= 0".into()));
        }
        self.shape.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthImage {
    pub image: Image,
    pub truth: Mask,
    pub seeds: Seeds,
}

fn render(spec: &SynthSpec, shape: &Shape, seed: u64, draw: u64) -> Result<SynthImage> {
    let (w, h) = (spec.width, spec.height);
    let truth: Vec<bool> = (0..w * h).map(|p| shape.contains((p % w) as f64, (p / w) as f64)).collect();
    let mut noise = GaussianSampler::for_stream(seed, Domain::Noise, Half::Probe, draw, 0);
    let data = truth
        .iter()
        .map(|&inside| {
            let base = if inside { spec.foreground } else { spec.background };
            let v = if spec.noise > 0.0 { base + spec.noise * noise.next_f64() } else { base };
            v.clamp(0.0, 255.0).round() as u8
        })
        .collect();

    let mut seeds = Seeds::default();
    for (sample, label) in [(0u64, true), (1u64, false)] {
        let mut region: Vec<usize> = (0..w * h).filter(|&p| truth[p] == label).collect();
        let k = spec.seeds_per_class;
        if k > region.len() {
            return Err(Error::RegionTooSmall(format!(
                "{} seeds requested in a {} region of {} pixels",
                k,
                if label { "foreground" } else { "background" },
                region.len()
            )));
        }
        let mut rng = substream(seed, Domain::SeedPlacement, Half::Probe, draw, sample);
        for i in 0..k {
            let j = rng.random_range(i..region.len());
            region.swap(i, j);
        }
        seeds.positions.extend_from_slice(&region[..k]);
        seeds.labels.extend(std::iter::repeat_n(u8::from(label), k));
    }
    Ok(SynthImage {
        image: Image::new(w, h, data)?,
        truth: Mask::new(w, h, truth)?,
        seeds,
    })
}

/// Two-level image with additive clamped Gaussian noise and uniformly placed
/// seeds (foreground first, label 1).
pub fn synth_image(spec: &SynthSpec, seed: u64) -> Result<SynthImage> {
    spec.validate()?;
    render(spec, &spec.shape, seed, 0)
}

/// Rigid motion applied once per frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub dx: f64,
    pub dy: f64,
    #[serde(default)]
    pub dtheta: f64,
}

impl Motion {
    pub fn is_static(&self) -> bool {
        self.dx == 0.0 && self.dy == 0.0 && self.dtheta == 0.0
    }
}

/// Lazily rendered frames of a moving shape. Noise and seed draws are indexed
/// by frame; a static stream reuses frame 0's draws, so all its frames agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStream {
    pub spec: SynthSpec,
    pub motion: Motion,
    pub frames: usize,
    pub fps: f64,
    pub seed: u64,
}

impl FrameStream {
    pub fn len(&self) -> usize {
        self.frames
    }

    pub fn is_empty(&self) -> bool {
        self.frames == 0
    }

    pub fn shape_at(&self, k: usize) -> Shape {
        self.spec.shape.moved(&self.motion, k)
    }

    pub fn frame(&self, k: usize) -> Result<SynthImage> {
        if k >= self.frames {
            return Err(Error::IndexOutOfRange { index: k, n: self.frames });
        }
        let draw = if self.motion.is_static() { 0 } else { k as u64 };
        render(&self.spec, &self.shape_at(k), self.seed, draw)
    }
}

pub fn synth_stream(spec: &SynthSpec, frames: usize, motion: Motion, fps: f64, seed: u64) -> Result<FrameStream> {
    spec.validate()?;
    if !(fps > 0.0) || !fps.is_finite() {
        return Err(Error::InvalidParameter("fps must be > 0".into()));
    }
    if ![motion.dx, motion.dy, motion.dtheta].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let stream = FrameStream {
        spec: *spec,
        motion,
        frames,
        fps,
        seed,
    };
    let (w, h) = (spec.width as f64 - 1.0, spec.height as f64 - 1.0);
    for k in 0..frames {
        let (c0, c1, r0, r1) = stream.shape_at(k).extent();
        if c0 < 0.0 || r0 < 0.0 || c1 > w || r1 > h {
            return Err(Error::ShapeLeavesFrame { frame: k });
        }
    }
    Ok(stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_image_is_two_level() {
        let spec = SynthSpec { noise: 0.0, ..SynthSpec::disk(12, 10, 3) };
        let s = synth_image(&spec, 1).unwrap();
        for (v, t) in s.image.data.iter().zip(&s.truth.data) {
            assert_eq!(*v, if *t { 170 } else { 85 });
        }
    }

    #[test]
    fn deterministic_and_seeds_inside_regions() {
        let spec = SynthSpec::disk(16, 16, 8);
        let a = synth_image(&spec, 7).unwrap();
        assert_eq!(a, synth_image(&spec, 7).unwrap());
        assert_ne!(a.image, synth_image(&spec, 8).unwrap().image);
        assert_eq!(a.seeds.len(), 16);
        let mut seen = std::collections::HashSet::new();
        for (&p, &l) in a.seeds.positions.iter().zip(&a.seeds.labels) {
            assert_eq!(a.truth.data[p], l == 1);
            assert!(seen.insert(p));
        }
    }

    #[test]
    fn region_too_small() {
        let spec = SynthSpec::disk(6, 6, 13);
        assert!(matches!(synth_image(&spec, 0), Err(Error::RegionTooSmall(_))));
    }

    #[test]
    fn static_stream_is_constant() {
        let s = synth_stream(&SynthSpec::disk(10, 10, 3), 4, Motion::default(), 60.0, 2).unwrap();
        let f0 = s.frame(0).unwrap();
        for k in 1..4 {
            assert_eq!(s.frame(k).unwrap(), f0);
        }
    }

    #[test]
    fn translation_shifts_truth() {
        let spec = SynthSpec {
            shape: Shape::Disk { cx: 4.0, cy: 5.0, r: 2.5 },
            ..SynthSpec::disk(16, 10, 2)
        };
        let s = synth_stream(&spec, 5, Motion { dx: 1.0, dy: 0.0, dtheta: 0.0 }, 30.0, 3).unwrap();
        let t0 = s.frame(0).unwrap().truth;
        for k in 1..5 {
            let f = s.frame(k).unwrap();
            for r in 0..10 {
                for c in 0..16 {
                    let want = c >= k && t0.data[r * 16 + c - k];
                    assert_eq!(f.truth.data[r * 16 + c], want);
                }
            }
            for (&p, &l) in f.seeds.positions.iter().zip(&f.seeds.labels) {
                assert_eq!(f.truth.data[p], l == 1);
            }
        }
    }

    #[test]
    fn leaving_the_frame_is_an_error() {
        let spec = SynthSpec::disk(10, 10, 2);
        let err = synth_stream(&spec, 20, Motion { dx: 0.5, dy: 0.0, dtheta: 0.0 }, 60.0, 0).unwrap_err();
        assert!(matches!(err, Error::ShapeLeavesFrame { frame } if frame > 0));
    }

    #[test]
    fn rotated_rect_contains_center() {
        let s = Shape::Rect { cx: 5.0, cy: 5.0, hw: 3.0, hh: 1.0, angle: std::f64::consts::FRAC_PI_2 };
        assert!(s.contains(5.0, 7.5));
        assert!(!s.contains(7.5, 5.0));
    }
}
