//! Named, counter-addressed random sub-streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! top-level seed and positioned on a 64-bit stream id. The stream id packs
//! the purpose of the draw together with its coordinates:
//!
//! ```text
//!  63..61  domain     (Directions, Threshold, Noise, ...)
//!  60      half-step  (0 = probe step, 1 = correction step)
//!  59..24  iteration  (36 bits)
//!  23..0   sample     (24 bits)
//! ```
//!
//! Two draws with different coordinates never share a stream, so toggling one
//! consumer (for example threshold rounding) leaves every other sequence
//! bit-identical. Gaussian variates use the Box-Muller transform on 53-bit
//! uniforms, evaluated in `f64` and rounded once into the target scalar.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Directions = 0,
    Threshold = 1,
    Noise = 2,
    SeedPlacement = 3,
    Estimation = 4,
    Residual = 5,
    Motion = 6,
}

pub const MAX_ITERATION: u64 = 1 << 36;
pub const MAX_SAMPLE: u64 = 1 << 24;

/// Half-step selector for the two operator evaluations of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    Probe = 0,
    Correction = 1,
}

pub fn stream_id(domain: Domain, half: Half, iteration: u64, sample: u64) -> u64 {
    assert!(iteration < MAX_ITERATION, "iteration index exceeds stream layout");
    assert!(sample < MAX_SAMPLE, "sample index exceeds stream layout");
    ((domain as u64) << 61) | ((half as u64) << 60) | (iteration << 24) | sample
}

pub fn substream(seed: u64, domain: Domain, half: Half, iteration: u64, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(domain, half, iteration, sample));
    rng
}

/// Standard-normal generator over one sub-stream.
pub struct GaussianSampler {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSampler {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng, spare: None }
    }

    pub fn for_stream(seed: u64, domain: Domain, half: Half, iteration: u64, sample: u64) -> Self {
        Self::new(substream(seed, domain, half, iteration, sample))
    }

    fn open_unit(&mut self) -> f64 {
        // (0, 1]: keeps ln() finite.
        ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_f64(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = self.open_unit();
        let u2 = self.open_unit();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn next<T: Scalar>(&mut self) -> T {
        T::of(self.next_f64())
    }

    pub fn vector<T: Scalar>(&mut self, m: usize) -> Vec<T> {
        (0..m).map(|_| self.next()).collect()
    }
}

/// Uniform draw in `[0, 1)` from a sub-stream.
pub fn uniform<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    T::of(rng.random::<f64>())
}
