//! Gaussian-smoothing random oracles for the maximizing block.
//!
//! With `u ~ N(0, I)` the forward estimator
//! `g = (f(y + μu) - f(y)) / μ · u` is unbiased for the gradient of the
//! smoothed function `f_μ(y) = E_u[f(y + μu)]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Domain, GaussianSampler, Half};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceScheme {
    #[default]
    Forward,
    Central,
    Backward,
}

impl DifferenceScheme {
    /// Extension evaluations per direction, excluding a shared base value.
    pub fn evaluations_per_sample(self) -> usize {
        match self {
            DifferenceScheme::Forward | DifferenceScheme::Backward => 1,
            DifferenceScheme::Central => 2,
        }
    }

    pub fn uses_base(self) -> bool {
        !matches!(self, DifferenceScheme::Central)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig<T> {
    /// Smoothing parameter, strictly positive.
    pub mu: T,
    /// Directions averaged per estimate.
    pub samples: usize,
    #[serde(default)]
    pub scheme: DifferenceScheme,
    pub seed: u64,
}

impl<T: Scalar> OracleConfig<T> {
    pub fn new(mu: T, samples: usize, seed: u64) -> Self {
        Self {
            mu,
            samples,
            scheme: DifferenceScheme::Forward,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_mu(self.mu)?;
        if self.samples == 0 {
            return Err(Error::InvalidParameter("sample count must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_mu<T: Scalar>(mu: T) -> Result<()> {
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("smoothing parameter must be > 0, got {mu}")));
    }
    Ok(())
}

/// Where a batch draws its directions from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamPosition {
    pub domain: Domain,
    pub iteration: u64,
    pub half: Half,
}

impl StreamPosition {
    pub fn new(iteration: u64, half: Half) -> Self {
        Self {
            domain: Domain::Directions,
            iteration,
            half,
        }
    }

    /// Directions reserved for diagnostics, disjoint from the solver's.
    pub fn residual(iteration: u64) -> Self {
        Self {
            domain: Domain::Residual,
            iteration,
            half: Half::Probe,
        }
    }
}

impl Default for StreamPosition {
    fn default() -> Self {
        Self::new(0, Half::Probe)
    }
}

/// The `i`-th direction of a batch.
pub fn direction<T: Scalar>(seed: u64, pos: StreamPosition, sample: usize, m: usize) -> Vec<T> {
    GaussianSampler::for_stream(seed, pos.domain, pos.half, pos.iteration, sample as u64).vector(m)
}

fn shifted<T: Scalar>(y: &[T], u: &[T], s: T) -> Vec<T> {
    y.iter().zip(u).map(|(&a, &b)| a + s * b).collect()
}

fn estimate_along<T, F>(f: &F, y: &[T], u: &[T], mu: T, scheme: DifferenceScheme, base: Option<T>) -> Result<(Vec<T>, usize)>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T>,
{
    if u.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: u.len(),
        });
    }
    let mut evals = 0;
    let mut base_value = || -> Result<T> {
        match base {
            Some(v) => Ok(v),
            None => {
                evals += 1;
                f(y)
            }
        }
    };
    let coef = match scheme {
        DifferenceScheme::Forward => {
            let b = base_value()?;
            (f(&shifted(y, u, mu))? - b) / mu
        }
        DifferenceScheme::Backward => {
            let b = base_value()?;
            (b - f(&shifted(y, u, -mu))?) / mu
        }
        DifferenceScheme::Central => {
            (f(&shifted(y, u, mu))? - f(&shifted(y, u, -mu))?) / (T::of(2.0) * mu)
        }
    };
    evals += scheme.evaluations_per_sample();
    Ok((u.iter().map(|&ui| coef * ui).collect(), evals))
}

/// Single-direction estimate. `f` evaluates the extension at a point `y`
/// (for a fixed `x`); points `y ± μu` need not lie in `Y`.
pub fn oracle_once<T, F>(f: F, y: &[T], u: &[T], mu: T, scheme: DifferenceScheme) -> Result<Vec<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T>,
{
    check_mu(mu)?;
    estimate_along(&f, y, u, mu, scheme, None).map(|(g, _)| g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate<T> {
    pub gradient: Vec<T>,
    /// Calls made to the extension evaluator.
    pub evaluations: usize,
}

/// Mean of `config.samples` estimates over directions from the batch stream
/// at `pos`. A supplied `base` value stands in for `f(y)` (forward and
/// backward schemes) and is otherwise computed once for the whole batch.
pub fn oracle_batch_at<T, F>(
    f: F,
    y: &[T],
    config: &OracleConfig<T>,
    pos: StreamPosition,
    base: Option<T>,
) -> Result<OracleEstimate<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T>,
{
    config.validate()?;
    let m = y.len();
    let mut evaluations = 0;
    let base = match (config.scheme.uses_base(), base) {
        (true, None) => {
            evaluations += 1;
            Some(f(y)?)
        }
        (true, b) => b,
        (false, _) => None,
    };
    let mut sum = vec![T::zero(); m];
    for i in 0..config.samples {
        let u = direction(config.seed, pos, i, m);
        let (g, e) = estimate_along(&f, y, &u, config.mu, config.scheme, base)?;
        evaluations += e;
        for (s, v) in sum.iter_mut().zip(g) {
            *s = *s + v;
        }
    }
    let t = T::of_usize(config.samples);
    Ok(OracleEstimate {
        gradient: sum.into_iter().map(|s| s / t).collect(),
        evaluations,
    })
}

pub fn oracle_batch<T, F>(f: F, y: &[T], config: &OracleConfig<T>) -> Result<Vec<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T>,
{
    oracle_batch_at(f, y, config, StreamPosition::default(), None).map(|e| e.gradient)
}

/// Oracle variant for time-varying objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnlineOracle {
    /// Both evaluations on the current objective (four queries per change).
    #[default]
    SameFunction,
    /// Base value taken from the next objective: three queries per change,
    /// at the price of an extra `2 m V² / μ²` variance term when consecutive
    /// objectives differ by at most `V`.
    CrossStep,
}

/// `(f_k(y + μu) - f_k(y)) / μ · u`, or with the base value taken from
/// `f_next` under [`OnlineOracle::CrossStep`].
pub fn online_oracle<T, F, G>(f_k: F, f_next: G, y: &[T], u: &[T], mu: T, variant: OnlineOracle) -> Result<Vec<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T>,
    G: Fn(&[T]) -> Result<T>,
{
    check_mu(mu)?;
    let base = match variant {
        OnlineOracle::SameFunction => f_k(y)?,
        OnlineOracle::CrossStep => f_next(y)?,
    };
    estimate_along(&f_k, y, u, mu, DifferenceScheme::Forward, Some(base)).map(|(g, _)| g)
}

/// Per-coordinate sample mean and standard error of single-direction
/// estimates, plus the empirical second moment `E‖g‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleStatistics {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub second_moment: f64,
    pub samples: usize,
}

/// Draws `samples` independent estimates at `y` from the batch stream at
/// `pos` and summarizes them in `f64`.
pub fn oracle_statistics<T, F>(
    f: F,
    y: &[T],
    mu: T,
    scheme: DifferenceScheme,
    samples: usize,
    seed: u64,
    pos: StreamPosition,
) -> Result<OracleStatistics>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T>,
{
    check_mu(mu)?;
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let m = y.len();
    let base = if scheme.uses_base() { Some(f(y)?) } else { None };
    let (mut sum, mut sq) = (vec![0.0; m], vec![0.0; m]);
    let mut second = 0.0;
    for i in 0..samples {
        let u = direction(seed, pos, i, m);
        let (g, _) = estimate_along(&f, y, &u, mu, scheme, base)?;
        let mut norm2 = 0.0;
        for (j, v) in g.iter().enumerate() {
            let v = v.as_f64();
            sum[j] += v;
            sq[j] += v * v;
            norm2 += v * v;
        }
        second += norm2;
    }
    let t = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / t).collect();
    let std_err = sq
        .iter()
        .zip(&mean)
        .map(|(q, mu)| ((q / t - mu * mu).max(0.0) * t / (t - 1.0) / t).sqrt())
        .collect();
    Ok(OracleStatistics {
        mean,
        std_err,
        second_moment: second / t,
        samples,
    })
}

/// `E‖g‖² <= L0y² (m + 4)²` for an `L0y`-Lipschitz objective.
pub fn second_moment_bound<T: Scalar>(l0y: T, m: usize) -> T {
    let k = T::of_usize(m + 4);
    l0y * l0y * k * k
}

/// `|f_μ(y) - f(y)| <= μ L0y √m`.
pub fn smoothing_bias_bound<T: Scalar>(mu: T, l0y: T, m: usize) -> T {
    mu * l0y * T::of_usize(m).sqrt()
}
