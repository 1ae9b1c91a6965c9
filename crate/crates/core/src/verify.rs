//! Ground-truth oracles: exhaustive set minimization, inner maximization over
//! `y`, duality and restricted gaps, online gap accumulation, path lengths
//! and a brute-force saddle check.
//!
//! Everything here queries the instance through its counted value oracle,
//! so callers can attribute the cost of verification separately.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConstraintSet;
use crate::lovasz::{decompose, extension_value, lovasz_subgradient, lovasz_value};
use crate::scalar::{distance, Scalar};
use crate::setfn::{charvec, SetFunctionInstance, Subset};

/// Largest ground set enumerated exhaustively.
pub const BRUTE_FORCE_CAP: usize = 20;

/// Exact `min_S f(S, y)` by enumerating all `2^n` subsets; ties go to the
/// smallest bitmask.
pub fn brute_min_sets<T: Scalar>(inst: &SetFunctionInstance<T>, y: &[T]) -> Result<(Subset, T)> {
    let n = inst.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::CapExceeded { n, cap: BRUTE_FORCE_CAP });
    }
    let mut best = (0u64, T::infinity());
    for mask in 0..(1u64 << n) {
        let v = inst.evaluate(&Subset::from_mask(mask, n), y)?;
        if v < best.1 {
            best = (mask, v);
        }
    }
    Ok((Subset::from_mask(best.0, n), best.1))
}

/// `min_S f(S, y)` through the registered exact minimizer, falling back to
/// enumeration.
pub fn min_over_sets<T: Scalar>(inst: &SetFunctionInstance<T>, y: &[T]) -> Result<(Subset, T)> {
    match inst.set_minimizer() {
        Some(f) => {
            inst.check_in_domain(y)?;
            Ok(f(y))
        }
        None => brute_min_sets(inst, y),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// Closed form registered with the instance.
    Analytic,
    /// Objectives affine in `y` over a box or capped simplex.
    GreedyBudget,
    /// Scan of a regular grid, `m <= 3`.
    Grid { resolution: f64 },
    /// First applicable of analytic, greedy-budget and grid.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodUsed {
    Analytic,
    GreedyBudget,
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerMax<T> {
    pub y: Vec<T>,
    pub value: T,
    pub method: MethodUsed,
}

/// Default grid step by dimension.
pub fn default_grid_resolution(m: usize) -> f64 {
    match m {
        0 | 1 => 1e-3,
        2 => 1e-2,
        _ => 5e-2,
    }
}

fn greedy_applicable<T: Scalar>(inst: &SetFunctionInstance<T>) -> bool {
    inst.is_affine_in_y() && matches!(inst.constraint(), ConstraintSet::Box { .. } | ConstraintSet::CappedSimplex { .. })
}

/// Resolves [`InnerMethod::Auto`] for this instance.
pub fn resolve_method<T: Scalar>(inst: &SetFunctionInstance<T>, method: InnerMethod) -> Result<InnerMethod> {
    let m = inst.m();
    let resolved = match method {
        InnerMethod::Auto if inst.inner_max().is_some() => InnerMethod::Analytic,
        InnerMethod::Auto if greedy_applicable(inst) => InnerMethod::GreedyBudget,
        InnerMethod::Auto if m <= 3 => InnerMethod::Grid {
            resolution: default_grid_resolution(m),
        },
        InnerMethod::Auto => {
            return Err(Error::NoInnerMethod(format!("{}: m = {m} with a non-affine objective", inst.name())));
        }
        InnerMethod::Analytic if inst.inner_max().is_none() => {
            return Err(Error::NoInnerMethod(format!("{}: no closed form registered", inst.name())));
        }
        InnerMethod::GreedyBudget if !greedy_applicable(inst) => {
            return Err(Error::NoInnerMethod(format!(
                "{}: greedy-budget needs an affine objective over a box or capped simplex",
                inst.name()
            )));
        }
        InnerMethod::Grid { resolution } if m > 3 || !(resolution > 0.0) => {
            return Err(Error::NoInnerMethod(format!("{}: grid needs m <= 3 and a positive step", inst.name())));
        }
        other => other,
    };
    Ok(resolved)
}

/// Feasible points of a regular grid over the bounding box of `set`.
pub fn grid_points<T: Scalar>(set: &ConstraintSet<T>, resolution: f64) -> Vec<Vec<T>> {
    let (lo, hi) = set.bounding_box();
    let axes: Vec<Vec<T>> = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| {
            let (l, h) = (l.as_f64(), h.as_f64());
            let steps = ((h - l) / resolution).round().max(1.0) as usize;
            (0..=steps).map(|i| T::of(l + (h - l) * i as f64 / steps as f64)).collect()
        })
        .collect();
    let mut points: Vec<Vec<T>> = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points.retain(|p| set.contains(p, T::membership_tol()));
    points
}

/// `max_{y ∈ Y} f^L(x, y)`. For a set `S` pass `x = χ_S`.
pub fn inner_max_y<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], method: InnerMethod) -> Result<InnerMax<T>> {
    crate::lovasz::check_unit_cube(x)?;
    match resolve_method(inst, method)? {
        InnerMethod::Analytic => {
            let (y, value) = (inst.inner_max().expect("resolved"))(x);
            Ok(InnerMax {
                y,
                value,
                method: MethodUsed::Analytic,
            })
        }
        InnerMethod::GreedyBudget => greedy_budget(inst, x),
        InnerMethod::Grid { resolution } => {
            let mut best: Option<(Vec<T>, T)> = None;
            for y in grid_points(inst.constraint(), resolution) {
                let v = extension_value(inst, x, &y)?;
                if best.as_ref().is_none_or(|(_, b)| v > *b) {
                    best = Some((y, v));
                }
            }
            let (y, value) = best.ok_or_else(|| Error::NoInnerMethod("empty grid".into()))?;
            Ok(InnerMax {
                y,
                value,
                method: MethodUsed::Grid,
            })
        }
        InnerMethod::Auto => unreachable!("resolved above"),
    }
}

pub fn inner_max_set<T: Scalar>(inst: &SetFunctionInstance<T>, set: &Subset, method: InnerMethod) -> Result<InnerMax<T>> {
    inner_max_y(inst, &charvec(set, inst.n())?, method)
}

/// Affine maximization: coefficients from `m + 1` extension values, then the
/// best vertex of the box, or the top `⌊ρ⌋` positive coefficients plus a
/// fractional remainder on the capped simplex.
fn greedy_budget<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T]) -> Result<InnerMax<T>> {
    let m = inst.m();
    let origin = vec![T::zero(); m];
    let c0 = extension_value(inst, x, &origin)?;
    let mut coef = Vec::with_capacity(m);
    for s in 0..m {
        let mut e = origin.clone();
        e[s] = T::one();
        coef.push(extension_value(inst, x, &e)? - c0);
    }
    let y = match inst.constraint() {
        ConstraintSet::Box { lower, upper } => coef
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(&c, (&l, &u))| if c > T::zero() { u } else { l })
            .collect(),
        ConstraintSet::CappedSimplex { budget, .. } => {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| coef[b].partial_cmp(&coef[a]).expect("finite").then(a.cmp(&b)));
            let mut y = vec![T::zero(); m];
            let mut left = *budget;
            for &s in &order {
                if coef[s] <= T::zero() || left <= T::zero() {
                    break;
                }
                y[s] = left.min(T::one());
                left = left - y[s];
            }
            y
        }
        _ => unreachable!("checked by resolve_method"),
    };
    let value = c0 + coef.iter().zip(&y).map(|(&c, &v)| c * v).sum::<T>();
    Ok(InnerMax {
        y,
        value,
        method: MethodUsed::GreedyBudget,
    })
}

/// Change in the grid maximum when the step is halved.
pub fn grid_refinement_delta<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], resolution: f64) -> Result<T> {
    let coarse = inner_max_y(inst, x, InnerMethod::Grid { resolution })?.value;
    let fine = inner_max_y(
        inst,
        x,
        InnerMethod::Grid {
            resolution: resolution / 2.0,
        },
    )?
    .value;
    Ok((fine - coarse).abs())
}

/// `D(S, y) = max_y' f(S, y') - min_S' f(S', y)`.
pub fn duality_gap<T: Scalar>(inst: &SetFunctionInstance<T>, set: &Subset, y: &[T], method: InnerMethod) -> Result<T> {
    let upper = inner_max_set(inst, set, method)?.value;
    Ok(upper - min_over_sets(inst, y)?.1)
}

/// `D^L(x, y) = max_y' f^L(x, y') - min_x' f^L(x', y)`, using that the
/// extension attains its minimum over the cube at a vertex.
pub fn duality_gap_l<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], y: &[T], method: InnerMethod) -> Result<T> {
    let upper = inner_max_y(inst, x, method)?.value;
    Ok(upper - min_over_sets(inst, y)?.1)
}

/// `D_τ(x, y) = max_y' E_τ[f(S_τ, y')] - min_S f(S, y)` with `S_τ` the
/// threshold rounding of `x`. The expectation is the extension itself, so no
/// sampling is involved; at a vertex this is [`duality_gap`].
pub fn dtau_gap<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], y: &[T], method: InnerMethod) -> Result<T> {
    duality_gap_l(inst, x, y, method)
}

/// `R(S, y) = f(S, y*) - f(S*, y)` against the registered set saddle.
pub fn restricted_gap<T: Scalar>(inst: &SetFunctionInstance<T>, set: &Subset, y: &[T]) -> Result<Option<T>> {
    let Some((s_star, y_star)) = inst.set_saddle().cloned() else {
        return Ok(None);
    };
    Ok(Some(inst.evaluate(set, &y_star)? - inst.evaluate(&s_star, y)?))
}

/// `R^L(x, y) = f^L(x, y*) - f^L(x*, y)` against the registered extension saddle.
pub fn restricted_gap_l<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], y: &[T]) -> Result<Option<T>> {
    let Some((x_star, y_star)) = inst.extension_saddle().cloned() else {
        return Ok(None);
    };
    Ok(Some(lovasz_value(inst, x, &y_star)? - lovasz_value(inst, &x_star, y)?))
}

/// `f^L(x, y*) - f(S*, y)` against the set saddle: the restricted gap of
/// the threshold-rounded point in expectation.
pub fn restricted_gap_tau<T: Scalar>(inst: &SetFunctionInstance<T>, x: &[T], y: &[T]) -> Result<Option<T>> {
    let Some((s_star, y_star)) = inst.set_saddle().cloned() else {
        return Ok(None);
    };
    Ok(Some(lovasz_value(inst, x, &y_star)? - inst.evaluate(&s_star, y)?))
}

/// `Σ ‖p_i - p_{i-1}‖`.
pub fn path_length<T: Scalar>(points: &[Vec<T>]) -> Result<T> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("path needs at least one point".into()));
    }
    Ok(points.windows(2).map(|w| distance(&w[1], &w[0])).sum())
}

/// Gap quantities for one state or a whole online run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GapReport<T> {
    pub duality_gap: Option<T>,
    pub restricted_gap: Option<T>,
    pub dtau_gap: Option<T>,
    /// Per-step `max_y f_k^L(x̂_k, y) - min_S f_k(S, ŷ_k)`.
    pub dual_gap_terms: Vec<T>,
    /// Per-step restricted terms; absent when some step has no set saddle.
    pub rd_gap_terms: Option<Vec<T>>,
    pub dual_gap_total: T,
    pub rd_gap_total: Option<T>,
    /// Path lengths of named comparator sequences.
    pub path_lengths: Vec<(String, T)>,
    pub methods: Vec<MethodUsed>,
}

impl<T: Scalar> GapReport<T> {
    /// Offline gaps at `(set, y)` and `(x, y)`.
    pub fn at(inst: &SetFunctionInstance<T>, set: &Subset, x: &[T], y: &[T], method: InnerMethod) -> Result<Self> {
        let set_inner = inner_max_set(inst, set, method)?;
        let ext_inner = inner_max_y(inst, x, method)?;
        let lower = min_over_sets(inst, y)?.1;
        Ok(Self {
            duality_gap: Some(set_inner.value - lower),
            restricted_gap: restricted_gap(inst, set, y)?,
            dtau_gap: Some(ext_inner.value - lower),
            dual_gap_total: T::zero(),
            methods: vec![set_inner.method, ext_inner.method],
            ..Default::default()
        })
    }

    pub fn add_path_length(&mut self, name: impl Into<String>, points: &[Vec<T>]) -> Result<()> {
        let p = path_length(points)?;
        self.path_lengths.push((name.into(), p));
        Ok(())
    }

    pub fn path_length(&self, name: &str) -> Option<T> {
        self.path_lengths.iter().find(|(n, _)| n == name).map(|(_, p)| *p)
    }
}

/// One step of an online run: the objective in force and the probe iterate.
#[derive(Debug, Clone)]
pub struct OnlineStep<T: Scalar> {
    pub objective: SetFunctionInstance<T>,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

/// Per-step gap term of an online run.
pub fn online_terms<T: Scalar>(step: &OnlineStep<T>, method: InnerMethod) -> Result<(T, Option<T>, MethodUsed)> {
    let inner = inner_max_y(&step.objective, &step.x, method)?;
    let lower = min_over_sets(&step.objective, &step.y)?.1;
    let rd = restricted_gap_tau(&step.objective, &step.x, &step.y)?;
    Ok((inner.value - lower, rd, inner.method))
}

/// Cumulative dual and restricted gaps over an online run, plus the path
/// length of the extension saddles when every step registers one.
pub fn online_gaps<T: Scalar>(steps: &[OnlineStep<T>], method: InnerMethod) -> Result<GapReport<T>> {
    let mut report = GapReport {
        dual_gap_total: T::zero(),
        rd_gap_terms: Some(Vec::new()),
        ..Default::default()
    };
    for step in steps {
        let (d, rd, used) = online_terms(step, method)?;
        report.dual_gap_terms.push(d);
        report.dual_gap_total = report.dual_gap_total + d;
        if !report.methods.contains(&used) {
            report.methods.push(used);
        }
        match (rd, report.rd_gap_terms.as_mut()) {
            (Some(v), Some(terms)) => terms.push(v),
            _ => report.rd_gap_terms = None,
        }
    }
    if steps.is_empty() {
        report.rd_gap_terms = None;
    }
    report.rd_gap_total = report.rd_gap_terms.as_ref().map(|t| t.iter().copied().sum());
    let saddles: Option<Vec<Vec<T>>> = steps
        .iter()
        .map(|s| s.objective.extension_saddle().map(|(x, y)| x.iter().chain(y).copied().collect()))
        .collect();
    if let Some(path) = saddles.filter(|p| !p.is_empty()) {
        report.add_path_length("saddle", &path)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport<T> {
    /// `max_y min_S f(S, y)` over the grid.
    pub max_min: T,
    /// `min_S max_y f(S, y)` over the grid.
    pub min_max: T,
    pub tolerance: T,
    pub has_saddle: bool,
    /// Minimum over the cube of `ζ(x) = max_y f^L(x, y)`.
    pub extension_min: T,
    /// Whether a vertex attains the minimum of `ζ` within tolerance.
    pub vertex_minimizer: bool,
    pub grid_points: usize,
}

pub const SADDLE_CHECK_MAX_N: usize = 12;

/// Max-min and min-max of `f` over all sets and a `y`-grid, and whether the
/// minimizers of `ζ(x) = max_y f^L(x, y)` include a vertex.
///
/// The minimum of `ζ` over the cube is taken over an `x`-grid for `n <= 2`
/// and by projected subgradient descent otherwise.
pub fn brute_saddle_check<T: Scalar>(inst: &SetFunctionInstance<T>, resolution: Option<f64>) -> Result<SaddleReport<T>> {
    let (n, m) = (inst.n(), inst.m());
    if n > SADDLE_CHECK_MAX_N {
        return Err(Error::CapExceeded {
            n,
            cap: SADDLE_CHECK_MAX_N,
        });
    }
    if m > 2 {
        return Err(Error::InvalidParameter(format!("saddle check needs m <= 2, got {m}")));
    }
    let res = resolution.unwrap_or_else(|| default_grid_resolution(m));
    let ys = grid_points(inst.constraint(), res);
    let sets = 1usize << n;
    // table[mask][j] = f(S_mask, y_j)
    let mut table = vec![vec![T::zero(); ys.len()]; sets];
    for (mask, row) in table.iter_mut().enumerate() {
        let s = Subset::from_mask(mask as u64, n);
        for (j, y) in ys.iter().enumerate() {
            row[j] = inst.evaluate(&s, y)?;
        }
    }
    let max_min = (0..ys.len())
        .map(|j| table.iter().map(|r| r[j]).fold(T::infinity(), T::min))
        .fold(T::neg_infinity(), T::max);
    let min_max = table
        .iter()
        .map(|r| r.iter().copied().fold(T::neg_infinity(), T::max))
        .fold(T::infinity(), T::min);

    let zeta = |x: &[T]| -> Result<(T, usize)> {
        let chain = decompose(x)?;
        let w = chain.weights();
        let masks: Vec<usize> = (0..=n).map(|k| chain.level(k).to_mask().expect("n <= 12") as usize).collect();
        let mut best = (T::neg_infinity(), 0);
        for j in 0..ys.len() {
            let v: T = w.iter().zip(&masks).map(|(&wk, &mk)| wk * table[mk][j]).sum();
            if v > best.0 {
                best = (v, j);
            }
        }
        Ok(best)
    };
    let extension_min = if n <= 2 {
        let x_res = if n == 1 { 1e-3 } else { 1e-2 };
        let cube = ConstraintSet::<T>::unit_box(n);
        let mut best = T::infinity();
        for x in grid_points(&cube, x_res) {
            best = best.min(zeta(&x)?.0);
        }
        best
    } else {
        let mut x = vec![T::of(0.5); n];
        let mut best = zeta(&x)?.0;
        for k in 0..4000 {
            let (v, j) = zeta(&x)?;
            best = best.min(v);
            let g = lovasz_subgradient(inst, &x, &ys[j])?;
            let step = T::of(0.5 / ((k + 1) as f64).sqrt());
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi = (*xi - step * *gi).max(T::zero()).min(T::one());
            }
        }
        best
    };
    let tolerance = T::of(res.max(1e-9));
    Ok(SaddleReport {
        max_min,
        min_max,
        tolerance,
        has_saddle: min_max - max_min <= tolerance,
        extension_min,
        vertex_minimizer: min_max - extension_min <= tolerance,
        grid_points: ys.len(),
    })
}
