//! Adversarial graph-cut segmentation.
//!
//! For a grayscale image on the 4-neighbour grid and labelled seeds `s`,
//!
//! ```text
//! f(A, y) = d(A, V \ A) + λ Σ_s y_s |1_A(s) - ℓ_s|,   y ∈ {y ∈ [0,1]^m : Σ y_s <= ρ}
//! ```
//!
//! with `d(k, j) = exp(-(I_k - I_j)² / (2σ_I²) - ‖p_k - p_j‖² / (2σ_x²))`.
//! The adversary spends its budget `ρ` on distrusting seeds.

use std::collections::VecDeque;
use std::marker::PhantomData;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConstraintSet;
use crate::scalar::Scalar;
use crate::setfn::{ProblemConstants, SetFunction, SetFunctionInstance, Subset};
use crate::solver::ProblemStream;

use super::synth::{Image, Seeds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub lambda: f64,
    pub rho: f64,
    pub sigma_i: f64,
    pub sigma_x: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            lambda: 5.0,
            rho: 8.0,
            sigma_i: 20.0,
            sigma_x: 1.0,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be > 0".into()));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidParameter("rho must be >= 0".into()));
        }
        check_scales(self.sigma_i, self.sigma_x)
    }
}

fn check_scales(sigma_i: f64, sigma_x: f64) -> Result<()> {
    if !(sigma_i > 0.0) || !(sigma_x > 0.0) || !sigma_i.is_finite() || !sigma_x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "similarity scales must be > 0, got sigma_i = {sigma_i}, sigma_x = {sigma_x}"
        )));
    }
    Ok(())
}

/// Similarity of two pixels; in `(0, 1]`.
pub fn edge_weight(i_k: f64, i_j: f64, pos_k: (f64, f64), pos_j: (f64, f64), sigma_i: f64, sigma_x: f64) -> Result<f64> {
    check_scales(sigma_i, sigma_x)?;
    let di = i_k - i_j;
    let dist2 = (pos_k.0 - pos_j.0).powi(2) + (pos_k.1 - pos_j.1).powi(2);
    Ok((-di * di / (2.0 * sigma_i * sigma_i) - dist2 / (2.0 * sigma_x * sigma_x)).exp())
}

/// 4-neighbour edges `(k, j, d(k, j))` with `k < j`, pixels in row-major order.
pub fn grid_edges(image: &Image, sigma_i: f64, sigma_x: f64) -> Result<Vec<(usize, usize, f64)>> {
    let (w, h) = (image.width, image.height);
    let mut edges = Vec::with_capacity(2 * w * h);
    for r in 0..h {
        for c in 0..w {
            let k = r * w + c;
            let pk = (c as f64, r as f64);
            let ik = image.data[k] as f64;
            if c + 1 < w {
                let j = k + 1;
                edges.push((k, j, edge_weight(ik, image.data[j] as f64, pk, ((c + 1) as f64, r as f64), sigma_i, sigma_x)?));
            }
            if r + 1 < h {
                let j = k + w;
                edges.push((k, j, edge_weight(ik, image.data[j] as f64, pk, (c as f64, (r + 1) as f64), sigma_i, sigma_x)?));
            }
        }
    }
    Ok(edges)
}

/// The segmentation set function; affine in `y`.
#[derive(Debug, Clone)]
pub struct SegmentationObjective<T> {
    n: usize,
    edges: Vec<(usize, usize, T)>,
    adjacency: Vec<Vec<(usize, T)>>,
    seeds: Vec<usize>,
    labels: Vec<bool>,
    seed_of: Vec<Option<usize>>,
    lambda: T,
}

impl<T: Scalar> SegmentationObjective<T> {
    pub fn new(n: usize, edges: &[(usize, usize, f64)], seeds: &Seeds, lambda: f64) -> Result<Self> {
        validate_seeds(seeds, n)?;
        let mut adjacency = vec![Vec::new(); n];
        let mut typed = Vec::with_capacity(edges.len());
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange { index: a.max(b), n });
            }
            let w = T::of(w);
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
            typed.push((a, b, w));
        }
        let mut seed_of = vec![None; n];
        for (s, &p) in seeds.positions.iter().enumerate() {
            seed_of[p] = Some(s);
        }
        Ok(Self {
            n,
            edges: typed,
            adjacency,
            seeds: seeds.positions.clone(),
            labels: seeds.labels.iter().map(|&l| l == 1).collect(),
            seed_of,
            lambda: T::of(lambda),
        })
    }

    pub fn cut(&self, inside: &[bool]) -> T {
        self.edges
            .iter()
            .filter(|(a, b, _)| inside[*a] != inside[*b])
            .map(|&(_, _, w)| w)
            .sum()
    }

    /// `Σ w_kj |x_k - x_j|`, the extension of the cut term.
    pub fn cut_extension(&self, x: &[T]) -> T {
        self.edges.iter().map(|&(a, b, w)| w * (x[a] - x[b]).abs()).sum()
    }

    /// `λ |x_s - ℓ_s|` per seed: the slope of the extension in `y_s`.
    pub fn seed_coefficients(&self, x: &[T]) -> Vec<T> {
        self.seeds
            .iter()
            .zip(&self.labels)
            .map(|(&p, &l)| {
                let target = if l { T::one() } else { T::zero() };
                self.lambda * (x[p] - target).abs()
            })
            .collect()
    }

    fn total_weight(&self) -> T {
        self.edges.iter().map(|e| e.2).sum()
    }

    /// Exact `min_A f(A, y)` via an s-t minimum cut; the returned set is the
    /// smallest minimizer (source side of the residual graph).
    pub fn min_cut(&self, y: &[T]) -> (Subset, T) {
        let (s, t) = (self.n, self.n + 1);
        let mut net = FlowNetwork::new(self.n + 2);
        for &(a, b, w) in &self.edges {
            net.add_undirected(a, b, w.as_f64());
        }
        for (i, (&p, &l)) in self.seeds.iter().zip(&self.labels).enumerate() {
            let c = (self.lambda * y[i]).as_f64();
            if c <= 0.0 {
                continue;
            }
            if l {
                // Foreground seed outside A pays c.
                net.add_edge(s, p, c);
            } else {
                net.add_edge(p, t, c);
            }
        }
        net.max_flow(s, t);
        let reach = net.reachable(s);
        let set = Subset::from_indices((0..self.n).filter(|&i| reach[i]));
        let value = self.value(&set, y);
        (set, value)
    }
}

fn validate_seeds(seeds: &Seeds, n: usize) -> Result<()> {
    if seeds.positions.len() != seeds.labels.len() {
        return Err(Error::InvalidSeeds(format!(
            "{} positions but {} labels",
            seeds.positions.len(),
            seeds.labels.len()
        )));
    }
    let mut seen = vec![false; n];
    for (&p, &l) in seeds.positions.iter().zip(&seeds.labels) {
        if p >= n {
            return Err(Error::InvalidSeeds(format!("seed {p} outside image of {n} pixels")));
        }
        if seen[p] {
            return Err(Error::InvalidSeeds(format!("duplicate seed at pixel {p}")));
        }
        if l > 1 {
            return Err(Error::InvalidSeeds(format!("label {l} is not binary")));
        }
        seen[p] = true;
    }
    Ok(())
}

impl<T: Scalar> SetFunction<T> for SegmentationObjective<T> {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.seeds.len()
    }

    fn value(&self, set: &Subset, y: &[T]) -> T {
        let inside = set.membership(self.n);
        let penalty: T = self
            .seeds
            .iter()
            .zip(&self.labels)
            .zip(y)
            .filter(|((&p, &l), _)| inside[p] != l)
            .map(|(_, &ys)| ys)
            .sum();
        self.cut(&inside) + self.lambda * penalty
    }

    fn chain_values(&self, order: &[usize], y: &[T]) -> Vec<T> {
        let mut inside = vec![false; self.n];
        let mut cut = T::zero();
        let mut penalty: T = self.labels.iter().zip(y).filter(|(&l, _)| l).map(|(_, &v)| v).sum();
        let mut out = Vec::with_capacity(order.len() + 1);
        out.push(cut + self.lambda * penalty);
        for &i in order {
            for &(j, w) in &self.adjacency[i] {
                cut = if inside[j] { cut - w } else { cut + w };
            }
            inside[i] = true;
            if let Some(s) = self.seed_of[i] {
                penalty = if self.labels[s] { penalty - y[s] } else { penalty + y[s] };
            }
            out.push(cut + self.lambda * penalty);
        }
        out
    }

    fn is_affine_in_y(&self) -> bool {
        true
    }
}

/// Adversary's best response to `x`: the budget goes to the seeds with the
/// largest penalties, whole units first and the remainder on the next one.
pub fn adversary_response<T: Scalar>(coef: &[T], budget: T) -> Vec<T> {
    let mut order: Vec<usize> = (0..coef.len()).collect();
    order.sort_by(|&a, &b| coef[b].partial_cmp(&coef[a]).expect("finite").then(a.cmp(&b)));
    let mut y = vec![T::zero(); coef.len()];
    let mut left = budget;
    for &s in &order {
        if coef[s] <= T::zero() || left <= T::zero() {
            break;
        }
        y[s] = left.min(T::one());
        left = left - y[s];
    }
    y
}

pub fn make_segmentation<T: Scalar>(image: &Image, seeds: &Seeds, params: &SegmentationParams) -> Result<SetFunctionInstance<T>> {
    params.validate()?;
    image.validate()?;
    let n = image.width * image.height;
    let edges = grid_edges(image, params.sigma_i, params.sigma_x)?;
    let obj = Arc::new(SegmentationObjective::<T>::new(n, &edges, seeds, params.lambda)?);
    let m = seeds.positions.len();
    let set = ConstraintSet::capped_simplex(m, T::of(params.rho));
    let lambda = T::of(params.lambda);
    let l0x = obj
        .adjacency
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            let deg: T = nb.iter().map(|e| e.1).sum();
            let b = deg + if obj.seed_of[i].is_some() { lambda } else { T::zero() };
            b * b
        })
        .sum::<T>()
        .sqrt();
    let m_bound = obj.total_weight() + lambda * T::of(params.rho.min(m as f64));
    let l0y = lambda * T::of_usize(m).sqrt();
    let constants = ProblemConstants::new(l0x, l0y, m_bound, set.diameter())?;
    let budget = T::of(params.rho);
    let for_inner = obj.clone();
    let for_min = obj.clone();
    Ok(SetFunctionInstance::new("segmentation", obj, set, constants)?
        .with_inner_max(Arc::new(move |x: &[T]| {
            let coef = for_inner.seed_coefficients(x);
            let y = adversary_response(&coef, budget);
            let value = for_inner.cut_extension(x) + coef.iter().zip(&y).map(|(&c, &v)| c * v).sum::<T>();
            (y, value)
        }))
        .with_set_minimizer(Arc::new(move |y: &[T]| for_min.min_cut(y))))
}

/// Online segmentation: one objective per frame, built on demand.
pub struct SegmentationStream<T> {
    frames: Vec<(Image, Seeds)>,
    params: SegmentationParams,
    _scalar: PhantomData<T>,
}

impl<T: Scalar> SegmentationStream<T> {
    /// All frames must share dimensions and seed count.
    pub fn new(frames: Vec<(Image, Seeds)>, params: SegmentationParams) -> Result<Self> {
        params.validate()?;
        if let Some((first, seeds)) = frames.first() {
            for (img, s) in &frames {
                if (img.width, img.height) != (first.width, first.height) {
                    return Err(Error::ShapeMismatch(format!(
                        "frame is {}x{}, first frame {}x{}",
                        img.width, img.height, first.width, first.height
                    )));
                }
                if s.len() != seeds.len() {
                    return Err(Error::DimensionMismatch {
                        expected: seeds.len(),
                        got: s.len(),
                    });
                }
            }
        }
        Ok(Self {
            frames,
            params,
            _scalar: PhantomData,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

impl<T: Scalar> ProblemStream<T> for SegmentationStream<T> {
    fn objective(&mut self, k: usize) -> Result<Option<SetFunctionInstance<T>>> {
        self.frames
            .get(k)
            .map(|(img, seeds)| make_segmentation(img, seeds, &self.params))
            .transpose()
    }
}

/// Dinic's algorithm on a small dense-ish graph.
struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

const FLOW_EPS: f64 = 1e-12;

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            head: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add_pair(&mut self, a: usize, b: usize, ab: f64, ba: f64) {
        self.head[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(ab);
        self.head[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(ba);
    }

    fn add_edge(&mut self, a: usize, b: usize, c: f64) {
        self.add_pair(a, b, c, 0.0);
    }

    fn add_undirected(&mut self, a: usize, b: usize, c: f64) {
        self.add_pair(a, b, c, c);
    }

    fn levels(&self, s: usize) -> Vec<Option<usize>> {
        let mut level = vec![None; self.head.len()];
        level[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > FLOW_EPS && level[v].is_none() {
                    level[v] = Some(level[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, t: usize, limit: f64, level: &[Option<usize>], next: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while next[u] < self.head[u].len() {
            let e = self.head[u][next[u]];
            let v = self.to[e];
            if self.cap[e] > FLOW_EPS && level[v] == level[u].map(|l| l + 1) {
                let pushed = self.augment(v, t, limit.min(self.cap[e]), level, next);
                if pushed > 0.0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        loop {
            let level = self.levels(s);
            if level[t].is_none() {
                return flow;
            }
            let mut next = vec![0; self.head.len()];
            loop {
                let pushed = self.augment(s, t, f64::INFINITY, &level, &mut next);
                if pushed <= 0.0 {
                    break;
                }
                flow += pushed;
            }
        }
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        self.levels(s).into_iter().map(|l| l.is_some()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lovasz::lovasz_value;
    use crate::setfn::{check_submodular_at, DEFAULT_SUBMODULARITY_CAP};
    use crate::verify::{brute_min_sets, inner_max_y, InnerMethod};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Image {
        Image::new(w, h, (0..w * h).map(|_| rng.random_range(0..=255u8)).collect()).unwrap()
    }

    fn random_y(m: usize, rho: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let set = ConstraintSet::capped_simplex(m, rho);
        set.project(&(0..m).map(|_| rng.random_range(0.0..1.2)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn weight_examples() {
        assert!((edge_weight(10.0, 10.0, (0.0, 0.0), (1.0, 0.0), 20.0, 1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(edge_weight(3.0, 3.0, (2.0, 2.0), (2.0, 2.0), 20.0, 1.0).unwrap(), 1.0);
        assert!((edge_weight(0.0, 20.0, (0.0, 0.0), (0.0, 1.0), 20.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(edge_weight(0.0, 0.0, (0.0, 0.0), (0.0, 1.0), 0.0, 1.0).is_err());
        assert!(edge_weight(0.0, 0.0, (0.0, 0.0), (0.0, 1.0), 20.0, -1.0).is_err());
    }

    #[test]
    fn value_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = random_image(4, 3, &mut rng);
        let seeds = Seeds {
            positions: vec![0, 5, 11],
            labels: vec![1, 0, 1],
        };
        let inst = make_segmentation::<f64>(&img, &seeds, &SegmentationParams::default()).unwrap();
        assert_eq!(inst.evaluate(&Subset::full(12), &[0.0; 3]).unwrap(), 0.0);

        let two = Image::new(2, 1, vec![0, 255]).unwrap();
        let none = Seeds::default();
        let inst = make_segmentation::<f64>(&two, &none, &SegmentationParams::default()).unwrap();
        let want = (-(255.0f64 * 255.0) / 800.0 - 0.5).exp();
        assert!((inst.evaluate(&Subset::from_indices([0]), &[]).unwrap() - want).abs() < 1e-18);
    }

    #[test]
    fn invalid_seeds_are_rejected() {
        let img = Image::new(2, 2, vec![0; 4]).unwrap();
        let p = SegmentationParams::default();
        let dup = Seeds {
            positions: vec![1, 1],
            labels: vec![0, 1],
        };
        assert!(matches!(make_segmentation::<f64>(&img, &dup, &p), Err(Error::InvalidSeeds(_))));
        let label = Seeds {
            positions: vec![1],
            labels: vec![2],
        };
        assert!(matches!(make_segmentation::<f64>(&img, &label, &p), Err(Error::InvalidSeeds(_))));
        let out = Seeds {
            positions: vec![4],
            labels: vec![0],
        };
        assert!(matches!(make_segmentation::<f64>(&img, &out, &p), Err(Error::InvalidSeeds(_))));
    }

    #[test]
    fn submodular_on_small_crops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_image(3, 3, &mut rng);
        let seeds = Seeds {
            positions: vec![0, 4, 8],
            labels: vec![1, 1, 0],
        };
        let inst = make_segmentation::<f64>(&img, &seeds, &SegmentationParams { rho: 2.0, ..Default::default() }).unwrap();
        for _ in 0..10 {
            let y = random_y(3, 2.0, &mut rng);
            assert!(check_submodular_at(&inst, &y, DEFAULT_SUBMODULARITY_CAP).unwrap().holds);
        }
    }

    #[test]
    fn chain_sweep_matches_direct_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = random_image(5, 4, &mut rng);
        let seeds = Seeds {
            positions: vec![3, 7, 12, 19],
            labels: vec![0, 1, 1, 0],
        };
        let obj = SegmentationObjective::<f64>::new(20, &grid_edges(&img, 20.0, 1.0).unwrap(), &seeds, 5.0).unwrap();
        for _ in 0..20 {
            let mut order: Vec<usize> = (0..20).collect();
            for i in (1..20).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let y = random_y(4, 2.5, &mut rng);
            let chain = obj.chain_values(&order, &y);
            for k in 0..=20 {
                let direct = obj.value(&Subset::from_indices(order[..k].iter().copied()), &y);
                assert!((chain[k] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_cut_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let img = random_image(3, 4, &mut rng);
            let seeds = Seeds {
                positions: vec![0, 6, 11],
                labels: vec![1, 0, 1],
            };
            let inst = make_segmentation::<f64>(&img, &seeds, &SegmentationParams { rho: 2.0, ..Default::default() }).unwrap();
            let y = random_y(3, 2.0, &mut rng);
            let (_, brute) = brute_min_sets(&inst, &y).unwrap();
            let (set, v) = (inst.set_minimizer().unwrap())(&y);
            assert!((v - brute).abs() < 1e-9, "{v} vs {brute}");
            assert!((inst.evaluate(&set, &y).unwrap() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn adversary_matches_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let img = random_image(3, 3, &mut rng);
        let seeds = Seeds {
            positions: vec![0, 4, 8],
            labels: vec![1, 0, 1],
        };
        for rho in [0.0, 0.5, 1.0, 1.7, 3.0] {
            let inst = make_segmentation::<f64>(&img, &seeds, &SegmentationParams { rho, ..Default::default() }).unwrap();
            for _ in 0..4 {
                let x: Vec<f64> = (0..9).map(|_| rng.random()).collect();
                let analytic = inner_max_y(&inst, &x, InnerMethod::Analytic).unwrap();
                let greedy = inner_max_y(&inst, &x, InnerMethod::GreedyBudget).unwrap();
                let res = 0.02;
                let grid = inner_max_y(&inst, &x, InnerMethod::Grid { resolution: res }).unwrap();
                let slope = 5.0 * 3.0;
                assert!((analytic.value - greedy.value).abs() < 1e-9);
                assert!(analytic.value >= grid.value - 1e-9);
                assert!(analytic.value - grid.value <= 2.0 * res * slope);
                assert!((lovasz_value(&inst, &x, &analytic.y).unwrap() - analytic.value).abs() < 1e-9);
            }
        }
    }
}
