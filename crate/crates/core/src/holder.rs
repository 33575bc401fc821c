//! Hölder and Sobolev norms of grid-sampled functions, harmonic chart norms
//! and empirical checks of the standard Hölder estimates.
//!
//! Functions are sampled on a uniform lattice filling a max-norm ball
//! `{x : |x − c|_∞ ≤ r}`; derivatives are central finite differences of
//! second order with one-sided second-order stencils at the boundary.

use std::collections::{BinaryHeap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Pair budget of the exhaustive Hölder quotient search.
pub const PAIR_CAP: usize = 2_000_000;

const PAIR_SEED: u64 = 0x5eed_0f_4a17;

/// Uniform lattice on a max-norm ball: `n` nodes per axis at
/// `center_j − radius + i·step`, `step = 2·radius/(n − 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub center: Vec<f64>,
    pub radius: f64,
    pub points_per_axis: usize,
}

impl Lattice {
    pub fn new(center: Vec<f64>, radius: f64, points_per_axis: usize) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::Dimension("lattice of dimension 0".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("lattice radius {radius}")));
        }
        if points_per_axis < 2 {
            return Err(Error::GridTooSmall(format!(
                "{points_per_axis} points per axis; at least 2 needed"
            )));
        }
        Ok(Self {
            center,
            radius,
            points_per_axis,
        })
    }

    /// Centered at the origin.
    pub fn centered(dim: usize, radius: f64, points_per_axis: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], radius, points_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn step(&self) -> f64 {
        2.0 * self.radius / (self.points_per_axis - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dim() as u32)
    }

    /// Per-axis lattice indices of a flat node index (row-major).
    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        let n = self.points_per_axis;
        for slot in out.iter_mut().rev() {
            *slot = flat % n;
            flat /= n;
        }
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.center[axis] - self.radius + i as f64 * self.step()
    }

    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.dim()];
        self.multi_index(flat, &mut idx);
        for (a, slot) in out.iter_mut().enumerate() {
            *slot = self.coordinate(a, idx[a]);
        }
    }
}

/// `f : B(c, r) → R^N` sampled on a [`Lattice`]; values are node-major,
/// `values[node * N + component]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    lattice: Lattice,
    codomain_dim: usize,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn from_values(lattice: Lattice, codomain_dim: usize, values: Vec<f64>) -> Result<Self> {
        if codomain_dim == 0 {
            return Err(Error::Dimension("codomain dimension 0".into()));
        }
        if values.len() != lattice.node_count() * codomain_dim {
            return Err(Error::Dimension(format!(
                "{} values for {} nodes of codomain dimension {codomain_dim}",
                values.len(),
                lattice.node_count()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite sample at flat index {bad}")));
        }
        Ok(Self {
            lattice,
            codomain_dim,
            values,
        })
    }

    /// Sample `f(x, out)` at every lattice node.
    pub fn sample<F>(lattice: Lattice, codomain_dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let nodes = lattice.node_count();
        let mut values = vec![0.0; nodes * codomain_dim];
        let mut x = vec![0.0; lattice.dim()];
        for node in 0..nodes {
            lattice.point(node, &mut x);
            f(&x, &mut values[node * codomain_dim..(node + 1) * codomain_dim])?;
        }
        Self::from_values(lattice, codomain_dim, values)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn radius(&self) -> f64 {
        self.lattice.radius
    }

    pub fn step(&self) -> f64 {
        self.lattice.step()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_values(&self, node: usize) -> &[f64] {
        &self.values[node * self.codomain_dim..(node + 1) * self.codomain_dim]
    }

    /// `max |f(x)|_∞` over the samples.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn component(&self, c: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(c)
            .step_by(self.codomain_dim)
            .copied()
            .collect()
    }
}

/// Apply a first (`order == 1`) or pure second (`order == 2`) difference
/// along `axis` to a scalar lattice field.
fn difference_along(
    field: &[f64],
    n: usize,
    dim: usize,
    axis: usize,
    order: usize,
    h: f64,
) -> Vec<f64> {
    let stride = n.pow((dim - 1 - axis) as u32);
    let mut out = vec![0.0; field.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let i = (flat / stride) % n;
        let at = |k: isize| field[(flat as isize + k * stride as isize) as usize];
        let f0 = at(0);
        *slot = match order {
            1 => {
                if i == 0 {
                    (4.0 * (at(1) - f0) - (at(2) - f0)) / (2.0 * h)
                } else if i == n - 1 {
                    -(4.0 * (at(-1) - f0) - (at(-2) - f0)) / (2.0 * h)
                } else {
                    (at(1) - at(-1)) / (2.0 * h)
                }
            }
            _ => {
                if i == 0 {
                    (-5.0 * (at(1) - f0) + 4.0 * (at(2) - f0) - (at(3) - f0)) / (h * h)
                } else if i == n - 1 {
                    (-5.0 * (at(-1) - f0) + 4.0 * (at(-2) - f0) - (at(-3) - f0)) / (h * h)
                } else {
                    ((at(1) - f0) + (at(-1) - f0)) / (h * h)
                }
            }
        };
    }
    out
}

/// `∇^k f` as a sampled function with codomain `N·d^k`, laid out as
/// `component·d^k + (μ_1·d^{k−1} + … + μ_k)`.
///
/// For each axis of multiplicity `m` in the multi-index the pure second
/// difference is applied `⌊m/2⌋` times and the first difference `m mod 2`
/// times; differences of constants vanish exactly.
pub fn finite_difference_gradient(f: &SampledFunction, order: usize) -> Result<SampledFunction> {
    let d = f.dim();
    let n = f.lattice.points_per_axis;
    let h = f.step();
    let big_n = f.codomain_dim;
    if order == 0 {
        return Ok(f.clone());
    }
    let needs_second = order >= 2;
    let min_points = if needs_second { 4 } else { 3 };
    if n < min_points {
        return Err(Error::GridTooSmall(format!(
            "{n} points per axis cannot support derivatives of order {order} (need {min_points})"
        )));
    }
    let tuples = d.pow(order as u32);
    let nodes = f.lattice.node_count();
    let out_dim = big_n * tuples;
    let mut out = vec![0.0; nodes * out_dim];
    let mut cache: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
    for c in 0..big_n {
        let base = f.component(c);
        cache.clear();
        for t in 0..tuples {
            let mut multiplicity = vec![0usize; d];
            let mut rest = t;
            for _ in 0..order {
                multiplicity[rest % d] += 1;
                rest /= d;
            }
            let field = cache.entry(multiplicity.clone()).or_insert_with(|| {
                let mut field = base.clone();
                for (axis, &m) in multiplicity.iter().enumerate() {
                    for _ in 0..m / 2 {
                        field = difference_along(&field, n, d, axis, 2, h);
                    }
                    if m % 2 == 1 {
                        field = difference_along(&field, n, d, axis, 1, h);
                    }
                }
                field
            });
            for (node, v) in field.iter().enumerate() {
                out[node * out_dim + c * tuples + t] = *v;
            }
        }
    }
    SampledFunction::from_values(f.lattice.clone(), out_dim, out)
}

/// Hölder quotient `sup_{x≠y} |f(x) − f(y)|_∞ / |x − y|_∞^α` over sample
/// pairs; `α = 0` gives 0 by convention.
///
/// All pairs are visited when their number is at most `pair_cap`; beyond
/// that `pair_cap` pairs are drawn with a fixed seed.
pub fn holder_seminorm_with_cap(f: &SampledFunction, alpha: f64, pair_cap: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("Hölder exponent {alpha} not in [0, 1]")));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let lat = &f.lattice;
    let nodes = lat.node_count();
    let d = lat.dim();
    let h = lat.step();
    let big_n = f.codomain_dim;
    let idx: Vec<usize> = {
        let mut all = vec![0usize; nodes * d];
        for node in 0..nodes {
            lat.multi_index(node, &mut all[node * d..(node + 1) * d]);
        }
        all
    };
    let quotient = |a: usize, b: usize| -> f64 {
        let mut steps = 0usize;
        for k in 0..d {
            steps = steps.max(idx[a * d + k].abs_diff(idx[b * d + k]));
        }
        let fa = &f.values[a * big_n..(a + 1) * big_n];
        let fb = &f.values[b * big_n..(b + 1) * big_n];
        let diff = fa
            .iter()
            .zip(fb)
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        if diff == 0.0 {
            0.0
        } else {
            diff / (steps as f64 * h).powf(alpha)
        }
    };
    let pairs = nodes * nodes.saturating_sub(1) / 2;
    let mut best = 0.0f64;
    if pairs <= pair_cap {
        for a in 0..nodes {
            for b in a + 1..nodes {
                best = best.max(quotient(a, b));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED);
        for _ in 0..pair_cap {
            let a = rng.gen_range(0..nodes);
            let mut b = rng.gen_range(0..nodes - 1);
            if b >= a {
                b += 1;
            }
            best = best.max(quotient(a, b));
        }
    }
    Ok(best)
}

pub fn holder_seminorm(f: &SampledFunction, alpha: f64) -> Result<f64> {
    holder_seminorm_with_cap(f, alpha, PAIR_CAP)
}

/// `Σ_{k=0}^m (max|∇^k f| + ‖∇^k f‖_α)`; `+∞` when a derivative cannot be
/// formed on the grid.
pub fn holder_norm(f: &SampledFunction, m: usize, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("Hölder exponent {alpha} not in [0, 1]")));
    }
    let mut total = 0.0;
    for k in 0..=m {
        let grad = match finite_difference_gradient(f, k) {
            Ok(g) => g,
            Err(Error::GridTooSmall(_)) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        };
        total += grad.sup_norm() + holder_seminorm(&grad, alpha)?;
    }
    Ok(total)
}

/// `r^{2 − d/p} · ‖∇^k g‖_{L^p}` with the pointwise Frobenius norm and
/// trapezoidal node weights.
pub fn sobolev_seminorm(g: &SampledFunction, p: f64, r: f64, k: usize) -> Result<f64> {
    let d = g.dim();
    if !(p.is_finite() && p >= d as f64) {
        return Err(Error::InvalidParameter(format!(
            "Sobolev exponent p = {p} must be finite and at least the dimension {d}"
        )));
    }
    let grad = finite_difference_gradient(g, k)?;
    let lat = grad.lattice();
    let n = lat.points_per_axis;
    let h = lat.step();
    let mut idx = vec![0usize; d];
    let mut sum = 0.0;
    for node in 0..lat.node_count() {
        lat.multi_index(node, &mut idx);
        let weight: f64 = idx
            .iter()
            .map(|&i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .product();
        let norm2: f64 = grad.node_values(node).iter().map(|v| v * v).sum();
        sum += weight * norm2.powf(0.5 * p);
    }
    Ok(r.powf(2.0 - d as f64 / p) * sum.powf(1.0 / p))
}

fn metric_at(metric: &SampledFunction, node: usize) -> DMatrix<f64> {
    let d = metric.dim();
    DMatrix::from_row_slice(d, d, metric.node_values(node))
}

fn check_metric_shape(metric: &SampledFunction) -> Result<usize> {
    let d = metric.dim();
    if metric.codomain_dim() != d * d {
        return Err(Error::Dimension(format!(
            "metric samples have {} components, expected {}",
            metric.codomain_dim(),
            d * d
        )));
    }
    Ok(d)
}

/// `max_j max_x |Σ_k ∂_k(√det g · g^{kj})|`, the failure of the coordinate
/// functions to be harmonic.
pub fn harmonic_residual(metric: &SampledFunction) -> Result<f64> {
    let d = check_metric_shape(metric)?;
    let lat = metric.lattice().clone();
    let nodes = lat.node_count();
    let mut flux = vec![0.0; nodes * d * d];
    let mut x = vec![0.0; d];
    for node in 0..nodes {
        let g = metric_at(metric, node);
        let det = g.determinant();
        let inv = g.try_inverse();
        let (inv, det) = match inv {
            Some(inv) if det > 0.0 && det.is_finite() => (inv, det),
            _ => {
                lat.point(node, &mut x);
                return Err(Error::SingularMetric { point: x });
            }
        };
        let root = det.sqrt();
        for k in 0..d {
            for j in 0..d {
                flux[node * d * d + k * d + j] = root * inv[(k, j)];
            }
        }
    }
    let field = SampledFunction::from_values(lat, d * d, flux)?;
    let div = finite_difference_gradient(&field, 1)?;
    let mut worst = 0.0f64;
    for node in 0..nodes {
        let v = div.node_values(node);
        for j in 0..d {
            let s: f64 = (0..d).map(|k| v[(k * d + j) * d + k]).sum();
            worst = worst.max(s.abs());
        }
    }
    Ok(worst)
}

/// Component conditions of the harmonic chart norm on the scale of `r`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ChartNormReport {
    /// Smallest `Q` with `e^{−2Q} δ ≤ g ≤ e^{2Q} δ` at every sample.
    pub q_metric_bound: f64,
    /// `r^{k+α} ‖∇^k g‖_α` for `k = 0..=m`.
    pub q_holder: Vec<f64>,
    /// `max |∇^k g|` for `k = 0..=m`, reported alongside but not scaled.
    pub sup_norms: Vec<f64>,
    pub harmonic_residual: f64,
    /// Maximum of `q_metric_bound` and the `q_holder` entries.
    pub q_total: f64,
    pub alpha: f64,
    pub m: usize,
    pub r: f64,
}

/// Evaluate the chart-norm conditions of a sampled metric `g_{kl}` on the
/// scale of its domain radius.
pub fn chart_norm_report(metric: &SampledFunction, m: usize, alpha: f64) -> Result<ChartNormReport> {
    let d = check_metric_shape(metric)?;
    let r = metric.radius();
    let mut q_metric_bound = 0.0f64;
    let mut x = vec![0.0; d];
    for node in 0..metric.lattice().node_count() {
        let g = metric_at(metric, node);
        let eig = SymmetricEigen::new(g);
        for &lambda in eig.eigenvalues.iter() {
            if !(lambda > 0.0) {
                metric.lattice().point(node, &mut x);
                return Err(Error::NotPositiveDefinite { point: x });
            }
            q_metric_bound = q_metric_bound.max(0.5 * lambda.ln().abs());
        }
    }
    let mut q_holder = Vec::with_capacity(m + 1);
    let mut sup_norms = Vec::with_capacity(m + 1);
    for k in 0..=m {
        match finite_difference_gradient(metric, k) {
            Ok(grad) => {
                q_holder.push(r.powf(k as f64 + alpha) * holder_seminorm(&grad, alpha)?);
                sup_norms.push(grad.sup_norm());
            }
            Err(Error::GridTooSmall(_)) => {
                q_holder.push(f64::INFINITY);
                sup_norms.push(f64::INFINITY);
            }
            Err(e) => return Err(e),
        }
    }
    let harmonic_residual = harmonic_residual(metric)?;
    let q_total = q_holder.iter().fold(q_metric_bound, |a, &b| a.max(b));
    Ok(ChartNormReport {
        q_metric_bound,
        q_holder,
        sup_norms,
        harmonic_residual,
        q_total,
        alpha,
        m,
        r,
    })
}

/// Worst relative overestimate of Euclidean length by shortest paths in the
/// lattice graph whose edges join nodes differing by at most one step per
/// axis.
pub fn graph_metric_slack(dim: usize) -> f64 {
    // For a direction with sorted absolute components a_1 ≥ … ≥ a_d the
    // shortest lattice path has length Σ_i (a_i − a_{i+1}) √i.
    if dim <= 1 {
        return 0.0;
    }
    let steps = 24usize;
    let mut worst = 1.0f64;
    let mut a = vec![0usize; dim];
    fn visit(a: &mut Vec<usize>, pos: usize, upper: usize, steps: usize, worst: &mut f64) {
        if pos == a.len() {
            let v: Vec<f64> = a.iter().map(|&k| k as f64 / steps as f64).collect();
            let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            let mut path = 0.0;
            for i in 0..v.len() {
                let next = v.get(i + 1).copied().unwrap_or(0.0);
                path += (v[i] - next) * ((i + 1) as f64).sqrt();
            }
            *worst = worst.max(path / norm);
            return;
        }
        for k in 0..=upper {
            a[pos] = k;
            visit(a, pos + 1, k, steps, worst);
        }
    }
    a[0] = steps;
    visit(&mut a, 1, steps, steps, &mut worst);
    worst - 1.0
}

/// Outcome of checking `e^{−Q} min{|x−y|, 2r−|x|} ≤ d_g ≤ e^Q |x−y|`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DistanceComparisonReport {
    pub q: f64,
    pub pairs_checked: usize,
    /// `max(0, 1 − d_g / lower)` over pairs.
    pub max_lower_violation: f64,
    /// `max(0, d_g / upper − 1)` over pairs.
    pub max_upper_violation: f64,
    pub max_violation: f64,
    /// Approximation allowance of the lattice graph metric.
    pub slack: f64,
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Single-source shortest paths on a weighted adjacency list.
pub fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Frontier(0.0, source));
    while let Some(Frontier(du, u)) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &adjacency[u] {
            let dv = du + w;
            if dv < dist[v] {
                dist[v] = dv;
                heap.push(Frontier(dv, v));
            }
        }
    }
    dist
}

/// Lattice graph of a sampled metric: each node joined to its `3^d − 1`
/// neighbours, edge length the average of `|Δ|_g` at both endpoints.
pub fn metric_graph(metric: &SampledFunction) -> Result<Vec<Vec<(usize, f64)>>> {
    let d = check_metric_shape(metric)?;
    let lat = metric.lattice();
    let n = lat.points_per_axis as isize;
    let h = lat.step();
    let nodes = lat.node_count();
    let offsets: Vec<Vec<isize>> = (0..3usize.pow(d as u32))
        .map(|t| {
            let mut o = vec![0isize; d];
            let mut rest = t;
            for slot in o.iter_mut() {
                *slot = (rest % 3) as isize - 1;
                rest /= 3;
            }
            o
        })
        .filter(|o| o.iter().any(|&v| v != 0))
        .collect();
    let length = |node: usize, delta: &[f64]| -> f64 {
        let g = metric.node_values(node);
        let mut s = 0.0;
        for k in 0..d {
            for l in 0..d {
                s += g[k * d + l] * delta[k] * delta[l];
            }
        }
        s.max(0.0).sqrt()
    };
    let mut adjacency = vec![Vec::with_capacity(offsets.len()); nodes];
    let mut idx = vec![0usize; d];
    let mut delta = vec![0.0; d];
    for (node, edges) in adjacency.iter_mut().enumerate() {
        lat.multi_index(node, &mut idx);
        'offsets: for o in &offsets {
            let mut target = 0isize;
            for k in 0..d {
                let j = idx[k] as isize + o[k];
                if j < 0 || j >= n {
                    continue 'offsets;
                }
                target = target * n + j;
                delta[k] = o[k] as f64 * h;
            }
            let t = target as usize;
            edges.push((t, 0.5 * (length(node, &delta) + length(t, &delta))));
        }
    }
    Ok(adjacency)
}

/// Compare graph distances of a sampled chart metric with the bounds
/// implied by a metric bound `Q`, from up to `sources` evenly spread source
/// nodes to every node.
pub fn verify_distance_comparison(
    metric: &SampledFunction,
    q: f64,
    sources: usize,
) -> Result<DistanceComparisonReport> {
    let d = check_metric_shape(metric)?;
    let lat = metric.lattice();
    let nodes = lat.node_count();
    let adjacency = metric_graph(metric)?;
    let r = lat.radius;
    let sources = sources.clamp(1, nodes);
    let stride = (nodes / sources).max(1);
    let coords: Vec<f64> = {
        let mut all = vec![0.0; nodes * d];
        for node in 0..nodes {
            lat.point(node, &mut all[node * d..(node + 1) * d]);
        }
        all
    };
    let mut report = DistanceComparisonReport {
        q,
        pairs_checked: 0,
        max_lower_violation: 0.0,
        max_upper_violation: 0.0,
        max_violation: 0.0,
        slack: graph_metric_slack(d),
    };
    for s in (0..nodes).step_by(stride).take(sources) {
        let dist = dijkstra(&adjacency, s);
        let xs = &coords[s * d..(s + 1) * d];
        let from_center: f64 = xs
            .iter()
            .zip(&lat.center)
            .map(|(a, c)| (a - c).powi(2))
            .sum::<f64>()
            .sqrt();
        for t in 0..nodes {
            if t == s {
                continue;
            }
            let xt = &coords[t * d..(t + 1) * d];
            let euclid = xs.iter().zip(xt).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let lower = (-q).exp() * euclid.min(2.0 * r - from_center);
            let upper = q.exp() * euclid;
            if lower > 0.0 {
                report.max_lower_violation = report.max_lower_violation.max(1.0 - dist[t] / lower);
            }
            report.max_upper_violation = report.max_upper_violation.max(dist[t] / upper - 1.0);
            report.pairs_checked += 1;
        }
    }
    report.max_violation = report.max_lower_violation.max(report.max_upper_violation);
    Ok(report)
}

/// Which Hölder estimate to calibrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Product,
    Reciprocal,
    Composition,
    DifferenceComposition,
    Inverse,
}

impl EstimateKind {
    pub const ALL: [EstimateKind; 5] = [
        EstimateKind::Product,
        EstimateKind::Reciprocal,
        EstimateKind::Composition,
        EstimateKind::DifferenceComposition,
        EstimateKind::Inverse,
    ];
}

/// Random smooth test functions on the unit square.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleFamily {
    pub size: usize,
    pub seed: u64,
    pub points_per_axis: usize,
    pub m: usize,
    pub alpha: f64,
}

impl Default for SampleFamily {
    fn default() -> Self {
        Self {
            size: 100,
            seed: 1,
            points_per_axis: 17,
            m: 1,
            alpha: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CalibrationReport {
    pub kind: EstimateKind,
    /// Largest observed `left side / right side without the constant`.
    pub max_ratio: f64,
    pub evaluated: usize,
    /// Samples whose right side vanished or was not finite.
    pub skipped: usize,
}

/// Bivariate polynomial of total degree ≤ 3.
#[derive(Clone, Debug)]
pub struct Cubic {
    coeffs: [f64; 10],
}

const CUBIC_POWERS: [(i32, i32); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

impl Cubic {
    pub fn random(rng: &mut ChaCha8Rng, scale: f64) -> Self {
        let mut coeffs = [0.0; 10];
        for c in coeffs.iter_mut() {
            *c = scale * rng.gen_range(-1.0..1.0);
        }
        Self { coeffs }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(CUBIC_POWERS)
            .map(|(c, (a, b))| c * x.powi(a) * y.powi(b))
            .sum()
    }
}

fn unit_square(points: usize) -> Result<Lattice> {
    Lattice::new(vec![0.5, 0.5], 0.5, points)
}

/// Smallest lattice (same resolution) containing the given points.
fn bounding_lattice(points: &[f64], dim: usize, resolution: usize) -> Result<Lattice> {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points.chunks(dim) {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let radius = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| 0.5 * (b - a))
        .fold(1e-3f64, f64::max);
    Lattice::new(center, radius, resolution)
}

type VecFn<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

fn sample_fn(lattice: &Lattice, codomain: usize, f: VecFn) -> Result<SampledFunction> {
    SampledFunction::sample(lattice.clone(), codomain, |x, out| {
        out.copy_from_slice(&f(x));
        Ok(())
    })
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    (rhs > 0.0 && rhs.is_finite() && lhs.is_finite()).then(|| lhs / rhs)
}

/// `‖fg‖ / (‖f‖‖g‖)` for scalar functions on `lattice`.
pub fn product_ratio(lattice: &Lattice, f: VecFn, g: VecFn, m: usize, alpha: f64) -> Result<Option<f64>> {
    let fs = sample_fn(lattice, 1, f)?;
    let gs = sample_fn(lattice, 1, g)?;
    let fg = sample_fn(lattice, 1, &|x| vec![f(x)[0] * g(x)[0]])?;
    Ok(ratio(
        holder_norm(&fg, m, alpha)?,
        holder_norm(&fs, m, alpha)? * holder_norm(&gs, m, alpha)?,
    ))
}

/// `‖A^{-1}‖ / ‖A‖` for a `k×k`-matrix valued function.
pub fn reciprocal_ratio(lattice: &Lattice, a: VecFn, k: usize, m: usize, alpha: f64) -> Result<Option<f64>> {
    let a_s = sample_fn(lattice, k * k, a)?;
    let inv = sample_fn(lattice, k * k, &|x| {
        DMatrix::from_row_slice(k, k, &a(x))
            .try_inverse()
            .map(|m| m.transpose().as_slice().to_vec())
            .unwrap_or_else(|| vec![f64::NAN; k * k])
    });
    let Ok(inv) = inv else {
        return Ok(None);
    };
    Ok(ratio(holder_norm(&inv, m, alpha)?, holder_norm(&a_s, m, alpha)?))
}

/// `‖g∘f‖ / (‖g‖_O ‖f‖ + ‖g‖_{C^0,O})` where `O` is the bounding box of
/// `f(Ω)` and `g` is scalar.
pub fn composition_ratio(
    lattice: &Lattice,
    f: VecFn,
    f_dim: usize,
    g: VecFn,
    m: usize,
    alpha: f64,
) -> Result<Option<f64>> {
    let fs = sample_fn(lattice, f_dim, f)?;
    let image = bounding_lattice(fs.values(), f_dim, lattice.points_per_axis)?;
    let gs = sample_fn(&image, 1, g)?;
    let gf = sample_fn(lattice, 1, &|x| g(&f(x)))?;
    let rhs = holder_norm(&gs, m, alpha)? * holder_norm(&fs, m, alpha)? + gs.sup_norm();
    Ok(ratio(holder_norm(&gf, m, alpha)?, rhs))
}

/// `‖g∘u − g∘v‖_{C^m} / (‖g‖_O (1 + ‖u‖ + ‖v‖)(‖u−v‖_{C^0}^α + ‖u−v‖))`.
pub fn difference_composition_ratio(
    lattice: &Lattice,
    u: VecFn,
    v: VecFn,
    dim: usize,
    g: VecFn,
    m: usize,
    alpha: f64,
) -> Result<Option<f64>> {
    let us = sample_fn(lattice, dim, u)?;
    let vs = sample_fn(lattice, dim, v)?;
    let mut both = us.values().to_vec();
    both.extend_from_slice(vs.values());
    let image = bounding_lattice(&both, dim, lattice.points_per_axis)?;
    let gs = sample_fn(&image, 1, g)?;
    let diff = sample_fn(lattice, 1, &|x| vec![g(&u(x))[0] - g(&v(x))[0]])?;
    let uv = sample_fn(lattice, dim, &|x| {
        u(x).iter().zip(v(x)).map(|(a, b)| a - b).collect()
    })?;
    let rhs = holder_norm(&gs, m, alpha)?
        * (1.0 + holder_norm(&us, m, alpha)? + holder_norm(&vs, m, alpha)?)
        * (uv.sup_norm().powf(alpha) + holder_norm(&uv, m, alpha)?);
    Ok(ratio(holder_norm(&diff, m, 0.0)?, rhs))
}

/// `‖f‖ / ‖g‖_O` for a right inverse `f` of `g`, `O` the bounding box of
/// `f(Ω)`.
pub fn inverse_ratio(
    lattice: &Lattice,
    f: VecFn,
    g: VecFn,
    dim: usize,
    m: usize,
    alpha: f64,
) -> Result<Option<f64>> {
    let fs = sample_fn(lattice, dim, f)?;
    let image = bounding_lattice(fs.values(), dim, lattice.points_per_axis)?;
    let gs = sample_fn(&image, dim, g)?;
    Ok(ratio(holder_norm(&fs, m, alpha)?, holder_norm(&gs, m, alpha)?))
}

/// Largest empirical constant of one Hölder estimate over a random family
/// of cubic polynomials (and shear maps built from them) on the unit square.
pub fn calibrate_estimate(kind: EstimateKind, family: &SampleFamily) -> Result<CalibrationReport> {
    let lattice = unit_square(family.points_per_axis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(family.seed);
    let (m, alpha) = (family.m, family.alpha);
    let mut report = CalibrationReport {
        kind,
        max_ratio: 0.0,
        evaluated: 0,
        skipped: 0,
    };
    for _ in 0..family.size {
        let value = match kind {
            EstimateKind::Product => {
                let (p, q) = (Cubic::random(&mut rng, 1.0), Cubic::random(&mut rng, 1.0));
                product_ratio(
                    &lattice,
                    &|x| vec![p.eval(x[0], x[1])],
                    &|x| vec![q.eval(x[0], x[1])],
                    m,
                    alpha,
                )?
            }
            EstimateKind::Reciprocal => {
                let entries: Vec<Cubic> = (0..4).map(|_| Cubic::random(&mut rng, 0.25)).collect();
                let a = |x: &[f64]| -> Vec<f64> {
                    (0..4)
                        .map(|e| entries[e].eval(x[0], x[1]) + if e % 3 == 0 { 2.0 } else { 0.0 })
                        .collect()
                };
                reciprocal_ratio(&lattice, &a, 2, m, alpha)?
            }
            EstimateKind::Composition => {
                let (f1, f2, g) = (
                    Cubic::random(&mut rng, 1.0),
                    Cubic::random(&mut rng, 1.0),
                    Cubic::random(&mut rng, 1.0),
                );
                composition_ratio(
                    &lattice,
                    &|x| vec![f1.eval(x[0], x[1]), f2.eval(x[0], x[1])],
                    2,
                    &|y| vec![g.eval(y[0], y[1])],
                    m,
                    alpha,
                )?
            }
            EstimateKind::DifferenceComposition => {
                let u: Vec<Cubic> = (0..2).map(|_| Cubic::random(&mut rng, 1.0)).collect();
                let w: Vec<Cubic> = (0..2).map(|_| Cubic::random(&mut rng, 0.2)).collect();
                let g = Cubic::random(&mut rng, 1.0);
                difference_composition_ratio(
                    &lattice,
                    &|x| vec![u[0].eval(x[0], x[1]), u[1].eval(x[0], x[1])],
                    &|x| {
                        vec![
                            u[0].eval(x[0], x[1]) + w[0].eval(x[0], x[1]),
                            u[1].eval(x[0], x[1]) + w[1].eval(x[0], x[1]),
                        ]
                    },
                    2,
                    &|y| vec![g.eval(y[0], y[1])],
                    m,
                    alpha,
                )?
            }
            EstimateKind::Inverse => {
                // g = S₂∘S₁ with shears S₁(y) = (y₁ + p(y₂), y₂),
                // S₂(z) = (z₁, z₂ + q(z₁)); its inverse is explicit.
                let p = Cubic::random(&mut rng, 0.5);
                let q = Cubic::random(&mut rng, 0.5);
                let g = |y: &[f64]| {
                    let z1 = y[0] + p.eval(0.0, y[1]);
                    vec![z1, y[1] + q.eval(z1, 0.0)]
                };
                let f = |x: &[f64]| {
                    let w2 = x[1] - q.eval(x[0], 0.0);
                    vec![x[0] - p.eval(0.0, w2), w2]
                };
                inverse_ratio(&lattice, &f, &g, 2, m, alpha)?
            }
        };
        match value {
            Some(r) => {
                report.evaluated += 1;
                report.max_ratio = report.max_ratio.max(r);
            }
            None => report.skipped += 1,
        }
    }
    Ok(report)
}
