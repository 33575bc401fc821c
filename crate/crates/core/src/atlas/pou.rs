//! Smooth partitions of unity subordinate to an atlas.
//!
//! Each chart carries the product bump `b(y) = Π_c β(|y_c| / s)` with
//! support in the max-norm ball of radius `s` (at most half the chart radius)
//! and `b ≡ 1` on the ball of radius `e⁻¹ s`. With `ψ̃_j` the bump of chart
//! `j` read through the transition into chart `j` (zero where the transition
//! is undefined), the partition is `ψ_i = ψ̃_i / Σ_j ψ̃_j`.

use super::{AtlasManifold, MapJet};
use crate::error::{Error, Result};

/// Inner plateau of the profile: `β(t) = 1` for `t ≤ e⁻¹`.
pub const PLATEAU: f64 = 0.367_879_441_171_442_33;

/// Smallest admissible `Σ_j ψ̃_j`.
pub const COVERAGE_FLOOR: f64 = 1e-12;

fn f_exp(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = (-1.0 / u).exp();
    let u2 = u * u;
    (f, f / u2, f * (1.0 / (u2 * u2) - 2.0 / (u2 * u)))
}

/// Profile `β` on `[0, ∞)` with its first two derivatives: 1 on `[0, e⁻¹]`,
/// 0 on `[1, ∞)`, smooth monotone transition in between.
pub fn profile(t: f64) -> (f64, f64, f64) {
    if t <= PLATEAU {
        return (1.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let scale = 1.0 / (1.0 - PLATEAU);
    let u = (1.0 - t) * scale;
    let (f, f1, f2) = f_exp(u);
    let (g, g1m, g2) = f_exp(1.0 - u);
    // G(u) = F(1 − u): G' = −F'(1 − u), G'' = F''(1 − u)
    let g1 = -g1m;
    let den = f + g;
    let num = f1 * g - f * g1;
    let num1 = f2 * g - f * g2;
    let den1 = f1 + g1;
    let sigma = f / den;
    let sigma1 = num / (den * den);
    let sigma2 = num1 / (den * den) - 2.0 * num * den1 / (den * den * den);
    (sigma, -sigma1 * scale, sigma2 * scale * scale)
}

/// Value, gradient and Hessian of a bump.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl BumpJet {
    pub fn new(dim: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }
}

/// Product bump `Π_c β(|y_c| / s)` with derivatives up to `order`.
pub fn bump(y: &[f64], s: f64, order: usize, out: &mut BumpJet) {
    let d = y.len();
    let mut b = [(0.0, 0.0, 0.0); 8];
    let mut value = 1.0;
    for c in 0..d {
        let sign = if y[c] < 0.0 { -1.0 } else { 1.0 };
        let (v, v1, v2) = profile(y[c].abs() / s);
        b[c] = (v, sign * v1 / s, v2 / (s * s));
        value *= v;
    }
    out.value = value;
    if order == 0 {
        return;
    }
    let others = |skip1: usize, skip2: usize| -> f64 {
        (0..d).filter(|&c| c != skip1 && c != skip2).map(|c| b[c].0).product()
    };
    for c in 0..d {
        out.grad[c] = b[c].1 * others(c, c);
    }
    if order == 1 {
        return;
    }
    for c in 0..d {
        for e in 0..d {
            out.hess[c * d + e] = if c == e {
                b[c].2 * others(c, c)
            } else {
                b[c].1 * b[e].1 * others(c, e)
            };
        }
    }
}

/// Partition of unity of an atlas.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    manifold: AtlasManifold,
}

/// Reusable per-point evaluation state: raw bumps, normalized weights and
/// derivatives, and the transition jets used to compute them.
#[derive(Clone, Debug)]
pub struct PouSample {
    pub dim: usize,
    pub charts: usize,
    /// Charts `i` with `ψ̃_i > 0`, in increasing order.
    pub active: Vec<usize>,
    /// `ψ̃_i`, and its gradient/Hessian in target-chart coordinates.
    pub raw: Vec<f64>,
    pub raw_grad: Vec<f64>,
    pub raw_hess: Vec<f64>,
    /// `ψ_i` and its gradient/Hessian in target-chart coordinates.
    pub weight: Vec<f64>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    /// Transition jets `target → i`, valid for active charts.
    pub jets: Vec<MapJet>,
    bump: BumpJet,
}

impl PouSample {
    pub fn new(dim: usize, charts: usize) -> Self {
        Self {
            dim,
            charts,
            active: Vec::with_capacity(charts),
            raw: vec![0.0; charts],
            raw_grad: vec![0.0; charts * dim],
            raw_hess: vec![0.0; charts * dim * dim],
            weight: vec![0.0; charts],
            grad: vec![0.0; charts * dim],
            hess: vec![0.0; charts * dim * dim],
            jets: (0..charts).map(|_| MapJet::new(dim)).collect(),
            bump: BumpJet::new(dim),
        }
    }

    pub fn weight_grad(&self, i: usize) -> &[f64] {
        &self.grad[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight_hess(&self, i: usize) -> &[f64] {
        &self.hess[i * self.dim * self.dim..(i + 1) * self.dim * self.dim]
    }
}

impl PartitionOfUnity {
    pub fn new(manifold: &AtlasManifold) -> Self {
        Self {
            manifold: manifold.clone(),
        }
    }

    pub fn manifold(&self) -> &AtlasManifold {
        &self.manifold
    }

    pub fn workspace(&self) -> PouSample {
        PouSample::new(self.manifold.dim(), self.manifold.chart_count())
    }

    /// Evaluate all weights at `x` in chart `target`, with derivatives up to
    /// `order ≤ 2`; active transition jets are computed to at least
    /// `jet_order`.
    pub fn evaluate(&self, target: usize, x: &[f64], order: usize, jet_order: usize, ws: &mut PouSample) -> Result<()> {
        let m = &self.manifold;
        let d = m.dim();
        let jet_order = jet_order.max(order);
        ws.active.clear();
        let mut total = 0.0;
        for i in 0..m.chart_count() {
            ws.raw[i] = 0.0;
            let chart = m.chart(i);
            // cheap value-only probe before the derivative work
            if !m.map_point(target, i, x, 0, &mut ws.jets[i]) || !chart.in_support(&ws.jets[i].value) {
                continue;
            }
            if jet_order > 0 && !m.map_point(target, i, x, jet_order, &mut ws.jets[i]) {
                continue;
            }
            bump(&ws.jets[i].value, chart.support, order, &mut ws.bump);
            if ws.bump.value == 0.0 {
                continue;
            }
            ws.raw[i] = ws.bump.value;
            total += ws.bump.value;
            ws.active.push(i);
            if order == 0 {
                continue;
            }
            let jet = &ws.jets[i];
            let rg = &mut ws.raw_grad[i * d..(i + 1) * d];
            for mu in 0..d {
                rg[mu] = (0..d).map(|l| ws.bump.grad[l] * jet.jac[l * d + mu]).sum();
            }
            if order == 1 {
                continue;
            }
            let rh = &mut ws.raw_hess[i * d * d..(i + 1) * d * d];
            for mu in 0..d {
                for nu in 0..d {
                    let mut v = 0.0;
                    for l in 0..d {
                        v += ws.bump.grad[l] * jet.hess[(l * d + mu) * d + nu];
                        for k in 0..d {
                            v += ws.bump.hess[l * d + k] * jet.jac[l * d + mu] * jet.jac[k * d + nu];
                        }
                    }
                    rh[mu * d + nu] = v;
                }
            }
        }
        if !(total >= COVERAGE_FLOOR) {
            return Err(Error::Coverage {
                chart: target,
                point: x.to_vec(),
                denominator: total,
            });
        }
        let inv = 1.0 / total;
        for w in ws.weight.iter_mut() {
            *w = 0.0;
        }
        for &i in &ws.active {
            ws.weight[i] = ws.raw[i] / total;
        }
        if order == 0 {
            return Ok(());
        }
        let mut sg = [0.0; 8];
        let mut sh = [0.0; 64];
        for &i in &ws.active {
            for mu in 0..d {
                sg[mu] += ws.raw_grad[i * d + mu];
            }
            if order >= 2 {
                for k in 0..d * d {
                    sh[k] += ws.raw_hess[i * d * d + k];
                }
            }
        }
        ws.grad.iter_mut().for_each(|v| *v = 0.0);
        if order >= 2 {
            ws.hess.iter_mut().for_each(|v| *v = 0.0);
        }
        for &i in &ws.active {
            let f = ws.raw[i];
            for mu in 0..d {
                ws.grad[i * d + mu] = (ws.raw_grad[i * d + mu] - f * sg[mu] * inv) * inv;
            }
            if order >= 2 {
                for mu in 0..d {
                    for nu in 0..d {
                        let fm = ws.raw_grad[i * d + mu];
                        let fn_ = ws.raw_grad[i * d + nu];
                        ws.hess[(i * d + mu) * d + nu] = ws.raw_hess[(i * d + mu) * d + nu] * inv
                            - (fm * sg[nu] + sg[mu] * fn_) * inv * inv
                            - f * sh[mu * d + nu] * inv * inv
                            + 2.0 * f * sg[mu] * sg[nu] * inv * inv * inv;
                    }
                }
            }
        }
        Ok(())
    }

    /// `ψ_i` at `x` in chart `target`.
    pub fn weight(&self, target: usize, x: &[f64], i: usize) -> Result<f64> {
        let mut ws = self.workspace();
        self.evaluate(target, x, 0, 0, &mut ws)?;
        Ok(ws.weight[i])
    }

    /// Largest `|Σ_i ψ_i − 1|` and smallest `Σ_i ψ̃_i` over the given points
    /// of chart `target`.
    pub fn check_sum(&self, target: usize, points: &[Vec<f64>]) -> Result<(f64, f64)> {
        let mut ws = self.workspace();
        let mut worst = 0.0f64;
        let mut floor = f64::INFINITY;
        for x in points {
            self.evaluate(target, x, 0, 0, &mut ws)?;
            let s: f64 = ws.weight.iter().sum();
            worst = worst.max((s - 1.0).abs());
            floor = floor.min(ws.raw.iter().sum());
        }
        Ok((worst, floor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{builtin_manifold, random_points, Chart};
    use crate::atlas::builtins::SphereMetric;
    use std::sync::Arc;

    #[test]
    fn profile_shape_and_derivatives() {
        assert_eq!(profile(0.0), (1.0, 0.0, 0.0));
        assert_eq!(profile(0.3), (1.0, 0.0, 0.0));
        assert_eq!(profile(1.0), (0.0, 0.0, 0.0));
        assert_eq!(profile(2.0), (0.0, 0.0, 0.0));
        let h = 1e-6;
        let mut previous = 1.0;
        for k in 1..200 {
            let t = PLATEAU + (1.0 - PLATEAU) * k as f64 / 200.0;
            let (v, v1, v2) = profile(t);
            assert!(v <= previous && (0.0..=1.0).contains(&v));
            previous = v;
            let fd1 = (profile(t + h).0 - profile(t - h).0) / (2.0 * h);
            let fd2 = (profile(t + h).1 - profile(t - h).1) / (2.0 * h);
            assert!((fd1 - v1).abs() < 1e-6 * (1.0 + v1.abs()), "t={t}");
            assert!((fd2 - v2).abs() < 1e-4 * (1.0 + v2.abs()), "t={t}");
        }
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let s = 1.25;
        let h = 1e-6;
        let mut jet = BumpJet::new(2);
        let mut p = BumpJet::new(2);
        let mut q = BumpJet::new(2);
        for y in random_points(2, 1.3, 50, 2) {
            bump(&y, s, 2, &mut jet);
            for c in 0..2 {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[c] += h;
                ym[c] -= h;
                bump(&yp, s, 1, &mut p);
                bump(&ym, s, 1, &mut q);
                assert!(((p.value - q.value) / (2.0 * h) - jet.grad[c]).abs() < 1e-6);
                for e in 0..2 {
                    let fd = (p.grad[e] - q.grad[e]) / (2.0 * h);
                    assert!((fd - jet.hess[e * 2 + c]).abs() < 1e-4 * (1.0 + fd.abs()));
                }
            }
        }
    }

    #[test]
    fn single_chart_partition_is_one() {
        let metric = Arc::new(SphereMetric { dim: 2, eps: 0.0 });
        let chart = Chart::new("only", 2.0, 1.0, metric).unwrap();
        let m = AtlasManifold::new("disc", vec![chart], vec![vec![None]]).unwrap();
        let pou = PartitionOfUnity::new(&m);
        let mut ws = pou.workspace();
        for x in random_points(2, 0.99, 100, 4) {
            pou.evaluate(0, &x, 2, 2, &mut ws).unwrap();
            assert_eq!(ws.weight[0], 1.0);
            assert!(ws.grad.iter().all(|v| v.abs() < 1e-12));
        }
        // outside the support nothing covers the point
        assert!(matches!(pou.evaluate(0, &[1.5, 0.0], 0, 0, &mut ws), Err(Error::Coverage { .. })));
    }

    #[test]
    fn sphere_partition_sums_to_one() {
        let m = builtin_manifold("s2").unwrap();
        let pou = PartitionOfUnity::new(&m);
        for target in 0..2 {
            let pts = random_points(2, 2.4, 10_000, 7 + target as u64);
            let (worst, floor) = pou.check_sum(target, &pts).unwrap();
            assert!(worst <= 1e-10 && floor >= COVERAGE_FLOOR);
        }
    }

    #[test]
    fn supports_lie_in_half_radius_balls() {
        for name in ["s2", "t2_flat", "cp2"] {
            let m = builtin_manifold(name).unwrap();
            let pou = PartitionOfUnity::new(&m);
            let mut ws = pou.workspace();
            let chart = m.chart(0);
            let mut jet = MapJet::new(m.dim());
            for x in random_points(m.dim(), chart.radius * 0.99, 2000, 9) {
                if pou.evaluate(0, &x, 0, 0, &mut ws).is_err() {
                    continue;
                }
                if x.iter().any(|v| v.abs() >= chart.support) {
                    assert_eq!(ws.weight[0], 0.0);
                }
                for &i in &ws.active {
                    assert!(m.map_point(0, i, &x, 0, &mut jet));
                    assert!(jet.value.iter().all(|v| v.abs() < m.chart(i).support));
                    assert!((0.0..=1.0).contains(&ws.weight[i]));
                }
            }
        }
    }

    #[test]
    fn weight_derivatives_match_finite_differences() {
        for name in ["s2", "cp2", "t2_perturbed(0.2)"] {
            let m = builtin_manifold(name).unwrap();
            let pou = PartitionOfUnity::new(&m);
            let d = m.dim();
            let (mut ws, mut wp, mut wm) = (pou.workspace(), pou.workspace(), pou.workspace());
            let h = 1e-6;
            for x in random_points(d, m.chart(0).support * 0.95, 30, 12) {
                pou.evaluate(0, &x, 2, 2, &mut ws).unwrap();
                for mu in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[mu] += h;
                    xm[mu] -= h;
                    pou.evaluate(0, &xp, 1, 1, &mut wp).unwrap();
                    pou.evaluate(0, &xm, 1, 1, &mut wm).unwrap();
                    for i in 0..m.chart_count() {
                        let fd = (wp.weight[i] - wm.weight[i]) / (2.0 * h);
                        assert!((fd - ws.grad[i * d + mu]).abs() < 1e-6 * (1.0 + fd.abs()), "{name}");
                        for nu in 0..d {
                            let fd2 = (wp.grad[i * d + nu] - wm.grad[i * d + nu]) / (2.0 * h);
                            let exact = ws.hess[(i * d + nu) * d + mu];
                            assert!((fd2 - exact).abs() < 1e-4 * (1.0 + fd2.abs()), "{name}: {fd2} {exact}");
                        }
                    }
                }
            }
        }
    }
}
