//! Separated nets on an atlas, built greedily in the graph metric of a
//! sample of the manifold.
//!
//! The sample consists of the nodes of a uniform lattice on every chart's
//! partition support box. Nodes of one chart are joined to their `3^d − 1`
//! lattice neighbours; a node that a transition maps into another chart's
//! support box is joined to the nearest lattice node there. Edge lengths are
//! `|Δ|_g` averaged over both endpoints (cross-chart edges use the target
//! chart's metric), so graph distances approximate `d_g` from above.

use crate::chern_weil::bounds::{net_covering_radius, net_separation};
use crate::error::{Error, Result};
use crate::holder::dijkstra;

use super::{AtlasManifold, MapJet, MetricJet};

/// Weighted graph on lattice samples of every chart.
#[derive(Clone, Debug)]
pub struct SampleGraph {
    pub dim: usize,
    pub points_per_axis: usize,
    /// `(chart, coordinates)` of every sample.
    pub samples: Vec<(usize, Vec<f64>)>,
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

fn metric_length(g: &[f64], delta: &[f64]) -> f64 {
    let d = delta.len();
    let mut s = 0.0;
    for k in 0..d {
        for l in 0..d {
            s += g[k * d + l] * delta[k] * delta[l];
        }
    }
    s.max(0.0).sqrt()
}

impl SampleGraph {
    /// Lattice of `points_per_axis` nodes per axis on each support box.
    pub fn new(manifold: &AtlasManifold, points_per_axis: usize) -> Result<Self> {
        let d = manifold.dim();
        let n = points_per_axis;
        if n < 2 {
            return Err(Error::GridTooSmall(format!("{n} points per axis")));
        }
        let per_chart = n
            .checked_pow(d as u32)
            .filter(|&c| c.saturating_mul(manifold.chart_count()) <= 1 << 22)
            .ok_or_else(|| Error::GridTooSmall(format!("{n}^{d} samples per chart is too many")))?;
        let charts = manifold.chart_count();
        let coord = |chart: usize, i: usize| {
            let s = manifold.chart(chart).support;
            -s + 2.0 * s * i as f64 / (n - 1) as f64
        };
        let mut samples = Vec::with_capacity(per_chart * charts);
        let mut metrics = Vec::with_capacity(per_chart * charts * d * d);
        let mut jet = MetricJet::new(d);
        for chart in 0..charts {
            for node in 0..per_chart {
                let mut x = vec![0.0; d];
                let mut rest = node;
                for slot in x.iter_mut().rev() {
                    *slot = coord(chart, rest % n);
                    rest /= n;
                }
                manifold.chart(chart).metric.eval(&x, 0, &mut jet)?;
                metrics.extend_from_slice(&jet.g);
                samples.push((chart, x));
            }
        }
        let offsets: Vec<Vec<isize>> = (0..3usize.pow(d as u32))
            .map(|t| {
                let mut o = vec![0isize; d];
                let mut rest = t;
                for slot in o.iter_mut().rev() {
                    *slot = (rest % 3) as isize - 1;
                    rest /= 3;
                }
                o
            })
            .filter(|o| o.iter().any(|&v| v != 0))
            .collect();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); samples.len()];
        let g_at = |sample: usize| &metrics[sample * d * d..(sample + 1) * d * d];
        let mut idx = vec![0usize; d];
        let mut delta = vec![0.0; d];
        for chart in 0..charts {
            let h = 2.0 * manifold.chart(chart).support / (n - 1) as f64;
            for node in 0..per_chart {
                let mut rest = node;
                for slot in idx.iter_mut().rev() {
                    *slot = rest % n;
                    rest /= n;
                }
                let u = chart * per_chart + node;
                'offsets: for o in &offsets {
                    let mut target = 0usize;
                    for k in 0..d {
                        let j = idx[k] as isize + o[k];
                        if j < 0 || j >= n as isize {
                            continue 'offsets;
                        }
                        target = target * n + j as usize;
                        delta[k] = o[k] as f64 * h;
                    }
                    let v = chart * per_chart + target;
                    let w = 0.5 * (metric_length(g_at(u), &delta) + metric_length(g_at(v), &delta));
                    adjacency[u].push((v, w));
                }
            }
        }
        // cross-chart identifications, added symmetrically
        let mut jet = MapJet::new(d);
        for from in 0..charts {
            for to in 0..charts {
                if from == to || manifold.transition(from, to).is_none() {
                    continue;
                }
                let target = manifold.chart(to);
                let h = 2.0 * target.support / (n - 1) as f64;
                for node in 0..per_chart {
                    let u = from * per_chart + node;
                    if !manifold.map_point(from, to, &samples[u].1, 0, &mut jet) || !target.in_support(&jet.value) {
                        continue;
                    }
                    let mut nearest = 0usize;
                    for k in 0..d {
                        let i = ((jet.value[k] + target.support) / h).round().clamp(0.0, (n - 1) as f64) as usize;
                        nearest = nearest * n + i;
                        delta[k] = jet.value[k] - coord(to, i);
                    }
                    let v = to * per_chart + nearest;
                    let w = metric_length(g_at(v), &delta);
                    adjacency[u].push((v, w));
                    adjacency[v].push((u, w));
                }
            }
        }
        Ok(Self {
            dim: d,
            points_per_axis: n,
            samples,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        dijkstra(&self.adjacency, source)
    }
}

/// A separated net as indices into the samples of a [`SampleGraph`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SeparatedNet {
    pub centers: Vec<usize>,
    pub separation: f64,
    /// Smallest graph distance between two centers.
    pub min_pairwise: f64,
    /// Largest graph distance from a sample to the net.
    pub max_gap: f64,
}

impl SeparatedNet {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Every sample lies within `radius` of some center.
    pub fn covers(&self, radius: f64) -> bool {
        self.max_gap <= radius
    }
}

/// Greedy farthest-point insertion from sample 0 until every sample is
/// closer than `separation` to the net; ties go to the lowest index.
pub fn greedy_net(graph: &SampleGraph, separation: f64) -> Result<SeparatedNet> {
    if graph.is_empty() {
        return Err(Error::InvalidParameter("separated net of an empty sample set".into()));
    }
    if !(separation > 0.0) {
        return Err(Error::InvalidParameter(format!("separation {separation}")));
    }
    let mut centers = vec![0usize];
    let mut to_net = graph.distances_from(0);
    let mut min_pairwise = f64::INFINITY;
    loop {
        let (far, gap) = to_net
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        if !gap.is_finite() {
            return Err(Error::Atlas("sample graph is disconnected".into()));
        }
        if gap < separation {
            return Ok(SeparatedNet {
                centers,
                separation,
                min_pairwise,
                max_gap: gap,
            });
        }
        let dist = graph.distances_from(far);
        for &c in &centers {
            min_pairwise = min_pairwise.min(dist[c]);
        }
        centers.push(far);
        for (t, v) in to_net.iter_mut().zip(&dist) {
            *t = t.min(*v);
        }
    }
}

/// Net of separation `2e^{−Q−2} r`, checked to cover at `e^{−Q−1} r`.
pub fn build_separated_net(manifold: &AtlasManifold, q: f64, r: f64, points_per_axis: usize) -> Result<SeparatedNet> {
    if !(q >= 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter(format!("net with Q = {q}, r = {r}")));
    }
    let graph = SampleGraph::new(manifold, points_per_axis)?;
    let net = greedy_net(&graph, net_separation(r, q))?;
    debug_assert!(net.covers(net_covering_radius(r, q)));
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::builtin_manifold;

    #[test]
    fn flat_torus_net_is_separated_and_covering() {
        let m = builtin_manifold("t2_flat").unwrap();
        let graph = SampleGraph::new(&m, 9).unwrap();
        let s = 0.2;
        let net = greedy_net(&graph, s).unwrap();
        assert!(net.len() > 1);
        assert!(net.min_pairwise >= s);
        for (i, &a) in net.centers.iter().enumerate() {
            let dist = graph.distances_from(a);
            for &b in &net.centers[i + 1..] {
                assert!(dist[b] >= s);
            }
        }
        assert!(net.covers(s));
        assert!(net.covers(s * std::f64::consts::E / 2.0));
    }

    #[test]
    fn torus_graph_distances_see_the_identifications() {
        // opposite edges of the unit torus are close across the seams
        let m = builtin_manifold("t2_flat").unwrap();
        let graph = SampleGraph::new(&m, 9).unwrap();
        let dist = graph.distances_from(0);
        let worst = dist.iter().cloned().fold(0.0, f64::max);
        // the farthest point on the unit flat torus is at √2/2; graph
        // distances overestimate
        assert!(worst < 0.9 && worst > 0.7, "{worst}");
    }

    #[test]
    fn sphere_net_respects_the_bound() {
        let m = builtin_manifold("s2").unwrap();
        let net = build_separated_net(&m, 0.0, 1.0, 25).unwrap();
        assert!(net.len() >= 2);
        assert!(net.min_pairwise >= net_separation(1.0, 0.0));
        assert!(net.covers(net_covering_radius(1.0, 0.0)));
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let m = builtin_manifold("s2").unwrap();
        assert!(build_separated_net(&m, -1.0, 1.0, 9).is_err());
        assert!(SampleGraph::new(&m, 1).is_err());
        let graph = SampleGraph::new(&m, 5).unwrap();
        assert!(greedy_net(&graph, 0.0).is_err());
    }
}
