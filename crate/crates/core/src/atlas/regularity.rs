//! Regularity diagnostics: chart norms of the chart metrics and Hölder
//! norms of transition maps, measured on a box inside each overlap.
//!
//! The reported `C^{2,α}` norm is `Σ_{k≤2} max|∇^k x| + ‖∇²x‖_α` with
//! max-entry norms and lattice finite differences, so an affine map
//! `x ↦ Ax + c` gets `max|Ax + c| + max|A|` exactly.

use crate::error::{Error, Result};
use crate::holder::{chart_norm_report, finite_difference_gradient, holder_seminorm, ChartNormReport, Lattice, SampledFunction};

use super::{AtlasManifold, MapJet, MetricJet};

/// Chart metric `g_{kl}` sampled on `n` nodes per axis of `[−radius, radius]^d`.
pub fn sample_chart_metric(manifold: &AtlasManifold, chart: usize, radius: f64, n: usize) -> Result<SampledFunction> {
    let d = manifold.dim();
    let lattice = Lattice::centered(d, radius, n)?;
    let metric = &manifold.chart(chart).metric;
    let mut jet = MetricJet::new(d);
    SampledFunction::sample(lattice, d * d, |x, out| {
        metric.eval(x, 0, &mut jet)?;
        out.copy_from_slice(&jet.g);
        Ok(())
    })
}

/// Chart-norm report of one chart, on the scale of its partition support.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ChartNormEntry {
    pub chart: usize,
    pub label: String,
    #[serde(flatten)]
    pub report: ChartNormReport,
}

/// Chart norms of every chart with `C^{m,α}` seminorms on the support box.
pub fn chart_norms(manifold: &AtlasManifold, n: usize, m: usize, alpha: f64) -> Result<Vec<ChartNormEntry>> {
    (0..manifold.chart_count())
        .map(|i| {
            let chart = manifold.chart(i);
            let sampled = sample_chart_metric(manifold, i, chart.support, n)?;
            Ok(ChartNormEntry {
                chart: i,
                label: chart.label.clone(),
                report: chart_norm_report(&sampled, m, alpha)?,
            })
        })
        .collect()
}

/// Largest `q_total` over the charts.
pub fn atlas_norm(entries: &[ChartNormEntry]) -> f64 {
    entries.iter().fold(0.0, |q, e| q.max(e.report.q_total))
}

/// Regularity of one transition `from → to`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TransitionRegularity {
    pub from: usize,
    pub to: usize,
    /// Box `center ± radius` (max norm) in `from` coordinates on which the
    /// map was sampled.
    pub center: Vec<f64>,
    pub radius: f64,
    pub points_per_axis: usize,
    /// `max|∇^k x|` for `k = 0, 1, 2`.
    pub sup_norms: Vec<f64>,
    /// `‖∇²x‖_α`.
    pub top_seminorm: f64,
    pub norm: f64,
    pub alpha: f64,
    /// `sign det Dx` equals the product of the chart orientations on the
    /// whole box.
    pub orientation_consistent: bool,
}

fn lattice_nodes(center: &[f64], radius: f64, n: usize) -> impl Iterator<Item = Vec<f64>> + '_ {
    let d = center.len();
    (0..n.pow(d as u32)).map(move |node| {
        let mut x = vec![0.0; d];
        let mut rest = node;
        for (k, slot) in x.iter_mut().enumerate().rev() {
            let i = rest % n;
            rest /= n;
            *slot = center[k] - radius + 2.0 * radius * i as f64 / (n - 1) as f64;
        }
        x
    })
}

/// Every node of the `n^d` lattice on `center ± radius` maps into the target
/// chart, and neighbouring nodes map to images consistent with the first
/// order Taylor expansion (which rules out boxes straddling a jump such as a
/// periodic wrap).
fn maps_smoothly(
    manifold: &AtlasManifold,
    from: usize,
    to: usize,
    center: &[f64],
    radius: f64,
    n: usize,
    jet: &mut MapJet,
) -> bool {
    let d = center.len();
    let nodes: Vec<Vec<f64>> = lattice_nodes(center, radius, n).collect();
    let mut values = Vec::with_capacity(nodes.len() * d);
    let mut jacs = Vec::with_capacity(nodes.len() * d * d);
    for x in &nodes {
        if !manifold.map_point(from, to, x, 1, jet) {
            return false;
        }
        values.extend_from_slice(&jet.value);
        jacs.extend_from_slice(&jet.jac);
    }
    let step = 2.0 * radius / (n - 1) as f64;
    for a in 0..nodes.len() {
        let jac = &jacs[a * d * d..(a + 1) * d * d];
        let scale = jac.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            if (a / stride) % n == n - 1 {
                continue;
            }
            let b = a + stride;
            for k in 0..d {
                let predicted = values[a * d + k] + jac[k * d + axis] * step;
                if (values[b * d + k] - predicted).abs() > step * (0.5 + scale) {
                    return false;
                }
            }
        }
    }
    true
}

/// Largest box (over a coarse candidate search) whose test lattice maps
/// strictly into the target chart; `None` when the charts do not overlap.
pub fn overlap_box(manifold: &AtlasManifold, from: usize, to: usize) -> Option<(Vec<f64>, f64)> {
    let d = manifold.dim();
    let domain = 0.95 * manifold.chart(from).radius;
    let candidates = if d <= 2 { 9 } else { 5 };
    let test = if d <= 2 { 7 } else { 4 };
    let mut jet = MapJet::new(d);
    let zero = vec![0.0; d];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for c in lattice_nodes(&zero, domain, candidates) {
        let room = domain - c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(room > 0.0) || !manifold.map_point(from, to, &c, 0, &mut jet) {
            continue;
        }
        let mut rho = room;
        let mut accepted = None;
        for _ in 0..12 {
            if maps_smoothly(manifold, from, to, &c, rho, test, &mut jet) {
                accepted = Some(rho);
                break;
            }
            rho *= 0.7;
        }
        if let Some(rho) = accepted {
            if best.as_ref().is_none_or(|(_, r)| rho > *r) {
                best = Some((c, rho));
            }
        }
    }
    best
}

/// Regularity of every transition between distinct overlapping charts.
pub fn transition_regularity_report(
    manifold: &AtlasManifold,
    points_per_axis: usize,
    alpha: f64,
) -> Result<Vec<TransitionRegularity>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent {alpha} not in (0, 1]")));
    }
    let d = manifold.dim();
    let mut out = Vec::new();
    for from in 0..manifold.chart_count() {
        for to in 0..manifold.chart_count() {
            if from == to || manifold.transition(from, to).is_none() {
                continue;
            }
            let Some((center, radius)) = overlap_box(manifold, from, to) else {
                continue;
            };
            let lattice = Lattice::new(center.clone(), radius, points_per_axis)?;
            let mut jet = MapJet::new(d);
            let expected = manifold.chart(from).orientation * manifold.chart(to).orientation;
            let mut orientation_consistent = true;
            let sampled = SampledFunction::sample(lattice, d, |x, out| {
                manifold.map_point_checked(from, to, x, 1, &mut jet)?;
                out.copy_from_slice(&jet.value);
                let mut inv = vec![0.0; d * d];
                let det = crate::connections::invert_small(&jet.jac, d, &mut inv).unwrap_or(0.0);
                if det * expected <= 0.0 {
                    orientation_consistent = false;
                }
                Ok(())
            })?;
            let mut sup_norms = Vec::with_capacity(3);
            let mut top_seminorm = f64::INFINITY;
            for k in 0..=2 {
                match finite_difference_gradient(&sampled, k) {
                    Ok(grad) => {
                        sup_norms.push(grad.sup_norm());
                        if k == 2 {
                            top_seminorm = holder_seminorm(&grad, alpha)?;
                        }
                    }
                    Err(Error::GridTooSmall(_)) => sup_norms.push(f64::INFINITY),
                    Err(e) => return Err(e),
                }
            }
            let norm = sup_norms.iter().sum::<f64>() + top_seminorm;
            out.push(TransitionRegularity {
                from,
                to,
                center,
                radius,
                points_per_axis,
                sup_norms,
                top_seminorm,
                norm,
                alpha,
                orientation_consistent,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::builtin_manifold;

    #[test]
    fn flat_torus_transitions_are_affine() {
        let m = builtin_manifold("t2_flat").unwrap();
        let report = transition_regularity_report(&m, 9, 0.5).unwrap();
        assert!(!report.is_empty());
        for t in &report {
            let mut jet = MapJet::new(2);
            let sup = lattice_nodes(&t.center, t.radius, 9)
                .map(|x| {
                    assert!(m.map_point(t.from, t.to, &x, 0, &mut jet));
                    jet.value.iter().fold(0.0f64, |a, v| a.max(v.abs()))
                })
                .fold(0.0, f64::max);
            assert!((t.norm - (sup + 1.0)).abs() < 1e-9, "{t:?}");
            assert!(t.orientation_consistent);
        }
    }

    #[test]
    fn sphere_norm_is_finite_and_stable() {
        let m = builtin_manifold("s2").unwrap();
        let coarse = transition_regularity_report(&m, 17, 0.5).unwrap();
        let fine = transition_regularity_report(&m, 33, 0.5).unwrap();
        assert_eq!(coarse.len(), 2);
        for (a, b) in coarse.iter().zip(&fine) {
            assert!(a.norm.is_finite());
            assert_eq!(a.center, b.center);
            assert!((a.norm - b.norm).abs() < 0.05 * b.norm, "{} {}", a.norm, b.norm);
            assert!(a.orientation_consistent);
        }
    }

    #[test]
    fn projective_orientations_are_consistent() {
        let m = builtin_manifold("cp2").unwrap();
        let report = transition_regularity_report(&m, 5, 0.5).unwrap();
        assert_eq!(report.len(), 6);
        assert!(report.iter().all(|t| t.orientation_consistent && t.norm.is_finite()));
    }

    #[test]
    fn flat_torus_has_zero_chart_norm() {
        let m = builtin_manifold("t2_flat").unwrap();
        let norms = chart_norms(&m, 9, 1, 0.5).unwrap();
        assert_eq!(norms.len(), 9);
        assert_eq!(atlas_norm(&norms), 0.0);
        assert!(norms.iter().all(|e| e.report.harmonic_residual == 0.0));
    }

    #[test]
    fn perturbation_raises_the_chart_norm() {
        let q = |name: &str| atlas_norm(&chart_norms(&builtin_manifold(name).unwrap(), 17, 1, 0.5).unwrap());
        let (round, bumped) = (q("s2"), q("s2_perturbed(0.3)"));
        assert!(round.is_finite() && round > 0.0);
        assert!(bumped > round, "{bumped} {round}");
    }

    #[test]
    fn bad_exponent_is_rejected() {
        let m = builtin_manifold("s2").unwrap();
        assert!(transition_regularity_report(&m, 9, 0.0).is_err());
    }
}
