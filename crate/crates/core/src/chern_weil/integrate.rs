//! Integration of characteristic densities over an atlas.
//!
//! `Π[M] = Σ_i σ_i ∫ ψ_i Π(R_i) dx` over the support box `[−s_i, s_i]^d` of
//! each chart, with `σ_i` the chart orientation, by the tensor-product
//! midpoint rule with `n = round(1/h)` cells per axis. The quadrature error
//! is estimated by Richardson comparison with the `n/2` grid:
//! `|I_n − I_{n/2}| / 3` for a second-order rule.

use rayon::prelude::*;

use super::density::{euler_density_with, polynomial_density, EulerWorkspace};
use super::polynomial::InvariantPolynomial;
use crate::atlas::{AtlasManifold, MetricJet, PartitionOfUnity, PouSample};
use crate::connections::{invert_small, ConnectionChoice, LeviCivitaField, LeviCivitaWorkspace, PeWorkspace, PiecewiseEuclideanField};
use crate::error::{Error, Result};

/// Result of integrating one characteristic number.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CharacteristicNumberResult {
    pub manifold: String,
    pub polynomial: InvariantPolynomial,
    pub connection: ConnectionChoice,
    pub value: f64,
    pub volume: f64,
    pub ratio: f64,
    pub h: f64,
    pub error_estimate: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Cells per axis for relative step `h`.
pub fn cells_per_axis(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter(format!("grid step h = {h} must lie in (0, 1]")));
    }
    Ok((1.0 / h).round().max(1.0) as usize)
}

/// Deterministic pairwise sum.
pub fn pairwise_sum(values: &[[f64; 2]]) -> [f64; 2] {
    match values.len() {
        0 => [0.0, 0.0],
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            let (x, y) = (pairwise_sum(a), pairwise_sum(b));
            [x[0] + y[0], x[1] + y[1]]
        }
    }
}

/// Midpoint rule for a pair of integrands over `[−s, s]^d` with `n` cells
/// per axis; parallel over slices of the first coordinate, summed in a
/// fixed order.
pub fn midpoint_rule<W, M, F>(d: usize, s: f64, n: usize, make: M, f: F) -> Result<[f64; 2]>
where
    W: Send,
    M: Fn() -> W + Sync + Send,
    F: Fn(&[f64], &mut W) -> Result<[f64; 2]> + Sync + Send,
{
    crate::configure_threads();
    let cell = 2.0 * s / n as f64;
    let coord = |i: usize| -s + (i as f64 + 0.5) * cell;
    let rest = n.pow(d as u32 - 1);
    let slices = (0..n)
        .into_par_iter()
        .map_init(
            || (make(), vec![0.0; d], Vec::with_capacity(rest)),
            |(ws, x, partial), i0| -> Result<[f64; 2]> {
                x[0] = coord(i0);
                partial.clear();
                for flat in 0..rest {
                    let mut r = flat;
                    for c in (1..d).rev() {
                        x[c] = coord(r % n);
                        r /= n;
                    }
                    partial.push(f(x, ws)?);
                }
                Ok(pairwise_sum(partial))
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let total = pairwise_sum(&slices);
    let vol = cell.powi(d as i32);
    Ok([total[0] * vol, total[1] * vol])
}

enum Workspace {
    Levi(LeviCivitaWorkspace, PouSample, EulerWorkspace),
    Pe(PeWorkspace, MetricJet),
}

/// Integrand `(σ ψ_i Π(R), ψ_i √det g)` at `x` in chart `i`.
struct Integrand<'a> {
    manifold: &'a AtlasManifold,
    poly: &'a InvariantPolynomial,
    chart: usize,
    lc: LeviCivitaField,
    pe: PiecewiseEuclideanField,
    pou: PartitionOfUnity,
    connection: ConnectionChoice,
    top: bool,
}

impl Integrand<'_> {
    fn workspace(&self) -> Workspace {
        let d = self.manifold.dim();
        match self.connection {
            ConnectionChoice::LeviCivita => Workspace::Levi(self.lc.workspace(), self.pou.workspace(), EulerWorkspace::new(d)),
            ConnectionChoice::PiecewiseEuclidean => Workspace::Pe(self.pe.workspace(), MetricJet::new(d)),
        }
    }

    fn eval(&self, x: &[f64], ws: &mut Workspace) -> Result<[f64; 2]> {
        let d = self.manifold.dim();
        let chart = self.manifold.chart(self.chart);
        let orientation = chart.orientation;
        match ws {
            Workspace::Levi(lw, pw, ew) => {
                self.pou.evaluate(self.chart, x, 0, 0, pw)?;
                let psi = pw.weight[self.chart];
                if psi == 0.0 {
                    return Ok([0.0, 0.0]);
                }
                self.lc.evaluate(x, self.top, lw)?;
                let vol = psi * lw.det.sqrt();
                if !self.top {
                    return Ok([0.0, vol]);
                }
                let dens = if self.poly.is_euler() {
                    euler_density_with(&lw.jet.g, &lw.riemann, d, orientation, ew).map_err(|e| at_point(e, x))?
                } else {
                    polynomial_density(self.poly, &lw.riemann, d)?.value
                };
                Ok([orientation * psi * dens, vol])
            }
            Workspace::Pe(pw, jet) => {
                self.pe.evaluate(x, self.top, pw)?;
                let psi = pw.pou.weight[self.chart];
                if psi == 0.0 {
                    return Ok([0.0, 0.0]);
                }
                chart.metric.eval(x, 0, jet)?;
                let mut inv = [0.0f64; 64];
                let det = invert_small(&jet.g, d, &mut inv).ok_or_else(|| Error::SingularMetric { point: x.to_vec() })?;
                if !(det > 0.0) {
                    return Err(Error::NotPositiveDefinite { point: x.to_vec() });
                }
                let vol = psi * det.sqrt();
                if !self.top {
                    return Ok([0.0, vol]);
                }
                let dens = polynomial_density(self.poly, &pw.riemann, d)?.value;
                Ok([orientation * psi * dens, vol])
            }
        }
    }
}

fn at_point(e: Error, x: &[f64]) -> Error {
    match e {
        Error::NotPositiveDefinite { .. } => Error::NotPositiveDefinite { point: x.to_vec() },
        other => other,
    }
}

/// Sum over charts of the midpoint rule with `n` cells per axis.
fn integrate_level(
    manifold: &AtlasManifold,
    poly: &InvariantPolynomial,
    connection: ConnectionChoice,
    top: bool,
    n: usize,
) -> Result<[f64; 2]> {
    let d = manifold.dim();
    let mut total = [0.0, 0.0];
    for i in 0..manifold.chart_count() {
        let integrand = Integrand {
            manifold,
            poly,
            chart: i,
            lc: LeviCivitaField::new(manifold, i),
            pe: PiecewiseEuclideanField::new(manifold, i),
            pou: PartitionOfUnity::new(manifold),
            connection,
            top,
        };
        let part = midpoint_rule(d, manifold.chart(i).support, n, || integrand.workspace(), |x, ws| integrand.eval(x, ws))?;
        total[0] += part[0];
        total[1] += part[1];
    }
    Ok(total)
}

/// Integrate `poly` over `manifold` with relative grid step `h`.
pub fn integrate_characteristic_number(
    manifold: &AtlasManifold,
    poly: &InvariantPolynomial,
    connection: ConnectionChoice,
    h: f64,
) -> Result<CharacteristicNumberResult> {
    let d = manifold.dim();
    if d % 2 != 0 {
        return Err(Error::Dimension(format!("characteristic numbers need even dimension, got {d}")));
    }
    if poly.is_euler() && connection != ConnectionChoice::LeviCivita {
        return Err(Error::EulerRequiresMetricConnection);
    }
    let n = cells_per_axis(h)?;
    let top = poly.is_top_degree(d);
    let mut warnings = Vec::new();
    if !top {
        let msg = format!("{poly} has curvature degree {} on a {d}-manifold; value set to zero", poly.curvature_degree(d));
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let fine = integrate_level(manifold, poly, connection, top, n)?;
    let error_estimate = if top && n >= 2 {
        let coarse = integrate_level(manifold, poly, connection, top, n / 2)?;
        (fine[0] - coarse[0]).abs() / 3.0
    } else {
        0.0
    };
    let volume = fine[1];
    Ok(CharacteristicNumberResult {
        manifold: manifold.name.clone(),
        polynomial: poly.clone(),
        connection,
        value: fine[0],
        volume,
        ratio: fine[0].abs() / volume,
        h,
        error_estimate,
        warnings,
    })
}

/// `Σ_i ∫ ψ_i √det g dx`.
pub fn volume(manifold: &AtlasManifold, h: f64) -> Result<f64> {
    let n = cells_per_axis(h)?;
    let poly = InvariantPolynomial::euler();
    Ok(integrate_level(manifold, &poly, ConnectionChoice::LeviCivita, false, n)?[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::builtin_manifold;
    use std::f64::consts::PI;

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<[f64; 2]> = (0..1000).map(|i| [i as f64 * 0.1, 1.0]).collect();
        let s = pairwise_sum(&v);
        assert!((s[0] - 49950.0).abs() < 1e-9);
        assert_eq!(s[1], 1000.0);
    }

    #[test]
    fn midpoint_rule_integrates_quadratics_to_second_order() {
        let exact = 4.0 / 3.0; // ∫_{[−1,1]²} x² dx
        let r = midpoint_rule(2, 1.0, 64, || (), |x, _| Ok([x[0] * x[0], 1.0])).unwrap();
        assert!((r[0] - exact).abs() < 1e-3);
        assert!((r[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn flat_torus_euler_and_area() {
        let m = builtin_manifold("t2_flat").unwrap();
        let res = integrate_characteristic_number(&m, &InvariantPolynomial::euler(), ConnectionChoice::LeviCivita, 1.0 / 128.0).unwrap();
        assert!(res.value.abs() < 1e-10);
        assert!((res.volume - 1.0).abs() < 1e-8, "{res:?}");
    }

    #[test]
    fn volume_scales_with_metric() {
        let m = builtin_manifold("t2_flat").unwrap();
        let big = m.scaled(2.0).unwrap();
        let (v1, v2) = (volume(&m, 1.0 / 16.0).unwrap(), volume(&big, 1.0 / 16.0).unwrap());
        assert!((v2 - 4.0 * v1).abs() < 1e-10);
    }

    #[test]
    fn sphere_area_and_euler_number() {
        let m = builtin_manifold("s2").unwrap();
        let res = integrate_characteristic_number(&m, &InvariantPolynomial::euler(), ConnectionChoice::LeviCivita, 1.0 / 64.0).unwrap();
        assert!((res.value - 2.0).abs() < 1e-2, "{res:?}");
        assert!((res.volume - 4.0 * PI).abs() < 1e-2, "{res:?}");
        assert!(res.error_estimate < 1e-2);
    }

    #[test]
    fn euler_with_piecewise_euclidean_is_rejected() {
        let m = builtin_manifold("s2").unwrap();
        let err = integrate_characteristic_number(&m, &InvariantPolynomial::euler(), ConnectionChoice::PiecewiseEuclidean, 0.1);
        assert!(matches!(err, Err(Error::EulerRequiresMetricConnection)));
    }

    #[test]
    fn degree_mismatch_gives_zero_with_warning() {
        let m = builtin_manifold("s2").unwrap();
        let p1 = InvariantPolynomial::pontryagin(1).unwrap();
        let res = integrate_characteristic_number(&m, &p1, ConnectionChoice::LeviCivita, 0.125).unwrap();
        assert_eq!(res.value, 0.0);
        assert_eq!(res.warnings.len(), 1);
        assert!(res.volume > 0.0);
    }

    #[test]
    fn invalid_step_is_rejected() {
        for h in [0.0, -1.0, 2.0, f64::NAN] {
            assert!(cells_per_axis(h).is_err());
        }
        assert_eq!(cells_per_axis(1.0 / 128.0).unwrap(), 128);
    }

    #[test]
    fn result_serializes_with_stable_keys() {
        let m = builtin_manifold("t2_flat").unwrap();
        let res = integrate_characteristic_number(&m, &InvariantPolynomial::euler(), ConnectionChoice::LeviCivita, 0.25).unwrap();
        let json = serde_json::to_string(&res).unwrap();
        let keys = ["manifold", "polynomial", "connection", "value", "volume", "ratio", "h", "error_estimate"];
        let mut last = 0;
        for k in keys {
            let pos = json.find(&format!("\"{k}\"")).unwrap();
            assert!(pos >= last);
            last = pos;
        }
        assert!(json.contains("\"polynomial\":\"euler\"") && json.contains("\"levi_civita\""));
    }
}
