//! Change of coordinates for curvature as a (3,1)-tensor.

use super::{max_abs_diff, CurvatureField, CurvatureProvenance, PiecewiseEuclideanField};
use crate::atlas::{random_points, AtlasManifold, MapJet};
use crate::error::{Error, Result};

/// `R^k_{λμν} = Σ X_{kk'} R'^{k'}_{λ'μ'ν'} J_{λ'λ} J_{μ'μ} J_{ν'ν}` with `J`
/// the Jacobian of `x ↦ y` at `x`, `X` that of the reverse map at `y` and
/// `R'` the source curvature at `y`; contracted one index at a time.
pub fn tensor_transform_curvature(source: &[f64], jac: &[f64], reverse_jac: &[f64], d: usize, out: &mut [f64]) {
    let n4 = d * d * d * d;
    let mut a = [0.0f64; 4096];
    let mut b = [0.0f64; 4096];
    // last index
    for head in 0..d * d * d {
        for nu in 0..d {
            let mut s = 0.0;
            for nup in 0..d {
                s += source[head * d + nup] * jac[nup * d + nu];
            }
            a[head * d + nu] = s;
        }
    }
    // third index
    for kl in 0..d * d {
        for mu in 0..d {
            for nu in 0..d {
                let mut s = 0.0;
                for mup in 0..d {
                    s += a[(kl * d + mup) * d + nu] * jac[mup * d + mu];
                }
                b[(kl * d + mu) * d + nu] = s;
            }
        }
    }
    // second index
    for kp in 0..d {
        for lam in 0..d {
            for mn in 0..d * d {
                let mut s = 0.0;
                for lp in 0..d {
                    s += b[(kp * d + lp) * d * d + mn] * jac[lp * d + lam];
                }
                a[(kp * d + lam) * d * d + mn] = s;
            }
        }
    }
    // first index
    let block = d * d * d;
    for k in 0..d {
        for idx in 0..block {
            let mut s = 0.0;
            for kp in 0..d {
                s += reverse_jac[k * d + kp] * a[kp * block + idx];
            }
            out[k * block + idx] = s;
        }
    }
    debug_assert!(out.len() >= n4);
}

/// Curvature of chart `to` obtained by transforming a field on another chart.
pub struct TransformedCurvatureField<F: CurvatureField> {
    pub manifold: AtlasManifold,
    pub source: F,
    pub to: usize,
}

impl<F: CurvatureField> TransformedCurvatureField<F> {
    pub fn new(manifold: &AtlasManifold, source: F, to: usize) -> Self {
        Self {
            manifold: manifold.clone(),
            source,
            to,
        }
    }
}

impl<F: CurvatureField> CurvatureField for TransformedCurvatureField<F> {
    fn dim(&self) -> usize {
        self.manifold.dim()
    }

    fn chart(&self) -> usize {
        self.to
    }

    fn provenance(&self) -> CurvatureProvenance {
        CurvatureProvenance::Transformed
    }

    fn curvature(&self, x: &[f64], r: &mut [f64]) -> Result<()> {
        let d = self.manifold.dim();
        let from = self.source.chart();
        let mut fwd = MapJet::new(d);
        let mut rev = MapJet::new(d);
        self.manifold.map_point_checked(self.to, from, x, 1, &mut fwd)?;
        if !self.manifold.map_point(from, self.to, &fwd.value, 1, &mut rev) {
            return Err(Error::OutsideOverlap {
                from,
                to: self.to,
                point: fwd.value.clone(),
            });
        }
        let mut src = vec![0.0; d * d * d * d];
        self.source.curvature(&fwd.value, &mut src)?;
        tensor_transform_curvature(&src, &fwd.jac, &rev.jac, d, r);
        Ok(())
    }
}

/// Largest `max|R_transformed − R_direct|` of the piecewise Euclidean
/// curvature over every ordered overlapping pair `(i, j)`: the curvature of
/// chart `i` moved to chart `j` as a (3,1)-tensor against the curvature
/// computed in chart `j`, at up to `samples` seeded points of `j`'s support
/// box that lie in the overlap.
pub fn pe_coordinate_discrepancy(manifold: &AtlasManifold, samples: usize, seed: u64) -> Result<f64> {
    let d = manifold.dim();
    let n = manifold.chart_count();
    let mut worst = 0.0f64;
    let (mut a, mut b) = (vec![0.0; d.pow(4)], vec![0.0; d.pow(4)]);
    let mut jet = MapJet::new(d);
    for j in 0..n {
        let direct = PiecewiseEuclideanField::new(manifold, j);
        let points = random_points(d, manifold.chart(j).support, samples, seed.wrapping_add(j as u64));
        for i in 0..n {
            if i == j || manifold.transition(j, i).is_none() {
                continue;
            }
            let moved = TransformedCurvatureField::new(manifold, PiecewiseEuclideanField::new(manifold, i), j);
            for y in &points {
                if !manifold.map_point(j, i, y, 0, &mut jet) {
                    continue;
                }
                moved.curvature(y, &mut a)?;
                direct.curvature(y, &mut b)?;
                worst = worst.max(max_abs_diff(&a, &b));
            }
        }
    }
    Ok(worst)
}
