//! Coordinate curvature of a Christoffel field.

use super::{ChristoffelField, CurvatureField, CurvatureProvenance};
use crate::error::{Error, Result};
use crate::forms::{antisymmetrize_pair, IndexRole, MultiIndexArray};

/// `R^k_{λμν} = (∂_μΓ^k_{νλ} + Γ^k_{μκ}Γ^κ_{νλ})_{[μν]}`.
///
/// The bracket is formed as a difference of one array with its transpose, so
/// the result is exactly antisymmetric in `(μ, ν)`.
pub fn curvature_from_christoffel(gamma: &[f64], dgamma: &[f64], d: usize, r: &mut [f64]) {
    let m = |k: usize, l: usize, mu: usize, nu: usize| {
        let mut v = dgamma[((k * d + nu) * d + l) * d + mu];
        for kappa in 0..d {
            v += gamma[(k * d + mu) * d + kappa] * gamma[(kappa * d + nu) * d + l];
        }
        v
    };
    for k in 0..d {
        for l in 0..d {
            let base = (k * d + l) * d;
            for mu in 0..d {
                r[(base + mu) * d + mu] = 0.0;
                for nu in mu + 1..d {
                    let v = m(k, l, mu, nu) - m(k, l, nu, mu);
                    r[(base + mu) * d + nu] = v;
                    r[(base + nu) * d + mu] = -v;
                }
            }
        }
    }
}

/// Same formula via the generic multi-index antisymmetrizer; used to
/// cross-check the fused kernel.
pub fn curvature_via_multi_index(gamma: &[f64], dgamma: &[f64], d: usize) -> Result<MultiIndexArray> {
    let roles = [IndexRole::Upper, IndexRole::Lower, IndexRole::Lower, IndexRole::Lower];
    let mut h = MultiIndexArray::zeros(&[d, d, d, d], &roles)?;
    for k in 0..d {
        for l in 0..d {
            for mu in 0..d {
                for nu in 0..d {
                    let mut v = dgamma[((k * d + nu) * d + l) * d + mu];
                    for kappa in 0..d {
                        v += gamma[(k * d + mu) * d + kappa] * gamma[(kappa * d + nu) * d + l];
                    }
                    h.set(&[k, l, mu, nu], v)?;
                }
            }
        }
    }
    antisymmetrize_pair(&h, 2, 3)
}

/// Curvature of a Christoffel field whose derivatives are taken by central
/// differences of step `h`.
pub struct FdCurvatureField<F: ChristoffelField> {
    pub field: F,
    pub step: f64,
}

/// Coordinate curvature of `field` with finite-difference step `step`.
pub fn coordinate_curvature<F: ChristoffelField>(field: F, step: f64) -> Result<FdCurvatureField<F>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite-difference step {step}")));
    }
    Ok(FdCurvatureField { field, step })
}

impl<F: ChristoffelField> CurvatureField for FdCurvatureField<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn chart(&self) -> usize {
        self.field.chart()
    }

    fn provenance(&self) -> CurvatureProvenance {
        CurvatureProvenance::CoordinateFormula
    }

    fn curvature(&self, x: &[f64], r: &mut [f64]) -> Result<()> {
        let d = self.field.dim();
        let n3 = d * d * d;
        let mut gamma = vec![0.0; n3];
        let mut plus = vec![0.0; n3];
        let mut minus = vec![0.0; n3];
        let mut dgamma = vec![0.0; n3 * d];
        self.field.christoffel(x, &mut gamma)?;
        let mut xs = x.to_vec();
        for s in 0..d {
            xs[s] = x[s] + self.step;
            self.field.christoffel(&xs, &mut plus)?;
            xs[s] = x[s] - self.step;
            self.field.christoffel(&xs, &mut minus)?;
            xs[s] = x[s];
            for idx in 0..n3 {
                dgamma[idx * d + s] = (plus[idx] - minus[idx]) / (2.0 * self.step);
            }
        }
        curvature_from_christoffel(&gamma, &dgamma, d, r);
        Ok(())
    }
}
