//! Affine connections on chart domains and their curvature.
//!
//! Layouts (row-major, `d` the dimension):
//! - Christoffel symbols `Γ^k_{μν}` at `(k*d + μ)*d + ν`;
//! - derivatives `∂_σ Γ^k_{μν}` at `((k*d + μ)*d + ν)*d + σ`;
//! - curvature `R^k_{λμν}` at `((k*d + λ)*d + μ)*d + ν` with
//!   `R^k_{λμν} = ∂_μΓ^k_{νλ} − ∂_νΓ^k_{μλ} + Γ^k_{μκ}Γ^κ_{νλ} − Γ^k_{νκ}Γ^κ_{μλ}`.

pub mod curvature;
pub mod fd;
pub mod identities;
pub mod levi_civita;
pub mod mollify;
pub mod piecewise;
pub mod pushforward;
pub mod transform;

use crate::error::Result;

pub use curvature::{coordinate_curvature, curvature_from_christoffel, FdCurvatureField};
pub use fd::FdTransition;
pub use levi_civita::{levi_civita, LeviCivitaField, LeviCivitaWorkspace};
pub use mollify::{mollification_distance, support_margin, MollifiedPeField, Mollifier};
pub use piecewise::{PeWorkspace, PiecewiseEuclideanField, InverseRoute};
pub use pushforward::{pushforward_christoffel, PushforwardField};
pub use transform::{pe_coordinate_discrepancy, tensor_transform_curvature, TransformedCurvatureField};

/// Origin of a Christoffel field.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChristoffelSource {
    LeviCivita,
    PiecewiseEuclidean,
    Mollified(f64),
    Pushforward,
}

/// Formula a curvature field was evaluated with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureProvenance {
    CoordinateFormula,
    PeFormula,
    Transformed,
}

/// Which connection to integrate characteristic forms with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ConnectionChoice {
    #[serde(rename = "levi_civita")]
    LeviCivita,
    #[serde(rename = "piecewise_euclidean")]
    PiecewiseEuclidean,
}

impl ConnectionChoice {
    pub fn label(&self) -> &'static str {
        match self {
            ConnectionChoice::LeviCivita => "levi_civita",
            ConnectionChoice::PiecewiseEuclidean => "piecewise_euclidean",
        }
    }
}

/// `x ↦ Γ^k_{μν}(x)` on one chart.
pub trait ChristoffelField: Send + Sync {
    fn dim(&self) -> usize;
    fn chart(&self) -> usize;
    fn source(&self) -> ChristoffelSource;
    fn christoffel(&self, x: &[f64], gamma: &mut [f64]) -> Result<()>;
}

/// `x ↦ R^k_{λμν}(x)` on one chart.
pub trait CurvatureField: Send + Sync {
    fn dim(&self) -> usize;
    fn chart(&self) -> usize;
    fn provenance(&self) -> CurvatureProvenance;
    fn curvature(&self, x: &[f64], r: &mut [f64]) -> Result<()>;
}

/// Invert a small row-major matrix by Gauss–Jordan elimination with partial
/// pivoting; returns the determinant, or `None` when singular.
pub fn invert_small(a: &[f64], d: usize, out: &mut [f64]) -> Option<f64> {
    let mut m = [0.0f64; 64];
    m[..d * d].copy_from_slice(&a[..d * d]);
    for v in out[..d * d].iter_mut() {
        *v = 0.0;
    }
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
    let scale = a[..d * d].iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    let mut det = 1.0;
    for col in 0..d {
        let mut pivot = col;
        for row in col + 1..d {
            if m[row * d + col].abs() > m[pivot * d + col].abs() {
                pivot = row;
            }
        }
        let p = m[pivot * d + col];
        if p.abs() <= 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..d {
                m.swap(pivot * d + k, col * d + k);
                out.swap(pivot * d + k, col * d + k);
            }
            det = -det;
        }
        det *= p;
        let inv = 1.0 / p;
        for k in 0..d {
            m[col * d + k] *= inv;
            out[col * d + k] *= inv;
        }
        for row in 0..d {
            if row == col {
                continue;
            }
            let f = m[row * d + col];
            if f != 0.0 {
                for k in 0..d {
                    m[row * d + k] -= f * m[col * d + k];
                    out[row * d + k] -= f * out[col * d + k];
                }
            }
        }
    }
    Some(det)
}

/// `max_i |a_i − b_i|`.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Largest `|R^k_{λμν} + R^k_{λνμ}|`; zero for every field produced here.
pub fn antisymmetry_defect(r: &[f64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..d {
        for l in 0..d {
            for m in 0..d {
                for n in 0..d {
                    let a = r[((k * d + l) * d + m) * d + n];
                    let b = r[((k * d + l) * d + n) * d + m];
                    worst = worst.max((a + b).abs());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_inverse() {
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let mut inv = [0.0; 9];
        let det = invert_small(&a, 3, &mut inv).unwrap();
        assert!((det - 18.0).abs() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(invert_small(&[1.0, 2.0, 2.0, 4.0], 2, &mut inv).is_none());
        let swap = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(invert_small(&swap, 2, &mut inv), Some(-1.0));
    }
}
