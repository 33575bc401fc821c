//! Pointwise characteristic densities from curvature.
//!
//! The curvature 2-form matrix is `Ω^a_b = ½ R^a_{bμν} dx^μ∧dx^ν =
//! Σ_{μ<ν} R^a_{bμν} dx^μ∧dx^ν`, so the `(a, b)` block of the curvature array
//! is directly the antisymmetric coefficient matrix of `Ω^a_b`. Densities
//! are coefficients of `dx¹∧…∧dx^d`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, SMatrix};

use super::polynomial::{InvariantPolynomial, TraceExpansion};
use crate::error::{Error, Result};
use crate::forms::{pfaffian_top_coefficient, top_wedge_coefficient, EvenForm, FormMatrix};

/// A density value, zero with `degree_mismatch` set when the polynomial is
/// not of top degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Density {
    pub value: f64,
    pub degree_mismatch: bool,
}

/// `Ω^k_l` as a matrix of 2-forms.
pub fn curvature_to_form_matrix(r: &[f64], d: usize) -> Result<FormMatrix> {
    if r.len() != d * d * d * d {
        return Err(Error::Dimension(format!("curvature array of length {} for d = {d}", r.len())));
    }
    let mut entries = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in 0..d {
            let block = &r[(k * d + l) * d * d..(k * d + l + 1) * d * d];
            let terms = (0..d).flat_map(|mu| (mu + 1..d).map(move |nu| (vec![mu, nu], block[mu * d + nu])));
            entries.push(EvenForm::from_terms(d, 2, terms)?);
        }
    }
    FormMatrix::new(d, entries)
}

/// Inverse of [`curvature_to_form_matrix`] on antisymmetric curvature.
pub fn form_matrix_to_curvature(omega: &FormMatrix) -> Vec<f64> {
    let d = omega.size();
    let mut r = vec![0.0; d * d * d * d];
    for k in 0..d {
        for l in 0..d {
            for (idx, c) in omega.entry(k, l).terms() {
                let (mu, nu) = (idx[0], idx[1]);
                r[((k * d + l) * d + mu) * d + nu] = c;
                r[((k * d + l) * d + nu) * d + mu] = -c;
            }
        }
    }
    r
}

/// Top coefficient of a trace expansion `Σ c Π tr(Ω^{k})`; monomials whose
/// degree is not `d/2` contribute nothing.
pub fn trace_expansion_density(expansion: &TraceExpansion, r: &[f64], d: usize) -> f64 {
    let half = d / 2;
    if d % 2 != 0 || half == 0 {
        return 0.0;
    }
    let block = |a: usize, b: usize| &r[(a * d + b) * d * d..(a * d + b + 1) * d * d];
    let mut total = 0.0;
    let mut indices = vec![0usize; half];
    let mut forms: Vec<&[f64]> = Vec::with_capacity(half);
    for (key, &c) in expansion {
        if key.iter().sum::<usize>() != half || c == 0.0 {
            continue;
        }
        let mut sum = 0.0;
        indices.iter_mut().for_each(|v| *v = 0);
        loop {
            forms.clear();
            let mut start = 0;
            for &k in key {
                let cycle = &indices[start..start + k];
                for t in 0..k {
                    forms.push(block(cycle[t], cycle[(t + 1) % k]));
                }
                start += k;
            }
            sum += top_wedge_coefficient(&forms, d);
            // odometer over all index tuples
            let mut pos = 0;
            while pos < half {
                indices[pos] += 1;
                if indices[pos] < d {
                    break;
                }
                indices[pos] = 0;
                pos += 1;
            }
            if pos == half {
                break;
            }
        }
        total += c * sum;
    }
    total
}

/// Density of a non-Euler polynomial; GL-invariant, so the coordinate
/// curvature is used without a frame change.
pub fn polynomial_density(poly: &InvariantPolynomial, r: &[f64], d: usize) -> Result<Density> {
    if poly.is_euler() {
        return Err(Error::InvalidParameter("the Euler density needs the metric; use euler_density".into()));
    }
    if !poly.is_top_degree(d) {
        log::warn!("{poly} has curvature degree {} on a {d}-manifold; density set to zero", poly.curvature_degree(d));
        return Ok(Density {
            value: 0.0,
            degree_mismatch: true,
        });
    }
    Ok(Density {
        value: trace_expansion_density(poly.expansion(), r, d),
        degree_mismatch: false,
    })
}

pub fn pontryagin_density(j: usize, r: &[f64], d: usize) -> Result<Density> {
    polynomial_density(&InvariantPolynomial::pontryagin(j)?, r, d)
}

pub fn chern_density(j: usize, r: &[f64], d: usize) -> Result<Density> {
    polynomial_density(&InvariantPolynomial::chern(j)?, r, d)
}

/// Reusable buffers for [`euler_density_with`].
#[derive(Clone, Debug)]
pub struct EulerWorkspace {
    dim: usize,
    factor: Vec<f64>,
    factor_inverse: Vec<f64>,
    frame: Vec<f64>,
    rotated: Vec<f64>,
}

impl EulerWorkspace {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            factor: vec![0.0; dim * dim],
            factor_inverse: vec![0.0; dim * dim],
            frame: vec![0.0; dim.pow(4)],
            rotated: vec![0.0; dim.pow(4)],
        }
    }
}

/// Cholesky factor `L` of `g = L Lᵀ` and `L⁻¹` on the stack for the common
/// small dimensions; false unless `g` is positive definite.
macro_rules! cholesky_fixed {
    ($n:literal, $g:expr, $l:expr, $l_inv:expr) => {{
        match Cholesky::new(SMatrix::<f64, $n, $n>::from_row_slice($g)) {
            None => false,
            Some(chol) => {
                let l = chol.l();
                let l_inv = l.solve_lower_triangular(&SMatrix::<f64, $n, $n>::identity()).unwrap_or_default();
                for a in 0..$n {
                    for b in 0..$n {
                        $l[a * $n + b] = l[(a, b)];
                        $l_inv[a * $n + b] = l_inv[(a, b)];
                    }
                }
                true
            }
        }
    }};
}

fn cholesky_dynamic(g: &[f64], d: usize, l_out: &mut [f64], l_inv_out: &mut [f64]) -> bool {
    let Some(chol) = Cholesky::new(DMatrix::from_row_slice(d, d, g)) else {
        return false;
    };
    let l = chol.l();
    let Some(l_inv) = l.solve_lower_triangular(&DMatrix::identity(d, d)) else {
        return false;
    };
    for a in 0..d {
        for b in 0..d {
            l_out[a * d + b] = l[(a, b)];
            l_inv_out[a * d + b] = l_inv[(a, b)];
        }
    }
    true
}

/// Euler density `orientation · Pf(F/2π)` where `F = Lᵀ Ω L⁻ᵀ = L⁻¹ (g Ω) L⁻ᵀ`
/// with `g = L Lᵀ`: the curvature in the orthonormal frame `L⁻ᵀ∂`. Any
/// orthonormal frame of the same orientation gives the same Pfaffian.
///
/// In two dimensions this is `orientation · K √det g / 2π`.
pub fn euler_density(g: &[f64], r: &[f64], d: usize, orientation: f64) -> Result<f64> {
    euler_density_with(g, r, d, orientation, &mut EulerWorkspace::new(d))
}

pub fn euler_density_with(g: &[f64], r: &[f64], d: usize, orientation: f64, ws: &mut EulerWorkspace) -> Result<f64> {
    if d % 2 != 0 {
        return Ok(0.0);
    }
    debug_assert_eq!(ws.dim, d);
    let ok = match d {
        2 => cholesky_fixed!(2, g, ws.factor, ws.factor_inverse),
        4 => cholesky_fixed!(4, g, ws.factor, ws.factor_inverse),
        6 => cholesky_fixed!(6, g, ws.factor, ws.factor_inverse),
        _ => cholesky_dynamic(g, d, &mut ws.factor, &mut ws.factor_inverse),
    };
    if !ok {
        return Err(Error::NotPositiveDefinite { point: Vec::new() });
    }
    let n2 = d * d;
    let (l, l_inv) = (&ws.factor, &ws.factor_inverse);
    // (Lᵀ Ω)_{al}
    for a in 0..d {
        for lo in 0..d {
            for mn in 0..n2 {
                ws.frame[(a * d + lo) * n2 + mn] = (a..d).map(|k| l[k * d + a] * r[(k * d + lo) * n2 + mn]).sum();
            }
        }
    }
    // F_{ab} = Σ_l (Lᵀ Ω)_{al} (L⁻¹)_{bl}
    for a in 0..d {
        for b in 0..d {
            for mn in 0..n2 {
                ws.rotated[(a * d + b) * n2 + mn] = (0..=b).map(|lo| ws.frame[(a * d + lo) * n2 + mn] * l_inv[b * d + lo]).sum();
            }
        }
    }
    let pf = pfaffian_top_coefficient(&ws.rotated, d);
    Ok(orientation * pf * (2.0 * PI).powi(-((d / 2) as i32)))
}

/// `Ω ↦ A Ω A⁻¹` on a curvature array.
pub fn conjugate_curvature(r: &[f64], a: &[f64], a_inv: &[f64], d: usize) -> Vec<f64> {
    let n2 = d * d;
    let mut tmp = vec![0.0; d.pow(4)];
    let mut out = vec![0.0; d.pow(4)];
    for i in 0..d {
        for l in 0..d {
            for mn in 0..n2 {
                tmp[(i * d + l) * n2 + mn] = (0..d).map(|k| a[i * d + k] * r[(k * d + l) * n2 + mn]).sum();
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            for mn in 0..n2 {
                out[(i * d + j) * n2 + mn] = (0..d).map(|l| tmp[(i * d + l) * n2 + mn] * a_inv[l * d + j]).sum();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{builtin_manifold, random_points};
    use crate::connections::{invert_small, tensor_transform_curvature, LeviCivitaField};
    use crate::forms::pfaffian_of_forms;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_curvature(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut r = vec![0.0; d.pow(4)];
        for kl in 0..d * d {
            for mu in 0..d {
                for nu in mu + 1..d {
                    let v = rng.gen_range(-1.0..1.0);
                    r[(kl * d + mu) * d + nu] = v;
                    r[(kl * d + nu) * d + mu] = -v;
                }
            }
        }
        r
    }

    #[test]
    fn zero_curvature_gives_zero() {
        let d = 4;
        let r = vec![0.0; 256];
        let fm = curvature_to_form_matrix(&r, d).unwrap();
        assert!(fm.entries().iter().all(|e| e.is_zero()));
        assert_eq!(pontryagin_density(1, &r, d).unwrap().value, 0.0);
        let g: Vec<f64> = (0..16).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
        assert_eq!(euler_density(&g, &r, d, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn two_dimensional_form_matrix_unfolds_convention() {
        let mut r = vec![0.0; 16];
        // R^0_{101} = 3
        r[((0 * 2 + 1) * 2) * 2 + 1] = 3.0;
        r[((0 * 2 + 1) * 2 + 1) * 2] = -3.0;
        let fm = curvature_to_form_matrix(&r, 2).unwrap();
        assert_eq!(fm.entry(0, 1).coefficient(&[0, 1]), 3.0);
        assert!(fm.entry(1, 0).is_zero());
        assert_eq!(form_matrix_to_curvature(&fm), r);
    }

    #[test]
    fn reconstruction_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [2, 3, 4] {
            let r = random_curvature(d, &mut rng);
            let fm = curvature_to_form_matrix(&r, d).unwrap();
            assert_eq!(form_matrix_to_curvature(&fm), r);
        }
    }

    #[test]
    fn pfaffian_route_matches_form_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = 4;
        let mut r = random_curvature(d, &mut rng);
        // antisymmetrize the algebraic pair so Ω is so(4)-valued
        for a in 0..d {
            for b in 0..d {
                for mn in 0..d * d {
                    if a < b {
                        let v = r[(a * d + b) * d * d + mn];
                        r[(b * d + a) * d * d + mn] = -v;
                    } else if a == b {
                        r[(a * d + b) * d * d + mn] = 0.0;
                    }
                }
            }
        }
        let fm = curvature_to_form_matrix(&r, d).unwrap();
        let pf = pfaffian_of_forms(&fm).unwrap().top_coefficient();
        assert!((pf - pfaffian_top_coefficient(&r, d)).abs() < 1e-12);
    }

    #[test]
    fn first_pontryagin_matches_explicit_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 4;
        let r = random_curvature(d, &mut rng);
        let block = |a: usize, b: usize| &r[(a * d + b) * 16..(a * d + b + 1) * 16];
        let mut tr2 = 0.0;
        for a in 0..d {
            for b in 0..d {
                tr2 += top_wedge_coefficient(&[block(a, b), block(b, a)], d);
            }
        }
        let trace: Vec<f64> = (0..16).map(|mn| (0..d).map(|a| block(a, a)[mn]).sum()).collect();
        let tr1sq = top_wedge_coefficient(&[&trace, &trace], d);
        let want = 0.5 * (tr1sq - tr2) / (4.0 * PI * PI);
        assert!((pontryagin_density(1, &r, d).unwrap().value - want).abs() < 1e-14);
    }

    #[test]
    fn densities_are_conjugation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 4;
        for _ in 0..20 {
            let r = random_curvature(d, &mut rng);
            let a: Vec<f64> = (0..16).map(|i| rng.gen_range(-1.0..1.0) + if i % 5 == 0 { 2.0 } else { 0.0 }).collect();
            let mut a_inv = vec![0.0; 16];
            invert_small(&a, d, &mut a_inv).unwrap();
            let c = conjugate_curvature(&r, &a, &a_inv, d);
            for poly in ["p1", "c2", "tr-power:2", "tr-power:1,1"] {
                let p: InvariantPolynomial = poly.parse().unwrap();
                let before = polynomial_density(&p, &r, d).unwrap().value;
                let after = polynomial_density(&p, &c, d).unwrap().value;
                assert!((before - after).abs() < 1e-10 * (1.0 + before.abs()), "{poly}");
            }
        }
    }

    #[test]
    fn degree_mismatch_is_flagged() {
        let r = vec![1.0; 16];
        let dens = pontryagin_density(1, &r, 2).unwrap();
        assert!(dens.degree_mismatch && dens.value == 0.0);
        assert!(polynomial_density(&InvariantPolynomial::euler(), &r, 2).is_err());
    }

    #[test]
    fn round_sphere_euler_density_is_area_density_over_two_pi() {
        let m = builtin_manifold("s2").unwrap();
        let lc = LeviCivitaField::new(&m, 0);
        let mut ws = lc.workspace();
        for x in random_points(2, 2.0, 100, 5) {
            lc.evaluate(&x, true, &mut ws).unwrap();
            let dens = euler_density(&ws.jet.g, &ws.riemann, 2, 1.0).unwrap();
            let want = ws.det.sqrt() / (2.0 * PI);
            assert!((dens / want - 1.0).abs() < 1e-10);
            assert!((euler_density(&ws.jet.g, &ws.riemann, 2, -1.0).unwrap() + dens).abs() < 1e-15);
        }
    }

    #[test]
    fn cholesky_frame_matches_symmetric_root_frame() {
        let m = builtin_manifold("cp2").unwrap();
        let lc = LeviCivitaField::new(&m, 0);
        let mut ws = lc.workspace();
        let d = 4;
        for x in random_points(d, 1.0, 10, 8) {
            lc.evaluate(&x, true, &mut ws).unwrap();
            let eig = nalgebra::SymmetricEigen::new(DMatrix::from_row_slice(d, d, &ws.jet.g));
            let root = |p: f64| {
                let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.powf(p)));
                let m = &eig.eigenvectors * diag * eig.eigenvectors.transpose();
                (0..d * d).map(|k| m[(k / d, k % d)]).collect::<Vec<f64>>()
            };
            let f = conjugate_curvature(&ws.riemann, &root(0.5), &root(-0.5), d);
            let symmetric = pfaffian_top_coefficient(&f, d) / (2.0 * PI).powi(2);
            let cholesky = euler_density(&ws.jet.g, &ws.riemann, d, 1.0).unwrap();
            assert!((symmetric - cholesky).abs() < 1e-10 * (1.0 + cholesky.abs()), "{symmetric} {cholesky}");
        }
    }

    #[test]
    fn euler_density_transforms_as_top_form() {
        // linear change x = A y: g' = Aᵀ g A, density' = det A · density
        let m = builtin_manifold("s4").unwrap();
        let lc = LeviCivitaField::new(&m, 0);
        let mut ws = lc.workspace();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = 4;
        for x in random_points(d, 1.0, 10, 7) {
            lc.evaluate(&x, true, &mut ws).unwrap();
            let base = euler_density(&ws.jet.g, &ws.riemann, d, 1.0).unwrap();
            let a: Vec<f64> = (0..16).map(|i| rng.gen_range(-0.5..0.5) + if i % 5 == 0 { 1.5 } else { 0.0 }).collect();
            let mut a_inv = vec![0.0; 16];
            let det = invert_small(&a, d, &mut a_inv).unwrap();
            let mut g2 = vec![0.0; 16];
            for i in 0..d {
                for j in 0..d {
                    g2[i * d + j] = (0..d).map(|k| (0..d).map(|l| a[k * d + i] * ws.jet.g[k * d + l] * a[l * d + j]).sum::<f64>()).sum();
                }
            }
            let mut r2 = vec![0.0; 256];
            tensor_transform_curvature(&ws.riemann, &a, &a_inv, d, &mut r2);
            let moved = euler_density(&g2, &r2, d, 1.0).unwrap();
            assert!((moved - det * base).abs() < 1e-10 * (1.0 + base.abs()));
        }
    }
}
