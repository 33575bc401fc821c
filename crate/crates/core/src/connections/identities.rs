//! Auxiliary identities behind the coordinate independence of the piecewise
//! Euclidean curvature, as executable checks.

use crate::atlas::{AtlasManifold, MapJet};
use crate::error::{Error, Result};
use crate::forms::{antisymmetrize_pair, IndexRole, MultiIndexArray};

/// Paired bracket `(h_{μμ'νν'})_{[μν]'} = h_{μμ'νν'} − h_{νν'μμ'}` on a
/// `d×d×d×d` array.
pub fn paired_bracket(h: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d * d * d];
    for mu in 0..d {
        for mup in 0..d {
            for nu in 0..d {
                for nup in 0..d {
                    out[((mu * d + mup) * d + nu) * d + nup] =
                        h[((mu * d + mup) * d + nu) * d + nup] - h[((nu * d + nup) * d + mu) * d + mup];
                }
            }
        }
    }
    out
}

/// Largest deviation in `Σ_{μ'ν'} (f_{μμ'} g_{νν'})_{[μν]'} = (Σ_{μ'} f_{μμ'} Σ_{ν'} g_{νν'})_{[μν]}`.
pub fn paired_bracket_residual(f: &[f64], g: &[f64], d: usize) -> Result<f64> {
    if f.len() != d * d || g.len() != d * d {
        return Err(Error::Dimension(format!("expected {}x{} arrays", d, d)));
    }
    let mut h = vec![0.0; d * d * d * d];
    for mu in 0..d {
        for mup in 0..d {
            for nu in 0..d {
                for nup in 0..d {
                    h[((mu * d + mup) * d + nu) * d + nup] = f[mu * d + mup] * g[nu * d + nup];
                }
            }
        }
    }
    let bracketed = paired_bracket(&h, d);
    let mut lhs = vec![0.0; d * d];
    for mu in 0..d {
        for nu in 0..d {
            let mut s = 0.0;
            for mup in 0..d {
                for nup in 0..d {
                    s += bracketed[((mu * d + mup) * d + nu) * d + nup];
                }
            }
            lhs[mu * d + nu] = s;
        }
    }
    let row = |a: &[f64], i: usize| -> f64 { a[i * d..(i + 1) * d].iter().sum() };
    let mut product = MultiIndexArray::zeros(&[d, d], &[IndexRole::Lower, IndexRole::Lower])?;
    for mu in 0..d {
        for nu in 0..d {
            product.set(&[mu, nu], row(f, mu) * row(g, nu))?;
        }
    }
    let rhs = antisymmetrize_pair(&product, 0, 1)?;
    Ok(lhs.iter().zip(rhs.data()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Residual of `0 = Σ_l ((x_{k,l}∘x')_{,λ} x'_{l,ν} + (x_{k,l}∘x') x'_{l,νλ})`,
/// the derivative of `(Dx∘x')·Dx' = I`, at `p` in chart `from` with
/// `x' = from → to` and `x = to → from`. The derivative of the composite is
/// taken by central differences of step `step`; the residual is `O(step²)`.
pub fn differential_identity_residual(manifold: &AtlasManifold, from: usize, to: usize, p: &[f64], step: f64) -> Result<f64> {
    let d = manifold.dim();
    let mut fwd = MapJet::new(d);
    let mut rev = MapJet::new(d);
    manifold.map_point_checked(from, to, p, 2, &mut fwd)?;
    manifold.map_point_checked(to, from, &fwd.value.clone(), 1, &mut rev)?;
    let center_inverse = rev.jac.clone();
    let mut composite = |q: &[f64]| -> Result<Vec<f64>> {
        let mut f = MapJet::new(d);
        manifold.map_point_checked(from, to, q, 0, &mut f)?;
        manifold.map_point_checked(to, from, &f.value, 1, &mut rev)?;
        Ok(rev.jac.clone())
    };
    let mut dcomp = vec![0.0; d * d * d];
    let mut q = p.to_vec();
    for lam in 0..d {
        q[lam] = p[lam] + step;
        let plus = composite(&q)?;
        q[lam] = p[lam] - step;
        let minus = composite(&q)?;
        q[lam] = p[lam];
        for kl in 0..d * d {
            dcomp[kl * d + lam] = (plus[kl] - minus[kl]) / (2.0 * step);
        }
    }
    let mut worst = 0.0f64;
    for k in 0..d {
        for nu in 0..d {
            for lam in 0..d {
                let mut s = 0.0;
                for l in 0..d {
                    s += dcomp[(k * d + l) * d + lam] * fwd.jac[l * d + nu]
                        + center_inverse[k * d + l] * fwd.hess[(l * d + nu) * d + lam];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{builtin_manifold, random_points};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn paired_bracket_identity_on_random_arrays() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=5 {
            for _ in 0..20 {
                let f: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let g: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                assert!(paired_bracket_residual(&f, &g, d).unwrap() < 1e-13);
            }
        }
    }

    #[test]
    fn paired_bracket_is_antisymmetric_under_pair_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = 3;
        let h: Vec<f64> = (0..81).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = paired_bracket(&h, d);
        for a in 0..d {
            for ap in 0..d {
                for c in 0..d {
                    for cp in 0..d {
                        assert_eq!(b[((a * d + ap) * d + c) * d + cp], -b[((c * d + cp) * d + a) * d + ap]);
                    }
                }
            }
        }
    }

    #[test]
    fn differential_identity_on_sphere_transitions() {
        let m = builtin_manifold("s2").unwrap();
        let mut errors = Vec::new();
        for step in [1e-2, 5e-3] {
            let mut worst = 0.0f64;
            for p in random_points(2, 2.0, 200, 13) {
                let r2: f64 = p.iter().map(|v| v * v).sum();
                if r2 < 0.25 {
                    continue;
                }
                worst = worst.max(differential_identity_residual(&m, 0, 1, &p, step).unwrap());
            }
            errors.push(worst);
        }
        assert!(errors.iter().all(|&e| e < 1e-6), "{errors:?}");
    }

    #[test]
    fn differential_identity_outside_overlap_is_an_error() {
        let m = builtin_manifold("s2").unwrap();
        assert!(matches!(
            differential_identity_residual(&m, 0, 1, &[0.0, 0.0], 1e-3),
            Err(Error::OutsideOverlap { .. })
        ));
    }
}
