//! Change of coordinates for Christoffel symbols.

use super::{ChristoffelField, ChristoffelSource};
use crate::atlas::{AtlasManifold, MapJet};
use crate::error::{Error, Result};

/// `Γ^k_{μν} = Σ J_{μ'μ} J_{ν'ν} Γ'^{k'}_{μ'ν'} X_{kk'} + Σ_l X_{kl} H_{lμν}`
/// where `J, H` are the Jacobian and Hessian of the transition `x ↦ y` at
/// `x`, `X` the Jacobian of the reverse transition at `y`, and `Γ'` the
/// source symbols at `y`.
pub fn pushforward_christoffel(source: &[f64], jac: &[f64], hess: &[f64], reverse_jac: &[f64], d: usize, out: &mut [f64]) {
    let mut a = [0.0f64; 512];
    // a^{k'}_{μ ν'} = Σ_{μ'} Γ'^{k'}_{μ'ν'} J_{μ'μ}
    for kp in 0..d {
        for mu in 0..d {
            for nup in 0..d {
                let mut s = 0.0;
                for mup in 0..d {
                    s += source[(kp * d + mup) * d + nup] * jac[mup * d + mu];
                }
                a[(kp * d + mu) * d + nup] = s;
            }
        }
    }
    let mut b = [0.0f64; 512];
    for kp in 0..d {
        for mu in 0..d {
            for nu in 0..d {
                let mut s = 0.0;
                for nup in 0..d {
                    s += a[(kp * d + mu) * d + nup] * jac[nup * d + nu];
                }
                b[(kp * d + mu) * d + nu] = s + hess[(kp * d + mu) * d + nu];
            }
        }
    }
    for k in 0..d {
        for mn in 0..d * d {
            let mut s = 0.0;
            for kp in 0..d {
                s += reverse_jac[k * d + kp] * b[kp * d * d + mn];
            }
            out[k * d * d + mn] = s;
        }
    }
}

/// Christoffel field of chart `to` obtained by pushing a field on chart
/// `from` through the coordinate change.
pub struct PushforwardField<F: ChristoffelField> {
    pub manifold: AtlasManifold,
    pub source: F,
    pub to: usize,
}

impl<F: ChristoffelField> PushforwardField<F> {
    pub fn new(manifold: &AtlasManifold, source: F, to: usize) -> Self {
        Self {
            manifold: manifold.clone(),
            source,
            to,
        }
    }
}

impl<F: ChristoffelField> ChristoffelField for PushforwardField<F> {
    fn dim(&self) -> usize {
        self.manifold.dim()
    }

    fn chart(&self) -> usize {
        self.to
    }

    fn source(&self) -> ChristoffelSource {
        ChristoffelSource::Pushforward
    }

    fn christoffel(&self, x: &[f64], gamma: &mut [f64]) -> Result<()> {
        let d = self.manifold.dim();
        let from = self.source.chart();
        let mut fwd = MapJet::new(d);
        let mut rev = MapJet::new(d);
        self.manifold.map_point_checked(self.to, from, x, 2, &mut fwd)?;
        if !self.manifold.map_point(from, self.to, &fwd.value, 1, &mut rev) {
            return Err(Error::OutsideOverlap {
                from,
                to: self.to,
                point: fwd.value.clone(),
            });
        }
        let mut src = vec![0.0; d * d * d];
        self.source.christoffel(&fwd.value, &mut src)?;
        pushforward_christoffel(&src, &fwd.jac, &fwd.hess, &rev.jac, d, gamma);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::builtins::AffineTransition;
    use crate::atlas::{builtin_manifold, random_points, TransitionMap};
    use crate::connections::{max_abs_diff, LeviCivitaField, PiecewiseEuclideanField};

    #[test]
    fn identity_transition_leaves_symbols_unchanged() {
        let d = 3;
        let src: Vec<f64> = (0..27).map(|v| v as f64 * 0.1 - 1.0).collect();
        let mut id = MapJet::new(d);
        id.set_identity(&[0.0; 3]);
        let mut out = vec![0.0; 27];
        pushforward_christoffel(&src, &id.jac, &id.hess, &id.jac, d, &mut out);
        assert_eq!(out, src);
    }

    #[test]
    fn affine_transition_of_flat_connection_is_flat() {
        let t = AffineTransition {
            matrix: vec![2.0, 1.0, 0.5, 3.0],
            offset: vec![0.1, -0.2],
        };
        let mut jet = MapJet::new(2);
        assert!(t.eval(&[0.3, 0.4], 2, &mut jet));
        let mut out = vec![1.0; 8];
        pushforward_christoffel(&[0.0; 8], &jet.jac, &jet.hess, &[0.6, -0.2, -0.1, 0.4], 2, &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn levi_civita_is_natural() {
        for name in ["s2_perturbed(0.2)", "cp2"] {
            let m = builtin_manifold(name).unwrap();
            let d = m.dim();
            let pushed = PushforwardField::new(&m, LeviCivitaField::new(&m, 1), 0);
            let direct = LeviCivitaField::new(&m, 0);
            let (mut a, mut b) = (vec![0.0; d * d * d], vec![0.0; d * d * d]);
            let mut jet = MapJet::new(d);
            let mut checked = 0;
            for x in random_points(d, 2.4, 400, 5) {
                if !m.map_point(0, 1, &x, 0, &mut jet) {
                    continue;
                }
                pushed.christoffel(&x, &mut a).unwrap();
                direct.christoffel(&x, &mut b).unwrap();
                let scale = 1.0 + b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
                assert!(max_abs_diff(&a, &b) < 1e-9 * scale, "{name}");
                checked += 1;
            }
            assert!(checked > 20);
        }
    }

    #[test]
    fn round_trip_recovers_symbols() {
        let m = builtin_manifold("s2").unwrap();
        let there = PushforwardField::new(&m, PiecewiseEuclideanField::new(&m, 0), 1);
        let back = PushforwardField::new(&m, there, 0);
        let direct = PiecewiseEuclideanField::new(&m, 0);
        let (mut a, mut b) = (vec![0.0; 8], vec![0.0; 8]);
        for x in random_points(2, 2.0, 100, 6) {
            if x.iter().map(|v| v * v).sum::<f64>() < 0.2 {
                continue;
            }
            back.christoffel(&x, &mut a).unwrap();
            direct.christoffel(&x, &mut b).unwrap();
            assert!(max_abs_diff(&a, &b) < 1e-6);
        }
    }

    #[test]
    fn piecewise_euclidean_connection_is_global() {
        for name in ["s2", "cp2"] {
            let m = builtin_manifold(name).unwrap();
            let d = m.dim();
            let pushed = PushforwardField::new(&m, PiecewiseEuclideanField::new(&m, 1), 0);
            let direct = PiecewiseEuclideanField::new(&m, 0);
            let (mut a, mut b) = (vec![0.0; d * d * d], vec![0.0; d * d * d]);
            let mut jet = MapJet::new(d);
            for x in random_points(d, 2.4, 300, 7) {
                if !m.map_point(0, 1, &x, 0, &mut jet) {
                    continue;
                }
                pushed.christoffel(&x, &mut a).unwrap();
                direct.christoffel(&x, &mut b).unwrap();
                let scale = 1.0 + b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
                assert!(max_abs_diff(&a, &b) < 1e-9 * scale, "{name}");
            }
        }
    }
}
