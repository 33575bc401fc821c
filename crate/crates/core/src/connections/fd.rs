//! Transition maps whose derivatives are replaced by central differences.

use std::sync::Arc;

use crate::atlas::{AtlasManifold, MapJet, TransitionMap};
use crate::error::{Error, Result};

/// Wraps a transition and recomputes its Jacobian and Hessian from values
/// only, with central differences of step `step` (error `O(step²)`), or with
/// `levels` rounds of Richardson extrapolation over the steps
/// `step, 2·step, …, 2^levels·step` (error `O(step^{2+2·levels})`).
#[derive(Debug)]
pub struct FdTransition {
    pub inner: Arc<dyn TransitionMap>,
    pub step: f64,
    pub levels: usize,
}

impl FdTransition {
    pub fn new(inner: Arc<dyn TransitionMap>, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("finite-difference step {step}")));
        }
        Ok(Self {
            inner,
            step,
            levels: 0,
        })
    }

    /// The atlas with every transition wrapped in second-order differences.
    pub fn atlas(manifold: &AtlasManifold, step: f64) -> Result<AtlasManifold> {
        Self::atlas_extrapolated(manifold, step, 0)
    }

    /// The atlas with every transition wrapped in differences extrapolated
    /// `levels` times.
    pub fn atlas_extrapolated(manifold: &AtlasManifold, step: f64, levels: usize) -> Result<AtlasManifold> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("finite-difference step {step}")));
        }
        Ok(manifold.map_transitions(|inner| Arc::new(FdTransition { inner, step, levels }) as Arc<dyn TransitionMap>))
    }

    /// Central-difference Jacobian (and Hessian when `order ≥ 2`) at step `h`
    /// into `jet`, leaving `jet.value` untouched.
    fn differences(&self, x: &[f64], h: f64, order: usize, center: &[f64], jet: &mut MapJet) -> bool {
        let d = self.dim();
        let mut probe = MapJet::new(d);
        let mut xs = x.to_vec();
        let mut value_at = |xs: &[f64], out: &mut Vec<f64>| -> bool {
            if !self.inner.eval(xs, 0, &mut probe) {
                return false;
            }
            out.clear();
            out.extend_from_slice(&probe.value);
            true
        };
        let (mut plus, mut minus) = (Vec::with_capacity(d), Vec::with_capacity(d));
        for b in 0..d {
            xs[b] = x[b] + h;
            let ok_p = value_at(&xs, &mut plus);
            xs[b] = x[b] - h;
            let ok_m = value_at(&xs, &mut minus);
            xs[b] = x[b];
            if !(ok_p && ok_m) {
                return false;
            }
            for a in 0..d {
                jet.jac[a * d + b] = (plus[a] - minus[a]) / (2.0 * h);
                if order >= 2 {
                    jet.hess[(a * d + b) * d + b] = (plus[a] - 2.0 * center[a] + minus[a]) / (h * h);
                }
            }
        }
        if order >= 2 {
            let (mut pp, mut pm, mut mp, mut mm) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for b in 0..d {
                for c in b + 1..d {
                    let mut ok = true;
                    for (sb, sc, out) in [(1.0, 1.0, &mut pp), (1.0, -1.0, &mut pm), (-1.0, 1.0, &mut mp), (-1.0, -1.0, &mut mm)] {
                        xs[b] = x[b] + sb * h;
                        xs[c] = x[c] + sc * h;
                        ok &= value_at(&xs, out);
                    }
                    xs[b] = x[b];
                    xs[c] = x[c];
                    if !ok {
                        return false;
                    }
                    for a in 0..d {
                        let v = (pp[a] - pm[a] - mp[a] + mm[a]) / (4.0 * h * h);
                        jet.hess[(a * d + b) * d + c] = v;
                        jet.hess[(a * d + c) * d + b] = v;
                    }
                }
            }
        }
        true
    }
}

impl TransitionMap for FdTransition {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64], order: usize, jet: &mut MapJet) -> bool {
        if !self.inner.eval(x, 0, jet) {
            return false;
        }
        if order == 0 {
            return true;
        }
        let center = jet.value.clone();
        if !self.differences(x, self.step, order, &center, jet) {
            return false;
        }
        if self.levels == 0 {
            return true;
        }
        // table[k] holds the differences at step 2^k·h, extrapolated in place
        let mut table = Vec::with_capacity(self.levels + 1);
        table.push(jet.clone());
        for k in 1..=self.levels {
            let mut coarse = MapJet::new(self.dim());
            if !self.differences(x, self.step * (1u64 << k) as f64, order, &center, &mut coarse) {
                return false;
            }
            table.push(coarse);
        }
        for level in 1..=self.levels {
            let w = 4f64.powi(level as i32);
            for k in 0..=self.levels - level {
                let (fine, coarse) = table.split_at_mut(k + 1);
                let (f, c) = (&mut fine[k], &coarse[0]);
                for (a, b) in f.jac.iter_mut().zip(&c.jac).chain(f.hess.iter_mut().zip(&c.hess)) {
                    *a = (w * *a - b) / (w - 1.0);
                }
            }
        }
        jet.jac.copy_from_slice(&table[0].jac);
        jet.hess.copy_from_slice(&table[0].hess);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::builtins::InversionTransition;
    use crate::atlas::{builtin_manifold, random_points};

    #[test]
    fn finite_difference_jets_converge_quadratically() {
        let m = builtin_manifold("s2").unwrap();
        let exact = m.transition(0, 1).unwrap();
        let mut want = MapJet::new(2);
        let mut got = MapJet::new(2);
        let mut errors = Vec::new();
        for step in [1.0 / 32.0, 1.0 / 64.0] {
            let fd = FdTransition::new(Arc::new(InversionTransition { dim: 2 }), step)
            .unwrap();
            let mut worst = 0.0f64;
            for x in random_points(2, 1.0, 50, 3) {
                if x.iter().map(|v| v * v).sum::<f64>() < 0.25 {
                    continue;
                }
                assert!(exact.eval(&x, 2, &mut want));
                assert!(fd.eval(&x, 2, &mut got));
                assert_eq!(want.value, got.value);
                for (a, b) in want.jac.iter().chain(&want.hess).zip(got.jac.iter().chain(&got.hess)) {
                    worst = worst.max((a - b).abs());
                }
            }
            errors.push(worst);
        }
        assert!(errors[1] < errors[0] / 3.0, "{errors:?}");
    }

    #[test]
    fn extrapolated_jets_converge_at_fourth_order() {
        let m = builtin_manifold("s2").unwrap();
        let exact = m.transition(0, 1).unwrap();
        let (mut want, mut got) = (MapJet::new(2), MapJet::new(2));
        let mut errors = Vec::new();
        for step in [1.0 / 32.0, 1.0 / 64.0] {
            let mut fd = FdTransition::new(Arc::new(InversionTransition { dim: 2 }), step).unwrap();
            fd.levels = 1;
            let mut worst = 0.0f64;
            for x in random_points(2, 1.0, 50, 3) {
                if x.iter().map(|v| v * v).sum::<f64>() < 0.25 {
                    continue;
                }
                assert!(exact.eval(&x, 2, &mut want));
                assert!(fd.eval(&x, 2, &mut got));
                for (a, b) in want.jac.iter().chain(&want.hess).zip(got.jac.iter().chain(&got.hess)) {
                    worst = worst.max((a - b).abs());
                }
            }
            errors.push(worst);
        }
        assert!(errors[1] < errors[0] / 12.0, "{errors:?}");
    }
}
