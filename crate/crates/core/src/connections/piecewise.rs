//! Piecewise Euclidean connection: the partition-of-unity convex combination
//! of the flat connections of the individual charts, and its curvature from
//! first and second transition derivatives only.
//!
//! In a target chart, with `y = yⁱ(x)` the coordinates in chart `i`,
//! `X = (Dxⁱ)(y)` the Jacobian of the reverse transition and `H = D²yⁱ`:
//!
//! - `ⁱΓ^k_{μν} = Σ_l X_{kl} H_{lμν}` and `Γ = Σ_i ψ_i ⁱΓ`;
//! - `R^k_{λμν} = (Σ_κ Γ^k_{μκ}Γ^κ_{νλ} + Σ_i ∂_μψ_i ⁱΓ^k_{νλ}
//!   + ψ_i Σ_l ∂_μ(X_{kl}) H_{lνλ})_{[μν]}`.
//!
//! The term with third derivatives of `yⁱ` is symmetric in `(μ, ν)` and
//! drops out of the bracket, so it is never formed.

use super::{invert_small, ChristoffelField, ChristoffelSource, CurvatureField, CurvatureProvenance};
use crate::atlas::{AtlasManifold, MapJet, PartitionOfUnity, PouSample};
use crate::error::{Error, Result};

/// How `X` and `∂_μ X` are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InverseRoute {
    /// From the jets of the reverse transition at `y`:
    /// `∂_μ X_{kl} = Σ_m (D²xⁱ)_{klm}(y) (Dyⁱ)_{mμ}`.
    ReverseTransition,
    /// From `X = (Dyⁱ)⁻¹` and `∂_μ X = −X (∂_μ Dyⁱ) X`.
    Jacobian,
}

/// Per-chart data entering the assembly: weight, weight gradient, transition
/// Hessian, inverse Jacobian and its derivative.
#[derive(Clone, Debug)]
pub struct PeTerms {
    dim: usize,
    count: usize,
    weight: Vec<f64>,
    grad: Vec<f64>,
    hess: Vec<f64>,
    inverse: Vec<f64>,
    dinverse: Vec<f64>,
    igamma: Vec<f64>,
    scratch: Vec<f64>,
}

impl PeTerms {
    pub fn new(dim: usize, capacity: usize) -> Self {
        let d = dim;
        Self {
            dim,
            count: 0,
            weight: vec![0.0; capacity],
            grad: vec![0.0; capacity * d],
            hess: vec![0.0; capacity * d * d * d],
            inverse: vec![0.0; capacity * d * d],
            dinverse: vec![0.0; capacity * d * d * d],
            igamma: vec![0.0; capacity * d * d * d],
            scratch: vec![0.0; d * d * d * d],
        }
    }

    pub fn clear(&mut self) {
        self.count = 0;
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    fn grow(&mut self) {
        let d = self.dim;
        let cap = (self.weight.len() * 2).max(1);
        self.weight.resize(cap, 0.0);
        self.grad.resize(cap * d, 0.0);
        self.hess.resize(cap * d * d * d, 0.0);
        self.inverse.resize(cap * d * d, 0.0);
        self.dinverse.resize(cap * d * d * d, 0.0);
        self.igamma.resize(cap * d * d * d, 0.0);
    }

    /// Append a term whose inverse data come from the Jacobian route.
    /// Returns `false` if `jac` is singular.
    pub fn push_from_jacobian(&mut self, weight: f64, grad: &[f64], jac: &[f64], hess: &[f64]) -> bool {
        let d = self.dim;
        if self.count == self.weight.len() {
            self.grow();
        }
        let n = self.count;
        let inv = &mut self.inverse[n * d * d..(n + 1) * d * d];
        if invert_small(jac, d, inv).is_none() {
            return false;
        }
        let t = &mut self.dinverse[n * d * d * d..(n + 1) * d * d * d];
        // ∂_μ X_{kl} = −Σ_{ab} X_{ka} H_{abμ} X_{bl}
        let mut xh = [0.0f64; 512];
        for k in 0..d {
            for b in 0..d {
                for mu in 0..d {
                    let mut s = 0.0;
                    for a in 0..d {
                        s += inv[k * d + a] * hess[(a * d + b) * d + mu];
                    }
                    xh[(k * d + b) * d + mu] = s;
                }
            }
        }
        for k in 0..d {
            for l in 0..d {
                for mu in 0..d {
                    let mut s = 0.0;
                    for b in 0..d {
                        s += xh[(k * d + b) * d + mu] * inv[b * d + l];
                    }
                    t[(k * d + l) * d + mu] = -s;
                }
            }
        }
        self.finish_push(weight, grad, hess);
        true
    }

    /// Append a term with the reverse transition jet `reverse` evaluated at
    /// `y`, and the forward jacobian `jac`.
    pub fn push_from_reverse(&mut self, weight: f64, grad: &[f64], jac: &[f64], hess: &[f64], reverse: &MapJet) {
        let d = self.dim;
        if self.count == self.weight.len() {
            self.grow();
        }
        let n = self.count;
        self.inverse[n * d * d..(n + 1) * d * d].copy_from_slice(&reverse.jac);
        let t = &mut self.dinverse[n * d * d * d..(n + 1) * d * d * d];
        for k in 0..d {
            for l in 0..d {
                for mu in 0..d {
                    let mut s = 0.0;
                    for m in 0..d {
                        s += reverse.hess[(k * d + l) * d + m] * jac[m * d + mu];
                    }
                    t[(k * d + l) * d + mu] = s;
                }
            }
        }
        self.finish_push(weight, grad, hess);
    }

    fn finish_push(&mut self, weight: f64, grad: &[f64], hess: &[f64]) {
        let d = self.dim;
        let n = self.count;
        self.weight[n] = weight;
        self.grad[n * d..(n + 1) * d].copy_from_slice(&grad[..d]);
        self.hess[n * d * d * d..(n + 1) * d * d * d].copy_from_slice(&hess[..d * d * d]);
        self.count += 1;
    }

    /// Assemble `Γ` and, if requested, `R` from the stored terms.
    pub fn assemble(&mut self, gamma: &mut [f64], riemann: Option<&mut [f64]>) {
        let d = self.dim;
        let n3 = d * d * d;
        let igamma = &mut self.igamma;
        let m = &mut self.scratch;
        gamma[..n3].iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.count {
            let x = &self.inverse[i * d * d..(i + 1) * d * d];
            let h = &self.hess[i * n3..(i + 1) * n3];
            let ig = &mut igamma[i * n3..(i + 1) * n3];
            for k in 0..d {
                for mn in 0..d * d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += x[k * d + l] * h[l * d * d + mn];
                    }
                    ig[k * d * d + mn] = s;
                }
            }
            let w = self.weight[i];
            for (g, v) in gamma.iter_mut().zip(ig.iter()) {
                *g += w * v;
            }
        }
        let Some(r) = riemann else {
            return;
        };
        for k in 0..d {
            for lam in 0..d {
                for mu in 0..d {
                    for nu in 0..d {
                        let mut v = 0.0;
                        for kappa in 0..d {
                            v += gamma[(k * d + mu) * d + kappa] * gamma[(kappa * d + nu) * d + lam];
                        }
                        m[((k * d + lam) * d + mu) * d + nu] = v;
                    }
                }
            }
        }
        for i in 0..self.count {
            let w = self.weight[i];
            let grad = &self.grad[i * d..(i + 1) * d];
            let ig = &igamma[i * n3..(i + 1) * n3];
            let t = &self.dinverse[i * n3..(i + 1) * n3];
            let h = &self.hess[i * n3..(i + 1) * n3];
            for k in 0..d {
                for lam in 0..d {
                    for mu in 0..d {
                        for nu in 0..d {
                            let mut v = grad[mu] * ig[(k * d + nu) * d + lam];
                            if w != 0.0 {
                                let mut s = 0.0;
                                for l in 0..d {
                                    s += t[(k * d + l) * d + mu] * h[(l * d + nu) * d + lam];
                                }
                                v += w * s;
                            }
                            m[((k * d + lam) * d + mu) * d + nu] += v;
                        }
                    }
                }
            }
        }
        for k in 0..d {
            for lam in 0..d {
                for mu in 0..d {
                    for nu in 0..d {
                        r[((k * d + lam) * d + mu) * d + nu] =
                            m[((k * d + lam) * d + mu) * d + nu] - m[((k * d + lam) * d + nu) * d + mu];
                    }
                }
            }
        }
    }
}

/// Scratch state for [`PiecewiseEuclideanField::evaluate`].
#[derive(Clone, Debug)]
pub struct PeWorkspace {
    pub pou: PouSample,
    reverse: MapJet,
    terms: PeTerms,
    pub gamma: Vec<f64>,
    pub riemann: Vec<f64>,
}

/// Piecewise Euclidean connection and its curvature on one target chart.
#[derive(Clone, Debug)]
pub struct PiecewiseEuclideanField {
    pou: PartitionOfUnity,
    chart: usize,
    route: InverseRoute,
}

impl PiecewiseEuclideanField {
    pub fn new(manifold: &AtlasManifold, chart: usize) -> Self {
        Self::with_route(manifold, chart, InverseRoute::ReverseTransition)
    }

    pub fn with_route(manifold: &AtlasManifold, chart: usize, route: InverseRoute) -> Self {
        Self {
            pou: PartitionOfUnity::new(manifold),
            chart,
            route,
        }
    }

    pub fn manifold(&self) -> &AtlasManifold {
        self.pou.manifold()
    }

    pub fn workspace(&self) -> PeWorkspace {
        let m = self.pou.manifold();
        let d = m.dim();
        PeWorkspace {
            pou: self.pou.workspace(),
            reverse: MapJet::new(d),
            terms: PeTerms::new(d, m.chart_count()),
            gamma: vec![0.0; d * d * d],
            riemann: vec![0.0; d * d * d * d],
        }
    }

    /// Fill `ws.gamma` and, when `curvature` is set, `ws.riemann` at `x`;
    /// `ws.pou` holds the partition of unity at `x` afterwards.
    pub fn evaluate(&self, x: &[f64], curvature: bool, ws: &mut PeWorkspace) -> Result<()> {
        let m = self.pou.manifold();
        let d = m.dim();
        let t = self.chart;
        self.pou.evaluate(t, x, usize::from(curvature), 2, &mut ws.pou)?;
        ws.terms.clear();
        let zeros = [0.0f64; 8];
        for &i in &ws.pou.active {
            if i == t {
                continue; // flat in its own coordinates: X = I, H = 0
            }
            let jet = &ws.pou.jets[i];
            if jet.hess.iter().all(|&v| v == 0.0) {
                continue; // affine transition
            }
            let grad = if curvature { ws.pou.weight_grad(i) } else { &zeros[..d] };
            match self.route {
                InverseRoute::ReverseTransition => {
                    if !m.map_point(i, t, &jet.value, 2, &mut ws.reverse) {
                        return Err(Error::OutsideOverlap {
                            from: i,
                            to: t,
                            point: jet.value.clone(),
                        });
                    }
                    ws.terms.push_from_reverse(ws.pou.weight[i], grad, &jet.jac, &jet.hess, &ws.reverse);
                }
                InverseRoute::Jacobian => {
                    if !ws.terms.push_from_jacobian(ws.pou.weight[i], grad, &jet.jac, &jet.hess) {
                        return Err(Error::Atlas(format!("transition {t}->{i} singular at {x:?}")));
                    }
                }
            }
        }
        let r = if curvature { Some(&mut ws.riemann[..]) } else { None };
        ws.terms.assemble(&mut ws.gamma, r);
        Ok(())
    }
}

impl ChristoffelField for PiecewiseEuclideanField {
    fn dim(&self) -> usize {
        self.pou.manifold().dim()
    }

    fn chart(&self) -> usize {
        self.chart
    }

    fn source(&self) -> ChristoffelSource {
        ChristoffelSource::PiecewiseEuclidean
    }

    fn christoffel(&self, x: &[f64], gamma: &mut [f64]) -> Result<()> {
        let mut ws = self.workspace();
        self.evaluate(x, false, &mut ws)?;
        gamma.copy_from_slice(&ws.gamma);
        Ok(())
    }
}

impl CurvatureField for PiecewiseEuclideanField {
    fn dim(&self) -> usize {
        self.pou.manifold().dim()
    }

    fn chart(&self) -> usize {
        self.chart
    }

    fn provenance(&self) -> CurvatureProvenance {
        CurvatureProvenance::PeFormula
    }

    fn curvature(&self, x: &[f64], r: &mut [f64]) -> Result<()> {
        let mut ws = self.workspace();
        self.evaluate(x, true, &mut ws)?;
        r.copy_from_slice(&ws.riemann);
        Ok(())
    }
}
