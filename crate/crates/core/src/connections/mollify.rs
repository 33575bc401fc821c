//! Mollified piecewise Euclidean connection.
//!
//! The transitions `yⁱ`, their derivatives and the unnormalized bumps `ψ̃_i`
//! are convolved, in the coordinates of the target chart, with a discrete
//! radial bump kernel of radius `δ`; the weights are renormalized to a
//! partition of unity, and the curvature is assembled from the smoothed data
//! by the same second-derivative-only formula as the unsmoothed connection.

use rayon::prelude::*;

use super::piecewise::PeTerms;
use super::{max_abs_diff, ChristoffelField, ChristoffelSource, CurvatureField, CurvatureProvenance, PiecewiseEuclideanField};
use crate::atlas::pou::COVERAGE_FLOOR;
use crate::atlas::{bump, AtlasManifold, BumpJet, MapJet};
use crate::error::{Error, Result};

/// Stencil subdivisions per unit `δ`.
pub const STENCIL_DIVISIONS: usize = 8;

/// Discrete convolution kernel `φ_δ` on a uniform stencil of step `δ/8`
/// covering `[−δ, δ]^d`; `weights` already include the cell volume and sum
/// to one.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub dim: usize,
    pub delta: f64,
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Mollifier {
    pub fn new(dim: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("mollification radius {delta}")));
        }
        let n = 2 * STENCIL_DIVISIONS + 1;
        let step = delta / STENCIL_DIVISIONS as f64;
        let total = n.pow(dim as u32);
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut z = vec![0.0; dim];
        for flat in 0..total {
            let mut rest = flat;
            for c in (0..dim).rev() {
                z[c] = (rest % n) as f64 * step - delta;
                rest /= n;
            }
            let r2 = z.iter().map(|v| v * v).sum::<f64>() / (delta * delta);
            if r2 >= 1.0 {
                continue;
            }
            offsets.extend_from_slice(&z);
            weights.push((-1.0 / (1.0 - r2)).exp());
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self {
            dim,
            delta,
            offsets,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ φ_δ h^d`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn offset(&self, k: usize) -> &[f64] {
        &self.offsets[k * self.dim..(k + 1) * self.dim]
    }
}

/// Smallest distance between a partition-of-unity support and its chart
/// boundary.
pub fn support_margin(manifold: &AtlasManifold) -> f64 {
    manifold.charts().iter().map(|c| c.radius - c.support).fold(f64::INFINITY, f64::min)
}

/// Scratch state for [`MollifiedPeField::evaluate`].
#[derive(Clone, Debug)]
pub struct MollifiedWorkspace {
    jet: MapJet,
    bump: BumpJet,
    raw: Vec<f64>,
    raw_grad: Vec<f64>,
    jac: Vec<f64>,
    hess: Vec<f64>,
    undefined: Vec<bool>,
    terms: PeTerms,
    pub gamma: Vec<f64>,
    pub riemann: Vec<f64>,
}

/// Mollified piecewise Euclidean connection on one target chart.
#[derive(Clone, Debug)]
pub struct MollifiedPeField {
    manifold: AtlasManifold,
    chart: usize,
    kernel: Mollifier,
}

impl MollifiedPeField {
    /// Fails with a margin error unless `δ < margin / 2`.
    pub fn new(manifold: &AtlasManifold, chart: usize, delta: f64) -> Result<Self> {
        let margin = support_margin(manifold);
        if delta >= 0.5 * margin {
            return Err(Error::Margin { delta, margin });
        }
        Ok(Self {
            manifold: manifold.clone(),
            chart,
            kernel: Mollifier::new(manifold.dim(), delta)?,
        })
    }

    pub fn kernel(&self) -> &Mollifier {
        &self.kernel
    }

    pub fn workspace(&self) -> MollifiedWorkspace {
        let d = self.manifold.dim();
        let n = self.manifold.chart_count();
        MollifiedWorkspace {
            jet: MapJet::new(d),
            bump: BumpJet::new(d),
            raw: vec![0.0; n],
            raw_grad: vec![0.0; n * d],
            jac: vec![0.0; n * d * d],
            hess: vec![0.0; n * d * d * d],
            undefined: vec![false; n],
            terms: PeTerms::new(d, n),
            gamma: vec![0.0; d * d * d],
            riemann: vec![0.0; d * d * d * d],
        }
    }

    pub fn evaluate(&self, x: &[f64], ws: &mut MollifiedWorkspace) -> Result<()> {
        let m = &self.manifold;
        let d = m.dim();
        let t = self.chart;
        let n = m.chart_count();
        ws.raw.iter_mut().for_each(|v| *v = 0.0);
        ws.raw_grad.iter_mut().for_each(|v| *v = 0.0);
        ws.jac.iter_mut().for_each(|v| *v = 0.0);
        ws.hess.iter_mut().for_each(|v| *v = 0.0);
        ws.undefined.iter_mut().for_each(|v| *v = false);
        let mut p = vec![0.0; d];
        for k in 0..self.kernel.len() {
            let w = self.kernel.weights[k];
            let z = self.kernel.offset(k);
            for c in 0..d {
                p[c] = x[c] - z[c];
            }
            for i in 0..n {
                if i == t {
                    bump(&p, m.chart(i).support, 1, &mut ws.bump);
                    ws.raw[i] += w * ws.bump.value;
                    for mu in 0..d {
                        ws.raw_grad[i * d + mu] += w * ws.bump.grad[mu];
                    }
                    continue;
                }
                if !m.map_point(t, i, &p, 2, &mut ws.jet) {
                    ws.undefined[i] = true;
                    continue;
                }
                bump(&ws.jet.value, m.chart(i).support, 1, &mut ws.bump);
                let jet = &ws.jet;
                ws.raw[i] += w * ws.bump.value;
                for mu in 0..d {
                    let g: f64 = (0..d).map(|l| ws.bump.grad[l] * jet.jac[l * d + mu]).sum();
                    ws.raw_grad[i * d + mu] += w * g;
                }
                for (acc, v) in ws.jac[i * d * d..(i + 1) * d * d].iter_mut().zip(&jet.jac) {
                    *acc += w * v;
                }
                for (acc, v) in ws.hess[i * d * d * d..(i + 1) * d * d * d].iter_mut().zip(&jet.hess) {
                    *acc += w * v;
                }
            }
        }
        let total: f64 = ws.raw.iter().sum();
        if !(total >= COVERAGE_FLOOR) {
            return Err(Error::Coverage {
                chart: t,
                point: x.to_vec(),
                denominator: total,
            });
        }
        let mut sg = [0.0f64; 8];
        for i in 0..n {
            for mu in 0..d {
                sg[mu] += ws.raw_grad[i * d + mu];
            }
        }
        ws.terms.clear();
        let mut grad = [0.0f64; 8];
        for i in 0..n {
            if i == t || ws.raw[i] == 0.0 {
                continue;
            }
            if ws.undefined[i] {
                return Err(Error::Margin {
                    delta: self.kernel.delta,
                    margin: support_margin(m),
                });
            }
            let weight = ws.raw[i] / total;
            for mu in 0..d {
                grad[mu] = (ws.raw_grad[i * d + mu] - weight * sg[mu]) / total;
            }
            let jac = &ws.jac[i * d * d..(i + 1) * d * d];
            let hess = &ws.hess[i * d * d * d..(i + 1) * d * d * d];
            if !ws.terms.push_from_jacobian(weight, &grad[..d], jac, hess) {
                return Err(Error::Atlas(format!("mollified transition {t}->{i} singular at {x:?}")));
            }
        }
        ws.terms.assemble(&mut ws.gamma, Some(&mut ws.riemann));
        Ok(())
    }
}

impl ChristoffelField for MollifiedPeField {
    fn dim(&self) -> usize {
        self.manifold.dim()
    }

    fn chart(&self) -> usize {
        self.chart
    }

    fn source(&self) -> ChristoffelSource {
        ChristoffelSource::Mollified(self.kernel.delta)
    }

    fn christoffel(&self, x: &[f64], gamma: &mut [f64]) -> Result<()> {
        let mut ws = self.workspace();
        self.evaluate(x, &mut ws)?;
        gamma.copy_from_slice(&ws.gamma);
        Ok(())
    }
}

impl CurvatureField for MollifiedPeField {
    fn dim(&self) -> usize {
        self.manifold.dim()
    }

    fn chart(&self) -> usize {
        self.chart
    }

    fn provenance(&self) -> CurvatureProvenance {
        CurvatureProvenance::PeFormula
    }

    fn curvature(&self, x: &[f64], r: &mut [f64]) -> Result<()> {
        let mut ws = self.workspace();
        self.evaluate(x, &mut ws)?;
        r.copy_from_slice(&ws.riemann);
        Ok(())
    }
}

/// Sup-distance between mollified and unmollified curvature over the
/// `n^d` uniform grid on the support box of `chart`.
pub fn mollification_distance(manifold: &AtlasManifold, chart: usize, delta: f64, n: usize) -> Result<f64> {
    let d = manifold.dim();
    if n < 2 {
        return Err(Error::GridTooSmall(format!("{n} points per axis, need at least 2")));
    }
    let field = MollifiedPeField::new(manifold, chart, delta)?;
    let exact = PiecewiseEuclideanField::new(manifold, chart);
    let s = manifold.chart(chart).support;
    let total = n.pow(d as u32);
    let worst = (0..total)
        .into_par_iter()
        .map_init(
            || (field.workspace(), exact.workspace(), vec![0.0; d]),
            |(mw, pw, x), flat| -> Result<f64> {
                let mut rest = flat;
                for c in (0..d).rev() {
                    x[c] = -s + 2.0 * s * (rest % n) as f64 / (n - 1) as f64;
                    rest /= n;
                }
                field.evaluate(x, mw)?;
                exact.evaluate(x, true, pw)?;
                Ok(max_abs_diff(&mw.riemann, &pw.riemann))
            },
        )
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}
