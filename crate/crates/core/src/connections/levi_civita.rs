//! Levi-Civita connection of a chart metric with closed-form derivatives.

use super::{curvature_from_christoffel, invert_small, ChristoffelField, ChristoffelSource, CurvatureField, CurvatureProvenance};
use crate::atlas::{AtlasManifold, MetricJet};
use crate::error::{Error, Result};

/// Scratch buffers for [`levi_civita`].
#[derive(Clone, Debug)]
pub struct LeviCivitaWorkspace {
    pub dim: usize,
    pub jet: MetricJet,
    pub inverse: Vec<f64>,
    pub det: f64,
    lowered: Vec<f64>,
    scratch: Vec<f64>,
    pub gamma: Vec<f64>,
    pub dgamma: Vec<f64>,
    pub riemann: Vec<f64>,
}

impl LeviCivitaWorkspace {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            jet: MetricJet::new(dim),
            inverse: vec![0.0; dim * dim],
            det: 0.0,
            lowered: vec![0.0; dim * dim * dim],
            scratch: vec![0.0; dim * dim * dim * dim],
            gamma: vec![0.0; dim * dim * dim],
            dgamma: vec![0.0; dim * dim * dim * dim],
            riemann: vec![0.0; dim * dim * dim * dim],
        }
    }
}

/// Christoffel symbols `Γ^k_{μν} = g^{kκ} L_{κμν}` with
/// `L_{κμν} = ½(∂_ν g_{κμ} + ∂_μ g_{κν} − ∂_κ g_{μν})` from the metric jet in
/// `ws.jet`, and, when `derivatives` is set,
/// `∂_σΓ^k_{μν} = g^{kκ}(∂_σ L_{κμν} − ∂_σ g_{κρ} Γ^ρ_{μν})`.
///
/// `point` is only used for error reports.
pub fn levi_civita(ws: &mut LeviCivitaWorkspace, derivatives: bool, point: &[f64]) -> Result<()> {
    let d = ws.dim;
    let jet = &ws.jet;
    let det = invert_small(&jet.g, d, &mut ws.inverse).ok_or_else(|| Error::SingularMetric { point: point.to_vec() })?;
    if !(det > 0.0) {
        return Err(Error::NotPositiveDefinite { point: point.to_vec() });
    }
    ws.det = det;
    let dg = |k: usize, l: usize, m: usize| jet.dg[(k * d + l) * d + m];
    for kappa in 0..d {
        for mu in 0..d {
            for nu in 0..d {
                ws.lowered[(kappa * d + mu) * d + nu] = 0.5 * (dg(kappa, mu, nu) + dg(kappa, nu, mu) - dg(mu, nu, kappa));
            }
        }
    }
    for k in 0..d {
        for mn in 0..d * d {
            let mut s = 0.0;
            for kappa in 0..d {
                s += ws.inverse[k * d + kappa] * ws.lowered[kappa * d * d + mn];
            }
            ws.gamma[k * d * d + mn] = s;
        }
    }
    if !derivatives {
        return Ok(());
    }
    let ddg = |k: usize, l: usize, m: usize, n: usize| jet.ddg[((k * d + l) * d + m) * d + n];
    // A_{κμνσ} = ∂_σ L_{κμν} − ∂_σ g_{κρ} Γ^ρ_{μν}
    let a = &mut ws.scratch;
    for kappa in 0..d {
        for mu in 0..d {
            for nu in 0..d {
                for sigma in 0..d {
                    let mut v = 0.5 * (ddg(kappa, mu, nu, sigma) + ddg(kappa, nu, mu, sigma) - ddg(mu, nu, kappa, sigma));
                    for rho in 0..d {
                        v -= dg(kappa, rho, sigma) * ws.gamma[(rho * d + mu) * d + nu];
                    }
                    a[((kappa * d + mu) * d + nu) * d + sigma] = v;
                }
            }
        }
    }
    let block = d * d * d;
    for k in 0..d {
        for idx in 0..block {
            let mut s = 0.0;
            for kappa in 0..d {
                s += ws.inverse[k * d + kappa] * a[kappa * block + idx];
            }
            ws.dgamma[k * block + idx] = s;
        }
    }
    Ok(())
}

/// Levi-Civita connection on one chart of an atlas.
#[derive(Clone, Debug)]
pub struct LeviCivitaField {
    manifold: AtlasManifold,
    chart: usize,
}

impl LeviCivitaField {
    pub fn new(manifold: &AtlasManifold, chart: usize) -> Self {
        Self {
            manifold: manifold.clone(),
            chart,
        }
    }

    pub fn workspace(&self) -> LeviCivitaWorkspace {
        LeviCivitaWorkspace::new(self.manifold.dim())
    }

    /// Fill `ws` with Γ, ∂Γ and R at `x`.
    pub fn evaluate(&self, x: &[f64], curvature: bool, ws: &mut LeviCivitaWorkspace) -> Result<()> {
        let order = if curvature { 2 } else { 1 };
        self.manifold.chart(self.chart).metric.eval(x, order, &mut ws.jet)?;
        levi_civita(ws, curvature, x)?;
        if curvature {
            curvature_from_christoffel(&ws.gamma, &ws.dgamma, ws.dim, &mut ws.riemann);
        }
        Ok(())
    }
}

impl ChristoffelField for LeviCivitaField {
    fn dim(&self) -> usize {
        self.manifold.dim()
    }

    fn chart(&self) -> usize {
        self.chart
    }

    fn source(&self) -> ChristoffelSource {
        ChristoffelSource::LeviCivita
    }

    fn christoffel(&self, x: &[f64], gamma: &mut [f64]) -> Result<()> {
        let mut ws = self.workspace();
        self.evaluate(x, false, &mut ws)?;
        gamma.copy_from_slice(&ws.gamma);
        Ok(())
    }
}

impl CurvatureField for LeviCivitaField {
    fn dim(&self) -> usize {
        self.manifold.dim()
    }

    fn chart(&self) -> usize {
        self.chart
    }

    fn provenance(&self) -> CurvatureProvenance {
        CurvatureProvenance::CoordinateFormula
    }

    fn curvature(&self, x: &[f64], r: &mut [f64]) -> Result<()> {
        let mut ws = self.workspace();
        self.evaluate(x, true, &mut ws)?;
        r.copy_from_slice(&ws.riemann);
        Ok(())
    }
}
