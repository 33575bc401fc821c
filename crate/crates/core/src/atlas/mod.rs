//! Atlases of charts on closed manifolds: chart metrics, transition maps
//! with first and second derivatives, builtin manifolds, partitions of unity
//! and separated nets.

pub mod builtins;
pub mod grid;
pub mod net;
pub mod pou;
pub mod regularity;
pub mod spec_io;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use builtins::{builtin_manifold, BuiltinId};
pub use pou::{bump, BumpJet, PartitionOfUnity, PouSample};

/// Value, Jacobian and Hessian of a map `R^d → R^d`.
///
/// `jac[a*d + b] = ∂y_a/∂x_b`, `hess[(a*d + b)*d + c] = ∂²y_a/∂x_b∂x_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct MapJet {
    pub dim: usize,
    pub value: Vec<f64>,
    pub jac: Vec<f64>,
    pub hess: Vec<f64>,
}

impl MapJet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            value: vec![0.0; dim],
            jac: vec![0.0; dim * dim],
            hess: vec![0.0; dim * dim * dim],
        }
    }

    pub fn set_identity(&mut self, x: &[f64]) {
        let d = self.dim;
        self.value.copy_from_slice(x);
        self.jac.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..d {
            self.jac[a * d + a] = 1.0;
        }
        self.hess.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Metric coefficients with first and second partial derivatives.
///
/// `g[k*d + l]`, `dg[(k*d + l)*d + μ] = ∂_μ g_{kl}`,
/// `ddg[((k*d + l)*d + μ)*d + ν] = ∂_μ∂_ν g_{kl}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    pub dim: usize,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub ddg: Vec<f64>,
}

impl MetricJet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            g: vec![0.0; dim * dim],
            dg: vec![0.0; dim * dim * dim],
            ddg: vec![0.0; dim * dim * dim * dim],
        }
    }

    /// `g = c·δ` with derivatives of the scalar factor `c`.
    pub fn set_conformal(&mut self, c: f64, dc: &[f64], ddc: &[f64]) {
        let d = self.dim;
        self.g.iter_mut().for_each(|v| *v = 0.0);
        self.dg.iter_mut().for_each(|v| *v = 0.0);
        self.ddg.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..d {
            let kk = k * d + k;
            self.g[kk] = c;
            for m in 0..d {
                self.dg[kk * d + m] = dc[m];
                for n in 0..d {
                    self.ddg[(kk * d + m) * d + n] = ddc[m * d + n];
                }
            }
        }
    }
}

/// How a chart metric is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    ClosedForm,
    GridSampled,
}

/// Pulled-back metric `g_{kl}` on a chart domain.
pub trait MetricField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Fill `jet` at `x`; derivative arrays are filled up to `order ≤ 2`.
    fn eval(&self, x: &[f64], order: usize, jet: &mut MetricJet) -> Result<()>;

    fn kind(&self) -> EvaluatorKind {
        EvaluatorKind::ClosedForm
    }
}

/// Coordinate change from one chart to another.
pub trait TransitionMap: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Evaluate up to derivative `order ≤ 2` at `x`. Returns `false` when
    /// `x` is outside the region where the map is defined; the caller still
    /// has to check that the value lies in the target chart.
    fn eval(&self, x: &[f64], order: usize, jet: &mut MapJet) -> bool;
}

/// A chart `φ: B(0, r) → M` (max-norm ball) with its pulled-back metric.
#[derive(Clone, Debug)]
pub struct Chart {
    pub label: String,
    /// Radius of the coordinate domain.
    pub radius: f64,
    /// Radius of the partition-of-unity support, at most `radius / 2`.
    pub support: f64,
    /// `+1` or `−1` relative to the manifold orientation.
    pub orientation: f64,
    pub metric: Arc<dyn MetricField>,
}

impl Chart {
    pub fn new(label: impl Into<String>, radius: f64, orientation: f64, metric: Arc<dyn MetricField>) -> Result<Self> {
        Self::with_support(label, radius, 0.5 * radius, orientation, metric)
    }

    pub fn with_support(
        label: impl Into<String>,
        radius: f64,
        support: f64,
        orientation: f64,
        metric: Arc<dyn MetricField>,
    ) -> Result<Self> {
        let label = label.into();
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Atlas(format!("chart {label}: radius {radius}")));
        }
        if !(support > 0.0 && support <= 0.5 * radius + 1e-15) {
            return Err(Error::Atlas(format!(
                "chart {label}: support {support} must lie in (0, radius/2]"
            )));
        }
        if orientation != 1.0 && orientation != -1.0 {
            return Err(Error::Atlas(format!("chart {label}: orientation {orientation}")));
        }
        Ok(Self {
            label,
            radius,
            support,
            orientation,
            metric,
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Strictly inside the coordinate domain.
    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter().all(|v| v.abs() < self.radius)
    }

    /// Strictly inside the partition-of-unity support box.
    pub fn in_support(&self, y: &[f64]) -> bool {
        y.iter().all(|v| v.abs() < self.support)
    }
}

/// Identity coordinate change.
#[derive(Clone, Copy, Debug)]
pub struct IdentityTransition {
    pub dim: usize,
}

impl TransitionMap for IdentityTransition {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], _order: usize, jet: &mut MapJet) -> bool {
        jet.set_identity(x);
        true
    }
}

/// Closed manifold given by an atlas; `transitions[i][j]` maps chart-`i`
/// coordinates to chart-`j` coordinates where the charts overlap.
#[derive(Clone)]
pub struct AtlasManifold {
    pub name: String,
    dim: usize,
    charts: Vec<Chart>,
    transitions: Vec<Vec<Option<Arc<dyn TransitionMap>>>>,
}

impl fmt::Debug for AtlasManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AtlasManifold")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("charts", &self.charts.len())
            .finish()
    }
}

impl AtlasManifold {
    /// Missing diagonal entries are filled with the identity.
    pub fn new(
        name: impl Into<String>,
        charts: Vec<Chart>,
        mut transitions: Vec<Vec<Option<Arc<dyn TransitionMap>>>>,
    ) -> Result<Self> {
        let name = name.into();
        let Some(first) = charts.first() else {
            return Err(Error::Atlas(format!("{name}: empty atlas")));
        };
        let dim = first.dim();
        if dim == 0 || charts.iter().any(|c| c.dim() != dim) {
            return Err(Error::Atlas(format!("{name}: charts disagree in dimension")));
        }
        if transitions.len() != charts.len() || transitions.iter().any(|row| row.len() != charts.len()) {
            return Err(Error::Atlas(format!(
                "{name}: transition table must be {0}x{0}",
                charts.len()
            )));
        }
        for (i, row) in transitions.iter_mut().enumerate() {
            if row[i].is_none() {
                row[i] = Some(Arc::new(IdentityTransition { dim }));
            }
            if row.iter().flatten().any(|t| t.dim() != dim) {
                return Err(Error::Atlas(format!("{name}: transition dimension mismatch")));
            }
        }
        Ok(Self {
            name,
            dim,
            charts,
            transitions,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, i: usize) -> &Chart {
        &self.charts[i]
    }

    pub fn chart_count(&self) -> usize {
        self.charts.len()
    }

    pub fn transition(&self, from: usize, to: usize) -> Option<&dyn TransitionMap> {
        self.transitions[from][to].as_deref()
    }

    /// Evaluate the transition `from → to` at `x`; `false` unless defined and
    /// landing strictly inside the target chart domain.
    pub fn map_point(&self, from: usize, to: usize, x: &[f64], order: usize, jet: &mut MapJet) -> bool {
        match self.transition(from, to) {
            Some(t) => t.eval(x, order, jet) && self.charts[to].contains(&jet.value),
            None => false,
        }
    }

    /// Like [`map_point`](Self::map_point) but as an error when undefined.
    pub fn map_point_checked(&self, from: usize, to: usize, x: &[f64], order: usize, jet: &mut MapJet) -> Result<()> {
        if self.map_point(from, to, x, order, jet) {
            Ok(())
        } else {
            Err(Error::OutsideOverlap {
                from,
                to,
                point: x.to_vec(),
            })
        }
    }

    /// Replace every off-diagonal transition by `f(transition)`.
    pub fn map_transitions(&self, f: impl Fn(Arc<dyn TransitionMap>) -> Arc<dyn TransitionMap>) -> Self {
        let transitions = self
            .transitions
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, t)| if i == j { t.clone() } else { t.clone().map(&f) })
                    .collect()
            })
            .collect();
        Self {
            transitions,
            ..self.clone()
        }
    }

    /// Multiply every chart metric by `c²`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("metric scale {c}")));
        }
        let charts = self
            .charts
            .iter()
            .map(|ch| Chart {
                metric: Arc::new(ScaledMetric {
                    inner: ch.metric.clone(),
                    factor: c * c,
                }),
                ..ch.clone()
            })
            .collect();
        Ok(Self {
            name: format!("{}*{c}", self.name),
            dim: self.dim,
            charts,
            transitions: self.transitions.clone(),
        })
    }
}

/// `factor · g` for a wrapped metric.
#[derive(Debug)]
pub struct ScaledMetric {
    pub inner: Arc<dyn MetricField>,
    pub factor: f64,
}

impl MetricField for ScaledMetric {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64], order: usize, jet: &mut MetricJet) -> Result<()> {
        self.inner.eval(x, order, jet)?;
        for v in jet.g.iter_mut().chain(jet.dg.iter_mut()).chain(jet.ddg.iter_mut()) {
            *v *= self.factor;
        }
        Ok(())
    }

    fn kind(&self) -> EvaluatorKind {
        self.inner.kind()
    }
}

/// Cholesky test of positive definiteness for a `d×d` row-major matrix.
pub fn is_positive_definite(g: &[f64], d: usize) -> bool {
    let m = nalgebra::DMatrix::from_row_slice(d, d, g);
    g.iter().all(|v| v.is_finite()) && nalgebra::Cholesky::new(m).is_some()
}

/// Sample points strictly inside a chart's support box, deterministic in
/// `seed`.
pub fn random_points(dim: usize, half_width: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(-half_width..half_width)).collect())
        .collect()
}
