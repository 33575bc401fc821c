//! Manifold specs in JSON.
//!
//! ```json
//! {
//!   "name": "sphere-from-grids",
//!   "dim": 2,
//!   "charts": [
//!     {"radius": 2.5, "support": 1.25, "orientation": 1, "metric": "round_sphere"},
//!     {"radius": 2.5, "orientation": -1, "metric": {"grid": "south.chgrid"}}
//!   ],
//!   "transitions": [
//!     {"from": 0, "to": 1, "kind": "inversion"},
//!     {"from": 1, "to": 0, "kind": "inversion"}
//!   ]
//! }
//! ```
//!
//! Chart metrics are either a builtin id (`flat`, `round_sphere`,
//! `fubini_study`, optionally as `{"builtin": "round_sphere", "eps": 0.1}`)
//! or a grid file `{"grid": path}` resolved relative to the spec file. The
//! grid covers `[−radius, radius]^dim` of its chart. Transition kinds are
//! `identity`, `translation` (`offset`, optional `period`), `inversion`,
//! `affine` (row-major `matrix`, `offset`) and `projective` (homogeneous
//! indices `from_index`, `to_index` of the affine charts of `CP^{dim/2}`).
//! Every listed transition must be listed in both directions.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::builtins::{
    AffineTransition, FubiniStudyMetric, InversionTransition, ProjectiveTransition, SphereMetric, TorusMetric,
    TranslationTransition,
};
use super::grid::GridMetric;
use super::{AtlasManifold, Chart, IdentityTransition, MetricField, TransitionMap};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub name: String,
    pub dim: usize,
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub radius: f64,
    #[serde(default)]
    pub support: Option<f64>,
    #[serde(default = "positive")]
    pub orientation: f64,
    pub metric: MetricSpec,
}

fn positive() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Id(String),
    Builtin {
        builtin: String,
        #[serde(default)]
        eps: f64,
    },
    Grid {
        grid: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub map: TransitionKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionKind {
    Identity,
    Translation {
        offset: Vec<f64>,
        #[serde(default)]
        period: Option<f64>,
    },
    Inversion,
    Affine {
        matrix: Vec<f64>,
        offset: Vec<f64>,
    },
    Projective {
        from_index: usize,
        to_index: usize,
    },
}

impl ManifoldSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    /// Build the atlas; grid paths are resolved against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<AtlasManifold> {
        let d = self.dim;
        if d == 0 || d > 8 {
            return Err(Error::Spec(format!("dimension {d} outside 1..=8")));
        }
        if self.charts.is_empty() {
            return Err(Error::Spec("no charts".into()));
        }
        let charts = self
            .charts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let metric = c.metric.build(d, c.radius, base_dir)?;
                let label = c.label.clone().unwrap_or_else(|| format!("chart{i}"));
                Chart::with_support(label, c.radius, c.support.unwrap_or(0.5 * c.radius), c.orientation, metric)
            })
            .collect::<Result<Vec<_>>>()?;
        let n = charts.len();
        let mut table: Vec<Vec<Option<Arc<dyn TransitionMap>>>> = vec![vec![None; n]; n];
        for t in &self.transitions {
            if t.from >= n || t.to >= n {
                return Err(Error::Spec(format!("transition {} -> {} names a missing chart", t.from, t.to)));
            }
            if table[t.from][t.to].is_some() {
                return Err(Error::Spec(format!("transition {} -> {} listed twice", t.from, t.to)));
            }
            table[t.from][t.to] = Some(t.map.build(d)?);
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && table[i][j].is_some() != table[j][i].is_some() {
                    return Err(Error::Spec(format!("transition {i} -> {j} has no reverse")));
                }
            }
        }
        AtlasManifold::new(self.name.clone(), charts, table)
    }
}

impl MetricSpec {
    fn build(&self, d: usize, radius: f64, base_dir: &Path) -> Result<Arc<dyn MetricField>> {
        match self {
            MetricSpec::Id(id) => builtin_metric(id, 0.0, d),
            MetricSpec::Builtin { builtin, eps } => builtin_metric(builtin, *eps, d),
            MetricSpec::Grid { grid } => {
                let path = if grid.is_absolute() { grid.clone() } else { base_dir.join(grid) };
                let g = GridMetric::load(&path, radius)?;
                if g.dim() != d {
                    return Err(Error::Spec(format!("{} has dimension {}, spec says {d}", path.display(), g.dim())));
                }
                Ok(Arc::new(g))
            }
        }
    }
}

fn builtin_metric(id: &str, eps: f64, d: usize) -> Result<Arc<dyn MetricField>> {
    match id {
        "flat" => Ok(Arc::new(TorusMetric {
            center: vec![0.0; d],
            eps: 0.0,
        })),
        "round_sphere" => {
            if !(eps > -1.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!("sphere perturbation ε = {eps}")));
            }
            Ok(Arc::new(SphereMetric { dim: d, eps }))
        }
        "fubini_study" if d % 2 == 0 => Ok(Arc::new(FubiniStudyMetric { complex_dim: d / 2 })),
        _ => Err(Error::Spec(format!("unknown metric `{id}` in dimension {d}"))),
    }
}

impl TransitionKind {
    fn build(&self, d: usize) -> Result<Arc<dyn TransitionMap>> {
        let check = |len: usize, what: &str| {
            if len == d {
                Ok(())
            } else {
                Err(Error::Spec(format!("{what} has length {len}, expected {d}")))
            }
        };
        Ok(match self {
            TransitionKind::Identity => Arc::new(IdentityTransition { dim: d }),
            TransitionKind::Translation { offset, period } => {
                check(offset.len(), "offset")?;
                if let Some(p) = period {
                    if !(*p > 0.0) {
                        return Err(Error::Spec(format!("period {p}")));
                    }
                }
                Arc::new(TranslationTransition {
                    offset: offset.clone(),
                    period: *period,
                })
            }
            TransitionKind::Inversion => Arc::new(InversionTransition { dim: d }),
            TransitionKind::Affine { matrix, offset } => {
                check(offset.len(), "offset")?;
                if matrix.len() != d * d {
                    return Err(Error::Spec(format!("affine matrix has {} entries, expected {}", matrix.len(), d * d)));
                }
                let mut inv = vec![0.0; d * d];
                if crate::connections::invert_small(matrix, d, &mut inv).is_none() {
                    return Err(Error::Spec("affine matrix is singular".into()));
                }
                Arc::new(AffineTransition {
                    matrix: matrix.clone(),
                    offset: offset.clone(),
                })
            }
            TransitionKind::Projective { from_index, to_index } => {
                let n = d / 2;
                if d % 2 != 0 || *from_index > n || *to_index > n || from_index == to_index {
                    return Err(Error::Spec(format!(
                        "projective transition {from_index} -> {to_index} in dimension {d}"
                    )));
                }
                Arc::new(ProjectiveTransition {
                    n,
                    from: *from_index,
                    to: *to_index,
                })
            }
        })
    }
}

/// Read and build a spec file.
pub fn load_manifold(path: &Path) -> Result<AtlasManifold> {
    let text = std::fs::read_to_string(path)?;
    let spec = ManifoldSpec::from_json(&text)?;
    spec.build(path.parent().unwrap_or_else(|| Path::new(".")))
}
