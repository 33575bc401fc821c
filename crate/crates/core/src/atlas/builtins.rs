//! Builtin closed manifolds with closed-form metrics and transitions:
//! round spheres by two stereographic charts, flat and perturbed tori by a
//! lattice of translated charts, and complex projective space with the
//! Fubini–Study metric in affine charts.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use super::{AtlasManifold, Chart, MapJet, MetricField, MetricJet, TransitionMap};
use crate::error::{Error, Result};

/// Stereographic chart radius and partition support for spheres.
pub const SPHERE_RADIUS: f64 = 2.5;
pub const SPHERE_SUPPORT: f64 = 1.25;
/// Translated flat charts of the torus sit on a lattice of this spacing.
pub const TORUS_SPACING: f64 = 1.0 / 3.0;
pub const TORUS_RADIUS: f64 = 0.48;
pub const TORUS_SUPPORT: f64 = 0.24;
/// Affine chart radius and partition support for projective space.
pub const PROJECTIVE_RADIUS: f64 = 2.5;
pub const PROJECTIVE_SUPPORT: f64 = 1.25;

/// Registry of builtin manifolds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BuiltinId {
    S2,
    S4,
    T2Flat,
    T4Flat,
    Cp2,
    S2Perturbed(f64),
    T2Perturbed(f64),
}

impl BuiltinId {
    pub const NAMES: [&'static str; 7] = ["s2", "s4", "t2_flat", "t4_flat", "cp2", "s2_perturbed", "t2_perturbed"];

    /// Builtins without perturbation parameters.
    pub const UNPERTURBED: [BuiltinId; 5] = [BuiltinId::S2, BuiltinId::S4, BuiltinId::T2Flat, BuiltinId::T4Flat, BuiltinId::Cp2];

    pub fn dim(&self) -> usize {
        match self {
            BuiltinId::S2 | BuiltinId::T2Flat | BuiltinId::S2Perturbed(_) | BuiltinId::T2Perturbed(_) => 2,
            BuiltinId::S4 | BuiltinId::T4Flat | BuiltinId::Cp2 => 4,
        }
    }

    /// Family name for perturbed builtins.
    pub fn family(name: &str, eps: f64) -> Result<Self> {
        match name {
            "s2_perturbed" => Ok(BuiltinId::S2Perturbed(eps)),
            "t2_perturbed" => Ok(BuiltinId::T2Perturbed(eps)),
            other => Err(Error::UnknownManifold(format!("{other} is not a perturbation family"))),
        }
    }
}

impl fmt::Display for BuiltinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinId::S2 => write!(f, "s2"),
            BuiltinId::S4 => write!(f, "s4"),
            BuiltinId::T2Flat => write!(f, "t2_flat"),
            BuiltinId::T4Flat => write!(f, "t4_flat"),
            BuiltinId::Cp2 => write!(f, "cp2"),
            BuiltinId::S2Perturbed(e) => write!(f, "s2_perturbed({e})"),
            BuiltinId::T2Perturbed(e) => write!(f, "t2_perturbed({e})"),
        }
    }
}

impl FromStr for BuiltinId {
    type Err = Error;

    /// Accepts `s2`, …, and `s2_perturbed(0.1)` or `s2_perturbed:0.1`; a
    /// bare family name means ε = 0.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (base, eps) = if let Some(open) = s.find('(') {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::UnknownManifold(s.to_string()))?;
            (&s[..open], Some(inner))
        } else if let Some((b, e)) = s.split_once(':') {
            (b, Some(e))
        } else {
            (s, None)
        };
        let eps = match eps {
            Some(e) => e
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::UnknownManifold(format!("{s}: bad perturbation `{e}`")))?,
            None => 0.0,
        };
        let id = match base {
            "s2" => BuiltinId::S2,
            "s4" => BuiltinId::S4,
            "t2_flat" => BuiltinId::T2Flat,
            "t4_flat" => BuiltinId::T4Flat,
            "cp2" => BuiltinId::Cp2,
            "s2_perturbed" => BuiltinId::S2Perturbed(eps),
            "t2_perturbed" => BuiltinId::T2Perturbed(eps),
            _ => return Err(Error::UnknownManifold(s.to_string())),
        };
        Ok(id)
    }
}

/// Build a builtin manifold from its registry name.
pub fn builtin_manifold(name: &str) -> Result<AtlasManifold> {
    build(name.parse()?)
}

pub fn build(id: BuiltinId) -> Result<AtlasManifold> {
    let name = id.to_string();
    match id {
        BuiltinId::S2 => sphere(&name, 2, 0.0),
        BuiltinId::S4 => sphere(&name, 4, 0.0),
        BuiltinId::S2Perturbed(eps) => sphere(&name, 2, eps),
        BuiltinId::T2Flat => torus(&name, 2, 0.0),
        BuiltinId::T4Flat => torus(&name, 4, 0.0),
        BuiltinId::T2Perturbed(eps) => torus(&name, 2, eps),
        BuiltinId::Cp2 => projective(&name, 2),
    }
}

fn check_eps(eps: f64, ok: bool, what: &str) -> Result<()> {
    if !eps.is_finite() || !ok {
        return Err(Error::InvalidParameter(format!(
            "perturbation ε = {eps} makes the {what} metric degenerate"
        )));
    }
    Ok(())
}

/// Round sphere of dimension `dim` from two stereographic charts; with
/// `eps ≠ 0` the metric is multiplied by `1 + ε·exp(2X₁ − 2)` where `X₁` is
/// the first ambient coordinate.
pub fn sphere(name: &str, dim: usize, eps: f64) -> Result<AtlasManifold> {
    check_eps(eps, eps > -1.0, "sphere")?;
    let metric: Arc<dyn MetricField> = Arc::new(SphereMetric { dim, eps });
    let charts = vec![
        Chart::with_support("north", SPHERE_RADIUS, SPHERE_SUPPORT, 1.0, metric.clone())?,
        Chart::with_support("south", SPHERE_RADIUS, SPHERE_SUPPORT, -1.0, metric)?,
    ];
    let inv: Arc<dyn TransitionMap> = Arc::new(InversionTransition { dim });
    AtlasManifold::new(name, charts, vec![vec![None, Some(inv.clone())], vec![Some(inv), None]])
}

/// Flat torus `R^d / Z^d` covered by `3^d` translated charts; with `eps ≠ 0`
/// the metric is multiplied by `1 + ε Π_c cos(2π X_c)`.
pub fn torus(name: &str, dim: usize, eps: f64) -> Result<AtlasManifold> {
    check_eps(eps, eps.abs() < 1.0, "torus")?;
    let count = 3usize.pow(dim as u32);
    let centers: Vec<Vec<f64>> = (0..count)
        .map(|i| {
            let mut c = vec![0.0; dim];
            let mut rest = i;
            for slot in c.iter_mut().rev() {
                *slot = (rest % 3) as f64 * TORUS_SPACING;
                rest /= 3;
            }
            c
        })
        .collect();
    let charts = centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Chart::with_support(
                format!("cell{i}"),
                TORUS_RADIUS,
                TORUS_SUPPORT,
                1.0,
                Arc::new(TorusMetric {
                    center: c.clone(),
                    eps,
                }),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let transitions = (0..count)
        .map(|i| {
            (0..count)
                .map(|j| {
                    (i != j).then(|| {
                        let offset = centers[i].iter().zip(&centers[j]).map(|(a, b)| a - b).collect();
                        Arc::new(TranslationTransition {
                            offset,
                            period: Some(1.0),
                        }) as Arc<dyn TransitionMap>
                    })
                })
                .collect()
        })
        .collect();
    AtlasManifold::new(name, charts, transitions)
}

/// Complex projective space `CP^n` in its `n + 1` affine charts with the
/// Fubini–Study metric of holomorphic sectional curvature 4.
pub fn projective(name: &str, n: usize) -> Result<AtlasManifold> {
    let metric: Arc<dyn MetricField> = Arc::new(FubiniStudyMetric { complex_dim: n });
    let charts = (0..=n)
        .map(|b| Chart::with_support(format!("Z{b}"), PROJECTIVE_RADIUS, PROJECTIVE_SUPPORT, 1.0, metric.clone()))
        .collect::<Result<Vec<_>>>()?;
    let transitions = (0..=n)
        .map(|b| {
            (0..=n)
                .map(|c| {
                    (b != c).then(|| Arc::new(ProjectiveTransition { n, from: b, to: c }) as Arc<dyn TransitionMap>)
                })
                .collect()
        })
        .collect();
    AtlasManifold::new(name, charts, transitions)
}

/// Conformal factor `4/ρ² · (1 + ε·exp(2X₁ − 2))`, `ρ = 1 + |x|²`,
/// `X₁ = 2x₁/ρ`, with derivatives.
#[derive(Clone, Copy, Debug)]
pub struct SphereMetric {
    pub dim: usize,
    pub eps: f64,
}

impl SphereMetric {
    pub fn factor(&self, x: &[f64], c: &mut f64, dc: &mut [f64], ddc: &mut [f64]) {
        let d = self.dim;
        let q: f64 = x.iter().map(|v| v * v).sum();
        let rho = 1.0 + q;
        let (r2, r3, r4) = (rho * rho, rho * rho * rho, rho * rho * rho * rho);
        let a = 4.0 / r2;
        if self.eps == 0.0 {
            *c = a;
            for m in 0..d {
                dc[m] = -16.0 * x[m] / r3;
                for n in 0..d {
                    let delta = if m == n { 1.0 } else { 0.0 };
                    ddc[m * d + n] = -16.0 * delta / r3 + 96.0 * x[m] * x[n] / r4;
                }
            }
            return;
        }
        let x1 = 2.0 * x[0] / rho;
        let u = (2.0 * x1 - 2.0).exp();
        let b = 1.0 + self.eps * u;
        let mut dx1 = vec![0.0; d];
        for m in 0..d {
            let e1 = if m == 0 { 1.0 } else { 0.0 };
            dx1[m] = 2.0 * e1 / rho - 4.0 * x[0] * x[m] / r2;
        }
        *c = a * b;
        for m in 0..d {
            let da = -16.0 * x[m] / r3;
            let db = self.eps * 2.0 * u * dx1[m];
            dc[m] = da * b + a * db;
        }
        for m in 0..d {
            for n in 0..d {
                let delta = if m == n { 1.0 } else { 0.0 };
                let e1m = if m == 0 { 1.0 } else { 0.0 };
                let e1n = if n == 0 { 1.0 } else { 0.0 };
                let ddx1 = -4.0 * e1m * x[n] / r2 - 4.0 * e1n * x[m] / r2 - 4.0 * x[0] * delta / r2
                    + 16.0 * x[0] * x[m] * x[n] / r3;
                let ddu = 2.0 * u * (ddx1 + 2.0 * dx1[m] * dx1[n]);
                let dda = -16.0 * delta / r3 + 96.0 * x[m] * x[n] / r4;
                let (dam, dan) = (-16.0 * x[m] / r3, -16.0 * x[n] / r3);
                let (dbm, dbn) = (self.eps * 2.0 * u * dx1[m], self.eps * 2.0 * u * dx1[n]);
                ddc[m * d + n] = dda * b + dam * dbn + dbm * dan + a * self.eps * ddu;
            }
        }
    }
}

impl MetricField for SphereMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], _order: usize, jet: &mut MetricJet) -> Result<()> {
        let d = self.dim;
        let mut c = 0.0;
        let mut dc = [0.0; 8];
        let mut ddc = [0.0; 64];
        self.factor(x, &mut c, &mut dc[..d], &mut ddc[..d * d]);
        jet.set_conformal(c, &dc[..d], &ddc[..d * d]);
        Ok(())
    }
}

/// Flat metric on the chart centered at `center`, optionally multiplied by
/// `1 + ε Π_c cos(2π(center_c + x_c))`.
#[derive(Clone, Debug)]
pub struct TorusMetric {
    pub center: Vec<f64>,
    pub eps: f64,
}

impl MetricField for TorusMetric {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, x: &[f64], _order: usize, jet: &mut MetricJet) -> Result<()> {
        let d = self.center.len();
        let mut dc = [0.0; 8];
        let mut ddc = [0.0; 64];
        if self.eps == 0.0 {
            jet.set_conformal(1.0, &dc[..d], &ddc[..d * d]);
            return Ok(());
        }
        let w = 2.0 * std::f64::consts::PI;
        let cs: Vec<f64> = (0..d).map(|k| (w * (self.center[k] + x[k])).cos()).collect();
        let sn: Vec<f64> = (0..d).map(|k| (w * (self.center[k] + x[k])).sin()).collect();
        let prod_except = |skip: &[usize]| -> f64 {
            (0..d).filter(|k| !skip.contains(k)).map(|k| cs[k]).product()
        };
        let c = 1.0 + self.eps * prod_except(&[]);
        for m in 0..d {
            dc[m] = -self.eps * w * sn[m] * prod_except(&[m]);
            for n in 0..d {
                ddc[m * d + n] = if m == n {
                    -self.eps * w * w * prod_except(&[])
                } else {
                    self.eps * w * w * sn[m] * sn[n] * prod_except(&[m, n])
                };
            }
        }
        jet.set_conformal(c, &dc[..d], &ddc[..d * d]);
        Ok(())
    }
}

/// Fubini–Study metric `g = δ/ρ − (x xᵀ + Jx (Jx)ᵀ)/ρ²`, `ρ = 1 + |x|²`, in
/// real coordinates `(x₁, y₁, x₂, y₂, …)` of an affine chart; `J` is the
/// complex structure.
#[derive(Clone, Copy, Debug)]
pub struct FubiniStudyMetric {
    pub complex_dim: usize,
}

/// Complex structure `J` on `(x₁, y₁, …)`: `J ∂x = ∂y`, `J ∂y = −∂x`.
fn complex_structure(mu: usize, nu: usize) -> f64 {
    if mu / 2 != nu / 2 {
        0.0
    } else if mu % 2 == 0 && nu % 2 == 1 {
        -1.0
    } else if mu % 2 == 1 && nu % 2 == 0 {
        1.0
    } else {
        0.0
    }
}

impl MetricField for FubiniStudyMetric {
    fn dim(&self) -> usize {
        2 * self.complex_dim
    }

    fn eval(&self, x: &[f64], order: usize, jet: &mut MetricJet) -> Result<()> {
        // g = δ/ρ − q/ρ² with ρ = 1 + |x|², q_{mn} = x_m x_n + (Jx)_m (Jx)_n
        let d = 2 * self.complex_dim;
        let q: f64 = x.iter().map(|v| v * v).sum();
        let rho = 1.0 + q;
        let (r2, r3, r4) = (rho * rho, rho * rho * rho, rho * rho * rho * rho);
        let f1 = 1.0 / rho;
        let f2 = 1.0 / r2;
        let mut cs = [0.0f64; 64];
        let mut jx = [0.0f64; 8];
        for m in 0..d {
            for a in 0..d {
                cs[m * d + a] = complex_structure(m, a);
            }
            jx[m] = (0..d).map(|a| cs[m * d + a] * x[a]).sum();
        }
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut qm = [0.0f64; 64];
        for m in 0..d {
            for n in 0..d {
                qm[m * d + n] = x[m] * x[n] + jx[m] * jx[n];
                jet.g[m * d + n] = f1 * delta(m, n) - f2 * qm[m * d + n];
            }
        }
        if order == 0 {
            return Ok(());
        }
        let mut dq = [0.0f64; 512];
        for m in 0..d {
            for n in 0..d {
                for s in 0..d {
                    dq[(m * d + n) * d + s] =
                        delta(m, s) * x[n] + x[m] * delta(n, s) + cs[m * d + s] * jx[n] + jx[m] * cs[n * d + s];
                }
            }
        }
        let mut df1 = [0.0f64; 8];
        let mut df2 = [0.0f64; 8];
        for s in 0..d {
            df1[s] = -2.0 * x[s] / r2;
            df2[s] = -4.0 * x[s] / r3;
        }
        for m in 0..d {
            for n in 0..d {
                for s in 0..d {
                    jet.dg[(m * d + n) * d + s] =
                        df1[s] * delta(m, n) - df2[s] * qm[m * d + n] - f2 * dq[(m * d + n) * d + s];
                }
            }
        }
        if order == 1 {
            return Ok(());
        }
        for s in 0..d {
            for t in 0..d {
                let ddf1 = -2.0 * delta(s, t) / r2 + 8.0 * x[s] * x[t] / r3;
                let ddf2 = -4.0 * delta(s, t) / r3 + 24.0 * x[s] * x[t] / r4;
                for m in 0..d {
                    for n in 0..d {
                        let ddq = delta(m, s) * delta(n, t)
                            + delta(m, t) * delta(n, s)
                            + cs[m * d + s] * cs[n * d + t]
                            + cs[m * d + t] * cs[n * d + s];
                        jet.ddg[((m * d + n) * d + s) * d + t] = ddf1 * delta(m, n)
                            - ddf2 * qm[m * d + n]
                            - df2[s] * dq[(m * d + n) * d + t]
                            - df2[t] * dq[(m * d + n) * d + s]
                            - f2 * ddq;
                    }
                }
            }
        }
        Ok(())
    }
}

/// `x ↦ x/|x|²` (Euclidean norm), undefined at the origin.
#[derive(Clone, Copy, Debug)]
pub struct InversionTransition {
    pub dim: usize,
}

impl TransitionMap for InversionTransition {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], order: usize, jet: &mut MapJet) -> bool {
        let d = self.dim;
        let q: f64 = x.iter().map(|v| v * v).sum();
        if !(q > 1e-300) {
            return false;
        }
        let inv = 1.0 / q;
        for a in 0..d {
            jet.value[a] = x[a] * inv;
        }
        if order == 0 {
            return true;
        }
        let inv2 = inv * inv;
        for a in 0..d {
            for b in 0..d {
                let delta = if a == b { inv } else { 0.0 };
                jet.jac[a * d + b] = delta - 2.0 * x[a] * x[b] * inv2;
            }
        }
        if order == 1 {
            return true;
        }
        let inv3 = inv2 * inv;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let mut v = 8.0 * x[a] * x[b] * x[c] * inv3;
                    if a == b {
                        v -= 2.0 * x[c] * inv2;
                    }
                    if a == c {
                        v -= 2.0 * x[b] * inv2;
                    }
                    if b == c {
                        v -= 2.0 * x[a] * inv2;
                    }
                    jet.hess[(a * d + b) * d + c] = v;
                }
            }
        }
        true
    }
}

/// `x ↦ x + offset`, optionally reduced coordinatewise into
/// `[−period/2, period/2)`.
#[derive(Clone, Debug)]
pub struct TranslationTransition {
    pub offset: Vec<f64>,
    pub period: Option<f64>,
}

impl TransitionMap for TranslationTransition {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn eval(&self, x: &[f64], order: usize, jet: &mut MapJet) -> bool {
        let d = self.offset.len();
        for a in 0..d {
            let mut y = x[a] + self.offset[a];
            if let Some(p) = self.period {
                y -= p * (y / p).round();
            }
            jet.value[a] = y;
        }
        if order >= 1 {
            jet.jac.iter_mut().for_each(|v| *v = 0.0);
            for a in 0..d {
                jet.jac[a * d + a] = 1.0;
            }
            jet.hess.iter_mut().for_each(|v| *v = 0.0);
        }
        true
    }
}

/// `x ↦ A x + b` with invertible `A` (row-major).
#[derive(Clone, Debug)]
pub struct AffineTransition {
    pub matrix: Vec<f64>,
    pub offset: Vec<f64>,
}

impl TransitionMap for AffineTransition {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn eval(&self, x: &[f64], order: usize, jet: &mut MapJet) -> bool {
        let d = self.offset.len();
        for a in 0..d {
            jet.value[a] = self.offset[a] + (0..d).map(|b| self.matrix[a * d + b] * x[b]).sum::<f64>();
        }
        if order >= 1 {
            jet.jac.copy_from_slice(&self.matrix);
            jet.hess.iter_mut().for_each(|v| *v = 0.0);
        }
        true
    }
}

/// Change of affine chart on `CP^n`: from `Z_from = 1` to `Z_to = 1`,
/// `w_j = Z_{a_j} / Z_to` with `a_j` the indices other than `to`.
#[derive(Clone, Copy, Debug)]
pub struct ProjectiveTransition {
    pub n: usize,
    pub from: usize,
    pub to: usize,
}

impl ProjectiveTransition {
    /// Position of homogeneous index `a ≠ chart` among the chart coordinates.
    fn position(chart: usize, a: usize) -> usize {
        if a < chart {
            a
        } else {
            a - 1
        }
    }
}

/// Write the real 2×2 block of the complex number `f` as a derivative of
/// output `j` by input `k`.
fn put_jac(jet: &mut MapJet, j: usize, k: usize, f: Complex64) {
    let d = jet.dim;
    jet.jac[(2 * j) * d + 2 * k] = f.re;
    jet.jac[(2 * j) * d + 2 * k + 1] = -f.im;
    jet.jac[(2 * j + 1) * d + 2 * k] = f.im;
    jet.jac[(2 * j + 1) * d + 2 * k + 1] = f.re;
}

/// Real Hessian entries of output `j` for the complex second derivative `f`
/// by inputs `k`, `l`.
fn put_hess(jet: &mut MapJet, j: usize, k: usize, l: usize, f: Complex64) {
    let d = jet.dim;
    let idx = |a: usize, b: usize, c: usize| (a * d + b) * d + c;
    let (u, v) = (2 * j, 2 * j + 1);
    let (xk, yk, xl, yl) = (2 * k, 2 * k + 1, 2 * l, 2 * l + 1);
    jet.hess[idx(u, xk, xl)] = f.re;
    jet.hess[idx(u, xk, yl)] = -f.im;
    jet.hess[idx(u, yk, xl)] = -f.im;
    jet.hess[idx(u, yk, yl)] = -f.re;
    jet.hess[idx(v, xk, xl)] = f.im;
    jet.hess[idx(v, xk, yl)] = f.re;
    jet.hess[idx(v, yk, xl)] = f.re;
    jet.hess[idx(v, yk, yl)] = -f.im;
}

impl TransitionMap for ProjectiveTransition {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn eval(&self, x: &[f64], order: usize, jet: &mut MapJet) -> bool {
        let n = self.n;
        let z: Vec<Complex64> = (0..n).map(|j| Complex64::new(x[2 * j], x[2 * j + 1])).collect();
        let p = Self::position(self.from, self.to);
        let q = z[p];
        if !(q.norm_sqr() > 1e-300) {
            return false;
        }
        let inv = q.inv();
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        if order >= 1 {
            jet.jac.iter_mut().for_each(|v| *v = 0.0);
        }
        if order >= 2 {
            jet.hess.iter_mut().for_each(|v| *v = 0.0);
        }
        for j in 0..n {
            let a = if j < self.to { j } else { j + 1 };
            // numerator Z_a: constant 1 when a is the source chart index
            let numerator = if a == self.from { None } else { Some(Self::position(self.from, a)) };
            let num = numerator.map_or(Complex64::new(1.0, 0.0), |m| z[m]);
            let w = num * inv;
            jet.value[2 * j] = w.re;
            jet.value[2 * j + 1] = w.im;
            if order == 0 {
                continue;
            }
            if let Some(m) = numerator {
                put_jac(jet, j, m, inv);
            }
            put_jac(jet, j, p, -num * inv2);
            if order == 1 {
                continue;
            }
            if let Some(m) = numerator {
                put_hess(jet, j, m, p, -inv2);
                put_hess(jet, j, p, m, -inv2);
            }
            put_hess(jet, j, p, p, 2.0 * num * inv3);
        }
        true
    }
}
