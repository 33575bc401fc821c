//! Invariance and verification suites run by `charnum verify`.
//!
//! Every suite returns a [`SuiteReport`] listing one [`Check`] per manifold
//! and property with the largest observed deviation and its tolerance.

use std::fmt;
use std::str::FromStr;

use charnum::atlas::regularity::{atlas_norm, chart_norms, sample_chart_metric};
use charnum::atlas::builtins::build;
use charnum::atlas::{random_points, AtlasManifold, BuiltinId, MapJet, PartitionOfUnity};
use charnum::chern_weil::{integrate_characteristic_number, InvariantPolynomial};
use charnum::connections::identities::{differential_identity_residual, paired_bracket_residual};
use charnum::connections::{mollification_distance, pe_coordinate_discrepancy, ConnectionChoice, FdTransition};
use charnum::holder::{graph_metric_slack, verify_distance_comparison};
use charnum::{Error, Result};
use serde::Serialize;

/// Richardson levels of the finite-difference transition jets used by the
/// coordinate-independence suite (error `O(h⁶)`).
pub const FD_LEVELS: usize = 2;
/// Coordinate-independence tolerance and minimum shrink per step halving.
pub const COORDINATE_TOLERANCE: f64 = 1e-5;
pub const MIN_SHRINK: f64 = 3.0;
/// Discrepancies below this are rounding noise; the shrink test is skipped.
pub const ROUNDING_FLOOR: f64 = 1e-12;
pub const PARTITION_TOLERANCE: f64 = 1e-10;
pub const IDENTITY_TOLERANCE: f64 = 1e-6;
pub const MOLLIFIER_RADII: [f64; 3] = [0.1, 0.05, 0.025];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    CoordinateIndependence,
    ConnectionIndependence,
    MollificationConvergence,
    Partition,
    DistanceComparison,
    AppendixIdentities,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::CoordinateIndependence,
        Suite::ConnectionIndependence,
        Suite::MollificationConvergence,
        Suite::Partition,
        Suite::DistanceComparison,
        Suite::AppendixIdentities,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::CoordinateIndependence => "coordinate-independence",
            Suite::ConnectionIndependence => "connection-independence",
            Suite::MollificationConvergence => "mollification-convergence",
            Suite::Partition => "partition",
            Suite::DistanceComparison => "distance-comparison",
            Suite::AppendixIdentities => "appendix-identities",
        }
    }

    /// Builtins the suite runs on by default.
    pub fn default_manifolds(&self) -> Vec<BuiltinId> {
        match self {
            Suite::ConnectionIndependence => vec![BuiltinId::S4, BuiltinId::T4Flat, BuiltinId::Cp2],
            Suite::MollificationConvergence => vec![BuiltinId::S2, BuiltinId::T2Flat],
            Suite::AppendixIdentities => vec![BuiltinId::S2, BuiltinId::S4, BuiltinId::Cp2],
            _ => BuiltinId::UNPERTURBED.to_vec(),
        }
    }

    /// Default step: the finite-difference step of the transition jets for
    /// coordinate independence, the relative quadrature step for connection
    /// independence; unused by the other suites.
    pub fn default_h(&self) -> f64 {
        match self {
            Suite::CoordinateIndependence => 1.0 / 128.0,
            Suite::ConnectionIndependence => 1.0 / 16.0,
            _ => 1.0 / 64.0,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite `{s}`")))
    }
}

/// One checked property on one manifold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub manifold: String,
    pub check: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `deviation ≤ tolerance`.
    pub fn at_most(manifold: &str, check: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self {
            manifold: manifold.to_string(),
            check: check.into(),
            deviation,
            tolerance,
            passed: deviation <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>) -> Self {
        Self {
            suite: suite.name().to_string(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

/// Run `suite` on `manifolds` (the suite default when empty) with step `h`
/// (the suite default when `None`).
pub fn run_suite(suite: Suite, manifolds: &[BuiltinId], h: Option<f64>) -> Result<SuiteReport> {
    let ids = if manifolds.is_empty() { suite.default_manifolds() } else { manifolds.to_vec() };
    let h = h.unwrap_or_else(|| suite.default_h());
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter(format!("step h = {h} must lie in (0, 1]")));
    }
    let mut checks = Vec::new();
    for id in ids {
        let m = build(id)?;
        checks.extend(match suite {
            Suite::CoordinateIndependence => coordinate_independence(&m, h)?,
            Suite::ConnectionIndependence => connection_independence(&m, h)?,
            Suite::MollificationConvergence => mollification_convergence(&m)?,
            Suite::Partition => partition(&m)?,
            Suite::DistanceComparison => distance_comparison(&m)?,
            Suite::AppendixIdentities => appendix_identities(&m)?,
        });
    }
    Ok(SuiteReport::new(suite, checks))
}

/// Transformed against directly computed piecewise Euclidean curvature on
/// every overlap, with transition jets from finite differences of step `h`
/// and `2h`, plus the same comparison with analytic jets.
pub fn coordinate_independence(m: &AtlasManifold, h: f64) -> Result<Vec<Check>> {
    const SAMPLES: usize = 20;
    const SEED: u64 = 7;
    let exact = pe_coordinate_discrepancy(m, SAMPLES, SEED)?;
    let fine = pe_coordinate_discrepancy(&FdTransition::atlas_extrapolated(m, h, FD_LEVELS)?, SAMPLES, SEED)?;
    let coarse = pe_coordinate_discrepancy(&FdTransition::atlas_extrapolated(m, 2.0 * h, FD_LEVELS)?, SAMPLES, SEED)?;
    let shrink = if coarse <= ROUNDING_FLOOR {
        f64::INFINITY
    } else {
        coarse / fine.max(f64::MIN_POSITIVE)
    };
    Ok(vec![
        Check::at_most(&m.name, "max discrepancy, analytic jets", exact, COORDINATE_TOLERANCE),
        Check::at_most(&m.name, format!("max discrepancy, difference jets h = {h}"), fine, COORDINATE_TOLERANCE),
        Check {
            manifold: m.name.clone(),
            check: format!("shrink factor h = {} -> {h} (inf at rounding level)", 2.0 * h),
            deviation: shrink,
            tolerance: MIN_SHRINK,
            passed: shrink >= MIN_SHRINK,
        },
    ])
}

/// `|p₁(PE) − p₁(LC)| ≤ max(10⁻² max(1, |p₁(LC)|), 3 Σ error estimates)`.
pub fn connection_independence(m: &AtlasManifold, h: f64) -> Result<Vec<Check>> {
    let poly = InvariantPolynomial::pontryagin(1)?;
    let lc = integrate_characteristic_number(m, &poly, ConnectionChoice::LeviCivita, h)?;
    let pe = integrate_characteristic_number(m, &poly, ConnectionChoice::PiecewiseEuclidean, h)?;
    Ok(vec![connection_check(&m.name, lc.value, lc.error_estimate, pe.value, pe.error_estimate)])
}

pub fn connection_check(manifold: &str, lc: f64, lc_error: f64, pe: f64, pe_error: f64) -> Check {
    let tolerance = (1e-2 * lc.abs().max(1.0)).max(3.0 * (lc_error + pe_error));
    Check::at_most(manifold, "|p1(pe) - p1(lc)|", (pe - lc).abs(), tolerance)
}

/// Sup distances between mollified and plain piecewise Euclidean curvature
/// over [`MOLLIFIER_RADII`], maximized over charts.
pub fn mollification_distances(m: &AtlasManifold, n: usize) -> Result<Vec<f64>> {
    MOLLIFIER_RADII
        .iter()
        .map(|&delta| (0..m.chart_count()).try_fold(0.0f64, |w, c| Ok(w.max(mollification_distance(m, c, delta, n)?))))
        .collect()
}

/// The distances strictly decrease (or vanish identically, on flat atlases).
pub fn mollification_convergence(m: &AtlasManifold) -> Result<Vec<Check>> {
    let dist = mollification_distances(m, 21)?;
    let vanishing = dist.iter().all(|&v| v == 0.0);
    let mut checks = Vec::new();
    for (k, pair) in dist.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        checks.push(Check {
            manifold: m.name.clone(),
            check: format!("C0 distance delta = {} -> {}", MOLLIFIER_RADII[k], MOLLIFIER_RADII[k + 1]),
            deviation: b,
            tolerance: a,
            passed: b < a || vanishing,
        });
    }
    Ok(checks)
}

/// `|Σψ − 1|` at random points of every chart's support box.
pub fn partition(m: &AtlasManifold) -> Result<Vec<Check>> {
    let pou = PartitionOfUnity::new(m);
    let mut worst = 0.0f64;
    let mut floor = f64::INFINITY;
    for c in 0..m.chart_count() {
        let points = random_points(m.dim(), m.chart(c).support, 200, 17 + c as u64);
        let (dev, raw) = pou.check_sum(c, &points)?;
        worst = worst.max(dev);
        floor = floor.min(raw);
    }
    Ok(vec![
        Check::at_most(&m.name, "max |sum psi - 1|", worst, PARTITION_TOLERANCE),
        Check {
            manifold: m.name.clone(),
            check: "min sum of unnormalized bumps (must be positive)".into(),
            deviation: floor,
            tolerance: 0.0,
            passed: floor > 0.0,
        },
    ])
}

/// Graph distances of every chart metric against `e^{∓Q}` times Euclidean
/// distances, with `Q` the chart's metric bound; the lattice graph's own
/// overestimate is allowed.
pub fn distance_comparison(m: &AtlasManifold) -> Result<Vec<Check>> {
    let n = if m.dim() <= 2 { 17 } else { 5 };
    let norms = chart_norms(m, n, 0, 0.5)?;
    let slack = graph_metric_slack(m.dim());
    let mut worst = 0.0f64;
    for entry in &norms {
        let metric = sample_chart_metric(m, entry.chart, m.chart(entry.chart).support, n)?;
        let report = verify_distance_comparison(&metric, entry.report.q_metric_bound, 8)?;
        worst = worst.max(report.max_violation);
    }
    Ok(vec![Check::at_most(
        &m.name,
        format!("max relative violation (Q = {:.6})", atlas_norm_metric(&norms)),
        worst,
        slack + 1e-12,
    )])
}

fn atlas_norm_metric(norms: &[charnum::atlas::regularity::ChartNormEntry]) -> f64 {
    norms.iter().fold(0.0, |q, e| q.max(e.report.q_metric_bound))
}

/// Paired-bracket identity on random arrays and the differentiated inverse
/// function identity on every transition of `m`.
pub fn appendix_identities(m: &AtlasManifold) -> Result<Vec<Check>> {
    let d = m.dim();
    let mut bracket = 0.0f64;
    let data = random_points(2 * d * d, 1.0, 50, 23);
    for pair in data {
        let (f, g) = pair.split_at(d * d);
        bracket = bracket.max(paired_bracket_residual(f, g, d)?);
    }
    let step = 5e-3;
    let mut differential = 0.0f64;
    let mut jet = MapJet::new(d);
    for from in 0..m.chart_count() {
        for to in 0..m.chart_count() {
            if from == to || m.transition(from, to).is_none() {
                continue;
            }
            for p in random_points(d, m.chart(from).support, 50, 29 + (from * 8 + to) as u64) {
                // stay a few steps inside the overlap
                let inside = [-3.0, 3.0].iter().all(|&s| {
                    (0..d).all(|k| {
                        let mut q = p.clone();
                        q[k] += s * step;
                        m.map_point(from, to, &q, 0, &mut jet)
                    })
                });
                if inside {
                    differential = differential.max(differential_identity_residual(m, from, to, &p, step)?);
                }
            }
        }
    }
    Ok(vec![
        Check::at_most(&m.name, "paired bracket identity", bracket, IDENTITY_TOLERANCE),
        Check::at_most(&m.name, format!("derivative of Dx o Dx' = I (step {step})"), differential, IDENTITY_TOLERANCE),
    ])
}

/// Largest chart norm `q_total` of a manifold, for reporting.
pub fn total_chart_norm(m: &AtlasManifold, points: usize) -> Result<f64> {
    Ok(atlas_norm(&chart_norms(m, points, 1, 0.5)?))
}
