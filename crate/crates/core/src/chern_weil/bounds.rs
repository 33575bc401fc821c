//! Volume lower bounds for metric balls and the resulting bound on the
//! number of charts of a separated-net atlas.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Volume of the Euclidean unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // ω_0 = 1, ω_1 = 2, ω_d = 2π/d · ω_{d−2}
    let mut w = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

/// Lower bound `v = ω_d (e^{−Q} ρ)^d e^{−dQ/2}` for the volume of any metric
/// ball of radius `ρ ∈ (0, e^{−Q} r]` on a manifold of chart norm `≤ Q` on
/// the scale `r`.
pub fn volume_lower_bound(d: usize, r: f64, q: f64, rho: f64) -> Result<f64> {
    if d == 0 || !(r > 0.0) || !(q >= 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("volume bound with d = {d}, r = {r}, Q = {q}")));
    }
    let limit = (-q).exp() * r;
    if !(rho > 0.0 && rho <= limit * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!("ρ = {rho} must lie in (0, e^-Q r] = (0, {limit}]")));
    }
    let radius = (-q).exp() * rho;
    Ok(unit_ball_volume(d) * radius.powi(d as i32) * (-(d as f64) * q / 2.0).exp())
}

/// Ball radius used in the counting argument: half the net separation
/// `2e^{−Q−2} r` shrunk once more by `e^{−Q}`, i.e. `e^{−2Q−2} r / 2`.
pub fn counting_radius(r: f64, q: f64) -> f64 {
    (-2.0 * q - 2.0).exp() * r / 2.0
}

/// Net separation `2e^{−Q−2} r`.
pub fn net_separation(r: f64, q: f64) -> f64 {
    2.0 * (-q - 2.0).exp() * r
}

/// Covering radius `e^{−Q−1} r` of a maximal separated net.
pub fn net_covering_radius(r: f64, q: f64) -> f64 {
    (-q - 1.0).exp() * r
}

/// `⌊vol / v⌋` against the actual count of a separated net.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ChartCountBound {
    pub bound: u64,
    pub actual: usize,
    pub per_ball_volume: f64,
    pub rho: f64,
    pub volume: f64,
    pub q: f64,
    pub r: f64,
}

impl ChartCountBound {
    pub fn holds(&self) -> bool {
        (self.actual as u64) <= self.bound
    }
}

/// The bound `#I ≤ vol(M)/v` with `v = volume_lower_bound(d, r, Q, e^{−2Q−2}r/2)`.
pub fn chart_count_bound(d: usize, volume: f64, r: f64, q: f64, actual: usize) -> Result<ChartCountBound> {
    if !(volume > 0.0) {
        return Err(Error::InvalidParameter(format!("volume {volume}")));
    }
    let rho = counting_radius(r, q);
    let v = volume_lower_bound(d, r, q, rho)?;
    let ratio = volume / v;
    let bound = if ratio >= u64::MAX as f64 { u64::MAX } else { ratio.floor() as u64 };
    Ok(ChartCountBound {
        bound,
        actual,
        per_ball_volume: v,
        rho,
        volume,
        q,
        r,
    })
}
