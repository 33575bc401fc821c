//! Sweeps of a characteristic number over a perturbation family.

use std::io::Write;

use charnum::atlas::regularity::chart_norms;
use charnum::atlas::builtins::build;
use charnum::atlas::BuiltinId;
use charnum::chern_weil::{chart_count_bound, integrate_characteristic_number, InvariantPolynomial};
use charnum::connections::ConnectionChoice;
use charnum::{Error, Result};
use serde::Serialize;

/// Parse `start:stop:step` into the inclusive grid `start + k·step`.
pub fn parse_eps_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("ε range `{s}` must be start:stop:step"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && stop >= start) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(Error::InvalidParameter(format!("ε range `{s}` has {count} values")));
    }
    // snap to 12 decimals so that 0.1 + 2·0.05 prints as 0.2
    Ok((0..count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Assumption parameters of the comparison theorem, carried as labels only.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Assumptions {
    pub injectivity_radius_floor: Option<f64>,
    pub curvature_lower: Option<f64>,
    pub curvature_upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub family: String,
    pub eps: Vec<f64>,
    pub poly: InvariantPolynomial,
    pub connection: ConnectionChoice,
    pub h: f64,
    /// Lattice points per axis for the chart norms.
    pub norm_points: usize,
    pub assumptions: Assumptions,
}

/// One ε of a sweep; numeric fields are `None` on the error rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: String,
    pub eps: f64,
    pub value: Option<f64>,
    pub volume: Option<f64>,
    pub ratio: Option<f64>,
    pub chart_count: Option<usize>,
    /// `⌊vol/v⌋` of the chart-count bound at `Q = q` on the support scale.
    pub bound: Option<u64>,
    /// Largest chart metric bound `Q` (scale free).
    pub q: Option<f64>,
    /// Largest full chart norm `q_total` on the support scale.
    pub q_total: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub family: String,
    pub polynomial: InvariantPolynomial,
    pub connection: ConnectionChoice,
    pub h: f64,
    pub rows: usize,
    pub failed_rows: usize,
    /// The single constant bounding `|value|/volume` across the family.
    pub max_ratio: Option<f64>,
    pub assumptions: Assumptions,
}

fn sweep_row(config: &SweepConfig, eps: f64) -> Result<SweepRow> {
    let m = build(BuiltinId::family(&config.family, eps)?)?;
    let result = integrate_characteristic_number(&m, &config.poly, config.connection, config.h)?;
    let norms = chart_norms(&m, config.norm_points, 1, 0.5)?;
    let q = norms.iter().fold(0.0f64, |q, e| q.max(e.report.q_metric_bound));
    let q_total = norms.iter().fold(0.0f64, |q, e| q.max(e.report.q_total));
    let r = m.charts().iter().fold(0.0f64, |r, c| r.max(c.support));
    let bound = chart_count_bound(m.dim(), result.volume, r, q, m.chart_count())?;
    Ok(SweepRow {
        family: config.family.clone(),
        eps,
        value: Some(result.value),
        volume: Some(result.volume),
        ratio: Some(result.ratio),
        chart_count: Some(m.chart_count()),
        bound: Some(bound.bound),
        q: Some(q),
        q_total: Some(q_total),
        error: None,
    })
}

/// Run the sweep; an ε that fails (for example a degenerate metric) becomes
/// a row with an error marker and the sweep continues. Unknown families are
/// an error.
pub fn run_sweep(config: &SweepConfig) -> Result<(Vec<SweepRow>, SweepSummary)> {
    BuiltinId::family(&config.family, 0.0)?;
    let mut rows = Vec::with_capacity(config.eps.len());
    for &eps in &config.eps {
        rows.push(sweep_row(config, eps).unwrap_or_else(|e| SweepRow {
            family: config.family.clone(),
            eps,
            value: None,
            volume: None,
            ratio: None,
            chart_count: None,
            bound: None,
            q: None,
            q_total: None,
            error: Some(e.kind().to_string()),
        }));
    }
    let max_ratio = rows.iter().filter_map(|r| r.ratio).reduce(f64::max);
    let summary = SweepSummary {
        family: config.family.clone(),
        polynomial: config.poly.clone(),
        connection: config.connection,
        h: config.h,
        rows: rows.len(),
        failed_rows: rows.iter().filter(|r| r.error.is_some()).count(),
        max_ratio,
        assumptions: config.assumptions.clone(),
    };
    Ok((rows, summary))
}

pub const CSV_HEADER: &str = "family,eps,value,volume,ratio,chart_count,bound,q,q_total,error";

fn field<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

/// Shortest round-trip decimal, in exponent form for very small or large
/// magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn float_field(v: &Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// CSV with a header row, `.` decimals and empty cells for missing values.
pub fn write_csv(rows: &[SweepRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.family,
            format_float(r.eps),
            float_field(&r.value),
            float_field(&r.volume),
            float_field(&r.ratio),
            field(&r.chart_count),
            field(&r.bound),
            float_field(&r.q),
            float_field(&r.q_total),
            field(&r.error),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_ranges_are_inclusive_and_snapped() {
        assert_eq!(parse_eps_range("0:0.3:0.05").unwrap(), vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]);
        assert_eq!(parse_eps_range("0.1:0.1:1").unwrap(), vec![0.1]);
        for bad in ["0:1", "1:0:0.1", "0:1:0", "a:b:c", "0:1:-1"] {
            assert!(parse_eps_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn csv_leaves_missing_cells_empty() {
        let row = SweepRow {
            family: "s2_perturbed".into(),
            eps: 2.0,
            value: None,
            volume: None,
            ratio: None,
            chart_count: None,
            bound: None,
            q: None,
            q_total: None,
            error: Some("invalid_parameter".into()),
        };
        let mut out = Vec::new();
        write_csv(&[row], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "s2_perturbed,2,,,,,,,,invalid_parameter");
    }

    #[test]
    fn floats_use_exponents_only_at_extreme_magnitudes() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(0.25), "0.25");
        assert_eq!(format_float(1.007874339542525e-14), "1.007874339542525e-14");
        assert_eq!(format_float(-3e20), "-3e20");
    }
}
