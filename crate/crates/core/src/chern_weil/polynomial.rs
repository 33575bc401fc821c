//! Invariant polynomials on curvature matrices.
//!
//! Pontryagin, Chern and trace-power polynomials are expanded into linear
//! combinations of products of traces `tr(Ω^k)` (Newton's identities), with
//! the normalization `(1/2π)^{deg}` folded into the coefficients:
//!
//! - `p_j = e_{2j}(Ω) / (2π)^{2j}`, the degree-`2j` coefficient of
//!   `det(I − Ω/2π)` up to the sign `(−1)^{2j} = 1`;
//! - `c_j = Re[(i/2π)^j e_j(Ω)]`, the degree-`j` coefficient of
//!   `det(I + iΩ/2π)` (Chern classes of the complexified tangent bundle;
//!   zero for odd `j` on a real curvature matrix);
//! - `tr-power:k₁,…,k_m = Π_a tr((Ω/2π)^{k_a})`.
//!
//! The Euler polynomial is the Pfaffian `Pf(Ω/2π)` in an orthonormal frame.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which invariant polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PolynomialKind {
    Euler,
    Pontryagin(usize),
    Chern(usize),
    TracePower(Vec<usize>),
}

/// Products of traces `Π tr(Ω^{k})`, keyed by the sorted exponent list.
pub type TraceExpansion = BTreeMap<Vec<usize>, f64>;

/// An invariant polynomial together with its trace expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantPolynomial {
    kind: PolynomialKind,
    expansion: TraceExpansion,
}

impl InvariantPolynomial {
    pub fn euler() -> Self {
        Self {
            kind: PolynomialKind::Euler,
            expansion: TraceExpansion::new(),
        }
    }

    pub fn pontryagin(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidParameter("Pontryagin index must be positive".into()));
        }
        let scale = (2.0 * PI).powi(-(2 * j as i32));
        let expansion = scaled(elementary(2 * j), scale);
        Ok(Self {
            kind: PolynomialKind::Pontryagin(j),
            expansion,
        })
    }

    pub fn chern(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidParameter("Chern index must be positive".into()));
        }
        // Re(i^j) ∈ {1, 0, −1, 0}
        let phase = match j % 4 {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        };
        let scale = phase * (2.0 * PI).powi(-(j as i32));
        let expansion = if phase == 0.0 {
            TraceExpansion::new()
        } else {
            scaled(elementary(j), scale)
        };
        Ok(Self {
            kind: PolynomialKind::Chern(j),
            expansion,
        })
    }

    pub fn trace_power(exponents: &[usize]) -> Result<Self> {
        if exponents.is_empty() || exponents.contains(&0) {
            return Err(Error::InvalidParameter(format!("trace-power exponents {exponents:?}")));
        }
        let mut key = exponents.to_vec();
        key.sort_unstable();
        let total: usize = key.iter().sum();
        let mut expansion = TraceExpansion::new();
        expansion.insert(key.clone(), (2.0 * PI).powi(-(total as i32)));
        Ok(Self {
            kind: PolynomialKind::TracePower(key),
            expansion,
        })
    }

    pub fn kind(&self) -> &PolynomialKind {
        &self.kind
    }

    /// Trace expansion with the `(1/2π)` powers included; empty for Euler.
    pub fn expansion(&self) -> &TraceExpansion {
        &self.expansion
    }

    /// Polynomial degree in the curvature entries on a `dim`-manifold.
    pub fn curvature_degree(&self, dim: usize) -> usize {
        match &self.kind {
            PolynomialKind::Euler => dim / 2,
            PolynomialKind::Pontryagin(j) => 2 * j,
            PolynomialKind::Chern(j) => *j,
            PolynomialKind::TracePower(k) => k.iter().sum(),
        }
    }

    /// Whether the polynomial yields a top-degree form on a `dim`-manifold.
    pub fn is_top_degree(&self, dim: usize) -> bool {
        dim % 2 == 0 && 2 * self.curvature_degree(dim) == dim
    }

    pub fn is_euler(&self) -> bool {
        self.kind == PolynomialKind::Euler
    }

    /// Human-readable normalization used.
    pub fn normalization(&self) -> String {
        match &self.kind {
            PolynomialKind::Euler => "Pf(Ω/2π) in an orthonormal frame".into(),
            PolynomialKind::Pontryagin(j) => format!("e_{}(Ω)/(2π)^{}", 2 * j, 2 * j),
            PolynomialKind::Chern(j) => format!("Re[(i/2π)^{j} e_{j}(Ω)]"),
            PolynomialKind::TracePower(k) => format!("Π tr((Ω/2π)^k), k = {k:?}"),
        }
    }
}

impl fmt::Display for InvariantPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PolynomialKind::Euler => write!(f, "euler"),
            PolynomialKind::Pontryagin(j) => write!(f, "p{j}"),
            PolynomialKind::Chern(j) => write!(f, "c{j}"),
            PolynomialKind::TracePower(k) => {
                let parts: Vec<String> = k.iter().map(|v| v.to_string()).collect();
                write!(f, "tr-power:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for InvariantPolynomial {
    type Err = Error;

    /// `euler`, `p<j>`, `c<j>` or `tr-power:<k>[,<k>…]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unknown polynomial `{s}`"));
        if s == "euler" {
            return Ok(Self::euler());
        }
        if let Some(spec) = s.strip_prefix("tr-power:") {
            let exps = spec
                .split(',')
                .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            return Self::trace_power(&exps);
        }
        if let Some(j) = s.strip_prefix('p') {
            return Self::pontryagin(j.parse().map_err(|_| bad())?);
        }
        if let Some(j) = s.strip_prefix('c') {
            return Self::chern(j.parse().map_err(|_| bad())?);
        }
        Err(bad())
    }
}

impl serde::Serialize for InvariantPolynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

fn scaled(mut e: TraceExpansion, factor: f64) -> TraceExpansion {
    e.values_mut().for_each(|v| *v *= factor);
    e
}

fn multiply(a: &TraceExpansion, b: &TraceExpansion) -> TraceExpansion {
    let mut out = TraceExpansion::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let mut key = ka.clone();
            key.extend_from_slice(kb);
            key.sort_unstable();
            *out.entry(key).or_insert(0.0) += ca * cb;
        }
    }
    out.retain(|_, v| *v != 0.0);
    out
}

/// Elementary symmetric polynomial `e_n` of the eigenvalues as a trace
/// expansion, via `n e_n = Σ_{i=1}^n (−1)^{i−1} e_{n−i} tr(Ω^i)`.
pub fn elementary(n: usize) -> TraceExpansion {
    let mut e: Vec<TraceExpansion> = vec![TraceExpansion::from([(Vec::new(), 1.0)])];
    for m in 1..=n {
        let mut acc = TraceExpansion::new();
        for i in 1..=m {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            let p = TraceExpansion::from([(vec![i], sign / m as f64)]);
            for (k, c) in multiply(&e[m - i], &p) {
                *acc.entry(k).or_insert(0.0) += c;
            }
        }
        acc.retain(|_, v| *v != 0.0);
        e.push(acc);
    }
    e.pop().unwrap_or_default()
}

/// Evaluate a trace expansion on a scalar matrix (row-major `n×n`); used to
/// validate expansions against characteristic polynomials.
pub fn evaluate_on_matrix(expansion: &TraceExpansion, a: &[f64], n: usize) -> f64 {
    let max_power = expansion.keys().flatten().copied().max().unwrap_or(0);
    let mut traces = vec![0.0; max_power + 1];
    let mut power = vec![0.0; n * n];
    for i in 0..n {
        power[i * n + i] = 1.0;
    }
    for k in 1..=max_power {
        let mut next = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                next[i * n + j] = (0..n).map(|l| power[i * n + l] * a[l * n + j]).sum();
            }
        }
        power = next;
        traces[k] = (0..n).map(|i| power[i * n + i]).sum();
    }
    expansion
        .iter()
        .map(|(key, c)| c * key.iter().map(|&k| traces[k]).product::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn low_order_expansions() {
        let e2 = elementary(2);
        assert_eq!(e2.get(&vec![1, 1]), Some(&0.5));
        assert_eq!(e2.get(&vec![2]), Some(&-0.5));
        let p1 = InvariantPolynomial::pontryagin(1).unwrap();
        let f = 1.0 / (4.0 * PI * PI);
        assert!((p1.expansion()[&vec![2]] + 0.5 * f).abs() < 1e-18);
        assert!(InvariantPolynomial::chern(1).unwrap().expansion().is_empty());
        assert!(InvariantPolynomial::chern(3).unwrap().expansion().is_empty());
    }

    #[test]
    fn elementary_polynomials_match_characteristic_polynomial() {
        // det(tI − A) = Σ (−1)^k e_k t^{n−k}; compare e_k with products of eigenvalues
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=5 {
            let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = DMatrix::from_row_slice(n, n, &a);
            let eig = m.complex_eigenvalues();
            for k in 1..=n {
                // e_k of eigenvalues by expanding Π(1 + λ_i x)
                let mut coeffs = vec![num_complex::Complex64::new(0.0, 0.0); n + 1];
                coeffs[0] = num_complex::Complex64::new(1.0, 0.0);
                for lam in eig.iter() {
                    for j in (1..=n).rev() {
                        coeffs[j] = coeffs[j] + coeffs[j - 1] * lam;
                    }
                }
                let got = evaluate_on_matrix(&elementary(k), &a, n);
                assert!((got - coeffs[k].re).abs() < 1e-10, "n={n} k={k}");
                assert!(coeffs[k].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["euler", "p1", "p2", "c1", "c2", "tr-power:2", "tr-power:1,1"] {
            let p: InvariantPolynomial = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert_eq!("tr-power:2,1".parse::<InvariantPolynomial>().unwrap().to_string(), "tr-power:1,2");
        for bad in ["", "q1", "p0", "px", "tr-power:", "tr-power:0"] {
            assert!(bad.parse::<InvariantPolynomial>().is_err(), "{bad}");
        }
    }

    #[test]
    fn degrees() {
        let p1 = InvariantPolynomial::pontryagin(1).unwrap();
        assert!(p1.is_top_degree(4) && !p1.is_top_degree(2));
        assert!(InvariantPolynomial::euler().is_top_degree(2));
        assert!(!InvariantPolynomial::euler().is_top_degree(3));
        assert!(InvariantPolynomial::chern(1).unwrap().is_top_degree(2));
        assert_eq!(InvariantPolynomial::trace_power(&[1, 2]).unwrap().curvature_degree(6), 3);
    }

    #[test]
    fn complexified_second_chern_is_minus_first_pontryagin() {
        let c2 = InvariantPolynomial::chern(2).unwrap();
        let p1 = InvariantPolynomial::pontryagin(1).unwrap();
        for (k, v) in c2.expansion() {
            assert!((v + p1.expansion()[k]).abs() < 1e-18);
        }
    }
}
