//! Grid-sampled chart metrics.
//!
//! File layout (little-endian): the 8-byte magic `CHGRID01`, `u32` dimension
//! `d`, `u32` points per axis `n`, then `n^d · d · d` `f64` values, row-major
//! over the nodes (last axis fastest) and the `d×d` metric at each node. The
//! nodes sit at `−R + 2R·i/(n−1)` where `R` is the radius of the chart that
//! uses the grid.
//!
//! Values are multilinear interpolants of the nodes. Derivatives are central
//! differences of the interpolant with the node spacing as step; a shift by
//! one spacing commutes with interpolation, so they equal interpolated nodal
//! differences and are second-order accurate.

use std::io::{Read, Write};
use std::path::Path;

use super::{EvaluatorKind, MetricField, MetricJet};
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 8] = b"CHGRID01";

/// Metric sampled on the nodes of `[−R, R]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMetric {
    dim: usize,
    points: usize,
    radius: f64,
    data: Vec<f64>,
}

impl GridMetric {
    pub fn new(dim: usize, points: usize, radius: f64, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > 8 {
            return Err(Error::Dimension(format!("grid metric of dimension {dim}")));
        }
        if points < 5 {
            return Err(Error::GridTooSmall(format!("{points} points per axis, need at least 5")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid radius {radius}")));
        }
        let nodes = points
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::GridTooSmall(format!("{points}^{dim} nodes overflow")))?;
        if data.len() != nodes * dim * dim {
            return Err(Error::Dimension(format!(
                "grid data has {} values, expected {}",
                data.len(),
                nodes * dim * dim
            )));
        }
        for (node, g) in data.chunks_exact(dim * dim).enumerate() {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Spec(format!("non-finite metric value at node {node}")));
            }
            for k in 0..dim {
                for l in 0..k {
                    let (a, b) = (g[k * dim + l], g[l * dim + k]);
                    if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                        return Err(Error::Spec(format!("metric not symmetric at node {node}")));
                    }
                }
            }
        }
        Ok(Self {
            dim,
            points,
            radius,
            data,
        })
    }

    /// Sample `metric` on the nodes of `[−radius, radius]^dim`.
    pub fn sample(metric: &dyn MetricField, points: usize, radius: f64) -> Result<Self> {
        let d = metric.dim();
        let step = 2.0 * radius / (points as f64 - 1.0);
        let nodes = points.pow(d as u32);
        let mut jet = MetricJet::new(d);
        let mut x = vec![0.0; d];
        let mut data = Vec::with_capacity(nodes * d * d);
        for node in 0..nodes {
            let mut rest = node;
            for slot in x.iter_mut().rev() {
                *slot = -radius + step * (rest % points) as f64;
                rest /= points;
            }
            metric.eval(&x, 0, &mut jet)?;
            data.extend_from_slice(&jet.g);
        }
        Self::new(d, points, radius, data)
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn step(&self) -> f64 {
        2.0 * self.radius / (self.points as f64 - 1.0)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn read_from(reader: &mut impl Read, radius: f64) -> Result<Self> {
        let mut header = [0u8; 16];
        reader.read_exact(&mut header)?;
        if &header[..8] != GRID_MAGIC {
            return Err(Error::Spec("grid file does not start with CHGRID01".into()));
        }
        let dim = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
        let points = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as usize;
        if dim == 0 || dim > 8 || points < 2 || points > 1 << 16 {
            return Err(Error::Spec(format!("grid header: dimension {dim}, {points} points per axis")));
        }
        let count = points
            .checked_pow(dim as u32)
            .and_then(|n| n.checked_mul(dim * dim))
            .ok_or_else(|| Error::Spec("grid too large".into()))?;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != count * 8 {
            return Err(Error::Spec(format!(
                "grid payload has {} bytes, expected {}",
                bytes.len(),
                count * 8
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::new(dim, points, radius, data)
    }

    pub fn write_to(&self, writer: &mut impl Write) -> Result<()> {
        writer.write_all(GRID_MAGIC)?;
        writer.write_all(&(self.dim as u32).to_le_bytes())?;
        writer.write_all(&(self.points as u32).to_le_bytes())?;
        for v in &self.data {
            writer.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path, radius: f64) -> Result<Self> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut file, radius)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut file)?;
        file.flush()?;
        Ok(())
    }

    /// Multilinear interpolant at `x`, accumulated as `out += weight · g(x)`.
    fn interpolate(&self, x: &[f64], weight: f64, out: &mut [f64]) -> Result<()> {
        let d = self.dim;
        let h = self.step();
        let mut base = [0usize; 8];
        let mut frac = [0.0f64; 8];
        for a in 0..d {
            let t = (x[a] + self.radius) / h;
            if !(t >= 0.0 && t <= (self.points - 1) as f64) {
                return Err(Error::InvalidParameter(format!(
                    "point {x:?} outside the sampled box [-{0}, {0}]",
                    self.radius
                )));
            }
            let i = (t.floor() as usize).min(self.points - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let n2 = d * d;
        for corner in 0..1usize << d {
            let mut w = weight;
            let mut node = 0;
            for a in 0..d {
                let up = corner >> (d - 1 - a) & 1;
                w *= if up == 1 { frac[a] } else { 1.0 - frac[a] };
                node = node * self.points + base[a] + up;
            }
            if w != 0.0 {
                let g = &self.data[node * n2..(node + 1) * n2];
                for (o, v) in out.iter_mut().zip(g) {
                    *o += w * v;
                }
            }
        }
        Ok(())
    }
}

impl MetricField for GridMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], order: usize, jet: &mut MetricJet) -> Result<()> {
        let d = self.dim;
        let n2 = d * d;
        let h = self.step();
        let mut y = [0.0f64; 8];
        y[..d].copy_from_slice(x);
        let sample = |y: &[f64], w: f64, out: &mut [f64]| self.interpolate(y, w, out);
        jet.g.iter_mut().for_each(|v| *v = 0.0);
        sample(&y[..d], 1.0, &mut jet.g)?;
        if order == 0 {
            return Ok(());
        }
        let mut buf = [0.0f64; 64];
        for mu in 0..d {
            buf[..n2].iter_mut().for_each(|v| *v = 0.0);
            y[mu] = x[mu] + h;
            sample(&y[..d], 0.5 / h, &mut buf[..n2])?;
            y[mu] = x[mu] - h;
            sample(&y[..d], -0.5 / h, &mut buf[..n2])?;
            y[mu] = x[mu];
            for kl in 0..n2 {
                jet.dg[kl * d + mu] = buf[kl];
            }
        }
        if order == 1 {
            return Ok(());
        }
        for mu in 0..d {
            for nu in mu..d {
                buf[..n2].iter_mut().for_each(|v| *v = 0.0);
                if mu == nu {
                    let c = 1.0 / (h * h);
                    y[mu] = x[mu] + h;
                    sample(&y[..d], c, &mut buf[..n2])?;
                    y[mu] = x[mu] - h;
                    sample(&y[..d], c, &mut buf[..n2])?;
                    y[mu] = x[mu];
                    for kl in 0..n2 {
                        buf[kl] -= 2.0 * c * jet.g[kl];
                    }
                } else {
                    let c = 0.25 / (h * h);
                    for (sm, sn, s) in [(1.0, 1.0, c), (1.0, -1.0, -c), (-1.0, 1.0, -c), (-1.0, -1.0, c)] {
                        y[mu] = x[mu] + sm * h;
                        y[nu] = x[nu] + sn * h;
                        sample(&y[..d], s, &mut buf[..n2])?;
                    }
                    y[mu] = x[mu];
                    y[nu] = x[nu];
                }
                for kl in 0..n2 {
                    jet.ddg[(kl * d + mu) * d + nu] = buf[kl];
                    jet.ddg[(kl * d + nu) * d + mu] = buf[kl];
                }
            }
        }
        Ok(())
    }

    fn kind(&self) -> EvaluatorKind {
        EvaluatorKind::GridSampled
    }
}
