//! Dense multi-index arrays, even-degree exterior forms and Pfaffian kernels.
//!
//! Curvature-like arrays use the fixed index order `(k; λ, μ, ν)` in
//! row-major layout, i.e. `R^k_{λμν}` lives at `((k*d + λ)*d + μ)*d + ν`.
//! Christoffel symbols `Γ^k_{μν}` live at `(k*d + μ)*d + ν`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Role of one axis of a [`MultiIndexArray`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum IndexRole {
    Upper,
    Lower,
    Coordinate,
}

/// Row-major dense array with tagged axes.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiIndexArray {
    dims: Vec<usize>,
    roles: Vec<IndexRole>,
    data: Vec<f64>,
}

impl MultiIndexArray {
    pub fn zeros(dims: &[usize], roles: &[IndexRole]) -> Result<Self> {
        let len = Self::check_shape(dims, roles)?;
        Ok(Self {
            dims: dims.to_vec(),
            roles: roles.to_vec(),
            data: vec![0.0; len],
        })
    }

    pub fn from_vec(dims: &[usize], roles: &[IndexRole], data: Vec<f64>) -> Result<Self> {
        let len = Self::check_shape(dims, roles)?;
        if len != data.len() {
            return Err(Error::Dimension(format!(
                "buffer of length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            roles: roles.to_vec(),
            data,
        })
    }

    fn check_shape(dims: &[usize], roles: &[IndexRole]) -> Result<usize> {
        if dims.len() != roles.len() {
            return Err(Error::Dimension(format!(
                "{} dims but {} index roles",
                dims.len(),
                roles.len()
            )));
        }
        if dims.iter().any(|&n| n == 0) {
            return Err(Error::Dimension(format!("zero extent in {dims:?}")));
        }
        Ok(dims.iter().product())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn roles(&self) -> &[IndexRole] {
        &self.roles
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    /// Flat offset of a multi-index, or `None` when out of bounds.
    pub fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.dims.len() {
            return None;
        }
        let mut off = 0;
        for (&i, &n) in index.iter().zip(&self.dims) {
            if i >= n {
                return None;
            }
            off = off * n + i;
        }
        Some(off)
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        self.offset(index).map(|o| self.data[o])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let o = self
            .offset(index)
            .ok_or_else(|| Error::Dimension(format!("index {index:?} out of bounds {:?}", self.dims)))?;
        self.data[o] = value;
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }
}

/// `h_{[μν]} = h_{..μ..ν..} − h_{..ν..μ..}` over the two given axes.
pub fn antisymmetrize_pair(
    h: &MultiIndexArray,
    axis_mu: usize,
    axis_nu: usize,
) -> Result<MultiIndexArray> {
    let rank = h.rank();
    if axis_mu == axis_nu || axis_mu >= rank || axis_nu >= rank {
        return Err(Error::Dimension(format!(
            "cannot antisymmetrize axes {axis_mu}, {axis_nu} of a rank-{rank} array"
        )));
    }
    if h.dims[axis_mu] != h.dims[axis_nu] {
        return Err(Error::Dimension(format!(
            "axes {axis_mu} and {axis_nu} have extents {} and {}",
            h.dims[axis_mu], h.dims[axis_nu]
        )));
    }
    let mut strides = vec![1usize; rank];
    for a in (0..rank.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * h.dims[a + 1];
    }
    let (sm, sn) = (strides[axis_mu], strides[axis_nu]);
    let mut out = vec![0.0; h.data.len()];
    for (off, slot) in out.iter_mut().enumerate() {
        let i = (off / sm) % h.dims[axis_mu];
        let j = (off / sn) % h.dims[axis_nu];
        // swap the two coordinates of the multi-index
        let swapped = off + j * sm + i * sn - i * sm - j * sn;
        *slot = h.data[off] - h.data[swapped];
    }
    MultiIndexArray::from_vec(&h.dims, &h.roles, out)
}

/// Maximum norm `max_i |x_i|`.
pub fn max_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

const MAX_FORM_DIM: usize = 16;

fn mask_of(indices: &[usize], dim: usize) -> Result<u32> {
    let mut mask = 0u32;
    let mut prev: Option<usize> = None;
    for &i in indices {
        if i >= dim {
            return Err(Error::Dimension(format!("form index {i} out of range for dim {dim}")));
        }
        if prev.is_some_and(|p| p >= i) {
            return Err(Error::Dimension(format!("form indices {indices:?} not strictly increasing")));
        }
        prev = Some(i);
        mask |= 1 << i;
    }
    Ok(mask)
}

fn indices_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Sign of `e_a ∧ e_b = sign · e_{a∪b}` for disjoint sorted index sets.
fn merge_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        inversions += (a >> (j + 1)).count_ones();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Even-degree differential form with constant coefficients on `R^dim`.
///
/// Terms are keyed by strictly increasing index tuples (stored as bitmasks);
/// zero coefficients are never stored, so the zero form has no terms.
#[derive(Clone, Debug, PartialEq)]
pub struct EvenForm {
    dim: usize,
    degree: usize,
    terms: Vec<(u32, f64)>,
}

impl EvenForm {
    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        if degree % 2 != 0 || degree > dim || dim > MAX_FORM_DIM {
            return Err(Error::Dimension(format!(
                "degree {degree} form in dimension {dim} is not an admissible even form"
            )));
        }
        Ok(Self {
            dim,
            degree,
            terms: Vec::new(),
        })
    }

    /// The constant 0-form `c`.
    pub fn scalar(dim: usize, c: f64) -> Result<Self> {
        Self::from_terms(dim, 0, [(Vec::new(), c)])
    }

    /// Build from `(indices, coefficient)` pairs; repeated keys are summed.
    pub fn from_terms<I>(dim: usize, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut form = Self::zero(dim, degree)?;
        let mut raw = Vec::new();
        for (idx, c) in terms {
            if idx.len() != degree {
                return Err(Error::Dimension(format!(
                    "term {idx:?} has length {} but form degree is {degree}",
                    idx.len()
                )));
            }
            raw.push((mask_of(&idx, dim)?, c));
        }
        form.terms = canonical(raw);
        Ok(form)
    }

    /// `c · dx^i ∧ dx^j` for `i < j`.
    pub fn two_form(dim: usize, i: usize, j: usize, c: f64) -> Result<Self> {
        Self::from_terms(dim, 2, [(vec![i, j], c)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.terms.iter().map(|&(m, c)| (indices_of(m), c))
    }

    pub fn coefficient(&self, indices: &[usize]) -> f64 {
        match mask_of(indices, self.dim) {
            Ok(m) => self
                .terms
                .binary_search_by_key(&m, |t| t.0)
                .map(|p| self.terms[p].1)
                .unwrap_or(0.0),
            Err(_) => 0.0,
        }
    }

    /// Coefficient of `dx^1 ∧ … ∧ dx^dim`; zero unless the form is top degree.
    pub fn top_coefficient(&self) -> f64 {
        if self.degree != self.dim {
            return 0.0;
        }
        self.terms.first().map_or(0.0, |t| t.1)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.terms = canonical(out.terms.iter().map(|&(m, c)| (m, c * factor)).collect());
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.degree != other.degree {
            return Err(Error::Dimension(format!(
                "cannot add forms of (dim, degree) ({}, {}) and ({}, {})",
                self.dim, self.degree, other.dim, other.degree
            )));
        }
        let mut raw = self.terms.clone();
        raw.extend_from_slice(&other.terms);
        Ok(Self {
            dim: self.dim,
            degree: self.degree,
            terms: canonical(raw),
        })
    }

    /// Exterior product. Even forms commute, so the order only matters for
    /// bookkeeping.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "wedge of forms on R^{} and R^{}",
                self.dim, other.dim
            )));
        }
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Err(Error::Dimension(format!(
                "wedge degree {degree} exceeds dimension {}",
                self.dim
            )));
        }
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(ma, ca) in &self.terms {
            for &(mb, cb) in &other.terms {
                if ma & mb == 0 {
                    raw.push((ma | mb, merge_sign(ma, mb) * ca * cb));
                }
            }
        }
        Ok(Self {
            dim: self.dim,
            degree,
            terms: canonical(raw),
        })
    }
}

fn canonical(mut raw: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    raw.sort_by_key(|t| t.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(raw.len());
    for (m, c) in raw {
        match out.last_mut() {
            Some(last) if last.0 == m => last.1 += c,
            _ => out.push((m, c)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}

/// Square matrix of even forms of one common degree.
#[derive(Clone, Debug, PartialEq)]
pub struct FormMatrix {
    size: usize,
    entries: Vec<EvenForm>,
}

impl FormMatrix {
    pub fn new(size: usize, entries: Vec<EvenForm>) -> Result<Self> {
        if entries.len() != size * size || size == 0 {
            return Err(Error::Dimension(format!(
                "{} entries for a {size}x{size} form matrix",
                entries.len()
            )));
        }
        let (dim, degree) = (entries[0].dim, entries[0].degree);
        if entries.iter().any(|e| e.dim != dim || e.degree != degree) {
            return Err(Error::Dimension("form matrix entries differ in dim or degree".into()));
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn degree(&self) -> usize {
        self.entries[0].degree
    }

    pub fn form_dim(&self) -> usize {
        self.entries[0].dim
    }

    pub fn entry(&self, row: usize, col: usize) -> &EvenForm {
        &self.entries[row * self.size + col]
    }

    pub fn entries(&self) -> &[EvenForm] {
        &self.entries
    }
}

/// Pfaffian of an antisymmetric matrix by first-row expansion.
///
/// Antisymmetry is checked against `1e-8 · max|A|`.
pub fn pfaffian(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", n, a.ncols())));
    }
    if n % 2 != 0 {
        return Err(Error::OddSize(n));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = 1e-8 * scale;
    let mut deviation = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            deviation = deviation.max((a[(i, j)] + a[(j, i)]).abs());
        }
    }
    if deviation > tolerance {
        return Err(Error::NotAntisymmetric { deviation, tolerance });
    }
    let rows: Vec<usize> = (0..n).collect();
    Ok(pfaffian_rec(&rows, &|i, j| a[(i, j)]))
}

fn pfaffian_rec(rows: &[usize], entry: &dyn Fn(usize, usize) -> f64) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    let first = rows[0];
    let mut total = 0.0;
    let mut rest = Vec::with_capacity(rows.len() - 2);
    for p in 1..rows.len() {
        let a = entry(first, rows[p]);
        if a == 0.0 {
            continue;
        }
        rest.clear();
        rest.extend(rows[1..].iter().enumerate().filter(|&(q, _)| q + 1 != p).map(|(_, &r)| r));
        let sign = if p % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * a * pfaffian_rec(&rest, entry);
    }
    total
}

/// Pfaffian of a matrix of 2-forms, products taken as wedge products.
pub fn pfaffian_of_forms(omega: &FormMatrix) -> Result<EvenForm> {
    let n = omega.size();
    if n % 2 != 0 {
        return Err(Error::OddSize(n));
    }
    if omega.degree() != 2 {
        return Err(Error::Dimension(format!(
            "Pfaffian expects 2-form entries, got degree {}",
            omega.degree()
        )));
    }
    if n > omega.form_dim() {
        return Err(Error::Dimension(format!(
            "Pfaffian of a {n}x{n} matrix of 2-forms has degree {n} > dimension {}",
            omega.form_dim()
        )));
    }
    let rows: Vec<usize> = (0..n).collect();
    pfaffian_forms_rec(omega, &rows)
}

fn pfaffian_forms_rec(omega: &FormMatrix, rows: &[usize]) -> Result<EvenForm> {
    let dim = omega.form_dim();
    if rows.is_empty() {
        return EvenForm::scalar(dim, 1.0);
    }
    let degree = rows.len();
    let first = rows[0];
    let mut total = EvenForm::zero(dim, degree)?;
    for p in 1..rows.len() {
        let a = omega.entry(first, rows[p]);
        if a.is_zero() {
            continue;
        }
        let rest: Vec<usize> = rows[1..]
            .iter()
            .enumerate()
            .filter(|&(q, _)| q + 1 != p)
            .map(|(_, &r)| r)
            .collect();
        let minor = pfaffian_forms_rec(omega, &rest)?;
        if minor.is_zero() {
            continue;
        }
        let sign = if p % 2 == 1 { 1.0 } else { -1.0 };
        total = total.add(&a.wedge(&minor)?.scaled(sign))?;
    }
    Ok(total)
}

/// Sign of pulling legs `mu < nu` to the front of the sorted leg set `legs`.
#[inline]
fn leg_sign(legs: u32, mu: usize, nu: usize) -> f64 {
    let below_mu = (legs & ((1u32 << mu) - 1)).count_ones();
    let below_nu = (legs & ((1u32 << nu) - 1)).count_ones();
    if (below_mu + below_nu - 1) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Top coefficient of `ω_1 ∧ … ∧ ω_m` for 2-forms on `R^{2m}`.
///
/// Each `ω_i` is given as an antisymmetric `d×d` coefficient block with
/// `ω_i = Σ_{μ<ν} ω_i[μ][ν] dx^μ∧dx^ν`.
pub fn top_wedge_coefficient(forms: &[&[f64]], d: usize) -> f64 {
    debug_assert_eq!(2 * forms.len(), d);
    if let [a, b] = forms {
        if d == 4 {
            // α∧β for two 2-forms on R⁴
            let (x, y) = (|m: usize, n: usize| a[m * 4 + n], |m: usize, n: usize| b[m * 4 + n]);
            return x(0, 1) * y(2, 3) - x(0, 2) * y(1, 3) + x(0, 3) * y(1, 2) + x(1, 2) * y(0, 3) - x(1, 3) * y(0, 2)
                + x(2, 3) * y(0, 1);
        }
    }
    top_wedge_rec(forms, d, (1u32 << d) - 1)
}

fn top_wedge_rec(forms: &[&[f64]], d: usize, legs: u32) -> f64 {
    let Some((head, tail)) = forms.split_first() else {
        return 1.0;
    };
    let mut total = 0.0;
    let mut a = legs;
    while a != 0 {
        let mu = a.trailing_zeros() as usize;
        a &= a - 1;
        let mut b = a;
        while b != 0 {
            let nu = b.trailing_zeros() as usize;
            b &= b - 1;
            let c = head[mu * d + nu];
            if c != 0.0 {
                let rest = legs & !(1 << mu) & !(1 << nu);
                total += leg_sign(legs, mu, nu) * c * top_wedge_rec(tail, d, rest);
            }
        }
    }
    total
}

/// Top coefficient of `Pf(Ω)` where `Ω_{ab} = Σ_{μ<ν} f[a][b][μ][ν] dx^μ∧dx^ν`.
///
/// `f` has layout `((a*d + b)*d + μ)*d + ν` and must be antisymmetric in the
/// last pair; `d` is both the matrix size and the form dimension.
pub fn pfaffian_top_coefficient(f: &[f64], d: usize) -> f64 {
    if d % 2 != 0 {
        return 0.0;
    }
    let full = (1u32 << d) - 1;
    pf_top_rec(f, d, full, full)
}

fn pf_top_rec(f: &[f64], d: usize, rows: u32, legs: u32) -> f64 {
    if rows == 0 {
        return 1.0;
    }
    let first = rows.trailing_zeros() as usize;
    let others = rows & !(1 << first);
    let mut total = 0.0;
    let mut sign_row = 1.0;
    let mut rr = others;
    while rr != 0 {
        let j = rr.trailing_zeros() as usize;
        rr &= rr - 1;
        let block = &f[(first * d + j) * d * d..(first * d + j + 1) * d * d];
        let rest_rows = others & !(1 << j);
        let mut a = legs;
        while a != 0 {
            let mu = a.trailing_zeros() as usize;
            a &= a - 1;
            let mut b = a;
            while b != 0 {
                let nu = b.trailing_zeros() as usize;
                b &= b - 1;
                let c = block[mu * d + nu];
                if c != 0.0 {
                    let rest_legs = legs & !(1 << mu) & !(1 << nu);
                    total += sign_row
                        * leg_sign(legs, mu, nu)
                        * c
                        * pf_top_rec(f, d, rest_rows, rest_legs);
                }
            }
        }
        sign_row = -sign_row;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_antisymmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        a
    }

    #[test]
    fn antisymmetrize_examples() {
        let roles = [IndexRole::Lower, IndexRole::Lower];
        let h = MultiIndexArray::from_vec(&[2, 2], &roles, vec![0.0, 3.0, 1.0, 0.0]).unwrap();
        let a = antisymmetrize_pair(&h, 0, 1).unwrap();
        assert_eq!(a.get(&[0, 1]), Some(2.0));
        assert_eq!(a.get(&[1, 0]), Some(-2.0));

        let sym = MultiIndexArray::from_vec(&[2, 2], &roles, vec![1.0, 4.0, 4.0, 2.0]).unwrap();
        assert!(antisymmetrize_pair(&sym, 0, 1).unwrap().data().iter().all(|&v| v == 0.0));

        let anti = MultiIndexArray::from_vec(&[2, 2], &roles, vec![0.0, 5.0, -5.0, 0.0]).unwrap();
        assert_eq!(antisymmetrize_pair(&anti, 0, 1).unwrap().data(), &[0.0, 10.0, -10.0, 0.0]);
    }

    #[test]
    fn antisymmetrize_inner_axes_and_errors() {
        let roles = [IndexRole::Upper, IndexRole::Lower, IndexRole::Lower];
        let data: Vec<f64> = (0..12).map(|v| v as f64).collect();
        let h = MultiIndexArray::from_vec(&[3, 2, 2], &roles, data).unwrap();
        let a = antisymmetrize_pair(&h, 1, 2).unwrap();
        for k in 0..3 {
            for i in 0..2 {
                for j in 0..2 {
                    let want = h.get(&[k, i, j]).unwrap() - h.get(&[k, j, i]).unwrap();
                    assert_eq!(a.get(&[k, i, j]).unwrap(), want);
                }
            }
        }
        assert!(antisymmetrize_pair(&h, 0, 1).is_err());
        assert!(antisymmetrize_pair(&h, 1, 1).is_err());
    }

    #[test]
    fn antisymmetrize_twice_doubles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let roles = [IndexRole::Lower; 3];
        let data: Vec<f64> = (0..27).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = MultiIndexArray::from_vec(&[3, 3, 3], &roles, data).unwrap();
        let once = antisymmetrize_pair(&h, 0, 2).unwrap();
        let twice = antisymmetrize_pair(&once, 0, 2).unwrap();
        for (a, b) in once.data().iter().zip(twice.data()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn wedge_examples() {
        let d = 4;
        let w12 = EvenForm::two_form(d, 0, 1, 1.0).unwrap();
        let w34 = EvenForm::two_form(d, 2, 3, 1.0).unwrap();
        let w13 = EvenForm::two_form(d, 0, 2, 1.0).unwrap();
        let w24 = EvenForm::two_form(d, 1, 3, 1.0).unwrap();
        assert_eq!(w12.wedge(&w34).unwrap().coefficient(&[0, 1, 2, 3]), 1.0);
        assert!(w12.wedge(&w13).unwrap().is_zero());
        assert_eq!(w13.wedge(&w24).unwrap().coefficient(&[0, 1, 2, 3]), -1.0);
        let w2 = EvenForm::two_form(2, 0, 1, 1.0).unwrap();
        assert!(w2.wedge(&EvenForm::two_form(4, 0, 1, 1.0).unwrap()).is_err());
        assert!(w2.wedge(&w2).is_err());
    }

    #[test]
    fn form_construction_rejects_bad_keys() {
        assert!(EvenForm::from_terms(4, 2, [(vec![1, 0], 1.0)]).is_err());
        assert!(EvenForm::from_terms(4, 2, [(vec![0, 4], 1.0)]).is_err());
        assert!(EvenForm::zero(4, 3).is_err());
        assert!(EvenForm::zero(2, 4).is_err());
        let z = EvenForm::from_terms(4, 2, [(vec![0, 1], 1.0), (vec![0, 1], -1.0)]).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn pfaffian_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.5, -2.5, 0.0]);
        assert_eq!(pfaffian(&a).unwrap(), 2.5);

        let mut b = DMatrix::zeros(4, 4);
        b[(0, 1)] = 3.0;
        b[(1, 0)] = -3.0;
        b[(2, 3)] = -2.0;
        b[(3, 2)] = 2.0;
        assert_eq!(pfaffian(&b).unwrap(), -6.0);

        assert!(matches!(pfaffian(&DMatrix::zeros(3, 3)), Err(Error::OddSize(3))));
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(pfaffian(&bad), Err(Error::NotAntisymmetric { .. })));
    }

    #[test]
    fn pfaffian_squared_is_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 4, 6, 8] {
            for _ in 0..20 {
                let a = random_antisymmetric(n, &mut rng);
                let pf = pfaffian(&a).unwrap();
                let det = a.clone().determinant();
                assert!((pf * pf - det).abs() <= 1e-10 * det.abs().max(1e-3), "n={n}");
            }
        }
    }

    fn random_two_form_tensor(d: usize, rng: &mut ChaCha8Rng, antisym_rows: bool) -> Vec<f64> {
        let mut f = vec![0.0; d * d * d * d];
        for a in 0..d {
            for b in 0..d {
                if antisym_rows && b <= a {
                    continue;
                }
                for mu in 0..d {
                    for nu in mu + 1..d {
                        let v: f64 = rng.gen_range(-1.0..1.0);
                        f[((a * d + b) * d + mu) * d + nu] = v;
                        f[((a * d + b) * d + nu) * d + mu] = -v;
                        if antisym_rows {
                            f[((b * d + a) * d + mu) * d + nu] = -v;
                            f[((b * d + a) * d + nu) * d + mu] = v;
                        }
                    }
                }
            }
        }
        f
    }

    fn form_matrix_of(f: &[f64], d: usize) -> FormMatrix {
        let entries = (0..d * d)
            .map(|ab| {
                let terms = (0..d)
                    .flat_map(|mu| (mu + 1..d).map(move |nu| (mu, nu)))
                    .map(|(mu, nu)| (vec![mu, nu], f[(ab * d + mu) * d + nu]));
                EvenForm::from_terms(d, 2, terms).unwrap()
            })
            .collect();
        FormMatrix::new(d, entries).unwrap()
    }

    #[test]
    fn pfaffian_of_forms_small_cases() {
        let omega = EvenForm::two_form(2, 0, 1, 1.7).unwrap();
        let zero = EvenForm::zero(2, 2).unwrap();
        let m = FormMatrix::new(2, vec![zero.clone(), omega.clone(), omega.scaled(-1.0), zero.clone()]).unwrap();
        assert_eq!(pfaffian_of_forms(&m).unwrap(), omega);

        let zeros = FormMatrix::new(4, vec![EvenForm::zero(4, 2).unwrap(); 16]).unwrap();
        assert!(pfaffian_of_forms(&zeros).unwrap().is_zero());
        let too_big = FormMatrix::new(6, vec![EvenForm::zero(4, 2).unwrap(); 36]).unwrap();
        assert!(pfaffian_of_forms(&too_big).is_err());
        let odd = FormMatrix::new(3, vec![EvenForm::zero(4, 2).unwrap(); 9]).unwrap();
        assert!(matches!(pfaffian_of_forms(&odd), Err(Error::OddSize(3))));
    }

    /// Brute force: `Pf(Ω) = 1/(2^m m!) Σ_σ sgn σ Π Ω_{σ(2i)σ(2i+1)}`, each
    /// 2-form expanded over all ordered leg pairs.
    fn brute_force_pfaffian_top(f: &[f64], d: usize) -> f64 {
        fn perms(n: usize) -> Vec<(Vec<usize>, f64)> {
            if n == 0 {
                return vec![(vec![], 1.0)];
            }
            let mut out = Vec::new();
            for (p, s) in perms(n - 1) {
                for pos in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    let sign = if (p.len() - pos) % 2 == 0 { s } else { -s };
                    out.push((q, sign));
                }
            }
            out
        }
        let m = d / 2;
        let all = perms(d);
        let mut total = 0.0;
        for (sigma, ss) in &all {
            for (tau, st) in &all {
                let mut prod = ss * st;
                for i in 0..m {
                    let (a, b) = (sigma[2 * i], sigma[2 * i + 1]);
                    let (mu, nu) = (tau[2 * i], tau[2 * i + 1]);
                    // Ω_ab = ½ Σ_{μν} f_abμν dx^μ∧dx^ν
                    prod *= 0.5 * f[((a * d + b) * d + mu) * d + nu];
                }
                total += prod;
            }
        }
        let fact: f64 = (1..=m).map(|k| k as f64).product();
        total / (2f64.powi(m as i32) * fact)
    }

    #[test]
    fn pfaffian_of_forms_matches_brute_force_and_fast_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2, 4] {
            for _ in 0..5 {
                let f = random_two_form_tensor(d, &mut rng, true);
                let via_forms = pfaffian_of_forms(&form_matrix_of(&f, d)).unwrap().top_coefficient();
                let brute = brute_force_pfaffian_top(&f, d);
                let fast = pfaffian_top_coefficient(&f, d);
                assert!((via_forms - brute).abs() < 1e-12, "{via_forms} vs {brute}");
                assert!((fast - brute).abs() < 1e-12, "{fast} vs {brute}");
            }
        }
        let f = random_two_form_tensor(6, &mut rng, true);
        let via_forms = pfaffian_of_forms(&form_matrix_of(&f, 6)).unwrap().top_coefficient();
        assert!((via_forms - pfaffian_top_coefficient(&f, 6)).abs() < 1e-10);
    }

    #[test]
    fn top_wedge_matches_form_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2, 4, 6] {
            let f = random_two_form_tensor(d, &mut rng, false);
            let m = form_matrix_of(&f, d);
            let count = d / 2;
            let blocks: Vec<&[f64]> = (0..count).map(|i| &f[i * d * d..(i + 1) * d * d]).collect();
            let mut acc = EvenForm::scalar(d, 1.0).unwrap();
            for i in 0..count {
                acc = acc.wedge(&m.entries()[i]).unwrap();
            }
            assert!((acc.top_coefficient() - top_wedge_coefficient(&blocks, d)).abs() < 1e-12);
        }
    }

    #[test]
    fn max_norm_examples() {
        assert_eq!(max_norm(&[3.0, -4.0]), 4.0);
        assert_eq!(max_norm(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(max_norm(&[1.0, 1.0]), 1.0);
        assert!((euclidean_norm(&[1.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
    }
}
