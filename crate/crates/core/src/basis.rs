//! Multi-indices, total-degree index sets and the tensor-product basis of
//! normalized Legendre polynomials.
//!
//! Basis functions are orthonormal with respect to the uniform density on the
//! reference cube, i.e. `E[phi_l^2] = 1` with density `1/2` per dimension.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Exponent tuple `(i_1, ..., i_q)` identifying one basis polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zero(q: usize) -> Self {
        Self(vec![0; q])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max_exponent(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, e) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Ordered, duplicate-free collection of multi-indices of a common dimension.
///
/// Position in the set is the linear index of the basis polynomial
/// (0-based here; files use 1-based numbering).
#[derive(Debug, Clone)]
pub struct IndexSet {
    q: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.indices == other.indices
    }
}

impl IndexSet {
    /// Builds a set from an explicit list, keeping the given order.
    pub fn from_indices(q: usize, indices: Vec<MultiIndex>) -> Result<Self> {
        if q == 0 {
            return Err(Error::Dimension("index set needs q >= 1".into()));
        }
        let mut lookup = HashMap::with_capacity(indices.len());
        for (i, mi) in indices.iter().enumerate() {
            if mi.dim() != q {
                return Err(Error::Shape {
                    expected: q,
                    got: mi.dim(),
                });
            }
            if lookup.insert(mi.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate multi-index {mi} in index set"
                )));
            }
        }
        Ok(Self { q, indices, lookup })
    }

    /// All multi-indices of total degree `<= d`, graded by degree.
    ///
    /// Within one degree the order is lexicographic with larger leading
    /// exponents first, so the first-degree block reads `p_1, p_2, ..., p_q`.
    pub fn total_degree(q: usize, d: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::Dimension("index set needs q >= 1".into()));
        }
        let size = total_degree_size(q, d)?;
        let mut indices = Vec::with_capacity(size);
        let mut buf = vec![0u32; q];
        for g in 0..=d {
            compositions_desc(g, 0, &mut buf, &mut indices);
        }
        debug_assert_eq!(indices.len(), size);
        Self::from_indices(q, indices)
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&MultiIndex> {
        self.indices.get(i)
    }

    pub fn index_of(&self, mi: &MultiIndex) -> Option<usize> {
        self.lookup.get(mi).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    pub fn max_degree(&self) -> u32 {
        self.indices
            .iter()
            .map(MultiIndex::total_degree)
            .max()
            .unwrap_or(0)
    }

    fn max_exponent(&self) -> u32 {
        self.indices
            .iter()
            .map(MultiIndex::max_exponent)
            .max()
            .unwrap_or(0)
    }

    /// Sub-set selected by linear indices, in the given order.
    pub fn subset(&self, linear: &[usize]) -> Result<Self> {
        let picked = linear
            .iter()
            .map(|&i| {
                self.indices.get(i).cloned().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "linear index {i} outside set of {}",
                        self.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(self.q, picked)
    }

    /// Values `Phi_i(x)` of every basis polynomial at a reference point.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.q {
            return Err(Error::Shape {
                expected: self.q,
                got: x.len(),
            });
        }
        let n = self.max_exponent() as usize;
        let tables: Vec<Vec<f64>> = x.iter().map(|&xj| legendre_table(n, xj)).collect();
        Ok(self
            .indices
            .iter()
            .map(|mi| {
                mi.0.iter()
                    .zip(&tables)
                    .map(|(&e, t)| t[e as usize])
                    .product()
            })
            .collect())
    }

    /// Rows `linear_index, i_1, ..., i_q` with 1-based linear indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("linear_index");
        for j in 1..=self.q {
            out.push_str(&format!(",i{j}"));
        }
        out.push('\n');
        for (i, mi) in self.indices.iter().enumerate() {
            out.push_str(&(i + 1).to_string());
            for e in &mi.0 {
                out.push_str(&format!(",{e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn compositions_desc(rest: u32, pos: usize, buf: &mut [u32], out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = rest;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for e in (0..=rest).rev() {
        buf[pos] = e;
        compositions_desc(rest - e, pos + 1, buf, out);
    }
    buf[pos] = 0;
}

/// `(d + q)! / (d! q!)`, with an error if it does not fit in `usize`.
pub fn total_degree_size(q: usize, d: u32) -> Result<usize> {
    // C(n, k) with k = min(q, d) built incrementally; each partial product is a binomial.
    let n = (q as u128) + (d as u128);
    let k = (q as u128).min(d as u128);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul(n - k + i)
            .ok_or_else(|| Error::Size(format!("|I^d| overflows for q={q}, d={d}")))?
            / i;
    }
    usize::try_from(acc).map_err(|_| Error::Size(format!("|I^d| = {acc} does not fit usize")))
}

/// Normalized Legendre polynomial `sqrt(2l+1) P_l(x)`.
pub fn legendre_1d(degree: u32, x: f64) -> f64 {
    legendre_table(degree as usize, x)[degree as usize]
}

/// `[phi_0(x), ..., phi_n(x)]` by the three-term recurrence.
pub fn legendre_table(n: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
    }
    for l in 1..n {
        let lf = l as f64;
        p[l + 1] = ((2.0 * lf + 1.0) * x * p[l] - lf * p[l - 1]) / (lf + 1.0);
    }
    for (l, v) in p.iter_mut().enumerate() {
        *v *= ((2 * l + 1) as f64).sqrt();
    }
    p
}
