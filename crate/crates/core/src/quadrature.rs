//! Cubature rules on the reference cube `[-1, 1]^q` for the uniform density.
//!
//! Weights are normalized to sum to one, so a rule evaluates expected values
//! directly.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest tensor grid [`tensor_gauss`] will build.
pub const MAX_TENSOR_NODES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CubatureRule {
    name: String,
    q: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exactness_degree: u32,
}

impl CubatureRule {
    pub fn new(
        name: impl Into<String>,
        q: usize,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        exactness_degree: u32,
    ) -> Result<Self> {
        if q == 0 {
            return Err(Error::Dimension("cubature rule needs q >= 1".into()));
        }
        if nodes.len() != q * weights.len() {
            return Err(Error::Shape {
                expected: q * weights.len(),
                got: nodes.len(),
            });
        }
        if let Some(v) = nodes.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "cubature node coordinate {v} outside the reference cube"
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numerical("non-finite cubature weight".into()));
        }
        Ok(Self {
            name: name.into(),
            q,
            nodes,
            weights,
            exactness_degree,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn exactness_degree(&self) -> u32 {
        self.exactness_degree
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j * self.q..(j + 1) * self.q]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.nodes
            .chunks_exact(self.q)
            .zip(self.weights.iter().copied())
    }

    pub fn has_negative_weight(&self) -> bool {
        self.weights.iter().any(|&w| w < 0.0)
    }

    /// `sum_j w_j f(x_j)` over reference nodes.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// SHA-256 over name, dimension, exactness and the bit patterns of all
    /// nodes and weights.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.name.as_bytes());
        h.update((self.q as u64).to_le_bytes());
        h.update(self.exactness_degree.to_le_bytes());
        for v in self.weights.iter().chain(&self.nodes) {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Rows `weight, x1, ..., xq`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("weight");
        for j in 1..=self.q {
            out.push_str(&format!(",x{j}"));
        }
        out.push('\n');
        for (x, w) in self.iter() {
            out.push_str(&w.to_string());
            for v in x {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` for the density `1/2`.
///
/// Roots of `P_n` by Newton iteration, ascending.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "Gauss-Legendre rule needs n >= 1".into(),
        ));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-15 {
                dp = legendre_with_derivative(n, z).1;
                break;
            }
        }
        // Standard weight 2 / ((1 - z^2) P_n'(z)^2), halved for the density.
        let wi = 1.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for l in 1..n {
        let lf = l as f64;
        let p2 = ((2.0 * lf + 1.0) * z * p1 - lf * p0) / (lf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p0) / (z * z - 1.0))
}

/// Tensor product of `n`-point Gauss-Legendre rules, exact for degree
/// `2n - 1` in every variable.
pub fn tensor_gauss(q: usize, n: usize) -> Result<CubatureRule> {
    if q == 0 {
        return Err(Error::Dimension("cubature rule needs q >= 1".into()));
    }
    let count = u32::try_from(q)
        .ok()
        .and_then(|e| n.checked_pow(e))
        .filter(|&c| c <= MAX_TENSOR_NODES)
        .ok_or_else(|| {
            Error::Size(format!(
                "tensor rule with {n}^{q} nodes exceeds {MAX_TENSOR_NODES}"
            ))
        })?;
    let (x1, w1) = gauss_legendre(n)?;
    let mut nodes = Vec::with_capacity(count * q);
    let mut weights = Vec::with_capacity(count);
    let mut digits = vec![0usize; q];
    for _ in 0..count {
        let mut w = 1.0;
        for &k in &digits {
            nodes.push(x1[k]);
            w *= w1[k];
        }
        weights.push(w);
        // odometer, last dimension fastest
        for d in (0..q).rev() {
            digits[d] += 1;
            if digits[d] < n {
                break;
            }
            digits[d] = 0;
        }
    }
    CubatureRule::new(
        format!("tensor_gauss(q={q},n={n})"),
        q,
        nodes,
        weights,
        (2 * n - 1) as u32,
    )
}

/// Fully symmetric degree-5 rule with `2q^2 + 1` nodes: the center, the
/// `2q` points `+-r e_i` and the `2q(q-1)` points `+-r e_i +- r e_j`,
/// `r^2 = 3/5`.
///
/// The weights follow from the moment conditions `E[x^2] = 1/3`,
/// `E[x^4] = 1/5`, `E[x^2 y^2] = 1/9`. For `q >= 3` the axis weight is
/// negative. For `q = 1` the 3-point Gauss-Legendre rule is returned.
pub fn stroud5(q: usize) -> Result<CubatureRule> {
    if q == 0 {
        return Err(Error::Dimension("cubature rule needs q >= 1".into()));
    }
    if q == 1 {
        let (x, w) = gauss_legendre(3)?;
        return CubatureRule::new("stroud5(q=1)", 1, x, w, 5);
    }
    let nf = q as f64;
    let r = (0.6f64).sqrt();
    let w_center = (25.0 * nf * nf - 115.0 * nf + 162.0) / 162.0;
    let w_axis = (70.0 - 25.0 * nf) / 162.0;
    let w_pair = 25.0 / 324.0;

    let s = 2 * q * q + 1;
    let mut nodes = Vec::with_capacity(s * q);
    let mut weights = Vec::with_capacity(s);

    nodes.extend(std::iter::repeat_n(0.0, q));
    weights.push(w_center);

    for i in 0..q {
        for sign in [1.0, -1.0] {
            let mut x = vec![0.0; q];
            x[i] = sign * r;
            nodes.extend(x);
            weights.push(w_axis);
        }
    }
    for i in 0..q {
        for j in i + 1..q {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut x = vec![0.0; q];
                x[i] = si * r;
                x[j] = sj * r;
                nodes.extend(x);
                weights.push(w_pair);
            }
        }
    }
    debug_assert_eq!(weights.len(), s);
    CubatureRule::new(format!("stroud5(q={q})"), q, nodes, weights, 5)
}
