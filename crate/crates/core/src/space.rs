//! Random parameter domain: a box with uniform density, mapped affinely
//! onto the reference cube `[-1, 1]^q` where the basis and rules live.

use crate::error::{Error, Result};
use crate::quadrature::CubatureRule;

/// Relative tolerance for points sitting just outside the box.
const BOX_TOLERANCE: f64 = 1e-12;

/// Default relative half-width of a [`UniformBox`].
pub const DEFAULT_HALFWIDTH: f64 = 0.20;

/// A `q`-dimensional box `[lo, hi]` carrying the uniform probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ParameterSpace {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::Dimension("parameter space needs q >= 1".into()));
        }
        if lo.len() != hi.len() {
            return Err(Error::Shape {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for (j, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidArgument(format!(
                    "bounds of component {j} must satisfy lo < hi, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The reference cube itself, `[-1, 1]^q`.
    pub fn reference_cube(q: usize) -> Result<Self> {
        Self::new(vec![-1.0; q], vec![1.0; q])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn means(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }

    /// Affine image of a physical point in the reference cube.
    ///
    /// Points within `1e-12 * (hi - lo)` of the box are accepted and clamped.
    pub fn to_reference(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_len(p.len())?;
        p.iter()
            .enumerate()
            .map(|(j, &v)| {
                let (a, b) = (self.lo[j], self.hi[j]);
                let slack = BOX_TOLERANCE * (b - a);
                if !(v >= a - slack && v <= b + slack) {
                    return Err(Error::Domain {
                        component: j,
                        value: v,
                        lo: a,
                        hi: b,
                    });
                }
                let x = (2.0 * v - a - b) / (b - a);
                Ok(x.clamp(-1.0, 1.0))
            })
            .collect()
    }

    /// Inverse of [`to_reference`](Self::to_reference).
    pub fn to_physical(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                if !(-1.0 - BOX_TOLERANCE..=1.0 + BOX_TOLERANCE).contains(&v) {
                    return Err(Error::Domain {
                        component: j,
                        value: v,
                        lo: -1.0,
                        hi: 1.0,
                    });
                }
                let (a, b) = (self.lo[j], self.hi[j]);
                Ok(0.5 * (a + b) + 0.5 * (b - a) * v)
            })
            .collect()
    }

    /// `E[f] = sum_j w_j f(p_j)` with the rule nodes mapped into the box.
    pub fn expectation<F>(&self, rule: &CubatureRule, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        self.try_expectation(rule, |p| Ok::<_, Error>(f(p)))
    }

    /// Like [`expectation`](Self::expectation) but propagates failures of `f`.
    pub fn try_expectation<F, E>(&self, rule: &CubatureRule, f: F) -> std::result::Result<f64, E>
    where
        F: Fn(&[f64]) -> std::result::Result<f64, E>,
        E: From<Error>,
    {
        if rule.dim() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: rule.dim(),
            }
            .into());
        }
        let mut acc = 0.0;
        for (x, w) in rule.iter() {
            let p = self.to_physical(x)?;
            acc += w * f(&p)?;
        }
        Ok(acc)
    }

    /// `<f, g> = E[f g]`.
    pub fn inner_product<F, G>(&self, rule: &CubatureRule, f: F, g: G) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
        G: Fn(&[f64]) -> f64,
    {
        self.expectation(rule, |p| f(p) * g(p))
    }
}

/// Independent uniform parameters varying by a fixed fraction around their means.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBox {
    pub means: Vec<f64>,
    pub relative_halfwidth: f64,
}

impl UniformBox {
    pub fn new(means: Vec<f64>) -> Self {
        Self {
            means,
            relative_halfwidth: DEFAULT_HALFWIDTH,
        }
    }

    pub fn with_halfwidth(mut self, halfwidth: f64) -> Self {
        self.relative_halfwidth = halfwidth;
        self
    }

    /// Bounds `mean -/+ halfwidth * |mean|`. Zero means are rejected.
    pub fn to_space(&self) -> Result<ParameterSpace> {
        let h = self.relative_halfwidth;
        if !(h.is_finite() && h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "relative half-width must lie in (0, 1), got {h}"
            )));
        }
        let mut lo = Vec::with_capacity(self.means.len());
        let mut hi = Vec::with_capacity(self.means.len());
        for (j, &m) in self.means.iter().enumerate() {
            if m == 0.0 || !m.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "mean of component {j} must be finite and nonzero, got {m}"
                )));
            }
            lo.push(m - h * m.abs());
            hi.push(m + h * m.abs());
        }
        ParameterSpace::new(lo, hi)
    }
}
