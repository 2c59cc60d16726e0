//! Proper orthogonal decomposition of the coefficient snapshots.
//!
//! The snapshot matrix `W` (`m x k`) holds the coefficient vectors at the
//! snapshot times as columns. Its leading left singular vectors `u_1..u_r`
//! rotate the chaos basis into `Psi_j = sum_i u_ij Phi_i`, which is again
//! orthonormal.

use nalgebra::{DMatrix, DVector, SVD};

use crate::basis::IndexSet;
use crate::collocation::CoefficientTrajectory;
use crate::error::{Error, Result};
use crate::space::ParameterSpace;

const SVD_MAX_ITER: usize = 10_000;
// nalgebra's own default; a tighter threshold degrades the left vectors of
// rank-deficient matrices.
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    /// `m x r`, orthonormal columns.
    pub projection: DMatrix<f64>,
    /// All `min(m, k)` singular values, nonincreasing.
    pub singular_values: Vec<f64>,
}

impl PodBasis {
    pub fn rank(&self) -> usize {
        self.projection.ncols()
    }

    /// `Psi_j(p)` for `j = 1..r`.
    pub fn rotated_basis_eval(
        &self,
        set: &IndexSet,
        space: &ParameterSpace,
        p: &[f64],
    ) -> Result<Vec<f64>> {
        if set.len() != self.projection.nrows() {
            return Err(Error::Shape {
                expected: self.projection.nrows(),
                got: set.len(),
            });
        }
        let phi = DVector::from_vec(set.eval(&space.to_reference(p)?)?);
        Ok((self.projection.transpose() * phi)
            .iter()
            .copied()
            .collect())
    }

    /// Rows: singular values first (`sigma_j`), then the projection columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,sigma\n");
        for (j, s) in self.singular_values.iter().enumerate() {
            out.push_str(&format!("{},{s}\n", j + 1));
        }
        out
    }

    pub fn projection_csv(&self) -> String {
        let r = self.rank();
        let mut out = String::from("linear_index");
        for j in 1..=r {
            out.push_str(&format!(",u{j}"));
        }
        out.push('\n');
        for i in 0..self.projection.nrows() {
            out.push_str(&(i + 1).to_string());
            for j in 0..r {
                out.push_str(&format!(",{}", self.projection[(i, j)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Reduced coefficients `P_r^T w(t_j)`, one column per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub reduced: DMatrix<f64>,
}

impl ReducedTrajectory {
    /// `P_r w_bar(t)` for all snapshots (`m x k`).
    pub fn reconstruct(&self, basis: &PodBasis) -> DMatrix<f64> {
        &basis.projection * &self.reduced
    }

    /// Low-dimensional surrogate `sum_j w_bar_j(t) Psi_j(p)`.
    pub fn surrogate_eval(
        &self,
        basis: &PodBasis,
        set: &IndexSet,
        space: &ParameterSpace,
        t_index: usize,
        p: &[f64],
    ) -> Result<f64> {
        if t_index >= self.reduced.ncols() {
            return Err(Error::InvalidArgument(format!(
                "time index {t_index} outside grid of {}",
                self.reduced.ncols()
            )));
        }
        let psi = basis.rotated_basis_eval(set, space, p)?;
        Ok(psi
            .iter()
            .enumerate()
            .map(|(j, v)| self.reduced[(j, t_index)] * v)
            .sum())
    }
}

/// Thin left singular factor and singular values of `w`, sorted, with each
/// singular vector's largest-magnitude entry made positive.
pub fn left_singular_factor(w: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "snapshot matrix has non-finite entries".into(),
        ));
    }
    let svd = SVD::try_new(w.clone(), true, false, SVD_EPS, SVD_MAX_ITER).ok_or_else(|| {
        let fro = w.norm();
        Error::Numerical(format!(
            "SVD of {}x{} snapshot matrix did not converge in {SVD_MAX_ITER} iterations \
             (Frobenius norm {fro:e}, max abs entry {:e})",
            w.nrows(),
            w.ncols(),
            w.amax()
        ))
    })?;
    let mut u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD returned no left factor".into()))?;
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    for mut col in u.column_iter_mut() {
        let (mut best, mut idx) = (0.0, 0);
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                idx = i;
            }
        }
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    }
    Ok((u, sigma))
}

/// Leading `r` POD modes of the coefficient snapshots and the reduced
/// trajectory `P_r^T W`.
pub fn pod(coeffs: &CoefficientTrajectory, r: usize) -> Result<(PodBasis, ReducedTrajectory)> {
    let w = coeffs.coeffs();
    let max_r = w.nrows().min(w.ncols());
    if r == 0 || r > max_r {
        return Err(Error::Dimension(format!(
            "reduced dimension r = {r} outside [1, {max_r}]"
        )));
    }
    let (u, singular_values) = left_singular_factor(w)?;
    let projection = u.columns(0, r).into_owned();
    let reduced = projection.transpose() * w;
    if reduced.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite reduced coefficients".into()));
    }
    Ok((
        PodBasis {
            projection,
            singular_values,
        },
        ReducedTrajectory {
            times: coeffs.times().to_vec(),
            reduced,
        },
    ))
}

/// For every `r`, the maximum over snapshots of
/// `|w(t) - P_r P_r^T w(t)| / |w(t)|`. Zero columns are skipped.
pub fn pod_error_curve(
    coeffs: &CoefficientTrajectory,
    ranks: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let w = coeffs.coeffs();
    let max_r = w.nrows().min(w.ncols());
    if let Some(&bad) = ranks.iter().find(|&&r| r == 0 || r > max_r) {
        return Err(Error::Dimension(format!(
            "reduced dimension r = {bad} outside [1, {max_r}]"
        )));
    }
    let (u, _) = left_singular_factor(w)?;
    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    Ok(ranks
        .iter()
        .map(|&r| {
            let p = u.columns(0, r);
            let resid = w - p * (p.transpose() * w);
            let worst = resid
                .column_iter()
                .zip(&norms)
                .filter(|(_, &n)| n > 0.0)
                .map(|(c, &n)| c.norm() / n)
                .fold(0.0, f64::max);
            (r, worst)
        })
        .collect())
}
