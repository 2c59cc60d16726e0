//! Sparse index sets from coefficient magnitudes.
//!
//! By Parseval the relative L2 error of dropping basis polynomials depends
//! only on the dropped coefficients, so the smallest subset meeting a
//! tolerance is a prefix of the coefficients sorted by magnitude.

use crate::collocation::CoefficientTrajectory;
use crate::error::{Error, Result};

/// `( sum_{i not in J} w_i(t)^2 / sum_i w_i(t)^2 )^(1/2)`.
pub fn sparsity_error(
    coeffs: &CoefficientTrajectory,
    subset: &[usize],
    t_index: usize,
) -> Result<f64> {
    let m = coeffs.num_terms();
    let col = column_checked(coeffs, t_index)?;
    let mut keep = vec![false; m];
    for &i in subset {
        if i >= m {
            return Err(Error::InvalidArgument(format!(
                "linear index {i} outside index set of {m}"
            )));
        }
        keep[i] = true;
    }
    let total: f64 = col.iter().map(|v| v * v).sum();
    let dropped: f64 = col
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| !k)
        .map(|(v, _)| v * v)
        .sum();
    Ok((dropped / total).sqrt())
}

fn column_checked(coeffs: &CoefficientTrajectory, t_index: usize) -> Result<Vec<f64>> {
    if t_index >= coeffs.num_times() {
        return Err(Error::InvalidArgument(format!(
            "time index {t_index} outside grid of {}",
            coeffs.num_times()
        )));
    }
    let col: Vec<f64> = coeffs.coeffs().column(t_index).iter().copied().collect();
    if col.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateColumn { t_index });
    }
    Ok(col)
}

/// Smallest subset `J` with `E(t; J) < epsilon`, as sorted linear indices.
///
/// Coefficients are ranked by magnitude (ties: smaller linear index first)
/// and the shortest prefix whose tail meets the bound is returned. For
/// `epsilon > 1` the empty set already qualifies. When only the full set
/// qualifies, the full set is returned.
pub fn optimal_set(
    coeffs: &CoefficientTrajectory,
    t_index: usize,
    epsilon: f64,
) -> Result<Vec<usize>> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {epsilon}"
        )));
    }
    let col = column_checked(coeffs, t_index)?;
    Ok(optimal_prefix(&col, epsilon))
}

pub(crate) fn optimal_prefix(col: &[f64], epsilon: f64) -> Vec<usize> {
    let m = col.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        col[b]
            .abs()
            .total_cmp(&col[a].abs())
            .then_with(|| a.cmp(&b))
    });
    // tail[n] = sum of squares of order[n..], accumulated from the small end.
    let mut tail = vec![0.0; m + 1];
    for n in (0..m).rev() {
        tail[n] = tail[n + 1] + col[order[n]] * col[order[n]];
    }
    let total = tail[0];
    let len = (0..=m)
        .find(|&n| (tail[n] / total).sqrt() < epsilon)
        .unwrap_or(m);
    let mut picked = order[..len].to_vec();
    picked.sort_unstable();
    picked
}

/// Pointwise optimal sets and their union over all snapshots for one tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityReport {
    pub epsilon: f64,
    /// `None` for snapshots whose coefficient column is identically zero.
    pub pointwise_sets: Vec<Option<Vec<usize>>>,
    /// Sorted linear indices of the union.
    pub global_set: Vec<usize>,
    pub max_pointwise: usize,
    pub skipped_columns: usize,
}

impl SparsityReport {
    pub fn global_cardinality(&self) -> usize {
        self.global_set.len()
    }
}

/// Union of [`optimal_set`] over all snapshot times. All-zero columns are
/// skipped and counted.
pub fn global_set(coeffs: &CoefficientTrajectory, epsilon: f64) -> Result<SparsityReport> {
    let m = coeffs.num_terms();
    let mut member = vec![false; m];
    let mut pointwise_sets = Vec::with_capacity(coeffs.num_times());
    let mut skipped = 0;
    let mut max_pointwise = 0;
    for t in 0..coeffs.num_times() {
        match optimal_set(coeffs, t, epsilon) {
            Ok(set) => {
                max_pointwise = max_pointwise.max(set.len());
                for &i in &set {
                    member[i] = true;
                }
                pointwise_sets.push(Some(set));
            }
            Err(Error::DegenerateColumn { .. }) => {
                skipped += 1;
                pointwise_sets.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        log::debug!("sparsification skipped {skipped} all-zero coefficient column(s)");
    }
    let global_set = (0..m).filter(|&i| member[i]).collect();
    Ok(SparsityReport {
        epsilon,
        pointwise_sets,
        global_set,
        max_pointwise,
        skipped_columns: skipped,
    })
}

/// `(epsilon, max_t |J_t|, |J_hat|)` for every tolerance of a sweep.
pub fn sweep(coeffs: &CoefficientTrajectory, tolerances: &[f64]) -> Result<Vec<SparsityReport>> {
    tolerances.iter().map(|&e| global_set(coeffs, e)).collect()
}
