//! Stochastic collocation: solve the model once per cubature node, then
//! project the stored trajectories onto an index set.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::IndexSet;
use crate::error::{Error, Result};
use crate::quadrature::CubatureRule;
use crate::space::ParameterSpace;

pub type ModelError = Box<dyn std::error::Error + Send + Sync>;

/// A model mapping a physical parameter point to a scalar trajectory on a
/// fixed time grid shared by all points.
///
/// `evaluate` must not depend on any other evaluation; the collocation
/// driver calls it concurrently from several threads.
pub trait ParametricModel: Sync {
    fn times(&self) -> &[f64];

    fn evaluate(&self, p: &[f64]) -> std::result::Result<Vec<f64>, ModelError>;
}

/// Model outputs at all `s` nodes of a rule (`s x k`), tagged with the
/// rule fingerprint so they are never projected with a different rule.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSolutions {
    pub rule_fingerprint: String,
    pub times: Vec<f64>,
    pub values: DMatrix<f64>,
}

/// Runs `model` at every node of `rule`, using `workers` threads.
///
/// Results are stored in node order regardless of scheduling. The first
/// failing node (lowest index) aborts the run.
pub fn solve_nodes<M: ParametricModel + ?Sized>(
    model: &M,
    rule: &CubatureRule,
    space: &ParameterSpace,
    workers: usize,
) -> Result<NodeSolutions> {
    if rule.dim() != space.dim() {
        return Err(Error::Shape {
            expected: space.dim(),
            got: rule.dim(),
        });
    }
    let times = model.times().to_vec();
    let k = times.len();
    let points = (0..rule.len())
        .map(|j| space.to_physical(rule.node(j)))
        .collect::<Result<Vec<_>>>()?;

    let run = |j: usize| -> Result<Vec<f64>> {
        let p = &points[j];
        let fail = |message: String| Error::ModelFailure {
            node: j,
            point: p.clone(),
            message,
        };
        let y = model.evaluate(p).map_err(|e| fail(e.to_string()))?;
        if y.len() != k {
            return Err(fail(format!(
                "trajectory has {} values, grid has {k}",
                y.len()
            )));
        }
        if let Some(t) = y.iter().position(|v| !v.is_finite()) {
            return Err(fail(format!("non-finite output at time index {t}")));
        }
        Ok(y)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let results: Vec<Result<Vec<f64>>> =
        pool.install(|| (0..rule.len()).into_par_iter().map(run).collect());

    let mut values = DMatrix::zeros(rule.len(), k);
    for (j, r) in results.into_iter().enumerate() {
        let y = r?;
        for (t, v) in y.into_iter().enumerate() {
            values[(j, t)] = v;
        }
    }
    Ok(NodeSolutions {
        rule_fingerprint: rule.fingerprint(),
        times,
        values,
    })
}

/// `w_i(t) = sum_j gamma_j y(t, p_j) Phi_i(x_j)`, summed in node order.
pub fn project(
    solutions: &NodeSolutions,
    rule: &CubatureRule,
    set: &IndexSet,
) -> Result<CoefficientTrajectory> {
    if solutions.rule_fingerprint != rule.fingerprint() {
        return Err(Error::InvalidArgument(
            "node solutions were computed with a different cubature rule".into(),
        ));
    }
    if rule.dim() != set.dim() {
        return Err(Error::Shape {
            expected: set.dim(),
            got: rule.dim(),
        });
    }
    let s = rule.len();
    if solutions.values.nrows() != s {
        return Err(Error::Shape {
            expected: s,
            got: solutions.values.nrows(),
        });
    }
    let k = solutions.times.len();
    let m = set.len();
    let mut coeffs = DMatrix::zeros(m, k);
    for (j, (x, w)) in rule.iter().enumerate() {
        let phi = set.eval(x)?;
        for t in 0..k {
            let wy = w * solutions.values[(j, t)];
            for (i, ph) in phi.iter().enumerate() {
                coeffs[(i, t)] += wy * ph;
            }
        }
    }
    CoefficientTrajectory::new(set.clone(), solutions.times.clone(), coeffs)
}

/// Solve at all nodes, then project. The model is evaluated exactly
/// `rule.len()` times.
pub fn collocate<M: ParametricModel + ?Sized>(
    model: &M,
    rule: &CubatureRule,
    set: &IndexSet,
    space: &ParameterSpace,
    workers: usize,
) -> Result<CoefficientTrajectory> {
    let sol = solve_nodes(model, rule, space, workers)?;
    project(&sol, rule, set)
}

/// Chaos coefficients `w_i(t_j)`: one row per multi-index, one column per
/// snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTrajectory {
    index_set: IndexSet,
    times: Vec<f64>,
    coeffs: DMatrix<f64>,
}

impl CoefficientTrajectory {
    pub fn new(index_set: IndexSet, times: Vec<f64>, coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.nrows() != index_set.len() {
            return Err(Error::Shape {
                expected: index_set.len(),
                got: coeffs.nrows(),
            });
        }
        if coeffs.ncols() != times.len() {
            return Err(Error::Shape {
                expected: times.len(),
                got: coeffs.ncols(),
            });
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite chaos coefficient".into()));
        }
        Ok(Self {
            index_set,
            times,
            coeffs,
        })
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    /// Number of basis polynomials `m`.
    pub fn num_terms(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Number of snapshots `k`.
    pub fn num_times(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn column(&self, t_index: usize) -> DVector<f64> {
        self.coeffs.column(t_index).into_owned()
    }

    /// `max_t |w_i(t)|` for every row.
    pub fn max_abs_over_time(&self) -> Vec<f64> {
        self.coeffs
            .row_iter()
            .map(|r| r.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .collect()
    }

    /// Surrogate `sum_i w_i(t) Phi_i(p)` at a physical point.
    pub fn surrogate_eval(&self, space: &ParameterSpace, t_index: usize, p: &[f64]) -> Result<f64> {
        if t_index >= self.num_times() {
            return Err(Error::InvalidArgument(format!(
                "time index {t_index} outside grid of {}",
                self.num_times()
            )));
        }
        let x = space.to_reference(p)?;
        let phi = self.index_set.eval(&x)?;
        Ok(phi
            .iter()
            .enumerate()
            .map(|(i, v)| self.coeffs[(i, t_index)] * v)
            .sum())
    }

    /// Header row of times, then one row per multi-index.
    pub fn to_csv(&self) -> String {
        let q = self.index_set.dim();
        let mut out = String::from("linear_index");
        for j in 1..=q {
            out.push_str(&format!(",i{j}"));
        }
        for t in &self.times {
            out.push_str(&format!(",{t}"));
        }
        out.push('\n');
        for (i, mi) in self.index_set.iter().enumerate() {
            out.push_str(&(i + 1).to_string());
            for e in mi.exponents() {
                out.push_str(&format!(",{e}"));
            }
            for t in 0..self.num_times() {
                out.push_str(&format!(",{}", self.coeffs[(i, t)]));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::MultiIndex;
    use crate::quadrature::{stroud5, tensor_gauss};
    use crate::space::UniformBox;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct FnModel<F> {
        times: Vec<f64>,
        f: F,
        calls: AtomicUsize,
    }

    impl<F> FnModel<F>
    where
        F: Fn(f64, &[f64]) -> f64 + Sync,
    {
        fn new(k: usize, f: F) -> Self {
            Self {
                times: (0..k).map(|j| j as f64 * 0.5).collect(),
                f,
                calls: AtomicUsize::new(0),
            }
        }
    }

    impl<F> ParametricModel for FnModel<F>
    where
        F: Fn(f64, &[f64]) -> f64 + Sync,
    {
        fn times(&self) -> &[f64] {
            &self.times
        }

        fn evaluate(&self, p: &[f64]) -> std::result::Result<Vec<f64>, ModelError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self.times.iter().map(|&t| (self.f)(t, p)).collect())
        }
    }

    #[test]
    fn constant_model() {
        let space = UniformBox::new(vec![1.0, 2.0, 3.0]).to_space().unwrap();
        let rule = stroud5(3).unwrap();
        let set = IndexSet::total_degree(3, 3).unwrap();
        let model = FnModel::new(4, |_, _| 2.5);
        let c = collocate(&model, &rule, &set, &space, 2).unwrap();
        for t in 0..4 {
            assert!((c.coeffs()[(0, t)] - 2.5).abs() < 1e-13);
            for i in 1..set.len() {
                assert!(c.coeffs()[(i, t)].abs() < 1e-13);
            }
        }
        assert!((c.surrogate_eval(&space, 2, &[1.1, 2.2, 2.9]).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn evaluates_each_node_once() {
        let space = UniformBox::new(vec![1.0; 4]).to_space().unwrap();
        let rule = stroud5(4).unwrap();
        let model = FnModel::new(3, |t, p| t * p[0]);
        let sol = solve_nodes(&model, &rule, &space, 3).unwrap();
        assert_eq!(model.calls.load(Ordering::SeqCst), rule.len());
        // two projections, no further solves
        project(&sol, &rule, &IndexSet::total_degree(4, 1).unwrap()).unwrap();
        project(&sol, &rule, &IndexSet::total_degree(4, 3).unwrap()).unwrap();
        assert_eq!(model.calls.load(Ordering::SeqCst), rule.len());
    }

    #[test]
    fn recovers_single_basis_polynomial() {
        let q = 3;
        let space = UniformBox::new(vec![2.0, 5.0, 1.0]).to_space().unwrap();
        let set = IndexSet::total_degree(q, 3).unwrap();
        let target = set.index_of(&MultiIndex::new(vec![1, 0, 1])).unwrap();
        let basis = set.clone();
        let sp = space.clone();
        let model = FnModel::new(2, move |_, p| {
            basis.eval(&sp.to_reference(p).unwrap()).unwrap()[target]
        });
        for rule in [stroud5(q).unwrap(), tensor_gauss(q, 4).unwrap()] {
            let c = collocate(&model, &rule, &set, &space, 1).unwrap();
            for i in 0..set.len() {
                let want = if i == target { 1.0 } else { 0.0 };
                assert!(
                    (c.coeffs()[(i, 0)] - want).abs() < 1e-12,
                    "{} row {i}",
                    rule.name()
                );
            }
        }
    }

    #[test]
    fn affine_model_projection() {
        // y = t p_1 with p_1 = m + h x_1 gives w_0 = t m and w_(1,0) = t h / sqrt(3).
        let space = UniformBox::new(vec![4.0, 1.0]).to_space().unwrap();
        let (m, h) = (4.0, 0.8);
        let set = IndexSet::total_degree(2, 3).unwrap();
        let model = FnModel::new(5, |t, p| t * p[0]);
        let c = collocate(&model, &stroud5(2).unwrap(), &set, &space, 1).unwrap();
        let i10 = set.index_of(&MultiIndex::new(vec![1, 0])).unwrap();
        for (j, &t) in c.times().iter().enumerate() {
            assert!((c.coeffs()[(0, j)] - t * m).abs() < 1e-12);
            assert!((c.coeffs()[(i10, j)] - t * h / 3f64.sqrt()).abs() < 1e-12);
            for (i, mi) in set.iter().enumerate() {
                if mi.total_degree() >= 2 {
                    assert!(c.coeffs()[(i, j)].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn surrogate_reproduces_quadratic_at_nodes() {
        let space = UniformBox::new(vec![1.0, 3.0, 2.0]).to_space().unwrap();
        let f = |t: f64, p: &[f64]| 1.0 + t * p[0] * p[1] - p[2] * p[2] + 0.5 * p[1];
        let model = FnModel::new(3, f);
        let rule = stroud5(3).unwrap();
        let set = IndexSet::total_degree(3, 2).unwrap();
        let c = collocate(&model, &rule, &set, &space, 1).unwrap();
        let mut worst = 0.0f64;
        for (x, _) in rule.iter() {
            let p = space.to_physical(x).unwrap();
            for (j, &t) in c.times().iter().enumerate() {
                worst = worst.max((c.surrogate_eval(&space, j, &p).unwrap() - f(t, &p)).abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn single_row_surrogate_is_scaled_basis() {
        let space = UniformBox::new(vec![1.0, 1.0]).to_space().unwrap();
        let set = IndexSet::total_degree(2, 2).unwrap();
        let mut w = DMatrix::zeros(set.len(), 1);
        w[(4, 0)] = 3.0;
        let c = CoefficientTrajectory::new(set.clone(), vec![0.0], w).unwrap();
        let p = [0.9, 1.15];
        let phi = set.eval(&space.to_reference(&p).unwrap()).unwrap();
        assert!((c.surrogate_eval(&space, 0, &p).unwrap() - 3.0 * phi[4]).abs() < 1e-14);
        assert!(c.surrogate_eval(&space, 1, &p).is_err());
        assert!(matches!(
            c.surrogate_eval(&space, 0, &[2.0, 1.0]),
            Err(Error::Domain { component: 0, .. })
        ));
    }

    #[test]
    fn parseval_identity() {
        let space = UniformBox::new(vec![1.0, 2.0]).to_space().unwrap();
        let f = |t: f64, p: &[f64]| (t * p[0]).sin() + p[1] * p[0] * p[0];
        let model = FnModel::new(4, f);
        let set = IndexSet::total_degree(2, 4).unwrap();
        let c = collocate(&model, &tensor_gauss(2, 8).unwrap(), &set, &space, 1).unwrap();
        let fine = tensor_gauss(2, 10).unwrap();
        for j in 0..c.num_times() {
            let energy = space
                .expectation(&fine, |p| c.surrogate_eval(&space, j, p).unwrap().powi(2))
                .unwrap();
            let sum_sq = c.column(j).norm_squared();
            assert!((energy - sum_sq).abs() <= 1e-10 * sum_sq.max(1e-300));
        }
    }

    #[test]
    fn linearity() {
        let space = UniformBox::new(vec![1.0, 2.0, 0.5]).to_space().unwrap();
        let rule = stroud5(3).unwrap();
        let set = IndexSet::total_degree(3, 3).unwrap();
        let f = |t: f64, p: &[f64]| (p[0] * t).exp() * p[2];
        let g = |t: f64, p: &[f64]| p[1].ln() + t;
        let (a, b) = (1.7, -0.4);
        let cf = collocate(&FnModel::new(3, f), &rule, &set, &space, 1).unwrap();
        let cg = collocate(&FnModel::new(3, g), &rule, &set, &space, 1).unwrap();
        let cfg = collocate(
            &FnModel::new(3, move |t, p| a * f(t, p) + b * g(t, p)),
            &rule,
            &set,
            &space,
            1,
        )
        .unwrap();
        let lin = cf.coeffs() * a + cg.coeffs() * b;
        assert!((cfg.coeffs() - lin).amax() < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let space = UniformBox::new(vec![1.0, 2.0, 0.5, 3.0])
            .to_space()
            .unwrap();
        let rule = stroud5(4).unwrap();
        let set = IndexSet::total_degree(4, 3).unwrap();
        let model = FnModel::new(6, |t, p| (t * p[0] + p[3]).cos() / p[1] + p[2]);
        let a = collocate(&model, &rule, &set, &space, 1).unwrap();
        let b = collocate(&model, &rule, &set, &space, 4).unwrap();
        assert!(a
            .coeffs()
            .iter()
            .zip(b.coeffs().iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    struct Failing;
    impl ParametricModel for Failing {
        fn times(&self) -> &[f64] {
            &[0.0, 1.0]
        }
        fn evaluate(&self, p: &[f64]) -> std::result::Result<Vec<f64>, ModelError> {
            if p[0] > 1.0 {
                Err("diverged".into())
            } else {
                Ok(vec![0.0, 1.0])
            }
        }
    }

    #[test]
    fn node_failure_aborts_with_node_info() {
        let space = UniformBox::new(vec![1.0, 1.0]).to_space().unwrap();
        let rule = stroud5(2).unwrap();
        match solve_nodes(&Failing, &rule, &space, 2) {
            Err(Error::ModelFailure {
                node,
                point,
                message,
            }) => {
                assert!(point[0] > 1.0);
                assert_eq!(space.to_physical(rule.node(node)).unwrap(), point);
                assert!(message.contains("diverged"));
                // lowest failing index is reported
                let first = (0..rule.len())
                    .find(|&j| space.to_physical(rule.node(j)).unwrap()[0] > 1.0)
                    .unwrap();
                assert_eq!(node, first);
            }
            other => panic!("expected model failure, got {other:?}"),
        }
    }

    #[test]
    fn stale_rule_is_refused() {
        let space = UniformBox::new(vec![1.0, 1.0]).to_space().unwrap();
        let model = FnModel::new(2, |_, _| 1.0);
        let sol = solve_nodes(&model, &stroud5(2).unwrap(), &space, 1).unwrap();
        let set = IndexSet::total_degree(2, 1).unwrap();
        assert!(project(&sol, &tensor_gauss(2, 3).unwrap(), &set).is_err());
    }

    #[test]
    fn csv_has_times_header() {
        let set = IndexSet::total_degree(1, 1).unwrap();
        let c = CoefficientTrajectory::new(
            set,
            vec![0.0, 0.5],
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
        )
        .unwrap();
        assert_eq!(c.to_csv(), "linear_index,i1,0,0.5\n1,0,1,2\n2,1,3,4\n");
    }
}
