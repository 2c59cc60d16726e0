//! The pipeline stages. Every stage after `solve` starts from the node
//! cache, so running the stages one by one produces the same files as
//! `pipeline`.

use std::fmt::Write as _;
use std::path::Path;

use log::info;
use pcuq_core::{
    pod, pod_error_curve, project, solve_nodes, sweep, CoefficientTrajectory, Error as CoreError,
    NodeSolutions,
};

use crate::cache::{self, CACHE_FILE};
use crate::error::CliError;
use crate::setup::{Model, Setup};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.txt";

/// Outcome of [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveReport {
    pub nodes: usize,
    /// Model evaluations performed; zero on a cache hit.
    pub solves: usize,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `body` (header plus rows) under a config-hash comment line.
fn write_csv(setup: &Setup, name: &str, body: &str) -> Result<(), CliError> {
    let dir = &setup.config.output.directory;
    write(
        dir,
        name,
        &format!("# config_hash={}\n{body}", setup.config_hash),
    )
}

fn core_err(e: CoreError) -> CliError {
    CliError::Solver(e.to_string())
}

fn output_dir(setup: &Setup) -> Result<&Path, CliError> {
    let dir = setup.config.output.directory.as_path();
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    Ok(dir)
}

fn cache_is_valid(setup: &Setup, dir: &Path) -> bool {
    dir.join(CACHE_FILE).exists() && cache::load(setup, dir).is_ok()
}

/// Runs the model at every rule node unless a valid cache exists.
pub fn solve(setup: &Setup) -> Result<SolveReport, CliError> {
    let dir = output_dir(setup)?;
    let nodes = setup.rule.len();
    if cache_is_valid(setup, dir) {
        info!("cache hit in {}", dir.display());
        return Ok(SolveReport { nodes, solves: 0 });
    }
    write_csv(setup, "rule.csv", &setup.rule.to_csv())?;
    if let Model::FieldCircuit(m) = &setup.model {
        write(dir, "mesh.txt", &m.discretization().mesh().to_text())?;
    }
    info!("solving {nodes} nodes with {} worker(s)", setup.workers);
    let solutions = match solve_nodes(&setup.model, &setup.rule, &setup.space, setup.workers) {
        Ok(s) => s,
        Err(e) => {
            let mut d = format!("config_hash={}\n{e}\n", setup.config_hash);
            if let CoreError::ModelFailure { node, point, .. } = &e {
                let _ = writeln!(d, "node={node}");
                let _ = writeln!(d, "point={point:?}");
            }
            write(dir, DIAGNOSTICS_FILE, &d)?;
            return Err(CliError::Solver(format!(
                "{e} (details in {})",
                dir.join(DIAGNOSTICS_FILE).display()
            )));
        }
    };
    write(dir, CACHE_FILE, &cache::render(setup, &solutions))?;
    Ok(SolveReport {
        nodes,
        solves: nodes,
    })
}

fn coefficients(
    setup: &Setup,
    solutions: &NodeSolutions,
) -> Result<CoefficientTrajectory, CliError> {
    project(solutions, &setup.rule, &setup.set).map_err(core_err)
}

fn load_coefficients(setup: &Setup) -> Result<CoefficientTrajectory, CliError> {
    let solutions = cache::load(setup, &setup.config.output.directory)?;
    coefficients(setup, &solutions)
}

/// `coefficients.csv`, the index set, and the max-over-time magnitude of
/// every coefficient in index order and sorted decreasingly.
pub fn project_stage(setup: &Setup) -> Result<CoefficientTrajectory, CliError> {
    output_dir(setup)?;
    let c = load_coefficients(setup)?;
    write_csv(setup, "coefficients.csv", &c.to_csv())?;
    write_csv(setup, "index_set.csv", &setup.set.to_csv())?;

    let mags = c.max_abs_over_time();
    let mut unsorted = String::from("linear_index,total_degree,max_abs\n");
    for (i, (mi, v)) in setup.set.iter().zip(&mags).enumerate() {
        let _ = writeln!(unsorted, "{},{},{v}", i + 1, mi.total_degree());
    }
    write_csv(setup, "coefficient_magnitude.csv", &unsorted)?;

    let mut order: Vec<usize> = (0..mags.len()).collect();
    // stable, so ties keep index order
    order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]));
    let mut sorted = String::from("rank,linear_index,max_abs\n");
    for (r, &i) in order.iter().enumerate() {
        let _ = writeln!(sorted, "{},{},{}", r + 1, i + 1, mags[i]);
    }
    write_csv(setup, "coefficient_magnitude_sorted.csv", &sorted)?;
    Ok(c)
}

/// `sparsity_sweep.csv` and the global sets in `sparse_sets.csv`.
pub fn sparsify_stage(setup: &Setup) -> Result<(), CliError> {
    output_dir(setup)?;
    let c = load_coefficients(setup)?;
    let reports = sweep(&c, &setup.config.sparsify.tolerances).map_err(core_err)?;
    let mut table = String::from("epsilon,max_pointwise,global_cardinality,skipped_columns\n");
    let mut sets = String::from("epsilon,linear_index\n");
    for r in &reports {
        let _ = writeln!(
            table,
            "{},{},{},{}",
            r.epsilon,
            r.max_pointwise,
            r.global_cardinality(),
            r.skipped_columns
        );
        for i in &r.global_set {
            let _ = writeln!(sets, "{},{}", r.epsilon, i + 1);
        }
    }
    write_csv(setup, "sparsity_sweep.csv", &table)?;
    write_csv(setup, "sparse_sets.csv", &sets)?;
    Ok(())
}

/// `pod_error.csv`, the singular values, and the projection at the
/// largest requested rank.
pub fn pod_stage(setup: &Setup) -> Result<(), CliError> {
    output_dir(setup)?;
    let c = load_coefficients(setup)?;
    let curve = pod_error_curve(&c, &setup.pod_ranks).map_err(core_err)?;
    let mut table = String::from("r,max_relative_error\n");
    for (r, e) in curve {
        let _ = writeln!(table, "{r},{e}");
    }
    write_csv(setup, "pod_error.csv", &table)?;
    let r_max = *setup.pod_ranks.iter().max().expect("ranks are nonempty");
    let (basis, _) = pod(&c, r_max).map_err(core_err)?;
    write_csv(setup, "pod_singular_values.csv", &basis.to_csv())?;
    write_csv(setup, "pod_projection.csv", &basis.projection_csv())?;
    Ok(())
}

/// `solve`, `project`, `sparsify` and `pod` in sequence.
pub fn pipeline(setup: &Setup) -> Result<SolveReport, CliError> {
    let report = solve(setup)?;
    project_stage(setup)?;
    sparsify_stage(setup)?;
    pod_stage(setup)?;
    Ok(report)
}
