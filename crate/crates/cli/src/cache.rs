//! Node-solution cache `nodes.csv`.
//!
//! Three comment lines carry the config hash, the cache key and the rule
//! fingerprint, followed by the header `node,p1..pq,y@<t>...` and one row
//! per node. Values are written in shortest round-trip form, so reading
//! the file back reproduces every bit.

use std::path::Path;

use nalgebra::DMatrix;
use pcuq_core::NodeSolutions;

use crate::error::CliError;
use crate::setup::Setup;

pub const CACHE_FILE: &str = "nodes.csv";

pub fn render(setup: &Setup, solutions: &NodeSolutions) -> String {
    let q = setup.rule.dim();
    let mut out = format!(
        "# config_hash={}\n# cache_key={}\n# rule_fingerprint={}\nnode",
        setup.config_hash, setup.cache_key, solutions.rule_fingerprint
    );
    for j in 1..=q {
        out.push_str(&format!(",p{j}"));
    }
    for t in &solutions.times {
        out.push_str(&format!(",y@{t}"));
    }
    out.push('\n');
    for j in 0..setup.rule.len() {
        out.push_str(&j.to_string());
        let p = setup
            .space
            .to_physical(setup.rule.node(j))
            .expect("rule nodes lie in the reference cube");
        for v in p {
            out.push_str(&format!(",{v}"));
        }
        for v in solutions.values.row(j).iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

fn stale(msg: impl Into<String>) -> CliError {
    CliError::StaleCache(msg.into())
}

/// Loads the cache and checks it belongs to `setup`.
pub fn load(setup: &Setup, dir: &Path) -> Result<NodeSolutions, CliError> {
    let path = dir.join(CACHE_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        stale(format!(
            "cannot read {} ({e}); run `solve` first",
            path.display()
        ))
    })?;
    let mut key = None;
    let mut fingerprint = None;
    let mut lines = text.lines();
    let header = loop {
        let line = lines.next().ok_or_else(|| stale("cache has no header"))?;
        match line.strip_prefix("# ") {
            Some(c) => {
                if let Some(v) = c.strip_prefix("cache_key=") {
                    key = Some(v.to_string());
                } else if let Some(v) = c.strip_prefix("rule_fingerprint=") {
                    fingerprint = Some(v.to_string());
                }
            }
            None => break line,
        }
    };
    if key.as_deref() != Some(setup.cache_key.as_str()) {
        return Err(stale(format!(
            "{} was computed for a different rule, model, parameter box or time grid; \
             run `solve` again",
            path.display()
        )));
    }
    let fingerprint = fingerprint.ok_or_else(|| stale("cache lacks the rule fingerprint"))?;
    if fingerprint != setup.rule.fingerprint() {
        return Err(stale(
            "cache rule fingerprint does not match the configured rule",
        ));
    }

    let q = setup.rule.dim();
    let times = setup.model_times();
    let k = times.len();
    if header.split(',').count() != 1 + q + k {
        return Err(stale("cache header does not match the configured grid"));
    }
    let s = setup.rule.len();
    let mut values = DMatrix::zeros(s, k);
    let mut rows = 0;
    for (j, line) in lines.enumerate() {
        if j >= s {
            return Err(stale(format!("cache has more than {s} rows")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + q + k || fields[0] != j.to_string() {
            return Err(stale(format!("malformed cache row {j}")));
        }
        for (t, f) in fields[1 + q..].iter().enumerate() {
            values[(j, t)] = f
                .parse()
                .map_err(|_| stale(format!("bad value `{f}` in cache row {j}")))?;
        }
        rows += 1;
    }
    if rows != s {
        return Err(stale(format!(
            "cache has {rows} rows, the rule has {s} nodes"
        )));
    }
    Ok(NodeSolutions {
        rule_fingerprint: fingerprint,
        times: times.to_vec(),
        values,
    })
}
