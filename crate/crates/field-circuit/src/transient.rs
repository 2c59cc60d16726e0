//! Implicit-Euler time stepping with a damped Newton iteration.

use log::{debug, trace};

use crate::coupled::{CoupledSystem, Evaluation};
use crate::diode::limit_voltage;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub dt: f64,
    /// Record every this many steps.
    pub snapshot_every: usize,
}

impl TimeGrid {
    /// Two source periods of 0.02 s with step 1e-4, 401 snapshots.
    pub const DEFAULT: TimeGrid = TimeGrid {
        t_end: 0.04,
        dt: 1e-4,
        snapshot_every: 1,
    };

    pub fn n_steps(&self) -> Result<usize> {
        if !(self.t_end > 0.0 && self.dt > 0.0) || self.snapshot_every == 0 {
            return Err(Error::Parameter(format!("invalid time grid {self:?}")));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end || n < 1.0 {
            return Err(Error::Parameter(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        let n = n as usize;
        if !n.is_multiple_of(self.snapshot_every) {
            return Err(Error::Parameter(format!(
                "{n} steps are not a multiple of the snapshot interval {}",
                self.snapshot_every
            )));
        }
        Ok(n)
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    /// Snapshot times, including `t = 0`.
    pub fn snapshot_times(&self) -> Result<Vec<f64>> {
        let n = self.n_steps()?;
        Ok((0..=n)
            .step_by(self.snapshot_every)
            .map(|k| self.time(k))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Bound on `|r_i| / magnitude_i` for every row.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
            max_halvings: 4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransientStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub max_iterations_per_step: usize,
    pub halvings: usize,
    /// Largest observed `log(r_{n+1}) / log(r_n)` over Newton triples where
    /// the scaled residual fell below `1e-2`; about 2 under quadratic
    /// convergence.
    pub best_contraction_order: f64,
    /// Smallest magnetic energy over accepted steps, zero without field.
    pub min_magnetic_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: TransientStats,
}

impl TransientResult {
    pub fn output(&self, sys: &CoupledSystem) -> Vec<f64> {
        self.states.iter().map(|x| sys.output(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    /// Scaled residual of every iterate without active limiting.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub halvings: usize,
}

/// Newton iteration for one implicit-Euler step starting from `guess`.
///
/// Diode voltages are limited between iterations, each diode being
/// linearized at its limited voltage; convergence is only tested on
/// iterates where no limiting was active. Without limiting, a step that
/// increases the scaled residual is halved up to `max_halvings` times and
/// taken in full if no halving helps.
///
pub fn newton_step(
    sys: &CoupledSystem,
    prev: &[f64],
    guess: Vec<f64>,
    dt: f64,
    t: f64,
    settings: &NewtonSettings,
) -> Result<NewtonOutcome> {
    let converged = |e: &Evaluation| {
        e.residual
            .iter()
            .zip(&e.magnitude)
            .all(|(r, m)| r.abs() <= settings.tolerance * m)
    };
    let mut x = guess;
    let mut history = Vec::new();
    let mut halvings = 0;
    let mut lin: Option<Vec<f64>> = None;
    for iterations in 0..settings.max_iterations {
        let mut eval = sys.evaluate_linearized(&x, prev, dt, t, true, lin.as_deref())?;
        if lin.is_none() {
            history.push(eval.scaled_norm());
            if converged(&eval) {
                return Ok(NewtonOutcome {
                    x,
                    history,
                    iterations,
                    halvings,
                });
            }
        }
        let jac = eval.jacobian.take().expect("jacobian requested");
        let rhs: Vec<f64> = eval.residual.iter().map(|r| -r).collect();
        let dx = jac.solve(&rhs)?;
        let mut next: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();

        let v_old = lin.take().unwrap_or_else(|| sys.diode_voltages(&x));
        let mut limited = false;
        let v_lim: Vec<f64> = sys
            .diode_voltages(&next)
            .iter()
            .zip(&v_old)
            .zip(&sys.diodes)
            .map(|((&vn, &vo), d)| {
                let (v, l) = limit_voltage(vn, vo, d);
                limited |= l;
                v
            })
            .collect();
        if limited {
            lin = Some(v_lim);
        } else if let Some(&merit) = history.last() {
            let grows = |y: &[f64]| match sys.evaluate(y, prev, dt, t, false) {
                Ok(e) => e.scaled_norm() > merit && !converged(&e),
                Err(_) => true,
            };
            let mut lambda = 1.0;
            let mut trial = next.clone();
            let mut k = 0;
            while grows(&trial) && k < settings.max_halvings {
                lambda *= 0.5;
                k += 1;
                trial = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            }
            if k < settings.max_halvings || !grows(&trial) {
                next = trial;
            }
            halvings += k;
        }
        x = next;
    }
    let eval = sys.evaluate(&x, prev, dt, t, false)?;
    history.push(eval.scaled_norm());
    if lin.is_none() && converged(&eval) {
        return Ok(NewtonOutcome {
            x,
            history,
            iterations: settings.max_iterations,
            halvings,
        });
    }
    let (row, _) = eval.worst_row();
    debug!("Newton failure at t = {t}: worst scaled row {row}");
    Err(Error::NewtonFailure {
        time: t,
        iterations: settings.max_iterations,
        history,
    })
}

fn contraction_order(history: &[f64]) -> f64 {
    history
        .windows(2)
        .filter(|w| w[0] < 1e-2 && w[0] > 0.0 && w[1] > 0.0)
        .map(|w| w[1].ln() / w[0].ln())
        .fold(0.0, f64::max)
}

/// Integrates from the zero state over `grid`, passing every snapshot
/// (including `t = 0`) to `observe`.
pub fn integrate<F>(
    sys: &CoupledSystem,
    grid: &TimeGrid,
    settings: &NewtonSettings,
    mut observe: F,
) -> Result<TransientStats>
where
    F: FnMut(f64, &[f64]),
{
    let n_steps = grid.n_steps()?;
    let n = sys.layout().len();
    let mut prev = vec![0.0; n];
    let mut before = prev.clone();
    let mut stats = TransientStats::default();
    let energy = |x: &[f64]| {
        sys.field
            .as_ref()
            .map_or(0.0, |f| f.magnetic_energy(&x[sys.layout().a_offset()..]))
    };
    stats.min_magnetic_energy = energy(&prev);
    observe(0.0, &prev);
    for step in 1..=n_steps {
        let t = grid.time(step);
        // linear extrapolation from the two previous steps
        let guess: Vec<f64> = prev.iter().zip(&before).map(|(a, b)| 2.0 * a - b).collect();
        let out = match newton_step(sys, &prev, guess, grid.dt, t, settings) {
            Ok(ok) => ok,
            // retry from the previous state before giving up
            Err(Error::NewtonFailure { .. }) => {
                newton_step(sys, &prev, prev.clone(), grid.dt, t, settings)?
            }
            Err(e) => return Err(e),
        };
        trace!("t = {t:.6e}: scaled residuals {:?}", out.history);
        stats.steps += 1;
        stats.newton_iterations += out.iterations;
        stats.max_iterations_per_step = stats.max_iterations_per_step.max(out.iterations);
        stats.halvings += out.halvings;
        stats.best_contraction_order = stats
            .best_contraction_order
            .max(contraction_order(&out.history));
        stats.min_magnetic_energy = stats.min_magnetic_energy.min(energy(&out.x));
        before = std::mem::replace(&mut prev, out.x);
        if step % grid.snapshot_every == 0 {
            observe(t, &prev);
        }
    }
    debug!(
        "transient: {} steps, {} Newton iterations (max {} per step), {} halvings, \
         best contraction order {:.2}",
        stats.steps,
        stats.newton_iterations,
        stats.max_iterations_per_step,
        stats.halvings,
        stats.best_contraction_order
    );
    Ok(stats)
}

/// Integrates from the zero state and keeps every snapshot state.
pub fn solve_transient(
    sys: &CoupledSystem,
    grid: &TimeGrid,
    settings: &NewtonSettings,
) -> Result<TransientResult> {
    let (mut times, mut states) = (Vec::new(), Vec::new());
    let stats = integrate(sys, grid, settings, |t, x| {
        times.push(t);
        states.push(x.to_vec());
    })?;
    Ok(TransientResult {
        times,
        states,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_401_snapshots() {
        let t = TimeGrid::DEFAULT.snapshot_times().unwrap();
        assert_eq!(t.len(), 401);
        assert!((t[400] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn snapshot_subsampling() {
        let g = TimeGrid {
            t_end: 1.0,
            dt: 0.1,
            snapshot_every: 5,
        };
        assert_eq!(g.snapshot_times().unwrap().len(), 3);
        let bad = TimeGrid {
            snapshot_every: 3,
            ..g
        };
        assert!(bad.n_steps().is_err());
        assert!(TimeGrid { dt: 0.3, ..g }.n_steps().is_err());
    }

    #[test]
    fn contraction_order_of_quadratic_sequence() {
        let h = [1e-1, 1e-2, 1e-4, 1e-8];
        assert!((contraction_order(&h) - 2.0).abs() < 1e-12);
    }
}
