use std::time::{Duration, Instant};

use crate::fespace::DiscreteFunction;
use crate::operator::DiscreteOperator;
use crate::timeint::{Dirk, StepStats, TimeError};

use super::AnalysisError;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solution: DiscreteFunction,
    pub steps: usize,
    pub t: f64,
    pub stats: StepStats,
    pub wall: Duration,
}

/// Integrates `M u' = L_h(u)` from `t0` to `t_end` with steps of at most `dt`
/// (the step is shrunk so that an integer number of steps lands on `t_end`).
///
/// `observer(step, t, u)` is called for the initial state and after every step.
pub fn simulate(
    op: &DiscreteOperator,
    u0: DiscreteFunction,
    t0: f64,
    t_end: f64,
    dt: f64,
    dirk: &Dirk,
    observer: impl FnMut(usize, f64, &[f64]) -> Result<(), AnalysisError> + Send,
) -> Result<RunOutcome, AnalysisError> {
    if !(dt > 0.0) || !(t_end >= t0) {
        return Err(AnalysisError::Setup(format!("need dt > 0 and t_end >= t0, got dt = {dt}, [{t0}, {t_end}]")));
    }
    let (steps, h) = step_count(t0, t_end, dt);
    simulate_steps(op, u0, t0, h, steps, dirk, observer)
}

/// Number of equal steps of size at most `dt` covering `[t0, t_end]`, and
/// that step size.
pub fn step_count(t0: f64, t_end: f64, dt: f64) -> (usize, f64) {
    let span = t_end - t0;
    if span <= 0.0 {
        return (0, dt);
    }
    let steps = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (steps, span / steps as f64)
}

/// Exactly `steps` steps of size `dt`.
pub fn simulate_steps(
    op: &DiscreteOperator,
    u0: DiscreteFunction,
    t0: f64,
    dt: f64,
    steps: usize,
    dirk: &Dirk,
    mut observer: impl FnMut(usize, f64, &[f64]) -> Result<(), AnalysisError> + Send,
) -> Result<RunOutcome, AnalysisError> {
    if !std::sync::Arc::ptr_eq(u0.space(), op.space()) {
        return Err(AnalysisError::Setup("initial state lives in a different space".into()));
    }
    let space = u0.space().clone();
    let mut u = u0.into_coeffs();
    let start = Instant::now();
    let (stats, t) = op.install(|| -> Result<(StepStats, f64), AnalysisError> {
        let mut stats = StepStats::default();
        let mut t = t0;
        observer(0, t, &u)?;
        for n in 0..steps {
            let f = |x: &[f64], tt: f64, out: &mut [f64]| op.apply_f(x, tt, out).map_err(TimeError::from);
            let st = dirk.step(f, &mut u, t, dt).map_err(|source| AnalysisError::Solver { step: n + 1, t, source })?;
            stats += st;
            t = t0 + (n + 1) as f64 * dt;
            log::debug!("step {} t = {t:.6e}: {} Newton, {} GMRES", n + 1, st.newton_iterations, st.linear_iterations);
            observer(n + 1, t, &u)?;
        }
        Ok((stats, t))
    })?;
    let wall = start.elapsed();
    Ok(RunOutcome { solution: space.function(u)?, steps, t, stats, wall })
}
