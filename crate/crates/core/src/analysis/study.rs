use std::sync::Arc;

use crate::fespace::{DiscreteFunction, Space};
use crate::flux::FluxScheme;
use crate::mesh::{Mesh, MeshHierarchy};
use crate::model::Model;
use crate::operator::{DiscreteOperator, OperatorOptions};
use crate::timeint::{Dirk, GmresConfig, NewtonConfig, Tableau};

use super::{fill_eoc, l2_error_exact, l2_error_nested, simulate, AnalysisError, EocRow, RunOutcome};

pub type InitialFn = Arc<dyn Fn(&[f64; 3], &mut [f64]) + Send + Sync>;

/// What the errors of a study are measured against.
#[derive(Debug, Clone)]
pub enum Reference {
    /// The model's exact solution at the final time.
    Exact,
    /// A discrete solution on a level of the study's hierarchy.
    Discrete(Arc<DiscreteFunction>),
}

#[derive(Clone)]
pub struct StudyConfig {
    pub model: Arc<dyn Model>,
    pub scheme: FluxScheme,
    pub order: usize,
    /// Step size on level 0; halved on every level.
    pub dt0: f64,
    pub t_end: f64,
    /// Defaults to the tableau paired with the polynomial order.
    pub tableau: Option<Tableau>,
    pub newton: NewtonConfig,
    pub gmres: GmresConfig,
    pub operator: OperatorOptions,
    /// Defaults to the model's exact solution at `t = 0`.
    pub initial: Option<InitialFn>,
}

impl std::fmt::Debug for StudyConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StudyConfig")
            .field("model", &self.model.name())
            .field("scheme", &self.scheme)
            .field("order", &self.order)
            .field("dt0", &self.dt0)
            .field("t_end", &self.t_end)
            .finish()
    }
}

impl StudyConfig {
    pub fn new(model: Arc<dyn Model>, scheme: FluxScheme, order: usize, dt0: f64, t_end: f64) -> Self {
        StudyConfig {
            model,
            scheme,
            order,
            dt0,
            t_end,
            tableau: None,
            newton: NewtonConfig::default(),
            gmres: GmresConfig::default(),
            operator: OperatorOptions::default(),
            initial: None,
        }
    }

    fn dirk(&self, order: usize) -> Dirk {
        let tableau = self.tableau.clone().unwrap_or_else(|| Tableau::for_polynomial_order(order));
        Dirk { tableau, newton: self.newton, gmres: self.gmres }
    }

    fn initial_state(&self, space: &Arc<Space>) -> Result<DiscreteFunction, AnalysisError> {
        match &self.initial {
            Some(f) => Ok(space.l2_project(|x, o| f(x, o))),
            None => {
                let mut probe = vec![0.0; self.model.n_species()];
                if !self.model.exact(&[0.0; 3], 0.0, &mut probe) {
                    return Err(AnalysisError::NoExact(self.model.name().to_string()));
                }
                let m = &self.model;
                Ok(space.l2_project(|x, o| {
                    m.exact(x, 0.0, o);
                }))
            }
        }
    }

    /// Runs one solve of the given order on `mesh` with step `dt`.
    pub fn run(&self, mesh: Arc<Mesh>, order: usize, dt: f64) -> Result<RunOutcome, AnalysisError> {
        let space = Space::new(mesh, order, self.model.n_species())?;
        let op = DiscreteOperator::new(space.clone(), self.model.clone(), self.scheme, self.operator)?;
        let u0 = self.initial_state(&space)?;
        simulate(&op, u0, 0.0, self.t_end, dt, &self.dirk(order), |_, _, _| Ok(()))
    }
}

/// Fine-grid solution used as the reference of a study: level `level` of
/// `hier`, polynomial order `order`, step `dt0 / 2^level`.
pub fn reference_solution(
    hier: &MeshHierarchy,
    level: usize,
    order: usize,
    cfg: &StudyConfig,
) -> Result<DiscreteFunction, AnalysisError> {
    if level >= hier.num_levels() {
        return Err(AnalysisError::Setup(format!("reference level {level} not in hierarchy")));
    }
    let dt = cfg.dt0 / 2f64.powi(level as i32);
    // the reference uses the tableau paired with its own order
    let cfg = StudyConfig { tableau: None, ..cfg.clone() };
    Ok(cfg.run(hier.level(level).clone(), order, dt)?.solution)
}

/// Solves on levels `0..levels` of `hier` with `dt = dt0 / 2^level` and
/// measures the final-time error against `reference`. A failing level is
/// reported in its row and the study continues.
pub fn eoc_study(
    hier: &MeshHierarchy,
    levels: usize,
    cfg: &StudyConfig,
    reference: &Reference,
) -> Result<Vec<EocRow>, AnalysisError> {
    if levels == 0 || levels > hier.num_levels() {
        return Err(AnalysisError::Setup(format!("{levels} levels requested, hierarchy has {}", hier.num_levels())));
    }
    if let Reference::Exact = reference {
        let mut probe = vec![0.0; cfg.model.n_species()];
        if !cfg.model.exact(&[0.0; 3], cfg.t_end, &mut probe) {
            return Err(AnalysisError::NoExact(cfg.model.name().to_string()));
        }
    }
    let threads = cfg.operator.threads.max(1) as f64;
    let mut rows = Vec::with_capacity(levels);
    for level in 0..levels {
        let mesh = hier.level(level).clone();
        let elements = mesh.num_elements();
        let dt = cfg.dt0 / 2f64.powi(level as i32);
        let mut row = EocRow { level, elements, wall: 0.0, cpu: 0.0, error: None, eoc: None, failure: None };
        match cfg.run(mesh, cfg.order, dt) {
            Ok(out) => {
                row.wall = out.wall.as_secs_f64();
                row.cpu = row.wall * threads;
                let err = match reference {
                    Reference::Exact => {
                        let m = &cfg.model;
                        let t = out.t;
                        l2_error_exact(&out.solution, |x, o| {
                            m.exact(x, t, o);
                        })
                        .total
                    }
                    Reference::Discrete(r) => l2_error_nested(&out.solution, r, Some(hier))?.total,
                };
                log::info!("level {level}: {elements} elements, error {err:.4e}, {:.2}s", row.wall);
                row.error = Some(err);
            }
            Err(e @ AnalysisError::Solver { .. }) => {
                log::warn!("level {level} failed: {e}");
                row.failure = Some(e.to_string());
            }
            Err(e) => return Err(e),
        }
        rows.push(row);
    }
    fill_eoc(&mut rows);
    Ok(rows)
}
