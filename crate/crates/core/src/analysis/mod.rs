//! Error norms, convergence rates, balance audits and scaling tables.

mod report;
mod sim;
mod study;

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::fespace::quadrature::{quad_rule, QuadDomain};
use crate::fespace::{DiscreteFunction, SpaceError, VolumeTable};
use crate::mesh::{Mesh, MeshHierarchy};
use crate::operator::{DiscreteOperator, OperatorError};
use crate::timeint::TimeError;

pub use report::{write_audit_csv, write_eoc_csv, write_flux_csv, write_scaling_csv, write_table1_csv, FluxRow};
pub use sim::{simulate, simulate_steps, step_count, RunOutcome};
pub use study::{eoc_study, reference_solution, InitialFn, Reference, StudyConfig};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("meshes are not nested: {0}")]
    NonNested(String),
    #[error("errors must be positive, got {0:e} and {1:e}")]
    NonPositive(f64, f64),
    #[error("no timing for the base thread count {0}")]
    MissingBase(usize),
    #[error("species mismatch: {0} vs {1}")]
    Species(usize, usize),
    #[error("model `{0}` has no exact solution")]
    NoExact(String),
    #[error("invalid study setup: {0}")]
    Setup(String),
    #[error("solver failed in step {step} at t = {t}: {source}")]
    Solver {
        step: usize,
        t: f64,
        #[source]
        source: TimeError,
    },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `L²` error, total and per species.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Error {
    pub total: f64,
    pub per_species: Vec<f64>,
}

impl L2Error {
    fn from_squares(sq: Vec<f64>) -> Self {
        L2Error { total: sq.iter().sum::<f64>().sqrt(), per_species: sq.into_iter().map(f64::sqrt).collect() }
    }
}

fn sum_ordered(parts: Vec<Vec<f64>>, ns: usize) -> Vec<f64> {
    let mut acc = vec![0.0; ns];
    for p in parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc
}

fn error_table(dim: usize, u: &DiscreteFunction, order: usize) -> VolumeTable {
    let rule = quad_rule(QuadDomain::Simplex(dim), 2 * order + 4).expect("degree within supported range");
    VolumeTable::new(u.space().basis(), rule)
}

/// `‖u − exact‖` with a rule of degree `2k + 4`.
pub fn l2_error_exact<F>(u: &DiscreteFunction, exact: F) -> L2Error
where
    F: Fn(&[f64; 3], &mut [f64]) + Sync,
{
    let space = u.space();
    let mesh = space.mesh();
    let ns = space.n_species();
    let nb = space.basis_size();
    let table = error_table(mesh.dim(), u, space.order());
    let parts: Vec<Vec<f64>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geo = mesh.geometry(e);
            let block = &u.coeffs()[e * space.block_size()..(e + 1) * space.block_size()];
            let mut ex = vec![0.0; ns];
            let mut sq = vec![0.0; ns];
            for q in 0..table.len() {
                let x = geo.to_physical(&table.rule.points[q]);
                exact(&x, &mut ex);
                let phi = table.phi(q);
                let w = table.rule.weights[q] * geo.det.abs();
                for s in 0..ns {
                    let uh: f64 = block[s * nb..(s + 1) * nb].iter().zip(phi).map(|(c, p)| c * p).sum();
                    sq[s] += w * (uh - ex[s]).powi(2);
                }
            }
            sq
        })
        .collect();
    L2Error::from_squares(sum_ordered(parts, ns))
}

/// For each element of `fine`, its ancestor in `coarse`.
fn ancestor_map(fine: &Arc<Mesh>, coarse: &Arc<Mesh>, hier: Option<&MeshHierarchy>) -> Result<Vec<usize>, AnalysisError> {
    if Arc::ptr_eq(fine, coarse) {
        return Ok((0..fine.num_elements()).collect());
    }
    let hier = hier.ok_or_else(|| AnalysisError::NonNested("different meshes and no hierarchy given".into()))?;
    let (lf, lc) = match (hier.position(fine), hier.position(coarse)) {
        (Some(f), Some(c)) => (f, c),
        _ => return Err(AnalysisError::NonNested("mesh not part of the hierarchy".into())),
    };
    Ok((0..fine.num_elements()).map(|e| hier.ancestor(lf, e, lc)).collect())
}

/// `‖a − b‖` for two discrete functions on nested meshes (or the same mesh).
///
/// Integrates on the finer mesh with a rule of degree `2k + 4`, `k` the larger
/// of the two orders, evaluating the coarse function through the nesting map.
pub fn l2_error_nested(
    a: &DiscreteFunction,
    b: &DiscreteFunction,
    hier: Option<&MeshHierarchy>,
) -> Result<L2Error, AnalysisError> {
    let ns = a.space().n_species();
    if b.space().n_species() != ns {
        return Err(AnalysisError::Species(ns, b.space().n_species()));
    }
    let (fine, coarse) = if a.space().mesh().num_elements() >= b.space().mesh().num_elements() { (a, b) } else { (b, a) };
    let fmesh = fine.space().mesh();
    let cmesh = coarse.space().mesh();
    let map = ancestor_map(fmesh, cmesh, hier)?;
    let order = a.space().order().max(b.space().order());
    let rule = quad_rule(QuadDomain::Simplex(fmesh.dim()), 2 * order + 4).expect("degree within supported range");
    let dim = fmesh.dim();
    let same = Arc::ptr_eq(fmesh, cmesh);
    let parts: Vec<Result<Vec<f64>, AnalysisError>> = (0..fmesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geo = fmesh.geometry(e);
            let ce = map[e];
            let cgeo = cmesh.geometry(ce);
            let mut vf = vec![0.0; ns];
            let mut vc = vec![0.0; ns];
            let mut sq = vec![0.0; ns];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let x = geo.to_physical(p);
                let xi = if same { *p } else { cgeo.to_reference(&x) };
                let lam0 = 1.0 - xi[..dim].iter().sum::<f64>();
                if lam0 < -1e-9 || xi[..dim].iter().any(|&c| c < -1e-9) {
                    return Err(AnalysisError::NonNested(format!("point of element {e} lies outside coarse element {ce}")));
                }
                fine.eval_reference(e, p, &mut vf);
                coarse.eval_reference(ce, &xi, &mut vc);
                let wd = w * geo.det.abs();
                for s in 0..ns {
                    sq[s] += wd * (vf[s] - vc[s]).powi(2);
                }
            }
            Ok(sq)
        })
        .collect();
    let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(L2Error::from_squares(sum_ordered(parts, ns)))
}

/// Experimental order of convergence for a halved mesh width.
pub fn eoc(e_coarse: f64, e_fine: f64) -> Result<f64, AnalysisError> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(AnalysisError::NonPositive(e_coarse, e_fine));
    }
    Ok((e_coarse / e_fine).ln() / std::f64::consts::LN_2)
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct EocRow {
    pub level: usize,
    pub elements: usize,
    /// Wall time of the solve in seconds.
    pub wall: f64,
    /// Wall time times the thread count.
    pub cpu: f64,
    pub error: Option<f64>,
    pub eoc: Option<f64>,
    pub failure: Option<String>,
}

/// Fills `eoc` from consecutive successful rows.
pub fn fill_eoc(rows: &mut [EocRow]) {
    for i in 0..rows.len() {
        rows[i].eoc = None;
        if i == 0 {
            continue;
        }
        if let (Some(a), Some(b)) = (rows[i - 1].error, rows[i].error) {
            rows[i].eoc = eoc(a, b).ok();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub threads: usize,
    pub wall: f64,
    pub speedup: f64,
}

/// `speedup(n) = time(base) / time(n)`. Repeated thread counts keep their
/// first timing as the base.
pub fn speedup_table(times: &[(usize, f64)], base: usize) -> Result<Vec<ScalingRow>, AnalysisError> {
    let t0 = times.iter().find(|(n, _)| *n == base).map(|p| p.1).ok_or(AnalysisError::MissingBase(base))?;
    Ok(times.iter().map(|&(threads, wall)| ScalingRow { threads, wall, speedup: t0 / wall }).collect())
}

/// Species balance at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditSample {
    pub step: usize,
    pub t: f64,
    pub totals: Vec<f64>,
    /// `∫ S(U_h)` per species.
    pub source_rate: Vec<f64>,
    /// Rate of change due to boundary fluxes, i.e. the surface part of
    /// `∫ M⁻¹ L_h(U_h)`. Interior face terms telescope and do not appear.
    pub boundary_rate: Vec<f64>,
}

/// Evaluates totals and rates of `u` at time `t`.
pub fn audit_sample(op: &DiscreteOperator, u: &[f64], step: usize, t: f64) -> Result<AuditSample, AnalysisError> {
    let space = op.space();
    let mesh = space.mesh();
    let ns = space.n_species();
    let nb = space.basis_size();
    let c0 = space.basis().constant_value();
    let mut r = vec![0.0; u.len()];
    op.apply(u, t, &mut r)?;
    let f = space.function(u.to_vec())?;
    let totals = f.totals();
    let mut rate = vec![0.0; ns];
    for e in 0..mesh.num_elements() {
        for (s, v) in rate.iter_mut().enumerate() {
            // ∫_K L_h = ⟨φ_0, L_h⟩ / φ_0 for the orthonormal basis
            *v += r[space.index(e, s, 0)] / c0;
        }
    }
    let table = op.volume_table();
    let model = op.model();
    let parts: Vec<Vec<f64>> = op.install(|| {
        (0..mesh.num_elements())
            .into_par_iter()
            .map(|e| {
                let geo = mesh.geometry(e);
                let block = &u[e * space.block_size()..(e + 1) * space.block_size()];
                let mut uq = vec![0.0; ns];
                let mut sq = vec![0.0; ns];
                let mut acc = vec![0.0; ns];
                for q in 0..table.len() {
                    let phi = table.phi(q);
                    for s in 0..ns {
                        uq[s] = block[s * nb..(s + 1) * nb].iter().zip(phi).map(|(c, p)| c * p).sum();
                    }
                    let x = geo.to_physical(&table.rule.points[q]);
                    model.source(&uq, &x, t, &mut sq);
                    let w = table.rule.weights[q] * geo.det.abs();
                    for s in 0..ns {
                        acc[s] += w * sq[s];
                    }
                }
                acc
            })
            .collect()
    });
    let source_rate = sum_ordered(parts, ns);
    let boundary_rate = rate.iter().zip(&source_rate).map(|(r, s)| r - s).collect();
    Ok(AuditSample { step, t, totals, source_rate, boundary_rate })
}

/// One row of the balance audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub sample: AuditSample,
    /// Change of each total since the previous row minus the trapezoidal
    /// integral of the source and boundary rates. Zero on the first row.
    pub balance: Vec<f64>,
    /// Accumulated boundary inflow since the first row (trapezoidal).
    pub boundary_inflow: Vec<f64>,
}

/// Balance residuals for a time series of samples.
pub fn conservation_audit(samples: &[AuditSample]) -> Vec<AuditRow> {
    let mut rows: Vec<AuditRow> = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let ns = s.totals.len();
        let (balance, boundary_inflow) = if i == 0 {
            (vec![0.0; ns], vec![0.0; ns])
        } else {
            let p = &samples[i - 1];
            let dt = s.t - p.t;
            let prev_in = &rows[i - 1].boundary_inflow;
            let mut bal = vec![0.0; ns];
            let mut inflow = vec![0.0; ns];
            for k in 0..ns {
                let b = 0.5 * dt * (p.boundary_rate[k] + s.boundary_rate[k]);
                let src = 0.5 * dt * (p.source_rate[k] + s.source_rate[k]);
                bal[k] = s.totals[k] - p.totals[k] - b - src;
                inflow[k] = prev_in[k] + b;
            }
            (bal, inflow)
        };
        rows.push(AuditRow { sample: s.clone(), balance, boundary_inflow });
    }
    rows
}
