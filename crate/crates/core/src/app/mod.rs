//! Scenario orchestration behind the command-line tool: `run`, `eoc`,
//! `compare-fluxes` and `scale`.

pub mod config;
mod vtk;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    self, audit_sample, conservation_audit, eoc_study, l2_error_exact, reference_solution, simulate, simulate_steps,
    speedup_table, step_count, AnalysisError, EocRow, FluxRow, InitialFn, Reference, ScalingRow, StudyConfig,
};
use crate::fespace::{Space, MAX_ORDER};
use crate::flux::{FluxKind, FluxScheme};
use crate::mesh::{builtin, load_mesh, Mesh, MeshFormat, MeshHierarchy};
use crate::model::{ManufacturedKind, Model, PlaqueModel, ReducedModel};
use crate::operator::{DiscreteOperator, OperatorOptions};
use crate::timeint::{Dirk, GmresConfig, NewtonConfig, Tableau};

pub use config::{parse_flux, RunConfig, OUT_DIR_ENV};
pub use vtk::write_vtk;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    /// 1 for configuration errors, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 1,
            _ => 2,
        }
    }
}

impl From<AnalysisError> for AppError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Solver { .. } | AnalysisError::Io(_) | AnalysisError::Csv(_) => AppError::Solver(e.to_string()),
            other => AppError::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AppError + '_ {
    move |source| AppError::Io { path: path.to_path_buf(), source }
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub level: Option<usize>,
    pub order: Option<usize>,
    pub flux: Option<String>,
}

impl Overrides {
    /// `level` sets the mesh refinement for `run`/`scale` and the number of
    /// levels for `eoc`/`compare-fluxes` (`level + 1`); `order` restricts the
    /// EOC orders to one.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), AppError> {
        if let Some(t) = self.threads {
            cfg.solver.threads = t;
            cfg.scale.threads.retain(|&n| n <= t);
            if cfg.scale.threads.is_empty() {
                cfg.scale.threads = vec![t];
            }
            cfg.scale.parts = None;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = Some(o.clone());
        }
        if let Some(l) = self.level {
            cfg.mesh.level = l;
            cfg.eoc.levels = l + 1;
            cfg.compare.levels = l + 1;
        }
        if let Some(k) = self.order {
            cfg.discretization.order = k;
            cfg.eoc.orders = vec![k];
        }
        if let Some(f) = &self.flux {
            cfg.discretization.flux = f.clone();
        }
        cfg.normalize()
    }
}

pub fn build_model(cfg: &RunConfig) -> Result<Arc<dyn Model>, AppError> {
    let p = cfg.model.params.clone();
    let err = |e: crate::model::ModelError| AppError::Config(e.to_string());
    Ok(match cfg.model.kind.as_str() {
        "plaque6" => Arc::new(PlaqueModel::new(p).map_err(err)?),
        "reduced3" => Arc::new(ReducedModel::new(p).map_err(err)?),
        other => other.parse::<ManufacturedKind>().map_err(err)?.build(),
    })
}

fn base_mesh(cfg: &RunConfig) -> Result<Mesh, AppError> {
    let mesh = match (&cfg.mesh.builtin, &cfg.mesh.file) {
        (Some(b), _) => builtin(b),
        (None, Some(f)) => load_mesh(f, MeshFormat::GmshAscii),
        (None, None) => unreachable!("normalized config names a mesh"),
    }
    .map_err(|e| AppError::Config(e.to_string()))?;
    let manufactured = !matches!(cfg.model.kind.as_str(), "plaque6" | "reduced3");
    if manufactured && mesh.dim() != 2 {
        return Err(AppError::Config(format!("model {} needs a 2D mesh", cfg.model.kind)));
    }
    Ok(mesh)
}

/// Mesh hierarchy with levels `0..=levels` above the configured source mesh.
pub fn build_hierarchy(cfg: &RunConfig, levels: usize) -> Result<MeshHierarchy, AppError> {
    MeshHierarchy::new(base_mesh(cfg)?, levels).map_err(|e| AppError::Config(e.to_string()))
}

/// The configured mesh refined `mesh.level` times.
pub fn build_mesh(cfg: &RunConfig) -> Result<Arc<Mesh>, AppError> {
    Ok(build_hierarchy(cfg, cfg.mesh.level)?.level(cfg.mesh.level).clone())
}

/// Configured initial data, else the model's exact solution at `t = 0`,
/// else zero.
pub fn initial_fn(cfg: &RunConfig, model: &Arc<dyn Model>) -> Result<InitialFn, AppError> {
    let init = &cfg.initial;
    if !init.background.is_empty() || !init.bumps.is_empty() {
        let r = init.resolve(&model.species_names()).map_err(|e| AppError::Config(e.to_string()))?;
        return Ok(Arc::new(move |x: &[f64; 3], o: &mut [f64]| r.eval(x, o)));
    }
    let mut probe = vec![0.0; model.n_species()];
    if model.exact(&[0.0; 3], 0.0, &mut probe) {
        let m = model.clone();
        return Ok(Arc::new(move |x: &[f64; 3], o: &mut [f64]| {
            m.exact(x, 0.0, o);
        }));
    }
    Ok(Arc::new(|_: &[f64; 3], o: &mut [f64]| o.iter_mut().for_each(|v| *v = 0.0)))
}

fn scheme(cfg: &RunConfig, kind: FluxKind, dim: usize) -> FluxScheme {
    FluxScheme::new(kind, dim).with_ip_eta0(cfg.discretization.ip_eta0)
}

fn operator_options(cfg: &RunConfig, threads: usize, parts: Option<usize>) -> OperatorOptions {
    OperatorOptions {
        volume_degree: cfg.discretization.volume_degree,
        surface_degree: cfg.discretization.surface_degree,
        threads,
        parts,
    }
}

fn solver_configs(cfg: &RunConfig) -> (NewtonConfig, GmresConfig) {
    let s = &cfg.solver;
    (
        NewtonConfig { rtol: s.newton_rtol, atol: s.newton_atol, max_iters: s.newton_max_iters },
        GmresConfig { restart: s.gmres_restart, max_iters: s.gmres_max_iters, rtol: s.gmres_rtol },
    )
}

fn tableau(cfg: &RunConfig, order: usize) -> Tableau {
    match cfg.time.tableau_order {
        Some(p) => Tableau::for_order(p).expect("validated"),
        None => Tableau::for_polynomial_order(order),
    }
}

fn dirk(cfg: &RunConfig, order: usize) -> Dirk {
    let (newton, gmres) = solver_configs(cfg);
    Dirk { tableau: tableau(cfg, order), newton, gmres }
}

fn study_config(cfg: &RunConfig, model: &Arc<dyn Model>, kind: FluxKind, order: usize, dim: usize) -> Result<StudyConfig, AppError> {
    let (newton, gmres) = solver_configs(cfg);
    Ok(StudyConfig {
        model: model.clone(),
        scheme: scheme(cfg, kind, dim),
        order,
        dt0: cfg.eoc.dt0.expect("normalized"),
        t_end: cfg.time.t_end,
        tableau: cfg.time.tableau_order.map(|p| Tableau::for_order(p).expect("validated")),
        newton,
        gmres,
        operator: operator_options(cfg, cfg.solver.threads, cfg.solver.parts),
        initial: Some(initial_fn(cfg, model)?),
    })
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf, AppError> {
    let dir = cfg.out_dir().to_path_buf();
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let p = dir.join("config.toml");
    std::fs::write(&p, cfg.to_toml()).map_err(io_err(&p))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_summary(dir: &Path, cfg: &RunConfig, command: &str, extra: serde_json::Value) -> Result<(), AppError> {
    let mut doc = json!({
        "command": command,
        "config_hash": cfg.hash(),
        "seed": cfg.output.seed,
        "versions": {
            "plaque-dg": env!("CARGO_PKG_VERSION"),
            "config_format": 1,
        },
        "model": cfg.model.kind,
        "flux": cfg.discretization.flux,
        "order": cfg.discretization.order,
    });
    if let (Some(d), serde_json::Value::Object(e)) = (doc.as_object_mut(), extra) {
        d.extend(e);
    }
    let p = dir.join("summary.json");
    let mut w = create(&p)?;
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| AppError::Solver(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(&p))
}

/// Plain-text log written next to the outputs and mirrored to `log`.
struct RunLog {
    path: PathBuf,
    w: BufWriter<File>,
}

impl RunLog {
    fn open(dir: &Path) -> Result<Self, AppError> {
        let path = dir.join("run.log");
        Ok(RunLog { w: create(&path)?, path })
    }

    fn line(&mut self, msg: &str) -> Result<(), AppError> {
        log::info!("{msg}");
        writeln!(self.w, "{msg}").map_err(io_err(&self.path))
    }

    fn finish(mut self) -> Result<(), AppError> {
        self.w.flush().map_err(io_err(&self.path))
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub steps: usize,
    pub t: f64,
    pub snapshots: Vec<PathBuf>,
    pub l2_error: Option<f64>,
    pub initial_totals: Vec<f64>,
    pub final_totals: Vec<f64>,
}

/// Integrates to `t_end`, writing VTK snapshots, the balance audit, a log
/// and a summary.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunReport, AppError> {
    let dir = prepare_out(cfg)?;
    let mut log = RunLog::open(&dir)?;
    let model = build_model(cfg)?;
    let mesh = build_mesh(cfg)?;
    let k = cfg.discretization.order;
    let space = Space::new(mesh.clone(), k, model.n_species()).map_err(|e| AppError::Config(e.to_string()))?;
    let op = DiscreteOperator::new(
        space.clone(),
        model.clone(),
        scheme(cfg, cfg.flux(), mesh.dim()),
        operator_options(cfg, cfg.solver.threads, cfg.solver.parts),
    )
    .map_err(|e| AppError::Config(e.to_string()))?;
    let init = initial_fn(cfg, &model)?;
    let u0 = space.l2_project(|x, o| init(x, o));
    let (steps, dt) = step_count(0.0, cfg.time.t_end, cfg.time.dt);
    let names = model.species_names();
    log.line(&format!(
        "run: model {} on {} elements (dim {}), k = {k}, flux {}, {steps} steps of {dt:.6e}, config {}",
        model.name(),
        mesh.num_elements(),
        mesh.dim(),
        cfg.discretization.flux,
        cfg.hash()
    ))?;

    let every = cfg.output.every;
    let mut snapshots = Vec::new();
    let mut samples = Vec::with_capacity(steps + 1);
    let mut pending: Option<AppError> = None;
    let dirk = dirk(cfg, k);
    let outcome = simulate(&op, u0, 0.0, cfg.time.t_end, dt, &dirk, |step, t, u| {
        samples.push(audit_sample(&op, u, step, t)?);
        let due = step == 0 || step == steps || (every > 0 && step % every == 0);
        if due {
            let path = dir.join(format!("snapshot_{step:05}.vtk"));
            let f = space.function(u.to_vec())?;
            let res = create(&path).and_then(|mut w| {
                write_vtk(&mut w, &f, &names, &format!("{} t={t:.6e}", model.name()))
                    .and_then(|_| w.flush())
                    .map_err(io_err(&path))
            });
            match res {
                Ok(()) => snapshots.push(path),
                Err(e) => {
                    pending = Some(e);
                    return Err(AnalysisError::Setup("snapshot output failed".into()));
                }
            }
        }
        Ok(())
    });
    if let Some(e) = pending {
        return Err(e);
    }
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let _ = log.line(&format!("failed: {e}"));
            let _ = log.finish();
            return Err(e.into());
        }
    };

    let rows = conservation_audit(&samples);
    let p = dir.join("audit.csv");
    analysis::write_audit_csv(create(&p)?, &names, &rows)?;

    let mut probe = vec![0.0; model.n_species()];
    let l2_error = if model.exact(&[0.0; 3], outcome.t, &mut probe) {
        let m = &model;
        let t = outcome.t;
        Some(
            l2_error_exact(&outcome.solution, |x, o| {
                m.exact(x, t, o);
            })
            .total,
        )
    } else {
        None
    };
    let initial_totals = samples.first().map(|s| s.totals.clone()).unwrap_or_default();
    let final_totals = outcome.solution.totals();
    log.line(&format!(
        "done: {} steps to t = {:.6e}, {} Newton / {} GMRES iterations, {:.3}s",
        outcome.steps,
        outcome.t,
        outcome.stats.newton_iterations,
        outcome.stats.linear_iterations,
        outcome.wall.as_secs_f64()
    ))?;
    if let Some(e) = l2_error {
        log.line(&format!("L2 error against the exact solution: {e:.6e}"))?;
    }
    log.finish()?;
    write_summary(
        &dir,
        cfg,
        "run",
        json!({
            "elements": mesh.num_elements(),
            "dofs": space.num_dofs(),
            "threads": cfg.solver.threads,
            "steps": outcome.steps,
            "dt": dt,
            "t_final": outcome.t,
            "newton_iterations": outcome.stats.newton_iterations,
            "gmres_iterations": outcome.stats.linear_iterations,
            "wall_time": outcome.wall.as_secs_f64(),
            "species": names,
            "initial_totals": initial_totals,
            "final_totals": final_totals,
            "l2_error": l2_error,
            "snapshots": snapshots.len(),
        }),
    )?;
    Ok(RunReport { out_dir: dir, steps: outcome.steps, t: outcome.t, snapshots, l2_error, initial_totals, final_totals })
}

fn wants_exact(cfg: &RunConfig, model: &Arc<dyn Model>) -> Result<bool, AppError> {
    let mut probe = vec![0.0; model.n_species()];
    let has = model.exact(&[0.0; 3], 0.0, &mut probe);
    match cfg.eoc.reference.as_str() {
        "exact" if !has => Err(AppError::Config(format!("model {} has no exact solution", model.name()))),
        "exact" => Ok(true),
        "fine" => Ok(false),
        _ => Ok(has),
    }
}

/// Reference for the studies and the hierarchy it lives on. A fine
/// reference is computed once with flux `kind`, one level above the finest
/// study level.
fn study_reference(
    cfg: &RunConfig,
    model: &Arc<dyn Model>,
    levels: usize,
    max_order: usize,
    kind: FluxKind,
    log: &mut RunLog,
) -> Result<(MeshHierarchy, Reference, Option<usize>), AppError> {
    if wants_exact(cfg, model)? {
        return Ok((build_hierarchy(cfg, levels - 1)?, Reference::Exact, None));
    }
    let hier = build_hierarchy(cfg, levels)?;
    let order = cfg.eoc.reference_order.unwrap_or((max_order + 1).min(MAX_ORDER));
    log.line(&format!(
        "computing reference: level {levels} ({} elements), order {order}",
        hier.level(levels).num_elements()
    ))?;
    let sc = study_config(cfg, model, kind, order, hier.level(0).dim())?;
    let r = reference_solution(&hier, levels, order, &sc)?;
    Ok((hier, Reference::Discrete(Arc::new(r)), Some(order)))
}

#[derive(Debug, Clone)]
pub struct EocReport {
    pub out_dir: PathBuf,
    pub tables: Vec<(usize, Vec<EocRow>)>,
}

/// Convergence table over orders and levels (`eoc.csv`, `table1.csv`).
pub fn cmd_eoc(cfg: &RunConfig) -> Result<EocReport, AppError> {
    let dir = prepare_out(cfg)?;
    let mut log = RunLog::open(&dir)?;
    let model = build_model(cfg)?;
    let levels = cfg.eoc.levels;
    let max_order = *cfg.eoc.orders.last().expect("normalized");
    let (hier, reference, ref_order) = study_reference(cfg, &model, levels, max_order, cfg.flux(), &mut log)?;
    let dim = hier.level(0).dim();
    let mut tables = Vec::new();
    for &k in &cfg.eoc.orders {
        log.line(&format!("order {k}: {levels} levels"))?;
        let sc = study_config(cfg, &model, cfg.flux(), k, dim)?;
        let rows = eoc_study(&hier, levels, &sc, &reference)?;
        for r in &rows {
            log.line(&format!(
                "  level {} ({} elements): error {}, eoc {}",
                r.level,
                r.elements,
                r.error.map_or("failed".into(), |e| format!("{e:.4e}")),
                r.eoc.map_or("---".into(), |e| format!("{e:.4}"))
            ))?;
        }
        tables.push((k, rows));
    }
    let p = dir.join("eoc.csv");
    analysis::write_eoc_csv(create(&p)?, &tables)?;
    let p = dir.join("table1.csv");
    analysis::write_table1_csv(create(&p)?, &tables)?;
    log.finish()?;
    write_summary(
        &dir,
        cfg,
        "eoc",
        json!({
            "levels": levels,
            "orders": cfg.eoc.orders,
            "reference": if ref_order.is_some() { "fine" } else { "exact" },
            "reference_order": ref_order,
            "elements": (0..levels).map(|l| hier.level(l).num_elements()).collect::<Vec<_>>(),
        }),
    )?;
    Ok(EocReport { out_dir: dir, tables })
}

#[derive(Debug, Clone)]
pub struct FluxReport {
    pub out_dir: PathBuf,
    pub rows: Vec<FluxRow>,
}

/// Runs the same problem with each configured diffusion flux (`fluxes.csv`).
pub fn cmd_compare_fluxes(cfg: &RunConfig) -> Result<FluxReport, AppError> {
    let dir = prepare_out(cfg)?;
    let mut log = RunLog::open(&dir)?;
    let model = build_model(cfg)?;
    let levels = cfg.compare.levels;
    let k = cfg.discretization.order;
    // one shared reference so that every flux is measured against the same data
    let (hier, reference, ref_order) = study_reference(cfg, &model, levels, k, FluxKind::Cdg2, &mut log)?;
    let dim = hier.level(0).dim();
    let mut rows = Vec::new();
    for name in &cfg.compare.fluxes {
        let kind = parse_flux(name)?;
        log.line(&format!("flux {name}: order {k}, {levels} levels"))?;
        let sc = study_config(cfg, &model, kind, k, dim)?;
        let study = eoc_study(&hier, levels, &sc, &reference)?;
        for r in study {
            log.line(&format!(
                "  level {}: error {}, cpu {:.3}s",
                r.level,
                r.error.map_or("failed".into(), |e| format!("{e:.4e}")),
                r.cpu
            ))?;
            rows.push(FluxRow { flux: name.clone(), row: r });
        }
    }
    let p = dir.join("fluxes.csv");
    analysis::write_flux_csv(create(&p)?, &rows)?;
    log.finish()?;
    write_summary(
        &dir,
        cfg,
        "compare-fluxes",
        json!({
            "levels": levels,
            "fluxes": cfg.compare.fluxes,
            "reference": if ref_order.is_some() { "fine" } else { "exact" },
            "reference_order": ref_order,
        }),
    )?;
    Ok(FluxReport { out_dir: dir, rows })
}

#[derive(Debug, Clone)]
pub struct ScaleReport {
    pub out_dir: PathBuf,
    pub rows: Vec<ScalingRow>,
    pub steps: usize,
    pub elements: usize,
    /// Final states of all thread counts agree bit for bit.
    pub bitwise_identical: bool,
}

fn state_hash(u: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in u {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Times a fixed number of steps for each thread count with a fixed mesh
/// partition (`scaling.csv`).
pub fn cmd_scale(cfg: &RunConfig) -> Result<ScaleReport, AppError> {
    let dir = prepare_out(cfg)?;
    let mut log = RunLog::open(&dir)?;
    let model = build_model(cfg)?;
    let mesh = build_mesh(cfg)?;
    let k = cfg.discretization.order;
    let space = Space::new(mesh.clone(), k, model.n_species()).map_err(|e| AppError::Config(e.to_string()))?;
    let init = initial_fn(cfg, &model)?;
    let steps = cfg.scale.steps;
    let parts = cfg.scale.parts;
    log.line(&format!(
        "scale: {} elements, k = {k}, {} dofs, {steps} steps, {} parts, threads {:?}",
        mesh.num_elements(),
        space.num_dofs(),
        parts.unwrap_or(1),
        cfg.scale.threads
    ))?;
    let dirk = dirk(cfg, k);
    let mut times = Vec::new();
    let mut hashes = Vec::new();
    for &n in &cfg.scale.threads {
        let op = DiscreteOperator::new(
            space.clone(),
            model.clone(),
            scheme(cfg, cfg.flux(), mesh.dim()),
            operator_options(cfg, n, parts),
        )
        .map_err(|e| AppError::Config(e.to_string()))?;
        let u0 = space.l2_project(|x, o| init(x, o));
        // untimed warm-up: thread pool start and first touch of the scratch
        let mut scratch = vec![0.0; space.num_dofs()];
        op.apply(u0.coeffs(), 0.0, &mut scratch).map_err(|e| AppError::Solver(e.to_string()))?;
        let start = Instant::now();
        let out = simulate_steps(&op, u0, 0.0, cfg.time.dt, steps, &dirk, |_, _, _| Ok(()))?;
        let wall = start.elapsed().as_secs_f64();
        let hash = state_hash(out.solution.coeffs());
        log.line(&format!(
            "threads {n}: {wall:.3}s, {} Newton / {} GMRES iterations, state {}",
            out.stats.newton_iterations,
            out.stats.linear_iterations,
            &hash[..16]
        ))?;
        times.push((n, wall));
        hashes.push(hash);
    }
    let base = cfg.scale.threads[0];
    let rows = speedup_table(&times, base)?;
    let bitwise_identical = hashes.windows(2).all(|w| w[0] == w[1]);
    let p = dir.join("scaling.csv");
    analysis::write_scaling_csv(create(&p)?, &rows, steps)?;
    log.line(&format!("bitwise identical across thread counts: {bitwise_identical}"))?;
    log.finish()?;
    write_summary(
        &dir,
        cfg,
        "scale",
        json!({
            "elements": mesh.num_elements(),
            "dofs": space.num_dofs(),
            "steps": steps,
            "parts": parts,
            "threads": cfg.scale.threads,
            "wall_times": times.iter().map(|t| t.1).collect::<Vec<_>>(),
            "speedup": rows.iter().map(|r| r.speedup).collect::<Vec<_>>(),
            "bitwise_identical": bitwise_identical,
            "state_hashes": hashes,
        }),
    )?;
    Ok(ScaleReport { out_dir: dir, rows, steps, elements: mesh.num_elements(), bitwise_identical })
}
