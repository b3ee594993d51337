//! Run configuration, read from TOML.
//!
//! ```toml
//! [model]
//! kind = "plaque6"          # plaque6 | reduced3 | heat-2d | adv-diff-2d | taxis-coupled-2d
//! [model.params]            # plaque parameters, defaults if omitted
//! sigma = 1.0
//!
//! [mesh]
//! builtin = "annulus-sector:171"   # or: file = "wall.msh"
//! level = 0
//!
//! [discretization]
//! order = 1
//! flux = "cdg2"
//!
//! [time]
//! dt = 0.01
//! t_end = 1.0
//!
//! [output]
//! dir = "out"
//! every = 10
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::flux::FluxKind;
use crate::model::{InitialData, PlaqueParams};

use super::AppError;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "PLAQUE_DG_OUT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub mesh: MeshSection,
    pub discretization: DiscretizationSection,
    pub time: TimeSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    pub initial: InitialData,
    pub eoc: EocSection,
    pub compare: CompareSection,
    pub scale: ScaleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kind: String,
    pub params: PlaqueParams,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { kind: "heat-2d".into(), params: PlaqueParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct MeshSection {
    /// Builtin generator spec, e.g. `unit-square:4`.
    pub builtin: Option<String>,
    /// Gmsh 2.2 ASCII file, relative to the config file.
    pub file: Option<PathBuf>,
    /// Uniform refinements applied to the source mesh.
    pub level: usize,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSection {
    pub order: usize,
    pub flux: String,
    pub ip_eta0: f64,
    pub volume_degree: Option<usize>,
    pub surface_degree: Option<usize>,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        DiscretizationSection { order: 1, flux: "cdg2".into(), ip_eta0: 4.0, volume_degree: None, surface_degree: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    /// DIRK order; defaults to `min(k + 1, 4)`.
    pub tableau_order: Option<usize>,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { dt: 0.01, t_end: 0.1, tableau_order: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub newton_rtol: f64,
    pub newton_atol: f64,
    pub newton_max_iters: usize,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
    pub gmres_rtol: f64,
    pub threads: usize,
    /// Mesh parts; defaults to `threads`.
    pub parts: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            newton_rtol: 1e-8,
            newton_atol: 1e-12,
            newton_max_iters: 25,
            gmres_restart: 30,
            gmres_max_iters: 1000,
            gmres_rtol: 1e-6,
            threads: 1,
            parts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Snapshot cadence in steps; 0 writes only the initial and final states.
    pub every: usize,
    /// Recorded in summaries. The solver is deterministic and draws no
    /// random numbers.
    pub seed: u64,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EocSection {
    pub orders: Vec<usize>,
    /// Number of levels with error rows.
    pub levels: usize,
    /// Step on level 0; halved per level. Defaults to `time.dt`.
    pub dt0: Option<f64>,
    /// `exact` or `fine`; `auto` picks `exact` when the model has one.
    pub reference: String,
    /// Order of a `fine` reference; defaults to the largest order + 1 (at most 4).
    pub reference_order: Option<usize>,
}

impl Default for EocSection {
    fn default() -> Self {
        EocSection { orders: vec![1, 2, 3], levels: 3, dt0: None, reference: "auto".into(), reference_order: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub fluxes: Vec<String>,
    pub levels: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { fluxes: FluxKind::ALL.iter().map(|f| f.as_str().to_string()).collect(), levels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScaleSection {
    pub threads: Vec<usize>,
    pub steps: usize,
    /// Mesh parts, fixed across thread counts so results can be compared
    /// bitwise; defaults to the largest thread count.
    pub parts: Option<usize>,
}

impl Default for ScaleSection {
    fn default() -> Self {
        ScaleSection { threads: vec![1, 2, 4], steps: 10, parts: None }
    }
}

const MODEL_KINDS: [&str; 5] = ["plaque6", "reduced3", "heat-2d", "adv-diff-2d", "taxis-coupled-2d"];

fn cfg_err(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

impl RunConfig {
    /// Parses, resolves relative paths against `base_dir` and normalizes.
    pub fn from_toml(text: &str, base_dir: Option<&Path>) -> Result<Self, AppError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        if let (Some(base), Some(f)) = (base_dir, cfg.mesh.file.as_mut()) {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        cfg.normalize()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the normalized TOML text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Canonical spelling of names, defaults filled in, and validation.
    pub fn normalize(&mut self) -> Result<(), AppError> {
        self.model.kind = self.model.kind.trim().to_ascii_lowercase();
        if !MODEL_KINDS.contains(&self.model.kind.as_str()) {
            return Err(cfg_err(format!("unknown model kind `{}` (expected one of {})", self.model.kind, MODEL_KINDS.join(", "))));
        }
        self.model.params.validate().map_err(|e| cfg_err(e.to_string()))?;

        match (&self.mesh.builtin, &self.mesh.file) {
            (Some(_), Some(_)) => return Err(cfg_err("mesh: give either `builtin` or `file`, not both")),
            (None, None) => {
                let default = match self.model.kind.as_str() {
                    "plaque6" => "annulus-sector:171",
                    "reduced3" => "unit-cube:4",
                    _ => "unit-square:4",
                };
                self.mesh.builtin = Some(default.into());
            }
            (None, Some(f)) => {
                if !f.is_file() {
                    return Err(cfg_err(format!("mesh file {} does not exist", f.display())));
                }
            }
            (Some(b), None) => self.mesh.builtin = Some(b.trim().to_ascii_lowercase()),
        }

        let flux = parse_flux(&self.discretization.flux)?;
        self.discretization.flux = flux.as_str().into();
        let k = self.discretization.order;
        if k > crate::fespace::MAX_ORDER {
            return Err(cfg_err(format!("order {k} above the supported maximum {}", crate::fespace::MAX_ORDER)));
        }
        if !(self.discretization.ip_eta0 > 0.0) {
            return Err(cfg_err("discretization.ip_eta0 must be positive"));
        }

        if !(self.time.dt > 0.0) || !(self.time.t_end >= 0.0) {
            return Err(cfg_err("time: need dt > 0 and t_end >= 0"));
        }
        if let Some(p) = self.time.tableau_order {
            if !(2..=4).contains(&p) {
                return Err(cfg_err(format!("time.tableau_order {p} not in 2..=4")));
            }
        }

        let s = &self.solver;
        if !(s.newton_rtol > 0.0 && s.newton_atol > 0.0 && s.gmres_rtol > 0.0) {
            return Err(cfg_err("solver tolerances must be positive"));
        }
        if s.gmres_restart == 0 || s.threads == 0 || s.newton_max_iters == 0 || s.gmres_max_iters == 0 {
            return Err(cfg_err("solver: restart, threads and iteration limits must be at least 1"));
        }
        if s.parts == Some(0) {
            return Err(cfg_err("solver.parts must be at least 1"));
        }

        if self.output.dir.is_none() {
            self.output.dir = Some(std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| "out".into()));
        }

        self.eoc.orders.sort_unstable();
        self.eoc.orders.dedup();
        if self.eoc.orders.is_empty() || self.eoc.orders.iter().any(|&o| o > crate::fespace::MAX_ORDER) {
            return Err(cfg_err("eoc.orders must be a non-empty list of orders up to 4"));
        }
        if self.eoc.levels == 0 {
            return Err(cfg_err("eoc.levels must be at least 1"));
        }
        self.eoc.reference = self.eoc.reference.trim().to_ascii_lowercase();
        if !["auto", "exact", "fine"].contains(&self.eoc.reference.as_str()) {
            return Err(cfg_err(format!("eoc.reference `{}` is not auto, exact or fine", self.eoc.reference)));
        }
        if self.eoc.dt0.is_none() {
            self.eoc.dt0 = Some(self.time.dt);
        }

        let mut fluxes = Vec::with_capacity(self.compare.fluxes.len());
        for f in &self.compare.fluxes {
            fluxes.push(parse_flux(f)?.as_str().to_string());
        }
        if fluxes.is_empty() || self.compare.levels == 0 {
            return Err(cfg_err("compare needs at least one flux and one level"));
        }
        self.compare.fluxes = fluxes;

        self.scale.threads.sort_unstable();
        self.scale.threads.dedup();
        if self.scale.threads.is_empty() || self.scale.threads.contains(&0) || self.scale.steps == 0 {
            return Err(cfg_err("scale needs positive thread counts and steps"));
        }
        if self.scale.parts.is_none() {
            self.scale.parts = self.scale.threads.last().copied();
        }
        Ok(())
    }

    pub fn flux(&self) -> FluxKind {
        parse_flux(&self.discretization.flux).expect("normalized")
    }

    pub fn out_dir(&self) -> &Path {
        self.output.dir.as_deref().expect("normalized")
    }
}

pub fn parse_flux(name: &str) -> Result<FluxKind, AppError> {
    name.trim().parse().map_err(|e: crate::flux::FluxError| cfg_err(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_normalize() {
        let cfg = RunConfig::from_toml("", None).unwrap();
        assert_eq!(cfg.mesh.builtin.as_deref(), Some("unit-square:4"));
        assert_eq!(cfg.discretization.flux, "cdg2");
        assert_eq!(cfg.scale.parts, Some(4));
    }

    #[test]
    fn round_trip_is_stable() {
        let text = r#"
            [model]
            kind = "Plaque6"
            [model.params]
            sigma = 2.0
            [discretization]
            flux = "BR2"
            order = 2
            [output]
            dir = "x"
            [[initial.bumps]]
            species = "n1"
            amplitude = 1.0
            center = [0.0, 0.5, 0.0]
            width = 0.2
        "#;
        let a = RunConfig::from_toml(text, None).unwrap();
        assert_eq!(a.model.kind, "plaque6");
        assert_eq!(a.discretization.flux, "br2");
        let b = RunConfig::from_toml(&a.to_toml(), None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.to_toml(), b.to_toml());
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "[model]\nkind = \"nope\"",
            "[discretization]\nflux = \"xyz\"",
            "[time]\ndt = -1.0",
            "[mesh]\nfile = \"/does/not/exist.msh\"",
            "[mesh]\nbuiltin = \"unit-square:2\"\nfile = \"a.msh\"",
            "bogus = 1",
            "[model.params]\ngamma = 0.5",
        ] {
            assert!(matches!(RunConfig::from_toml(bad, None), Err(AppError::Config(_))), "{bad}");
        }
    }
}
