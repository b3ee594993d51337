//! PDE systems in the form `∂t U = −∇·(F(U, ∇U) − A ∇U) + S(U)`.
//!
//! `A` is diagonal and constant. Boundary conditions are either a
//! prescribed normal flux or a prescribed exterior trace (Dirichlet).

mod initial;
mod manufactured;
mod plaque;

use thiserror::Error;

use crate::mesh::BoundaryTag;

pub use initial::{Bump, InitialData, ResolvedInitial};
pub use manufactured::{AdvDiff2d, Heat2d, ManufacturedKind, TaxisCoupled2d};
pub use plaque::{chi, heaviside, F1Fn, PlaqueModel, PlaqueParams, ReducedModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter {name}: {msg}")]
    Param { name: &'static str, msg: String },
    #[error("unknown model {0:?}")]
    Unknown(String),
}

/// Boundary prescription for one species on one boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryValue {
    /// Outward normal component of the total flux `F − A∇U`.
    ///
    /// The physical conditions are written as `a ∂_n u = g` with `n` pointing
    /// into the tissue, which equals the outward total flux when taxis is
    /// switched off on the boundary. Negative values mean inflow.
    Flux(f64),
    /// Exterior trace value.
    Dirichlet(f64),
}

pub trait Model: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;

    fn n_species(&self) -> usize;

    fn species_names(&self) -> Vec<String>;

    /// Whether `F` is non-zero anywhere; lets the operator skip convective work.
    fn has_convection(&self) -> bool;

    /// Rows of `F(U, ∇U)`, one per species.
    fn convective_flux(&self, u: &[f64], grad: &[[f64; 3]], out: &mut [[f64; 3]]);

    /// Diagonal of `A`.
    fn diffusion(&self, out: &mut [f64]);

    fn source(&self, u: &[f64], x: &[f64; 3], t: f64, out: &mut [f64]);

    /// Boundary data on a face with outward unit `normal`; `u` is the inside trace.
    fn boundary(&self, tag: BoundaryTag, x: &[f64; 3], normal: &[f64; 3], t: f64, u: &[f64], out: &mut [BoundaryValue]);

    /// Bound on the spectral radius of `n · ∂F/∂U` at one trace.
    fn wave_speed(&self, u: &[f64], grad: &[[f64; 3]], normal: &[f64; 3]) -> f64;

    /// Exact solution, when known. Returns `false` otherwise.
    fn exact(&self, _x: &[f64; 3], _t: f64, _out: &mut [f64]) -> bool {
        false
    }

    /// Whether `A` and `F`, `S` make the semi-discrete operator affine in `U`.
    fn is_linear(&self) -> bool {
        false
    }
}

#[inline]
pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
