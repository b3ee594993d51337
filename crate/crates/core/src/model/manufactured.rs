//! Problems with closed-form solutions, used for convergence studies.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use super::{chi, dot3, BoundaryValue, Model, ModelError};
use crate::mesh::BoundaryTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedKind {
    Heat2d,
    AdvDiff2d,
    TaxisCoupled2d,
}

impl FromStr for ManufacturedKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "heat-2d" => Ok(Self::Heat2d),
            "adv-diff-2d" => Ok(Self::AdvDiff2d),
            "taxis-coupled-2d" => Ok(Self::TaxisCoupled2d),
            other => Err(ModelError::Unknown(other.to_string())),
        }
    }
}

impl ManufacturedKind {
    pub fn build(self) -> Arc<dyn Model> {
        match self {
            Self::Heat2d => Arc::new(Heat2d),
            Self::AdvDiff2d => Arc::new(AdvDiff2d::default()),
            Self::TaxisCoupled2d => Arc::new(TaxisCoupled2d::default()),
        }
    }
}

/// `u_t = Δu` with `u = exp(−2π²t) sin(πx) sin(πy)` and Dirichlet data.
#[derive(Debug, Clone, Copy, Default)]
pub struct Heat2d;

impl Model for Heat2d {
    fn name(&self) -> &str {
        "heat-2d"
    }
    fn n_species(&self) -> usize {
        1
    }
    fn species_names(&self) -> Vec<String> {
        vec!["u".into()]
    }
    fn has_convection(&self) -> bool {
        false
    }
    fn convective_flux(&self, _u: &[f64], _g: &[[f64; 3]], out: &mut [[f64; 3]]) {
        out[0] = [0.0; 3];
    }
    fn diffusion(&self, out: &mut [f64]) {
        out[0] = 1.0;
    }
    fn source(&self, _u: &[f64], _x: &[f64; 3], _t: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn boundary(&self, _tag: BoundaryTag, x: &[f64; 3], _n: &[f64; 3], t: f64, _u: &[f64], out: &mut [BoundaryValue]) {
        let mut v = [0.0];
        self.exact(x, t, &mut v);
        out[0] = BoundaryValue::Dirichlet(v[0]);
    }
    fn wave_speed(&self, _u: &[f64], _g: &[[f64; 3]], _n: &[f64; 3]) -> f64 {
        0.0
    }
    fn exact(&self, x: &[f64; 3], t: f64, out: &mut [f64]) -> bool {
        out[0] = (-2.0 * PI * PI * t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin();
        true
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `u_t + v·∇u = a Δu`; the heat solution translated with velocity `v`.
#[derive(Debug, Clone, Copy)]
pub struct AdvDiff2d {
    pub velocity: [f64; 2],
    pub diffusion: f64,
}

impl Default for AdvDiff2d {
    fn default() -> Self {
        AdvDiff2d { velocity: [0.5, 0.25], diffusion: 0.1 }
    }
}

impl Model for AdvDiff2d {
    fn name(&self) -> &str {
        "adv-diff-2d"
    }
    fn n_species(&self) -> usize {
        1
    }
    fn species_names(&self) -> Vec<String> {
        vec!["u".into()]
    }
    fn has_convection(&self) -> bool {
        self.velocity != [0.0, 0.0]
    }
    fn convective_flux(&self, u: &[f64], _g: &[[f64; 3]], out: &mut [[f64; 3]]) {
        out[0] = [self.velocity[0] * u[0], self.velocity[1] * u[0], 0.0];
    }
    fn diffusion(&self, out: &mut [f64]) {
        out[0] = self.diffusion;
    }
    fn source(&self, _u: &[f64], _x: &[f64; 3], _t: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn boundary(&self, _tag: BoundaryTag, x: &[f64; 3], _n: &[f64; 3], t: f64, _u: &[f64], out: &mut [BoundaryValue]) {
        let mut v = [0.0];
        self.exact(x, t, &mut v);
        out[0] = BoundaryValue::Dirichlet(v[0]);
    }
    fn wave_speed(&self, _u: &[f64], _g: &[[f64; 3]], n: &[f64; 3]) -> f64 {
        (self.velocity[0] * n[0] + self.velocity[1] * n[1]).abs()
    }
    fn exact(&self, x: &[f64; 3], t: f64, out: &mut [f64]) -> bool {
        let [vx, vy] = self.velocity;
        out[0] = (-2.0 * PI * PI * self.diffusion * t).exp()
            * (PI * (x[0] - vx * t)).sin()
            * (PI * (x[1] - vy * t)).sin();
        true
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// Cells `n` drifting up the gradient of an attractant `c`:
/// `n_t = ∇·(μ∇n − χ(n, c)∇c) + f_n`, `c_t = ν Δc + f_c`.
///
/// The exact pair is
/// `n = 1 + ½ e^{−t} cos(πx) cos(πy)`, `c = 1 + 0.3 e^{−t} cos(2πx) cos(πy)`,
/// whose normal derivatives vanish on the unit square, so both Dirichlet and
/// no-flow boundaries are consistent with it.
#[derive(Debug, Clone, Copy)]
pub struct TaxisCoupled2d {
    pub mu: f64,
    pub nu: f64,
    pub chi0: f64,
    pub chi_th: f64,
    /// Include the manufactured forcing; without it the source is zero.
    pub forcing: bool,
    /// Use no-flow instead of Dirichlet boundaries.
    pub no_flow: bool,
}

impl Default for TaxisCoupled2d {
    fn default() -> Self {
        TaxisCoupled2d { mu: 0.5, nu: 1.0, chi0: 0.2, chi_th: 0.5, forcing: true, no_flow: false }
    }
}

impl TaxisCoupled2d {
    /// Values, gradients, Laplacians and time derivatives of the exact pair.
    #[allow(clippy::type_complexity)]
    fn fields(&self, x: &[f64; 3], t: f64) -> ([f64; 2], [[f64; 3]; 2], [f64; 2], [f64; 2]) {
        let e = (-t).exp();
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
        let n = 1.0 + 0.5 * e * cx * cy;
        let c = 1.0 + 0.3 * e * c2x * cy;
        let gn = [-0.5 * PI * e * sx * cy, -0.5 * PI * e * cx * sy, 0.0];
        let gc = [-0.6 * PI * e * s2x * cy, -0.3 * PI * e * c2x * sy, 0.0];
        let ln = -PI * PI * e * cx * cy;
        let lc = -1.5 * PI * PI * e * c2x * cy;
        ([n, c], [gn, gc], [ln, lc], [-0.5 * e * cx * cy, -0.3 * e * c2x * cy])
    }
}

impl Model for TaxisCoupled2d {
    fn name(&self) -> &str {
        "taxis-coupled-2d"
    }
    fn n_species(&self) -> usize {
        2
    }
    fn species_names(&self) -> Vec<String> {
        vec!["n".into(), "c".into()]
    }
    fn has_convection(&self) -> bool {
        self.chi0 != 0.0
    }
    fn convective_flux(&self, u: &[f64], g: &[[f64; 3]], out: &mut [[f64; 3]]) {
        let k = chi(u[0], u[1], self.chi0, self.chi_th);
        out[0] = [k * g[1][0], k * g[1][1], k * g[1][2]];
        out[1] = [0.0; 3];
    }
    fn diffusion(&self, out: &mut [f64]) {
        out[0] = self.mu;
        out[1] = self.nu;
    }
    fn source(&self, _u: &[f64], x: &[f64; 3], t: f64, out: &mut [f64]) {
        if !self.forcing {
            out[0] = 0.0;
            out[1] = 0.0;
            return;
        }
        let ([n, c], [gn, gc], [ln, lc], [nt, ct]) = self.fields(x, t);
        let den = c + self.chi_th;
        let div_taxis =
            self.chi0 * (dot3(&gn, &gc) / den - n * dot3(&gc, &gc) / (den * den) + n * lc / den);
        out[0] = nt + div_taxis - self.mu * ln;
        out[1] = ct - self.nu * lc;
    }
    fn boundary(&self, _tag: BoundaryTag, x: &[f64; 3], _n: &[f64; 3], t: f64, _u: &[f64], out: &mut [BoundaryValue]) {
        if self.no_flow {
            out[0] = BoundaryValue::Flux(0.0);
            out[1] = BoundaryValue::Flux(0.0);
        } else {
            let mut v = [0.0; 2];
            self.exact(x, t, &mut v);
            out[0] = BoundaryValue::Dirichlet(v[0]);
            out[1] = BoundaryValue::Dirichlet(v[1]);
        }
    }
    fn wave_speed(&self, u: &[f64], g: &[[f64; 3]], n: &[f64; 3]) -> f64 {
        (self.chi0 / (u[1].max(0.0) + self.chi_th) * dot3(&g[1], n)).abs()
    }
    fn exact(&self, x: &[f64; 3], t: f64, out: &mut [f64]) -> bool {
        let (v, ..) = self.fields(x, t);
        out[..2].copy_from_slice(&v);
        true
    }
}
