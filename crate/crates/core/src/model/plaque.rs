use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{dot3, BoundaryValue, Model, ModelError};
use crate::mesh::BoundaryTag;

/// Tactic sensitivity `a x / (y + b)`, with `y` clamped at zero.
#[inline]
pub fn chi(x: f64, y: f64, a: f64, b: f64) -> f64 {
    a * x / (y.max(0.0) + b)
}

/// Exact step (`H(0) = 0`) for `eps == 0`, logistic smoothing otherwise.
#[inline]
pub fn heaviside(s: f64, eps: f64) -> f64 {
    if eps > 0.0 {
        1.0 / (1.0 + (-s / eps).exp())
    } else if s > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlaqueParams {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub d1: f64,
    pub d2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub k_ox: f64,
    /// Debris production rate; negative (diseased state).
    pub gamma: f64,
    pub f1_const: f64,
    pub chi11_0: f64,
    pub chi11_th: f64,
    pub chi13_0: f64,
    pub chi13_th: f64,
    pub chi21_0: f64,
    pub chi21_th: f64,
    pub chi2n_0: f64,
    pub chi2n_th: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma: f64,
    pub c1_star: f64,
    pub c1_starstar: f64,
    pub eps_h: f64,
}

impl Default for PlaqueParams {
    fn default() -> Self {
        PlaqueParams {
            mu1: 1e-3,
            mu2: 1e-3,
            mu3: 1e-3,
            nu1: 1e-2,
            nu2: 1e-2,
            nu3: 1e-2,
            d1: 0.05,
            d2: 0.05,
            alpha1: 0.1,
            alpha2: 0.1,
            k_ox: 0.5,
            gamma: -0.1,
            f1_const: 0.1,
            chi11_0: 5e-3,
            chi11_th: 0.1,
            chi13_0: 5e-3,
            chi13_th: 0.1,
            chi21_0: 5e-3,
            chi21_th: 0.1,
            chi2n_0: 5e-3,
            chi2n_th: 0.1,
            beta1: 1.0,
            beta2: 1.0,
            sigma: 1.0,
            c1_star: 0.05,
            c1_starstar: 0.05,
            eps_h: 0.0,
        }
    }
}

impl PlaqueParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name: &'static str, msg: &str| Err(ModelError::Param { name, msg: msg.into() });
        let all = [
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu3", self.mu3),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
            ("nu3", self.nu3),
            ("d1", self.d1),
            ("d2", self.d2),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("k_ox", self.k_ox),
            ("gamma", self.gamma),
            ("f1_const", self.f1_const),
            ("chi11_0", self.chi11_0),
            ("chi11_th", self.chi11_th),
            ("chi13_0", self.chi13_0),
            ("chi13_th", self.chi13_th),
            ("chi21_0", self.chi21_0),
            ("chi21_th", self.chi21_th),
            ("chi2n_0", self.chi2n_0),
            ("chi2n_th", self.chi2n_th),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("sigma", self.sigma),
            ("c1_star", self.c1_star),
            ("c1_starstar", self.c1_starstar),
            ("eps_h", self.eps_h),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return bad(name, "must be finite");
            }
        }
        for (name, v) in &all[..6] {
            if *v <= 0.0 {
                return bad(name, "motility must be positive");
            }
        }
        for (name, v) in [
            ("d1", self.d1),
            ("d2", self.d2),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("k_ox", self.k_ox),
            ("f1_const", self.f1_const),
            ("chi11_0", self.chi11_0),
            ("chi13_0", self.chi13_0),
            ("chi21_0", self.chi21_0),
            ("chi2n_0", self.chi2n_0),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("sigma", self.sigma),
            ("eps_h", self.eps_h),
        ] {
            if v < 0.0 {
                return bad(name, "must be non-negative");
            }
        }
        for (name, v) in [
            ("chi11_th", self.chi11_th),
            ("chi13_th", self.chi13_th),
            ("chi21_th", self.chi21_th),
            ("chi2n_th", self.chi2n_th),
            ("c1_star", self.c1_star),
            ("c1_starstar", self.c1_starstar),
        ] {
            if v <= 0.0 {
                return bad(name, "threshold must be positive");
            }
        }
        if self.gamma >= 0.0 {
            return bad("gamma", "must be negative");
        }
        Ok(())
    }

    /// Boundary normal fluxes of the six-species model, ordered
    /// `(n1, n2, n3, c1, c2, c3)`.
    pub fn boundary_flux(&self, tag: BoundaryTag, u: &[f64], out: &mut [f64; 6]) {
        *out = [0.0; 6];
        let c1 = u[3];
        if tag.is_gamma1() {
            out[0] = -self.mu1 * self.beta1 * heaviside(c1 - self.c1_star, self.eps_h);
        }
        if tag == BoundaryTag::Gamma1In {
            out[4] = -self.nu2 * self.sigma;
        }
        if tag == BoundaryTag::Gamma2 {
            out[1] = -self.mu2 * self.beta2 * heaviside(c1 - self.c1_starstar, self.eps_h);
        }
    }
}

/// Debris-dependent production `f1(n3)`.
pub type F1Fn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Six species `(n1, n2, n3, c1, c2, c3)`.
#[derive(Clone)]
pub struct PlaqueModel {
    p: PlaqueParams,
    f1: Option<F1Fn>,
}

impl std::fmt::Debug for PlaqueModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlaqueModel").field("params", &self.p).field("custom_f1", &self.f1.is_some()).finish()
    }
}

impl PlaqueModel {
    pub fn new(p: PlaqueParams) -> Result<Self, ModelError> {
        p.validate()?;
        Ok(PlaqueModel { p, f1: None })
    }

    /// Replaces the constant `f1_const` with a user function of `n3`.
    pub fn with_f1(mut self, f1: F1Fn) -> Self {
        self.f1 = Some(f1);
        self
    }

    pub fn params(&self) -> &PlaqueParams {
        &self.p
    }

    fn f1(&self, n3: f64) -> f64 {
        self.f1.as_ref().map_or(self.p.f1_const, |f| f(n3))
    }
}

impl Model for PlaqueModel {
    fn name(&self) -> &str {
        "plaque"
    }

    fn n_species(&self) -> usize {
        6
    }

    fn species_names(&self) -> Vec<String> {
        ["n1", "n2", "n3", "c1", "c2", "c3"].iter().map(|s| s.to_string()).collect()
    }

    fn has_convection(&self) -> bool {
        let p = &self.p;
        p.chi11_0 != 0.0 || p.chi13_0 != 0.0 || p.chi21_0 != 0.0 || p.chi2n_0 != 0.0
    }

    fn convective_flux(&self, u: &[f64], grad: &[[f64; 3]], out: &mut [[f64; 3]]) {
        let p = &self.p;
        let (n1, n2, c1, c3) = (u[0], u[1], u[3], u[5]);
        let a = chi(n1, c1, p.chi11_0, p.chi11_th);
        let b = chi(n1, c3, p.chi13_0, p.chi13_th);
        let c = chi(n2, c1, p.chi21_0, p.chi21_th);
        let d = chi(n2, n1, p.chi2n_0, p.chi2n_th);
        for k in 0..3 {
            out[0][k] = a * grad[3][k] + b * grad[5][k];
            out[1][k] = c * grad[3][k] - d * grad[0][k];
        }
        for row in &mut out[2..6] {
            *row = [0.0; 3];
        }
    }

    fn diffusion(&self, out: &mut [f64]) {
        let p = &self.p;
        out[..6].copy_from_slice(&[p.mu1, p.mu2, p.mu3, p.nu1, p.nu2, p.nu3]);
    }

    fn source(&self, u: &[f64], _x: &[f64; 3], _t: f64, out: &mut [f64]) {
        let p = &self.p;
        let (n1, n2, n3, c1, c2) = (u[0], u[1], u[2], u[3], u[4]);
        out[0] = -p.d1 * n1;
        out[1] = -p.d2 * n2;
        out[2] = p.d1 * n1 + p.d2 * n2 - p.gamma * n1;
        out[3] = -p.alpha1 * n1 * c1 - p.alpha2 * n2 * c1 + self.f1(n3) * n3;
        let ox = p.k_ox * c2;
        out[4] = -ox;
        out[5] = ox;
    }

    fn boundary(&self, tag: BoundaryTag, _x: &[f64; 3], _n: &[f64; 3], _t: f64, u: &[f64], out: &mut [BoundaryValue]) {
        let mut g = [0.0; 6];
        self.p.boundary_flux(tag, u, &mut g);
        for (o, v) in out.iter_mut().zip(g) {
            *o = BoundaryValue::Flux(v);
        }
    }

    fn wave_speed(&self, u: &[f64], grad: &[[f64; 3]], n: &[f64; 3]) -> f64 {
        let p = &self.p;
        let (n1, c1, c3) = (u[0], u[3], u[5]);
        let gc1 = dot3(&grad[3], n);
        let gc3 = dot3(&grad[5], n);
        let gn1 = dot3(&grad[0], n);
        let r1 = p.chi11_0 / (c1.max(0.0) + p.chi11_th) * gc1 + p.chi13_0 / (c3.max(0.0) + p.chi13_th) * gc3;
        let r2 = p.chi21_0 / (c1.max(0.0) + p.chi21_th) * gc1 - p.chi2n_0 / (n1.max(0.0) + p.chi2n_th) * gn1;
        r1.abs().max(r2.abs())
    }
}

/// Three species `(n1, n3, c1)`: immune cells, debris, chemoattractant.
#[derive(Clone)]
pub struct ReducedModel {
    p: PlaqueParams,
    f1: Option<F1Fn>,
}

impl std::fmt::Debug for ReducedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedModel").field("params", &self.p).field("custom_f1", &self.f1.is_some()).finish()
    }
}

impl ReducedModel {
    pub fn new(p: PlaqueParams) -> Result<Self, ModelError> {
        p.validate()?;
        Ok(ReducedModel { p, f1: None })
    }

    pub fn with_f1(mut self, f1: F1Fn) -> Self {
        self.f1 = Some(f1);
        self
    }

    pub fn params(&self) -> &PlaqueParams {
        &self.p
    }
}

impl Model for ReducedModel {
    fn name(&self) -> &str {
        "reduced"
    }

    fn n_species(&self) -> usize {
        3
    }

    fn species_names(&self) -> Vec<String> {
        ["n1", "n3", "c1"].iter().map(|s| s.to_string()).collect()
    }

    fn has_convection(&self) -> bool {
        self.p.chi11_0 != 0.0
    }

    fn convective_flux(&self, u: &[f64], grad: &[[f64; 3]], out: &mut [[f64; 3]]) {
        let a = chi(u[0], u[2], self.p.chi11_0, self.p.chi11_th);
        out[0] = [a * grad[2][0], a * grad[2][1], a * grad[2][2]];
        out[1] = [0.0; 3];
        out[2] = [0.0; 3];
    }

    fn diffusion(&self, out: &mut [f64]) {
        out[..3].copy_from_slice(&[self.p.mu1, self.p.mu3, self.p.nu1]);
    }

    fn source(&self, u: &[f64], _x: &[f64; 3], _t: f64, out: &mut [f64]) {
        let p = &self.p;
        let (n1, n3, c1) = (u[0], u[1], u[2]);
        let f1 = self.f1.as_ref().map_or(p.f1_const, |f| f(n3));
        out[0] = 0.0;
        out[1] = p.d1 * n1 - p.gamma * n1;
        out[2] = -p.alpha1 * n1 * c1 + f1 * n3;
    }

    fn boundary(&self, tag: BoundaryTag, _x: &[f64; 3], _n: &[f64; 3], _t: f64, u: &[f64], out: &mut [BoundaryValue]) {
        let p = &self.p;
        let n1 = if tag.is_gamma1() { -p.mu1 * p.beta1 * heaviside(u[2] - p.c1_star, p.eps_h) } else { 0.0 };
        out[0] = BoundaryValue::Flux(n1);
        out[1] = BoundaryValue::Flux(0.0);
        out[2] = BoundaryValue::Flux(0.0);
    }

    fn wave_speed(&self, u: &[f64], grad: &[[f64; 3]], n: &[f64; 3]) -> f64 {
        (self.p.chi11_0 / (u[2].max(0.0) + self.p.chi11_th) * dot3(&grad[2], n)).abs()
    }
}
