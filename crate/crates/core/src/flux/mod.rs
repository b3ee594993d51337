//! Numerical fluxes on faces: local Lax-Friedrichs for the convective part,
//! lifting-based and penalty fluxes for the diffusive part.
//!
//! Sign conventions: `n` is the unit normal of the face pointing from the
//! inside (`+`) element to the outside (`−`). All diffusive fluxes are
//! returned as their normal component `Â·n`, which for a smooth field
//! approximates `A ∇u · n` and for a jump `δ = u⁺ − u⁻` behaves like
//! `−c δ` with `c > 0`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fespace::{face_permutation, FaceTable, Space};
use crate::mesh::Mesh;
use crate::model::{dot3, Model};

#[derive(Debug, Error)]
pub enum FluxError {
    #[error("unknown flux {0:?} (expected cdg2, cdg, br2, ip or bo)")]
    Unknown(String),
    #[error("degenerate element {0}")]
    Degenerate(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FluxKind {
    Cdg2,
    Cdg,
    Br2,
    Ip,
    Bo,
}

impl FluxKind {
    pub const ALL: [FluxKind; 5] = [FluxKind::Cdg2, FluxKind::Cdg, FluxKind::Br2, FluxKind::Ip, FluxKind::Bo];

    pub fn as_str(self) -> &'static str {
        match self {
            FluxKind::Cdg2 => "cdg2",
            FluxKind::Cdg => "cdg",
            FluxKind::Br2 => "br2",
            FluxKind::Ip => "ip",
            FluxKind::Bo => "bo",
        }
    }

    /// Whether the scheme needs face liftings.
    pub fn uses_lifting(self) -> bool {
        matches!(self, FluxKind::Cdg2 | FluxKind::Cdg | FluxKind::Br2)
    }

    /// Sign of the symmetric consistency term `⦃A∇φ⦄·⟦u⟧`.
    pub fn symmetry_sign(self) -> f64 {
        if self == FluxKind::Bo {
            -1.0
        } else {
            1.0
        }
    }

    /// Whether the consistency terms are taken one-sided from `K_e^-`.
    pub fn one_sided(self) -> bool {
        self == FluxKind::Cdg
    }
}

impl fmt::Display for FluxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FluxKind {
    type Err = FluxError;

    fn from_str(s: &str) -> Result<Self, FluxError> {
        match s.to_ascii_lowercase().as_str() {
            "cdg2" => Ok(FluxKind::Cdg2),
            "cdg" => Ok(FluxKind::Cdg),
            "br2" => Ok(FluxKind::Br2),
            "ip" => Ok(FluxKind::Ip),
            "bo" => Ok(FluxKind::Bo),
            _ => Err(FluxError::Unknown(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxScheme {
    pub kind: FluxKind,
    /// Lifting stabilisation, half the number of faces per element.
    pub chi_e: f64,
    /// Interior penalty base constant; `η = η₀ max(k, 1)²`.
    pub ip_eta0: f64,
}

impl FluxScheme {
    pub fn new(kind: FluxKind, dim: usize) -> Self {
        FluxScheme { kind, chi_e: (dim + 1) as f64 / 2.0, ip_eta0: 4.0 }
    }

    pub fn with_ip_eta0(mut self, eta0: f64) -> Self {
        self.ip_eta0 = eta0;
        self
    }

    pub fn ip_eta(&self, order: usize) -> f64 {
        let k = order.max(1) as f64;
        self.ip_eta0 * k * k
    }
}

/// Inside and outside traces at one face point.
#[derive(Debug, Clone, Copy)]
pub struct TracePair<'a> {
    pub u_in: &'a [f64],
    pub u_out: &'a [f64],
    pub grad_in: &'a [[f64; 3]],
    pub grad_out: &'a [[f64; 3]],
    pub normal: [f64; 3],
}

/// Average and jump `n⁺ v⁺ + n⁻ v⁻` of a scalar trace.
pub fn average_jump(v_in: f64, v_out: f64, normal: &[f64; 3]) -> (f64, [f64; 3]) {
    let d = v_in - v_out;
    (0.5 * (v_in + v_out), [normal[0] * d, normal[1] * d, normal[2] * d])
}

/// Scratch space for [`llf`], sized for one model.
#[derive(Debug, Clone)]
pub struct LlfScratch {
    grad_avg: Vec<[f64; 3]>,
    f_in: Vec<[f64; 3]>,
    f_out: Vec<[f64; 3]>,
}

impl LlfScratch {
    pub fn new(n_species: usize) -> Self {
        LlfScratch {
            grad_avg: vec![[0.0; 3]; n_species],
            f_in: vec![[0.0; 3]; n_species],
            f_out: vec![[0.0; 3]; n_species],
        }
    }
}

/// Local Lax-Friedrichs normal flux `½(F(U⁺) + F(U⁻))·n + ½λ(U⁺ − U⁻)`.
///
/// Gradients inside `F` are the trace average; `λ` is the larger wave-speed
/// bound of the two traces. Returns `λ`.
pub fn llf(model: &dyn Model, tr: &TracePair, s: &mut LlfScratch, out: &mut [f64]) -> f64 {
    let ns = model.n_species();
    for k in 0..ns {
        for c in 0..3 {
            s.grad_avg[k][c] = 0.5 * (tr.grad_in[k][c] + tr.grad_out[k][c]);
        }
    }
    model.convective_flux(tr.u_in, &s.grad_avg, &mut s.f_in);
    model.convective_flux(tr.u_out, &s.grad_avg, &mut s.f_out);
    let lambda = model
        .wave_speed(tr.u_in, &s.grad_avg, &tr.normal)
        .max(model.wave_speed(tr.u_out, &s.grad_avg, &tr.normal));
    for k in 0..ns {
        out[k] = 0.5 * (dot3(&s.f_in[k], &tr.normal) + dot3(&s.f_out[k], &tr.normal))
            + 0.5 * lambda * (tr.u_in[k] - tr.u_out[k]);
    }
    lambda
}

/// Which adjacent element is `K_e^-`: the smaller one, ties to the lower id.
/// Returns `true` when that is the inside element.
pub fn inside_is_minus(mesh: &Mesh, face: usize) -> bool {
    let f = &mesh.faces()[face];
    let Some(out) = f.outside else { return true };
    let (a, b) = (f.inside.element, out.element);
    let (va, vb) = (mesh.geometry(a).volume, mesh.geometry(b).volume);
    let tol = 1e-12 * va.max(vb);
    if (va - vb).abs() <= tol {
        a < b
    } else {
        va < vb
    }
}

/// Coefficients of the scalar lifting `ℓ` on one element; the vector
/// lifting is `r_e = n ℓ`.
///
/// `weights[q]` are physical face quadrature weights, `delta[q*ns + s]` the
/// trace differences `u⁺ − u⁻`, `phi(q)` the basis values of this element at
/// face point `q`, and `avg_weight` the weight of this side in `⦃τ⦄`
/// (½ on interior faces, 1 on boundary faces).
#[allow(clippy::too_many_arguments)]
pub fn lift_side<'a>(
    weights: &[f64],
    delta: &[f64],
    ns: usize,
    nb: usize,
    det: f64,
    avg_weight: f64,
    phi: impl Fn(usize) -> &'a [f64],
    out: &mut [f64],
) {
    out[..ns * nb].iter_mut().for_each(|v| *v = 0.0);
    for (q, w) in weights.iter().enumerate() {
        let p = phi(q);
        for s in 0..ns {
            let wd = w * delta[q * ns + s];
            let row = &mut out[s * nb..(s + 1) * nb];
            for i in 0..nb {
                row[i] += wd * p[i];
            }
        }
    }
    let scale = -avg_weight / det.abs();
    out[..ns * nb].iter_mut().for_each(|v| *v *= scale);
}

/// Lifting of a face jump, restricted to the adjacent elements.
#[derive(Debug, Clone)]
pub struct LiftingCoeffs {
    pub normal: [f64; 3],
    pub n_species: usize,
    pub inside: (usize, Vec<f64>),
    pub outside: Option<(usize, Vec<f64>)>,
}

impl LiftingCoeffs {
    /// Coefficients of component `c` of `r_e` for species `s` on element `e`;
    /// zero off the support.
    pub fn vector_coeffs(&self, e: usize, s: usize, c: usize, nb: usize) -> Vec<f64> {
        let side = if self.inside.0 == e {
            Some(&self.inside.1)
        } else {
            self.outside.as_ref().filter(|o| o.0 == e).map(|o| &o.1)
        };
        match side {
            Some(v) => v[s * nb..(s + 1) * nb].iter().map(|x| x * self.normal[c]).collect(),
            None => vec![0.0; nb],
        }
    }
}

/// Physical weights of a face quadrature rule on face `face`.
pub fn face_weights(mesh: &Mesh, table: &FaceTable, face: usize) -> Vec<f64> {
    let scale = mesh.faces()[face].measure / table.reference_measure();
    table.rule.weights.iter().map(|w| w * scale).collect()
}

/// Lifting `r_e(⟦V⟧)` of jump data given at the face points of `table`
/// (`jump[q*ns + s] = V⁺ − V⁻`).
pub fn lifting(space: &Space, table: &FaceTable, face: usize, jump: &[f64]) -> Result<LiftingCoeffs, FluxError> {
    let mesh = space.mesh();
    let f = &mesh.faces()[face];
    let (ns, nb) = (space.n_species(), space.basis_size());
    let w = face_weights(mesh, table, face);
    let side = |elem: usize, lf: usize, avg: f64| -> Result<Vec<f64>, FluxError> {
        let det = mesh.geometry(elem).det;
        if !(det.abs() > 0.0) {
            return Err(FluxError::Degenerate(elem));
        }
        let perm = face_permutation(mesh, face, elem, lf);
        let mut out = vec![0.0; ns * nb];
        lift_side(&w, jump, ns, nb, det, avg, |q| table.phi(lf, perm, q), &mut out);
        Ok(out)
    };
    let avg = if f.outside.is_some() { 0.5 } else { 1.0 };
    let inside = (f.inside.element, side(f.inside.element, f.inside.local_face, avg)?);
    let outside = match f.outside {
        Some(o) => Some((o.element, side(o.element, o.local_face, avg)?)),
        None => None,
    };
    Ok(LiftingCoeffs { normal: f.normal, n_species: ns, inside, outside })
}

/// CDG2 normal flux `2χ_e a ℓ|_{K⁻}` for one species at one point.
#[inline]
pub fn cdg2_flux(scheme: &FluxScheme, a: f64, lift_minus: f64) -> f64 {
    2.0 * scheme.chi_e * a * lift_minus
}

/// Data an alternative diffusive flux may draw on at one point.
#[derive(Debug, Clone, Copy)]
pub struct DiffusionPoint {
    /// Diffusion coefficient of the species.
    pub a: f64,
    /// `u⁺ − u⁻`.
    pub delta: f64,
    pub lift_in: f64,
    /// Zero on boundary faces.
    pub lift_out: f64,
    pub interior: bool,
    /// Whether the inside element is `K_e^-`.
    pub inside_minus: bool,
    /// Penalty length, the smaller adjacent element diameter.
    pub h_e: f64,
    pub order: usize,
}

/// Normal diffusive flux `Â·n` for any scheme.
pub fn diffusion_flux(scheme: &FluxScheme, p: &DiffusionPoint) -> f64 {
    let minus = if p.inside_minus { p.lift_in } else { p.lift_out };
    match scheme.kind {
        FluxKind::Cdg2 | FluxKind::Cdg => cdg2_flux(scheme, p.a, minus),
        FluxKind::Br2 if p.interior => 2.0 * scheme.chi_e * p.a * 0.5 * (p.lift_in + p.lift_out),
        FluxKind::Br2 => 2.0 * scheme.chi_e * p.a * p.lift_in,
        FluxKind::Ip => -scheme.ip_eta(p.order) / p.h_e * p.a * p.delta,
        FluxKind::Bo => 0.0,
    }
}

/// Alias of [`diffusion_flux`] for the non-CDG2 schemes.
pub fn alt_diffusion_flux(scheme: &FluxScheme, p: &DiffusionPoint) -> f64 {
    diffusion_flux(scheme, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AdvDiff2d;

    #[test]
    fn average_jump_examples() {
        let n = [1.0, 0.0, 0.0];
        let (a, j) = average_jump(0.7, 0.7, &n);
        assert_eq!((a, j), (0.7, [0.0; 3]));
        let (a, j) = average_jump(1.0, 0.0, &n);
        assert_eq!((a, j), (0.5, [1.0, 0.0, 0.0]));
        // relabel sides: the normal flips with them
        let (a2, j2) = average_jump(0.0, 1.0, &[-1.0, 0.0, 0.0]);
        assert_eq!(a2, a);
        assert_eq!(j2, j);
    }

    #[test]
    fn llf_upwind_for_linear_advection() {
        let m = AdvDiff2d { velocity: [1.0, 0.0], diffusion: 1.0 };
        let g = [[0.0; 3]];
        let mut s = LlfScratch::new(1);
        let mut out = [0.0];
        let tr = TracePair { u_in: &[2.0], u_out: &[0.0], grad_in: &g, grad_out: &g, normal: [1.0, 0.0, 0.0] };
        let lam = llf(&m, &tr, &mut s, &mut out);
        assert_eq!(lam, 1.0);
        assert_eq!(out[0], 2.0);
        // consistency
        let tr = TracePair { u_in: &[0.3], u_out: &[0.3], grad_in: &g, grad_out: &g, normal: [0.6, 0.8, 0.0] };
        llf(&m, &tr, &mut s, &mut out);
        assert!((out[0] - 0.3 * 0.6).abs() < 1e-16);
        // conservation: the other side sees the negation
        let tr = TracePair { u_in: &[1.3], u_out: &[0.4], grad_in: &g, grad_out: &g, normal: [0.6, 0.8, 0.0] };
        llf(&m, &tr, &mut s, &mut out);
        let a = out[0];
        let tr = TracePair { u_in: &[0.4], u_out: &[1.3], grad_in: &g, grad_out: &g, normal: [-0.6, -0.8, 0.0] };
        llf(&m, &tr, &mut s, &mut out);
        assert_eq!(a, -out[0]);
    }

    #[derive(Debug)]
    struct Dissipative;

    impl Model for Dissipative {
        fn name(&self) -> &str {
            "dissipative"
        }
        fn n_species(&self) -> usize {
            1
        }
        fn species_names(&self) -> Vec<String> {
            vec!["u".into()]
        }
        fn has_convection(&self) -> bool {
            true
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
        fn boundary(&self, _: crate::mesh::BoundaryTag, _: &[f64; 3], _: &[f64; 3], _: f64, _: &[f64], out: &mut [crate::model::BoundaryValue]) {
            out[0] = crate::model::BoundaryValue::Flux(0.0);
        }
        fn wave_speed(&self, _u: &[f64], _g: &[[f64; 3]], _n: &[f64; 3]) -> f64 {
            1.0
        }
    }

    #[test]
    fn llf_pure_dissipation() {
        let g = [[0.0; 3]];
        let mut s = LlfScratch::new(1);
        let mut out = [0.0];
        let tr = TracePair { u_in: &[1.0], u_out: &[0.0], grad_in: &g, grad_out: &g, normal: [0.0, 1.0, 0.0] };
        assert_eq!(llf(&Dissipative, &tr, &mut s, &mut out), 1.0);
        assert_eq!(out[0], 0.5);
    }

    #[test]
    fn minus_side_tie_breaks_to_lower_id() {
        let mesh = crate::mesh::unit_square(2, None).unwrap();
        for (fid, f) in mesh.faces().iter().enumerate() {
            if let Some(o) = f.outside {
                assert_eq!(inside_is_minus(&mesh, fid), f.inside.element < o.element);
            } else {
                assert!(inside_is_minus(&mesh, fid));
            }
        }
    }

    #[test]
    fn chi_e_values() {
        assert_eq!(FluxScheme::new(FluxKind::Cdg2, 2).chi_e, 1.5);
        assert_eq!(FluxScheme::new(FluxKind::Cdg2, 3).chi_e, 2.0);
        let s = FluxScheme::new(FluxKind::Cdg2, 2);
        assert_eq!(cdg2_flux(&s, 1.0, 1.0), 3.0);
    }

    #[test]
    fn zero_jump_zero_flux() {
        for kind in FluxKind::ALL {
            let s = FluxScheme::new(kind, 2);
            let p = DiffusionPoint { a: 2.0, delta: 0.0, lift_in: 0.0, lift_out: 0.0, interior: true, inside_minus: true, h_e: 0.1, order: 2 };
            assert_eq!(diffusion_flux(&s, &p), 0.0);
        }
    }

    #[test]
    fn ip_linear_in_eta() {
        let p = DiffusionPoint { a: 1.0, delta: 0.3, lift_in: 0.0, lift_out: 0.0, interior: true, inside_minus: true, h_e: 0.5, order: 2 };
        let s1 = FluxScheme::new(FluxKind::Ip, 2).with_ip_eta0(1.0);
        let s3 = FluxScheme::new(FluxKind::Ip, 2).with_ip_eta0(3.0);
        assert!((3.0 * diffusion_flux(&s1, &p) - diffusion_flux(&s3, &p)).abs() < 1e-15);
        assert!(diffusion_flux(&s1, &p) < 0.0);
    }

    #[test]
    fn parse_kinds() {
        for k in FluxKind::ALL {
            assert_eq!(k.as_str().parse::<FluxKind>().unwrap(), k);
        }
        assert!("ldg".parse::<FluxKind>().is_err());
    }
}
