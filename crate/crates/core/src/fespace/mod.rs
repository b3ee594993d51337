//! Discontinuous piecewise-polynomial spaces on simplicial meshes.

mod basis;
pub mod quadrature;

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::{local_face_vertices, reference_vertex, Mesh};

pub use basis::{basis_size, BasisSet, MAX_ORDER};
pub use quadrature::{quad_rule, QuadDomain, QuadError, QuadRule};

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("unsupported polynomial order {0} (max {MAX_ORDER})")]
    Order(usize),
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("coefficient vector has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("degenerate element {0}")]
    Degenerate(usize),
}

/// `V_h`: `n_spec` copies of discontinuous `P_k` on a mesh.
#[derive(Debug)]
pub struct Space {
    mesh: Arc<Mesh>,
    n_species: usize,
    basis: BasisSet,
}

impl Space {
    pub fn new(mesh: Arc<Mesh>, order: usize, n_species: usize) -> Result<Arc<Self>, SpaceError> {
        let basis = BasisSet::new(mesh.dim(), order)?;
        Ok(Arc::new(Space { mesh, n_species, basis }))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn n_species(&self) -> usize {
        self.n_species
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn basis_size(&self) -> usize {
        self.basis.size()
    }

    /// Coefficients per element (`n_species * basis_size`).
    pub fn block_size(&self) -> usize {
        self.n_species * self.basis.size()
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_elements() * self.block_size()
    }

    #[inline]
    pub fn index(&self, element: usize, species: usize, basis_fn: usize) -> usize {
        (element * self.n_species + species) * self.basis.size() + basis_fn
    }

    pub fn zeros(self: &Arc<Self>) -> DiscreteFunction {
        DiscreteFunction { space: Arc::clone(self), coeffs: vec![0.0; self.num_dofs()] }
    }

    pub fn function(self: &Arc<Self>, coeffs: Vec<f64>) -> Result<DiscreteFunction, SpaceError> {
        if coeffs.len() != self.num_dofs() {
            return Err(SpaceError::Length { got: coeffs.len(), expected: self.num_dofs() });
        }
        Ok(DiscreteFunction { space: Arc::clone(self), coeffs })
    }

    /// Elementwise L² projection of `f(x, out)` (one value per species),
    /// integrated with a rule of degree `2k + 4`.
    pub fn l2_project<F>(self: &Arc<Self>, f: F) -> DiscreteFunction
    where
        F: Fn(&[f64; 3], &mut [f64]) + Sync,
    {
        let rule = quad_rule(QuadDomain::Simplex(self.mesh.dim()), 2 * self.order() + 4)
            .expect("degree within supported range");
        let table = VolumeTable::new(&self.basis, rule);
        let nb = self.basis_size();
        let ns = self.n_species;
        let mut coeffs = vec![0.0; self.num_dofs()];
        coeffs.par_chunks_mut(self.block_size()).enumerate().for_each(|(e, block)| {
            let geo = self.mesh.geometry(e);
            let mut vals = vec![0.0; ns];
            for q in 0..table.len() {
                let x = geo.to_physical(&table.rule.points[q]);
                f(&x, &mut vals);
                let w = table.rule.weights[q];
                let phi = table.phi(q);
                for s in 0..ns {
                    let ws = w * vals[s];
                    for i in 0..nb {
                        block[s * nb + i] += ws * phi[i];
                    }
                }
            }
        });
        DiscreteFunction { space: Arc::clone(self), coeffs }
    }

    /// In-place `M^{-1} r`: the mass matrix is diagonal with entry `|det J_K|`.
    pub fn apply_inverse_mass(&self, r: &mut [f64]) -> Result<(), SpaceError> {
        self.check_len(r.len())?;
        let mesh = &self.mesh;
        r.par_chunks_mut(self.block_size()).enumerate().try_for_each(|(e, block)| {
            let det = mesh.geometry(e).det.abs();
            if !(det > 0.0) {
                return Err(SpaceError::Degenerate(e));
            }
            let inv = 1.0 / det;
            block.iter_mut().for_each(|x| *x *= inv);
            Ok(())
        })
    }

    /// In-place `M u`.
    pub fn apply_mass(&self, u: &mut [f64]) -> Result<(), SpaceError> {
        self.check_len(u.len())?;
        let mesh = &self.mesh;
        u.par_chunks_mut(self.block_size()).enumerate().for_each(|(e, block)| {
            let det = mesh.geometry(e).det.abs();
            block.iter_mut().for_each(|x| *x *= det);
        });
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<(), SpaceError> {
        if n != self.num_dofs() {
            return Err(SpaceError::Length { got: n, expected: self.num_dofs() });
        }
        Ok(())
    }
}

/// Per-element, per-species modal coefficients over a [`Space`].
#[derive(Debug, Clone)]
pub struct DiscreteFunction {
    space: Arc<Space>,
    coeffs: Vec<f64>,
}

impl DiscreteFunction {
    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Values of all species at reference point `xi` of element `e`.
    pub fn eval_reference(&self, e: usize, xi: &[f64; 3], out: &mut [f64]) {
        let nb = self.space.basis_size();
        let mut phi = [0.0; 35];
        self.space.basis.eval(xi, &mut phi[..nb]);
        let block = &self.coeffs[e * self.space.block_size()..(e + 1) * self.space.block_size()];
        for (s, o) in out[..self.space.n_species].iter_mut().enumerate() {
            *o = block[s * nb..(s + 1) * nb].iter().zip(&phi[..nb]).map(|(c, p)| c * p).sum();
        }
    }

    /// Values of all species at physical point `x`, which must lie in element `e`.
    pub fn eval_physical(&self, e: usize, x: &[f64; 3], out: &mut [f64]) {
        let xi = self.space.mesh.geometry(e).to_reference(x);
        self.eval_reference(e, &xi, out);
    }

    /// Physical gradients of all species at reference point `xi` of element `e`.
    pub fn grad_reference(&self, e: usize, xi: &[f64; 3], out: &mut [[f64; 3]]) {
        let nb = self.space.basis_size();
        let mut dphi = [[0.0; 3]; 35];
        self.space.basis.eval_grad(xi, &mut dphi[..nb]);
        let geo = self.space.mesh.geometry(e);
        let block = &self.coeffs[e * self.space.block_size()..(e + 1) * self.space.block_size()];
        for (s, o) in out[..self.space.n_species].iter_mut().enumerate() {
            let mut g = [0.0; 3];
            for i in 0..nb {
                let c = block[s * nb + i];
                for d in 0..3 {
                    g[d] += c * dphi[i][d];
                }
            }
            *o = geo.grad_to_physical(&g);
        }
    }

    /// Integral of each species over the domain.
    pub fn totals(&self) -> Vec<f64> {
        let ns = self.space.n_species;
        let c0 = self.space.basis.constant_value();
        let rv = crate::mesh::reference_volume(self.space.mesh.dim());
        let mut tot = vec![0.0; ns];
        for e in 0..self.space.mesh.num_elements() {
            let det = self.space.mesh.geometry(e).det.abs();
            for (s, t) in tot.iter_mut().enumerate() {
                // integral of phi_0 over the reference simplex is c0 * |ref|
                *t += det * c0 * rv * self.coeffs[self.space.index(e, s, 0)];
            }
        }
        tot
    }

    /// Mean value of each species on element `e`.
    pub fn cell_average(&self, e: usize, out: &mut [f64]) {
        let c0 = self.space.basis.constant_value();
        for (s, o) in out[..self.space.n_species].iter_mut().enumerate() {
            *o = self.coeffs[self.space.index(e, s, 0)] * c0;
        }
    }
}

/// Basis values and reference gradients tabulated at volume quadrature points.
#[derive(Debug, Clone)]
pub struct VolumeTable {
    pub rule: QuadRule,
    nb: usize,
    phi: Vec<f64>,
    dphi: Vec<[f64; 3]>,
}

impl VolumeTable {
    pub fn new(basis: &BasisSet, rule: QuadRule) -> Self {
        let nb = basis.size();
        let mut phi = vec![0.0; rule.len() * nb];
        let mut dphi = vec![[0.0; 3]; rule.len() * nb];
        for (q, p) in rule.points.iter().enumerate() {
            basis.eval(p, &mut phi[q * nb..(q + 1) * nb]);
            basis.eval_grad(p, &mut dphi[q * nb..(q + 1) * nb]);
        }
        VolumeTable { rule, nb, phi, dphi }
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    #[inline]
    pub fn phi(&self, q: usize) -> &[f64] {
        &self.phi[q * self.nb..(q + 1) * self.nb]
    }

    #[inline]
    pub fn dphi(&self, q: usize) -> &[[f64; 3]] {
        &self.dphi[q * self.nb..(q + 1) * self.nb]
    }
}

/// All permutations of `0..n` for `n` in {2, 3}, in lexicographic order.
pub fn face_permutations(dim: usize) -> Vec<[usize; 3]> {
    if dim == 2 {
        vec![[0, 1, usize::MAX], [1, 0, usize::MAX]]
    } else {
        vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
    }
}

/// Index into [`face_permutations`] describing how the face vertex order
/// maps onto the local face of `side_element`: face vertex `j` sits at
/// position `perm[j]` of that element's local face.
pub fn face_permutation(mesh: &Mesh, face: usize, side_element: usize, local_face: usize) -> usize {
    let dim = mesh.dim();
    let f = &mesh.faces()[face];
    let cell = mesh.element(side_element);
    let lv = local_face_vertices(dim, local_face);
    let mut perm = [usize::MAX; 3];
    for j in 0..dim {
        perm[j] = (0..dim).position(|m| cell[lv[m]] == f.vertices[j]).expect("face vertex in element");
    }
    face_permutations(dim).iter().position(|p| p[..dim] == perm[..dim]).expect("valid permutation")
}

/// Basis values and reference gradients at face quadrature points for every
/// (local face, vertex permutation) combination of the reference simplex.
#[derive(Debug, Clone)]
pub struct FaceTable {
    pub rule: QuadRule,
    dim: usize,
    nb: usize,
    nperm: usize,
    /// Reference coordinates per (local face, perm, point).
    points: Vec<[f64; 3]>,
    phi: Vec<f64>,
    dphi: Vec<[f64; 3]>,
}

impl FaceTable {
    pub fn new(basis: &BasisSet, rule: QuadRule) -> Self {
        let dim = basis.dim();
        let nb = basis.size();
        let perms = face_permutations(dim);
        let nperm = perms.len();
        let nq = rule.len();
        let total = (dim + 1) * nperm * nq;
        let mut points = Vec::with_capacity(total);
        let mut phi = vec![0.0; total * nb];
        let mut dphi = vec![[0.0; 3]; total * nb];
        for f in 0..=dim {
            let lv = local_face_vertices(dim, f);
            for perm in &perms {
                for p in &rule.points {
                    let bary = face_barycentric(dim, p);
                    let mut xi = [0.0; 3];
                    for j in 0..dim {
                        let rv = reference_vertex(dim, lv[perm[j]]);
                        for c in 0..3 {
                            xi[c] += bary[j] * rv[c];
                        }
                    }
                    let idx = points.len();
                    basis.eval(&xi, &mut phi[idx * nb..(idx + 1) * nb]);
                    basis.eval_grad(&xi, &mut dphi[idx * nb..(idx + 1) * nb]);
                    points.push(xi);
                }
            }
        }
        FaceTable { rule, dim, nb, nperm, points, phi, dphi }
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    /// Measure of the reference face domain (1 for a segment, 1/2 for a triangle).
    pub fn reference_measure(&self) -> f64 {
        if self.dim == 2 {
            1.0
        } else {
            0.5
        }
    }

    #[inline]
    fn offset(&self, local_face: usize, perm: usize) -> usize {
        (local_face * self.nperm + perm) * self.rule.len()
    }

    #[inline]
    pub fn point(&self, local_face: usize, perm: usize, q: usize) -> &[f64; 3] {
        &self.points[self.offset(local_face, perm) + q]
    }

    #[inline]
    pub fn phi(&self, local_face: usize, perm: usize, q: usize) -> &[f64] {
        let i = self.offset(local_face, perm) + q;
        &self.phi[i * self.nb..(i + 1) * self.nb]
    }

    #[inline]
    pub fn dphi(&self, local_face: usize, perm: usize, q: usize) -> &[[f64; 3]] {
        let i = self.offset(local_face, perm) + q;
        &self.dphi[i * self.nb..(i + 1) * self.nb]
    }
}

/// Barycentric weights over face vertices for a point of the reference face.
pub fn face_barycentric(dim: usize, p: &[f64; 3]) -> [f64; 3] {
    if dim == 2 {
        [1.0 - p[0], p[0], 0.0]
    } else {
        [1.0 - p[0] - p[1], p[0], p[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{refine_uniform, unit_cube, unit_square, BoundaryMap};

    fn single_triangle(scale: f64) -> Arc<Mesh> {
        Arc::new(
            Mesh::new(
                2,
                vec![[0.0, 0.0, 0.0], [scale, 0.0, 0.0], [0.0, scale, 0.0]],
                vec![vec![0, 1, 2]],
                &BoundaryMap::new(),
            )
            .unwrap(),
        )
    }

    fn l2_err(u: &DiscreteFunction, exact: impl Fn(&[f64; 3]) -> f64) -> f64 {
        let sp = u.space();
        let rule = quad_rule(QuadDomain::Simplex(sp.mesh().dim()), 2 * sp.order() + 6).unwrap();
        let mut acc = 0.0;
        let mut v = [0.0];
        for e in 0..sp.mesh().num_elements() {
            let g = sp.mesh().geometry(e);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                u.eval_reference(e, p, &mut v);
                let d = v[0] - exact(&g.to_physical(p));
                acc += w * g.det.abs() * d * d;
            }
        }
        acc.sqrt()
    }

    #[test]
    fn constant_projection_only_mean_mode() {
        let mesh = Arc::new(unit_square(3, None).unwrap());
        for k in 0..=3 {
            let sp = Space::new(mesh.clone(), k, 2).unwrap();
            let u = sp.l2_project(|_, out| {
                out[0] = 1.0;
                out[1] = -2.0;
            });
            for e in 0..mesh.num_elements() {
                for s in 0..2 {
                    for i in 1..sp.basis_size() {
                        assert!(u.coeffs()[sp.index(e, s, i)].abs() < 1e-14);
                    }
                }
            }
            let t = u.totals();
            assert!((t[0] - 1.0).abs() < 1e-13 && (t[1] + 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_reproduced() {
        let mesh = Arc::new(unit_square(2, None).unwrap());
        for k in 1..=3 {
            let sp = Space::new(mesh.clone(), k, 1).unwrap();
            let f = |x: &[f64; 3]| 0.3 + 2.0 * x[0] - 1.5 * x[1];
            let u = sp.l2_project(|x, out| out[0] = f(x));
            assert!(l2_err(&u, f) < 1e-11);
        }
    }

    #[test]
    fn projection_order_sine() {
        let base = unit_square(4, None).unwrap();
        let m1 = refine_uniform(&base).unwrap();
        let m2 = refine_uniform(&m1).unwrap();
        let f = |x: &[f64; 3]| (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin();
        let err = |m: Mesh| {
            let sp = Space::new(Arc::new(m), 2, 1).unwrap();
            l2_err(&sp.l2_project(|x, o| o[0] = f(x)), f)
        };
        let (e1, e2) = (err(m1), err(m2));
        let ratio = e1 / e2;
        assert!((ratio - 8.0).abs() < 0.15 * 8.0, "ratio {ratio}");
    }

    #[test]
    fn projection_idempotent() {
        let mesh = Arc::new(unit_cube(1).unwrap());
        let sp = Space::new(mesh, 2, 1).unwrap();
        let u = sp.l2_project(|x, o| o[0] = (x[0] * 3.0).sin() + x[1] * x[2]);
        // evaluate u through the element containing each point via centroid search
        let u2 = {
            let rule = quad_rule(QuadDomain::Simplex(3), 8).unwrap();
            let table = VolumeTable::new(sp.basis(), rule);
            let mut c = vec![0.0; sp.num_dofs()];
            let mut v = [0.0];
            for e in 0..sp.mesh().num_elements() {
                for q in 0..table.len() {
                    u.eval_reference(e, &table.rule.points[q], &mut v);
                    for i in 0..sp.basis_size() {
                        c[sp.index(e, 0, i)] += table.rule.weights[q] * v[0] * table.phi(q)[i];
                    }
                }
            }
            c
        };
        for (a, b) in u.coeffs().iter().zip(&u2) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn inverse_mass_scaling() {
        let sp = Space::new(single_triangle(1.0), 2, 1).unwrap();
        let mut r: Vec<f64> = (0..6).map(|i| i as f64 + 0.5).collect();
        let orig = r.clone();
        sp.apply_inverse_mass(&mut r).unwrap();
        assert_eq!(r, orig);

        let sp = Space::new(single_triangle(2.0), 2, 1).unwrap();
        let mut r = orig.clone();
        sp.apply_inverse_mass(&mut r).unwrap();
        for (a, b) in r.iter().zip(&orig) {
            assert!((a - b / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mass_roundtrip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mesh = Arc::new(crate::mesh::AnnulusSector::default().build().unwrap());
        let sp = Space::new(mesh, 2, 3).unwrap();
        let r: Vec<f64> = (0..sp.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x = r.clone();
        sp.apply_inverse_mass(&mut x).unwrap();
        sp.apply_mass(&mut x).unwrap();
        for (a, b) in x.iter().zip(&r) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(sp.apply_inverse_mass(&mut [0.0; 3]).is_err());
    }

    #[test]
    fn face_tables_match_physical_points() {
        // points seen from both sides of an interior face coincide physically
        let mesh = Arc::new(unit_cube(1).unwrap());
        let sp = Space::new(mesh.clone(), 1, 1).unwrap();
        let table = FaceTable::new(sp.basis(), quad_rule(QuadDomain::Face(3), 3).unwrap());
        for (fid, f) in mesh.faces().iter().enumerate() {
            let Some(out) = f.outside else { continue };
            let pin = face_permutation(&mesh, fid, f.inside.element, f.inside.local_face);
            assert_eq!(pin, 0);
            let pout = face_permutation(&mesh, fid, out.element, out.local_face);
            for q in 0..table.len() {
                let xa = mesh.geometry(f.inside.element).to_physical(table.point(f.inside.local_face, pin, q));
                let xb = mesh.geometry(out.element).to_physical(table.point(out.local_face, pout, q));
                for c in 0..3 {
                    assert!((xa[c] - xb[c]).abs() < 1e-14);
                }
            }
        }
    }
}
