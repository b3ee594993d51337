//! Dense reference implementations used by the integration tests.
//!
//! Everything here is assembled from physical quadrature points and dense
//! local mass matrices, without the operator's precomputed face tables.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use plaque_dg::fespace::{face_barycentric, quad_rule, DiscreteFunction, FaceTable, QuadDomain, Space};
use plaque_dg::flux::{face_weights, lifting, FluxKind};
use plaque_dg::mesh::{BoundaryMap, Mesh};
use plaque_dg::model::Model;
use plaque_dg::operator::{DiscreteOperator, OperatorOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Physical points and weights of a face rule of degree `deg`.
pub fn face_points(mesh: &Mesh, fid: usize, deg: usize) -> Vec<([f64; 3], f64)> {
    let dim = mesh.dim();
    let f = &mesh.faces()[fid];
    let rule = quad_rule(QuadDomain::Face(dim), deg).unwrap();
    let ref_measure: f64 = rule.weights.iter().sum();
    let verts = mesh.vertices();
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(p, w)| {
            let b = face_barycentric(dim, p);
            let mut x = [0.0; 3];
            for j in 0..dim {
                let v = verts[f.vertices[j]];
                for c in 0..3 {
                    x[c] += b[j] * v[c];
                }
            }
            (x, w * f.measure / ref_measure)
        })
        .collect()
}

/// Basis values and physical gradients of element `e` at physical point `x`.
pub fn basis_at(space: &Space, e: usize, x: &[f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
    let geo = space.mesh().geometry(e);
    let xi = geo.to_reference(x);
    let nb = space.basis_size();
    let mut v = vec![0.0; nb];
    let mut g = vec![[0.0; 3]; nb];
    space.basis().eval(&xi, &mut v);
    space.basis().eval_grad(&xi, &mut g);
    (v, g.iter().map(|r| geo.grad_to_physical(r)).collect())
}

/// Dense mass matrix of element `e`, integrated in physical space.
pub fn local_mass(space: &Space, e: usize) -> DMatrix<f64> {
    let mesh = space.mesh();
    let geo = mesh.geometry(e);
    let rule = quad_rule(QuadDomain::Simplex(mesh.dim()), 2 * space.order() + 2).unwrap();
    let nb = space.basis_size();
    let mut m = DMatrix::zeros(nb, nb);
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let (v, _) = basis_at(space, e, &geo.to_physical(p));
        let w = w * geo.det.abs();
        for i in 0..nb {
            for j in 0..nb {
                m[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    m
}

/// Volume integral of `f` over element `e`.
pub fn integrate_element(mesh: &Mesh, e: usize, deg: usize, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
    let geo = mesh.geometry(e);
    let rule = quad_rule(QuadDomain::Simplex(mesh.dim()), deg).unwrap();
    rule.points.iter().zip(&rule.weights).map(|(p, w)| w * geo.det.abs() * f(&geo.to_physical(p))).sum()
}

/// Scalar lifting `ℓ` on element `elem` of face `fid` for jump data
/// `delta(x) = u⁺ − u⁻`, defined by
/// `∫_K ℓ ψ = −ω ∫_e delta ψ` for all `ψ` in the element space, with `ω = ½`
/// on interior faces and 1 on the boundary. Solved with a dense LU.
pub fn dense_lifting(space: &Space, fid: usize, elem: usize, delta: impl Fn(&[f64; 3]) -> f64) -> DVector<f64> {
    let mesh = space.mesh();
    let omega = if mesh.faces()[fid].outside.is_some() { 0.5 } else { 1.0 };
    let nb = space.basis_size();
    let mut rhs = DVector::zeros(nb);
    for (x, w) in face_points(mesh, fid, 2 * space.order() + 2) {
        let (v, _) = basis_at(space, elem, &x);
        let d = delta(&x);
        for i in 0..nb {
            rhs[i] -= omega * w * d * v[i];
        }
    }
    local_mass(space, elem).lu().solve(&rhs).expect("regular mass matrix")
}

fn minus_side(mesh: &Mesh, fid: usize) -> usize {
    let f = &mesh.faces()[fid];
    let a = f.inside.element;
    let Some(o) = f.outside else { return a };
    let b = o.element;
    let (va, vb) = (mesh.geometry(a).volume, mesh.geometry(b).volume);
    if (va - vb).abs() <= 1e-12 * va.max(vb) {
        a.min(b)
    } else if va < vb {
        a
    } else {
        b
    }
}

/// Dense matrix of the Galerkin residual `⟨φ_i, L_h(u)⟩` for `u_t = Δu` with
/// homogeneous Dirichlet data on every boundary face, one species.
///
/// Written in primal form: for trial `u` and test `v`,
/// `−∫ ∇u·∇v + Σ_e ∫_e (⦃∇u⦄·n + σ̂(u)) [v] + s ∫_e [u] ⦃∇v⦄·n`
/// where `[w] = w⁺ − w⁻`, `s = −1` for BO and 1 otherwise, and `σ̂` is the
/// penalty part of the scheme.
pub fn dense_heat_matrix(space: &Space, kind: FluxKind, ip_eta0: f64) -> DMatrix<f64> {
    let mesh = space.mesh();
    let dim = mesh.dim();
    let k = space.order();
    let nb = space.basis_size();
    let n = mesh.num_elements() * nb;
    let chi = (dim + 1) as f64 / 2.0;
    let mut a = DMatrix::zeros(n, n);

    for e in 0..mesh.num_elements() {
        let geo = mesh.geometry(e);
        let rule = quad_rule(QuadDomain::Simplex(dim), 2 * k).unwrap();
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let (_, g) = basis_at(space, e, &geo.to_physical(p));
            let w = w * geo.det.abs();
            for i in 0..nb {
                for j in 0..nb {
                    a[(e * nb + i, e * nb + j)] -= w * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
                }
            }
        }
    }

    let sym = if kind == FluxKind::Bo { -1.0 } else { 1.0 };
    for fid in 0..mesh.faces().len() {
        let f = &mesh.faces()[fid];
        let nrm = f.normal;
        let minus = minus_side(mesh, fid);
        // (element, sign in the jump, weight in the average)
        let mut sides = vec![(f.inside.element, 1.0, 1.0)];
        if let Some(o) = f.outside {
            let (w_in, w_out) = match kind {
                FluxKind::Cdg if minus == f.inside.element => (1.0, 0.0),
                FluxKind::Cdg => (0.0, 1.0),
                _ => (0.5, 0.5),
            };
            sides[0].2 = w_in;
            sides.push((o.element, -1.0, w_out));
        }
        let h = sides.iter().map(|s| mesh.geometry(s.0).diameter).fold(f64::INFINITY, f64::min);
        let eta = ip_eta0 * (k.max(1) * k.max(1)) as f64;
        let pts = face_points(mesh, fid, 2 * k + 2);
        let traces: Vec<Vec<(Vec<f64>, Vec<f64>)>> = sides
            .iter()
            .map(|s| {
                pts.iter()
                    .map(|(x, _)| {
                        let (v, g) = basis_at(space, s.0, x);
                        let gn = g.iter().map(|r| r[0] * nrm[0] + r[1] * nrm[1] + r[2] * nrm[2]).collect();
                        (v, gn)
                    })
                    .collect()
            })
            .collect();

        for (ts, &(et, st, wt)) in sides.iter().enumerate() {
            for j in 0..nb {
                let delta = |x: &[f64; 3]| st * basis_at(space, et, x).0[j];
                // penalty part σ̂(u) at each face point
                let pen: Vec<f64> = match kind {
                    FluxKind::Cdg2 | FluxKind::Cdg | FluxKind::Br2 => {
                        let lift_at = |elem: usize| -> Vec<f64> {
                            let c = dense_lifting(space, fid, elem, delta);
                            pts.iter().map(|(x, _)| basis_at(space, elem, x).0.iter().zip(c.iter()).map(|(p, c)| p * c).sum()).collect()
                        };
                        if kind == FluxKind::Br2 {
                            let ls: Vec<Vec<f64>> = sides.iter().map(|s| lift_at(s.0)).collect();
                            let m = ls.len() as f64;
                            (0..pts.len()).map(|q| 2.0 * chi * ls.iter().map(|l| l[q]).sum::<f64>() / m).collect()
                        } else {
                            lift_at(minus).into_iter().map(|l| 2.0 * chi * l).collect()
                        }
                    }
                    FluxKind::Ip => pts.iter().map(|(x, _)| -eta / h * delta(x)).collect(),
                    FluxKind::Bo => vec![0.0; pts.len()],
                };
                for (q, (_, w)) in pts.iter().enumerate() {
                    let (uv, ugn) = &traces[ts][q];
                    let du = st * uv[j];
                    // the trial function lives on one side only
                    let avg_grad_u = wt * ugn[j];
                    for (tv, &(ev, sv, wv)) in sides.iter().enumerate() {
                        let (vv, vgn) = &traces[tv][q];
                        for i in 0..nb {
                            let val = (avg_grad_u + pen[q]) * sv * vv[i] + sym * du * wv * vgn[i];
                            a[(ev * nb + i, et * nb + j)] += w * val;
                        }
                    }
                }
            }
        }
    }
    a
}

/// Matrix of the linear part of `u ↦ ⟨φ, L_h(u)⟩`, one column per basis vector.
pub fn operator_matrix(op: &DiscreteOperator, t: f64) -> DMatrix<f64> {
    let n = op.space().num_dofs();
    let mut base = vec![0.0; n];
    op.apply(&vec![0.0; n], t, &mut base).unwrap();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut out = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, t, &mut out).unwrap();
        for i in 0..n {
            m[(i, j)] = out[i] - base[i];
        }
        e[j] = 0.0;
    }
    m
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Unit square split into 8 triangles around a displaced centre vertex, so
/// that neighbouring elements differ in size.
pub fn skewed_square() -> Mesh {
    let v = vec![
        [0.0, 0.0, 0.0],
        [0.5, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 0.5, 0.0],
        [1.0, 1.0, 0.0],
        [0.5, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.5, 0.0],
        [0.62, 0.41, 0.0],
    ];
    let cells = (0..8).map(|i| vec![i, (i + 1) % 8, 8]).collect();
    Mesh::new(2, v, cells, &BoundaryMap::new()).unwrap()
}

/// Two triangles of different size sharing the edge from (0,0) to (1,0).
pub fn two_triangles() -> Mesh {
    let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.3, 0.8, 0.0], [0.6, -0.5, 0.0]];
    Mesh::new(2, v, vec![vec![0, 1, 2], vec![1, 0, 3]], &BoundaryMap::new()).unwrap()
}

pub fn heat_operator(mesh: Mesh, k: usize, kind: FluxKind, model: Arc<dyn Model>) -> DiscreteOperator {
    let dim = mesh.dim();
    let space = Space::new(Arc::new(mesh), k, model.n_species()).unwrap();
    DiscreteOperator::new(space, model, plaque_dg::flux::FluxScheme::new(kind, dim), OperatorOptions::default()).unwrap()
}

/// Relative max-norm mismatch between the operator and the dense oracle.
pub fn oracle_mismatch(mesh: Mesh, k: usize, kind: FluxKind) -> (f64, f64) {
    let op = heat_operator(mesh, k, kind, Arc::new(plaque_dg::model::Heat2d));
    let got = operator_matrix(&op, 0.0);
    let want = dense_heat_matrix(op.space(), kind, op.scheme().ip_eta0);
    let scale = max_abs(&want);
    let asym = max_abs(&(&want - want.transpose())) / scale;
    (max_abs(&(&got - &want)) / scale, asym)
}

/// `y' = λ(y − cos t) − sin t`, exact solution `cos t`.
pub fn prothero_robinson(lambda: f64) -> impl FnMut(&[f64], f64, &mut [f64]) -> Result<(), plaque_dg::timeint::TimeError> {
    move |y, t, out| {
        out[0] = lambda * (y[0] - t.cos()) - t.sin();
        Ok(())
    }
}

/// Error at `t = 1` of `y' = λ(y − cos t) − sin t` integrated with `steps` steps.
pub fn dirk_error(tab: plaque_dg::timeint::Tableau, steps: usize) -> f64 {
    use plaque_dg::timeint::{Dirk, GmresConfig, NewtonConfig};
    let mut dirk = Dirk::new(tab);
    dirk.newton = NewtonConfig { rtol: 1e-14, atol: 1e-15, max_iters: 20 };
    dirk.gmres = GmresConfig { restart: 5, max_iters: 50, rtol: 1e-13 };
    let mut y = vec![1.0];
    dirk.integrate(prothero_robinson(-2.0), &mut y, 0.0, 1.0, steps).unwrap();
    (y[0] - 1f64.cos()).abs()
}

/// Least-squares slope of `log2 error` against `log2 steps`.
pub fn convergence_slope(tab: &plaque_dg::timeint::Tableau, steps: &[usize]) -> f64 {
    let pts: Vec<(f64, f64)> = steps.iter().map(|&n| ((n as f64).log2(), dirk_error(tab.clone(), n).log2())).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -num / den
}

/// Random `n×n` system with a dominant diagonal, and its LU solution.
pub fn random_system(n: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    for i in 0..n {
        a[(i, i)] += n as f64 * 0.5 * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    }
    let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let x = a.clone().lu().solve(&b).expect("regular");
    (a, b, x)
}

/// The constant state `values` written exactly in the modal basis.
pub fn constant_state(space: &Space, values: &[f64]) -> Vec<f64> {
    let c0 = space.basis().constant_value();
    let mut u = vec![0.0; space.num_dofs()];
    for e in 0..space.mesh().num_elements() {
        for (s, v) in values.iter().enumerate() {
            u[space.index(e, s, 0)] = v / c0;
        }
    }
    u
}

pub fn random_function(space: &Arc<Space>, rng: &mut impl Rng) -> DiscreteFunction {
    let c = (0..space.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    space.function(c).unwrap()
}

/// Worst relative defect of `Σ_K ∫_K r_e·τ = −∫_e [u]·⦃τ⦄` over all faces,
/// for random `u` and random vector test fields `τ`.
pub fn lifting_identity_defect(mesh: Mesh, k: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = mesh.dim();
    let space = Space::new(Arc::new(mesh), k, 1).unwrap();
    let mesh = space.mesh().clone();
    let table = FaceTable::new(space.basis(), quad_rule(QuadDomain::Face(dim), 2 * k + 2).unwrap());
    let u = random_function(&space, &mut rng);
    let tau: Vec<_> = (0..3).map(|_| random_function(&space, &mut rng)).collect();
    let tau_at = |e: usize, x: &[f64; 3]| {
        let mut t = [0.0; 3];
        for c in 0..dim {
            let mut v = [0.0];
            tau[c].eval_physical(e, x, &mut v);
            t[c] = v[0];
        }
        t
    };
    let mut worst = 0.0f64;
    for fid in 0..mesh.faces().len() {
        let f = &mesh.faces()[fid];
        let gi = mesh.geometry(f.inside.element);
        let pts: Vec<[f64; 3]> = (0..table.len()).map(|q| gi.to_physical(table.point(f.inside.local_face, 0, q))).collect();
        let jump: Vec<f64> = pts
            .iter()
            .map(|x| {
                let (mut a, mut b) = ([0.0], [0.0]);
                u.eval_physical(f.inside.element, x, &mut a);
                if let Some(o) = f.outside {
                    u.eval_physical(o.element, x, &mut b);
                }
                a[0] - b[0]
            })
            .collect();
        let lift = lifting(&space, &table, fid, &jump).unwrap();
        let w = face_weights(&mesh, &table, fid);

        let mut lhs = 0.0;
        let mut elems = vec![f.inside.element];
        elems.extend(f.outside.map(|o| o.element));
        for &e in &elems {
            let comps: Vec<_> = (0..dim).map(|c| lift.vector_coeffs(e, 0, c, space.basis_size())).collect();
            lhs += integrate_element(&mesh, e, 2 * k + 2, |x| {
                let (phi, _) = basis_at(&space, e, x);
                let t = tau_at(e, x);
                (0..dim).map(|c| comps[c].iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() * t[c]).sum()
            });
        }
        let mut rhs = 0.0;
        let mut scale = 0.0;
        for (q, x) in pts.iter().enumerate() {
            let mut avg = [0.0; 3];
            for &e in &elems {
                let t = tau_at(e, x);
                for c in 0..3 {
                    avg[c] += t[c] / elems.len() as f64;
                }
            }
            let jn = jump[q] * (f.normal[0] * avg[0] + f.normal[1] * avg[1] + f.normal[2] * avg[2]);
            rhs -= w[q] * jn;
            scale += w[q] * jn.abs();
        }
        worst = worst.max((lhs - rhs).abs() / scale.max(1e-300));
    }
    worst
}

/// Worst relative mismatch between `lifting` and [`dense_lifting`] on
/// [`two_triangles`] for random data of degree `k`.
pub fn dense_lifting_mismatch(k: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = Space::new(Arc::new(two_triangles()), k, 1).unwrap();
    let mesh = space.mesh().clone();
    let table = FaceTable::new(space.basis(), quad_rule(QuadDomain::Face(2), 2 * k + 2).unwrap());
    let u = random_function(&space, &mut rng);
    let mut worst = 0.0f64;
    for fid in 0..mesh.faces().len() {
        let f = &mesh.faces()[fid];
        let delta = |x: &[f64; 3]| {
            let (mut a, mut b) = ([0.0], [0.0]);
            u.eval_physical(f.inside.element, x, &mut a);
            if let Some(o) = f.outside {
                u.eval_physical(o.element, x, &mut b);
            }
            a[0] - b[0]
        };
        let gi = mesh.geometry(f.inside.element);
        let jump: Vec<f64> =
            (0..table.len()).map(|q| delta(&gi.to_physical(table.point(f.inside.local_face, 0, q)))).collect();
        let lift = lifting(&space, &table, fid, &jump).unwrap();
        let mut sides = vec![(lift.inside.0, lift.inside.1.clone())];
        sides.extend(lift.outside.clone());
        for (e, got) in sides {
            let want = dense_lifting(&space, fid, e, delta);
            let scale = want.amax().max(1e-300);
            for (g, w) in got.iter().zip(want.iter()) {
                worst = worst.max((g - w).abs() / scale);
            }
        }
    }
    worst
}
