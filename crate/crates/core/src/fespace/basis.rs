//! L²-orthonormal modal bases on reference simplices.
//!
//! Built once per `(dim, order)` by modified Gram–Schmidt (two passes) on
//! monomials centred at the reference centroid, using a rule exact for the
//! degree-`2k` Gram integrands.

use super::quadrature::{quad_rule, QuadDomain};
use super::SpaceError;

pub const MAX_ORDER: usize = 4;

/// Number of basis functions of `P_k` in `dim` dimensions, `C(k + dim, dim)`.
pub fn basis_size(dim: usize, k: usize) -> Result<usize, SpaceError> {
    if !(2..=3).contains(&dim) {
        return Err(SpaceError::Dimension(dim));
    }
    if k > MAX_ORDER {
        return Err(SpaceError::Order(k));
    }
    Ok((1..=dim).map(|i| k + i).product::<usize>() / (1..=dim).product::<usize>())
}

#[derive(Debug, Clone)]
pub struct BasisSet {
    dim: usize,
    order: usize,
    exps: Vec<[u32; 3]>,
    /// Row-major `size x size`: basis i = sum_m coeffs[i][m] * mono_m.
    coeffs: Vec<f64>,
    centre: [f64; 3],
}

impl BasisSet {
    pub fn new(dim: usize, order: usize) -> Result<Self, SpaceError> {
        let size = basis_size(dim, order)?;
        let mut exps = Vec::with_capacity(size);
        for deg in 0..=order as u32 {
            for a in (0..=deg).rev() {
                if dim == 2 {
                    exps.push([a, deg - a, 0]);
                } else {
                    for b in (0..=deg - a).rev() {
                        exps.push([a, b, deg - a - b]);
                    }
                }
            }
        }
        debug_assert_eq!(exps.len(), size);
        let c = 1.0 / (dim as f64 + 1.0);
        let centre = if dim == 2 { [c, c, 0.0] } else { [c, c, c] };
        let rule = quad_rule(QuadDomain::Simplex(dim), 2 * order + 2)?;

        let mut basis = BasisSet { dim, order, exps, coeffs: vec![0.0; size * size], centre };
        // monomial values at quadrature points
        let nq = rule.len();
        let mut mono = vec![0.0; nq * size];
        for (q, p) in rule.points.iter().enumerate() {
            basis.monomials(p, &mut mono[q * size..(q + 1) * size]);
        }
        let inner = |a: &[f64], b: &[f64]| -> f64 {
            // a, b are coefficient vectors over monomials
            let mut s = 0.0;
            for q in 0..nq {
                let row = &mono[q * size..(q + 1) * size];
                let va: f64 = a.iter().zip(row).map(|(x, y)| x * y).sum();
                let vb: f64 = b.iter().zip(row).map(|(x, y)| x * y).sum();
                s += rule.weights[q] * va * vb;
            }
            s
        };
        let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(size);
        for i in 0..size {
            let mut v = vec![0.0; size];
            v[i] = 1.0;
            for _pass in 0..2 {
                for u in &vecs {
                    let p = inner(&v, u);
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= p * ui;
                    }
                }
            }
            let nrm = inner(&v, &v).sqrt();
            for vi in v.iter_mut() {
                *vi /= nrm;
            }
            // fix the sign so the leading monomial has a positive coefficient
            if v[i] < 0.0 {
                for vi in v.iter_mut() {
                    *vi = -*vi;
                }
            }
            vecs.push(v);
        }
        for (i, v) in vecs.iter().enumerate() {
            basis.coeffs[i * size..(i + 1) * size].copy_from_slice(v);
        }
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn size(&self) -> usize {
        self.exps.len()
    }

    fn monomials(&self, p: &[f64; 3], out: &mut [f64]) {
        let d = [p[0] - self.centre[0], p[1] - self.centre[1], p[2] - self.centre[2]];
        let mut pw = [[1.0; MAX_ORDER + 1]; 3];
        for c in 0..3 {
            for k in 1..=self.order {
                pw[c][k] = pw[c][k - 1] * d[c];
            }
        }
        for (o, e) in out.iter_mut().zip(&self.exps) {
            *o = pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize];
        }
    }

    fn monomial_grads(&self, p: &[f64; 3], out: &mut [[f64; 3]]) {
        let d = [p[0] - self.centre[0], p[1] - self.centre[1], p[2] - self.centre[2]];
        let mut pw = [[1.0; MAX_ORDER + 1]; 3];
        for c in 0..3 {
            for k in 1..=self.order {
                pw[c][k] = pw[c][k - 1] * d[c];
            }
        }
        let dpw = |c: usize, e: u32| -> f64 {
            if e == 0 {
                0.0
            } else {
                e as f64 * pw[c][e as usize - 1]
            }
        };
        for (o, e) in out.iter_mut().zip(&self.exps) {
            let (a, b, c) = (e[0] as usize, e[1] as usize, e[2] as usize);
            *o = [
                dpw(0, e[0]) * pw[1][b] * pw[2][c],
                pw[0][a] * dpw(1, e[1]) * pw[2][c],
                pw[0][a] * pw[1][b] * dpw(2, e[2]),
            ];
        }
    }

    /// Values of all basis functions at a reference point.
    pub fn eval(&self, p: &[f64; 3], values: &mut [f64]) {
        let n = self.size();
        let mut mono = [0.0; 35];
        self.monomials(p, &mut mono[..n]);
        for (i, v) in values[..n].iter_mut().enumerate() {
            let row = &self.coeffs[i * n..(i + 1) * n];
            *v = row.iter().zip(&mono[..n]).map(|(a, b)| a * b).sum();
        }
    }

    /// Reference gradients of all basis functions at a reference point.
    pub fn eval_grad(&self, p: &[f64; 3], grads: &mut [[f64; 3]]) {
        let n = self.size();
        let mut mono = [[0.0; 3]; 35];
        self.monomial_grads(p, &mut mono[..n]);
        for (i, g) in grads[..n].iter_mut().enumerate() {
            let row = &self.coeffs[i * n..(i + 1) * n];
            let mut acc = [0.0; 3];
            for (a, m) in row.iter().zip(&mono[..n]) {
                for c in 0..3 {
                    acc[c] += a * m[c];
                }
            }
            *g = acc;
        }
    }

    /// Value of the constant basis function.
    pub fn constant_value(&self) -> f64 {
        self.coeffs[0]
    }
}
