//! Quadrature on reference simplices.
//!
//! Rules are collapsed (conical product) Gauss–Legendre rules, exact for
//! every total degree up to the requested one. The reference segment is
//! `[0, 1]`, the triangle `{x, y >= 0, x + y <= 1}` and the tetrahedron
//! `{x, y, z >= 0, x + y + z <= 1}`.

use thiserror::Error;

/// Highest polynomial degree a rule can be requested for.
pub const MAX_DEGREE: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("unsupported quadrature degree {0} (max {MAX_DEGREE})")]
    Degree(usize),
    #[error("unsupported quadrature domain dimension {0}")]
    Dimension(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadDomain {
    /// Reference simplex of the given dimension (1, 2 or 3).
    Simplex(usize),
    /// Face of a `d`-dimensional simplex, i.e. a `(d-1)`-simplex.
    Face(usize),
}

#[derive(Debug, Clone)]
pub struct QuadRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        // map from [-1, 1] to [0, 1]
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wt;
        w[n - 1 - i] = 0.5 * wt;
    }
    (x, w)
}

/// Quadrature rule exact for all polynomials of total degree `<= degree`.
pub fn quad_rule(domain: QuadDomain, degree: usize) -> Result<QuadRule, QuadError> {
    if degree > MAX_DEGREE {
        return Err(QuadError::Degree(degree));
    }
    let dim = match domain {
        QuadDomain::Simplex(d) => d,
        QuadDomain::Face(d) => d.checked_sub(1).ok_or(QuadError::Dimension(d))?,
    };
    // Duffy factor (1-v)^{dim-1} raises the degree in the collapsed directions
    let npts = |extra: usize| (degree + extra + 2) / 2;
    let (mut points, mut weights) = (Vec::new(), Vec::new());
    match dim {
        0 => {
            points.push([0.0; 3]);
            weights.push(1.0);
        }
        1 => {
            let (x, w) = gauss_legendre(npts(0));
            for (xi, wi) in x.iter().zip(&w) {
                points.push([*xi, 0.0, 0.0]);
                weights.push(*wi);
            }
        }
        2 => {
            let (xu, wu) = gauss_legendre(npts(0));
            let (xv, wv) = gauss_legendre(npts(1));
            for (v, wvv) in xv.iter().zip(&wv) {
                for (u, wuu) in xu.iter().zip(&wu) {
                    points.push([u * (1.0 - v), *v, 0.0]);
                    weights.push(wuu * wvv * (1.0 - v));
                }
            }
        }
        3 => {
            let (xu, wu) = gauss_legendre(npts(0));
            let (xv, wv) = gauss_legendre(npts(1));
            let (xw, ww) = gauss_legendre(npts(2));
            for (w, www) in xw.iter().zip(&ww) {
                for (v, wvv) in xv.iter().zip(&wv) {
                    for (u, wuu) in xu.iter().zip(&wu) {
                        points.push([u * (1.0 - v) * (1.0 - w), v * (1.0 - w), *w]);
                        weights.push(wuu * wvv * www * (1.0 - v) * (1.0 - w) * (1.0 - w));
                    }
                }
            }
        }
        d => return Err(QuadError::Dimension(d)),
    }
    Ok(QuadRule { dim, degree, points, weights })
}

/// Exact integral of `x^a y^b z^c` over the reference simplex of `dim`:
/// `a! b! c! / (a + b + c + dim)!`.
pub fn monomial_integral(dim: usize, exps: [u32; 3]) -> f64 {
    let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
    let total: u32 = exps[..dim].iter().sum::<u32>() + dim as u32;
    exps[..dim].iter().map(|&e| fact(e)).product::<f64>() / fact(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow3(p: &[f64; 3], e: [u32; 3]) -> f64 {
        p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * p[2].powi(e[2] as i32)
    }

    #[test]
    fn triangle_degree_one_weights() {
        let r = quad_rule(QuadDomain::Simplex(2), 1).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn segment_cubic() {
        let r = quad_rule(QuadDomain::Face(2), 3).unwrap();
        assert!((r.integrate(|p| p[0].powi(3)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn triangle_x4y4() {
        let r = quad_rule(QuadDomain::Simplex(2), 12).unwrap();
        let exact = 576.0 / 3628800.0;
        assert!((r.integrate(|p| p[0].powi(4) * p[1].powi(4)) - exact).abs() < 1e-15);
    }

    #[test]
    fn all_monomials_exact() {
        for dim in 1..=3 {
            for q in 0..=14 {
                let r = quad_rule(QuadDomain::Simplex(dim), q).unwrap();
                let wsum: f64 = r.weights.iter().sum();
                assert!((wsum - monomial_integral(dim, [0, 0, 0])).abs() < 1e-14);
                for a in 0..=q as u32 {
                    for b in 0..=(if dim > 1 { q as u32 - a } else { 0 }) {
                        for c in 0..=(if dim > 2 { q as u32 - a - b } else { 0 }) {
                            let e = [a, b, c];
                            let got = r.integrate(|p| pow3(p, e));
                            let want = monomial_integral(dim, e);
                            assert!((got - want).abs() < 1e-12 * want.max(1e-3), "dim {dim} q {q} {e:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        assert_eq!(quad_rule(QuadDomain::Simplex(2), 99).unwrap_err(), QuadError::Degree(99));
    }
}
