//! Diagonally implicit Runge-Kutta integration of `U' = f(U, t)` with
//! Jacobian-free Newton-Krylov stage solves.

pub mod vecops;

use thiserror::Error;

use crate::operator::OperatorError;
use vecops::{axpy, copy, dot, norm, scale};

#[derive(Debug, Error)]
pub enum TimeError {
    #[error("Newton did not converge in {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64, target: f64 },
    #[error("non-finite residual after {iterations} Newton iterations")]
    NonFinite { iterations: usize },
    #[error("GMRES stagnated after {iterations} iterations (relative residual {relative:.3e})")]
    GmresStagnation { iterations: usize, relative: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Butcher tableau of a singly diagonally implicit method.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    pub name: &'static str,
    pub order: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Tableau {
    /// Two-stage, L-stable, `α = 1 − √2/2`.
    pub fn sdirk2() -> Self {
        let g = 1.0 - std::f64::consts::SQRT_2 / 2.0;
        Tableau { name: "sdirk2", order: 2, a: vec![vec![g], vec![1.0 - g, g]], b: vec![1.0 - g, g], c: vec![g, 1.0] }
    }

    /// Alexander's three-stage, L-stable method.
    pub fn sdirk3() -> Self {
        // root of x³ − 3x² + 3/2 x − 1/6 in (1/6, 1/2)
        let g = 0.435_866_521_508_459;
        let t = (1.0 + g) / 2.0;
        let b1 = -(6.0 * g * g - 16.0 * g + 1.0) / 4.0;
        let b2 = (6.0 * g * g - 20.0 * g + 5.0) / 4.0;
        Tableau {
            name: "sdirk3",
            order: 3,
            a: vec![vec![g], vec![t - g, g], vec![b1, b2, g]],
            b: vec![b1, b2, g],
            c: vec![g, t, 1.0],
        }
    }

    /// Five-stage, L-stable method of order four with `γ = 1/4`.
    pub fn sdirk4() -> Self {
        let a = vec![
            vec![0.25],
            vec![0.5, 0.25],
            vec![17.0 / 50.0, -1.0 / 25.0, 0.25],
            vec![371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25],
            vec![25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
        ];
        let b = a[4].clone();
        Tableau { name: "sdirk4", order: 4, a, b, c: vec![0.25, 0.75, 11.0 / 20.0, 0.5, 1.0] }
    }

    pub fn for_order(p: usize) -> Result<Self, TimeError> {
        match p {
            2 => Ok(Self::sdirk2()),
            3 => Ok(Self::sdirk3()),
            4 => Ok(Self::sdirk4()),
            _ => Err(TimeError::Config(format!("no DIRK tableau of order {p}"))),
        }
    }

    /// Default pairing with the polynomial order: `min(k + 1, 4)`, at least 2.
    pub fn for_polynomial_order(k: usize) -> Self {
        Self::for_order((k + 1).clamp(2, 4)).expect("order in range")
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// `R(z) = 1 + z bᵀ (I − zA)⁻¹ 1` for real `z`.
    pub fn stability_function(&self, z: f64) -> f64 {
        // forward substitution on the lower-triangular system
        let s = self.stages();
        let mut y = vec![0.0; s];
        for i in 0..s {
            let mut r = 1.0;
            for j in 0..i {
                r += z * self.a[i][j] * y[j];
            }
            y[i] = r / (1.0 - z * self.a[i][i]);
        }
        1.0 + z * self.b.iter().zip(&y).map(|(b, y)| b * y).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub restart: usize,
    pub max_iters: usize,
    pub rtol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig { restart: 30, max_iters: 1000, rtol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { rtol: 1e-8, atol: 1e-12, max_iters: 25 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm after the solve.
    pub residual: f64,
    /// Residual estimates, one per inner iteration.
    pub history: Vec<f64>,
    /// Stopped because the matrix-vector products are too inaccurate to
    /// reduce the residual further.
    pub stagnated: bool,
}

/// Solves `A x = b` from the initial guess in `x`. Returns the outcome even
/// when the tolerance `tol` (absolute) was not reached.
fn gmres_core(
    matvec: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<(), TimeError>,
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    max_iters: usize,
    tol: f64,
) -> Result<GmresOutcome, TimeError> {
    let n = b.len();
    let m = restart.max(1);
    let mut out = GmresOutcome::default();
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut beta = if x.iter().all(|&v| v == 0.0) {
        copy(b, &mut r);
        norm(&r)
    } else {
        matvec(x, &mut w)?;
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        norm(&r)
    };
    out.residual = beta;
    if beta <= tol {
        out.converged = true;
        return Ok(out);
    }
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn, mut g) = (vec![0.0; m], vec![0.0; m], vec![0.0; m + 1]);
    loop {
        let cycle_start = beta;
        v.clear();
        let mut v0 = r.clone();
        scale(1.0 / beta, &mut v0);
        v.push(v0);
        g.iter_mut().for_each(|x| *x = 0.0);
        g[0] = beta;
        let mut k = 0;
        let mut stop = false;
        while k < m {
            matvec(&v[k], &mut w)?;
            out.iterations += 1;
            // modified Gram-Schmidt
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                h[i][k] = hik;
                axpy(-hik, &v[i], &mut w);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                stop = true;
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            let est = g[k + 1].abs();
            out.history.push(est);
            k += 1;
            let happy = hn <= 1e-14 * d.max(f64::MIN_POSITIVE);
            if est <= tol || happy || out.iterations >= max_iters {
                stop = true;
                break;
            }
            let mut vk = w.clone();
            scale(1.0 / hn, &mut vk);
            v.push(vk);
        }
        // back substitution and update
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &v[i], x);
        }
        matvec(x, &mut w)?;
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        beta = norm(&r);
        out.residual = beta;
        log::trace!("gmres cycle: {} its, true residual {beta:.3e}", out.iterations);
        if beta <= tol {
            out.converged = true;
            return Ok(out);
        }
        if out.iterations >= max_iters || (stop && k == 0) {
            return Ok(out);
        }
        if stop && out.history.last().is_some_and(|&e| e <= tol) && beta > 0.9 * cycle_start {
            // The Arnoldi estimate claims convergence while the recomputed
            // residual barely moved: the products are only accurate to this
            // level (finite-difference noise), so further cycles cannot help.
            out.stagnated = true;
            return Ok(out);
        }
    }
}

/// Restarted GMRES with modified Gram-Schmidt Arnoldi, zero initial guess.
/// Fails if `‖b − A x‖ ≤ rtol ‖b‖` is not reached within `max_iters`.
pub fn gmres_solve(
    mut matvec: impl FnMut(&[f64], &mut [f64]) -> Result<(), TimeError>,
    rhs: &[f64],
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, GmresOutcome), TimeError> {
    if cfg.restart == 0 {
        return Err(TimeError::Config("GMRES restart must be at least 1".into()));
    }
    let mut x = vec![0.0; rhs.len()];
    let bn = norm(rhs);
    let out = gmres_core(&mut matvec, rhs, &mut x, cfg.restart, cfg.max_iters, cfg.rtol * bn)?;
    if !out.converged {
        return Err(TimeError::GmresStagnation {
            iterations: out.iterations,
            relative: out.residual / bn.max(f64::MIN_POSITIVE),
        });
    }
    Ok((x, out))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonOutcome {
    pub iterations: usize,
    pub linear_iterations: usize,
    pub residual: f64,
    pub initial_residual: f64,
    /// Residual norm after each iteration, starting with the initial one.
    pub history: Vec<f64>,
}

/// Jacobian-free Newton-Krylov solve of `G(U) = 0`, starting from and
/// overwriting `u`.
///
/// Each linear solve is asked for a relative residual of
/// `max(gmres.rtol, ½ target / ‖G‖)`: the GMRES tolerance, loosened on the
/// last iteration so the target is not oversolved. Finite-difference products
/// carry a relative error near `sqrt(eps)`, so asking for much less than
/// that only burns Krylov iterations. Affine problems converge in one Newton
/// step whenever `rtol` is not tighter than `gmres.rtol`.
pub fn newton_solve(
    mut g: impl FnMut(&[f64], &mut [f64]) -> Result<(), TimeError>,
    u: &mut [f64],
    cfg: &NewtonConfig,
    gmres: &GmresConfig,
) -> Result<NewtonOutcome, TimeError> {
    if !(cfg.rtol > 0.0 && cfg.atol > 0.0) || gmres.restart == 0 {
        return Err(TimeError::Config("tolerances must be positive and restart at least 1".into()));
    }
    let n = u.len();
    let mut gu = vec![0.0; n];
    g(u, &mut gu)?;
    let n0 = norm(&gu);
    if !n0.is_finite() {
        return Err(TimeError::NonFinite { iterations: 0 });
    }
    let target = cfg.atol + cfg.rtol * n0;
    let mut out = NewtonOutcome { residual: n0, initial_residual: n0, history: vec![n0], ..Default::default() };
    if n0 <= target {
        return Ok(out);
    }
    let sqrt_eps = f64::EPSILON.sqrt();
    let mut up = vec![0.0; n];
    let mut gp = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut gnorm = n0;
    for it in 1..=cfg.max_iters {
        copy(&gu, &mut rhs);
        scale(-1.0, &mut rhs);
        let unorm = norm(u);
        let tol = gmres.rtol.max(0.5 * target / gnorm) * gnorm;
        delta.iter_mut().for_each(|v| *v = 0.0);
        let mut jv = |v: &[f64], out: &mut [f64]| -> Result<(), TimeError> {
            let vn = norm(v);
            if vn == 0.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
                return Ok(());
            }
            let eps = sqrt_eps * (1.0 + unorm) / vn;
            copy(u, &mut up);
            axpy(eps, v, &mut up);
            g(&up, &mut gp)?;
            for i in 0..n {
                out[i] = (gp[i] - gu[i]) / eps;
            }
            Ok(())
        };
        let lin = gmres_core(&mut jv, &rhs, &mut delta, gmres.restart, gmres.max_iters, tol)?;
        out.linear_iterations += lin.iterations;
        log::trace!(
            "newton {it}: |G| = {gnorm:.3e}, gmres {} its, rel {:.3e}",
            lin.iterations,
            lin.residual / gnorm
        );
        axpy(1.0, &delta, u);
        g(u, &mut gu)?;
        gnorm = norm(&gu);
        out.iterations = it;
        out.residual = gnorm;
        out.history.push(gnorm);
        if !gnorm.is_finite() {
            return Err(TimeError::NonFinite { iterations: it });
        }
        if gnorm <= target {
            return Ok(out);
        }
    }
    Err(TimeError::NewtonDiverged { iterations: cfg.max_iters, residual: gnorm, target })
}

/// Work counters of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub newton_iterations: usize,
    pub linear_iterations: usize,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, o: Self) {
        self.newton_iterations += o.newton_iterations;
        self.linear_iterations += o.linear_iterations;
    }
}

/// One DIRK step. Stage values `Y_i` solve
/// `Y_i − U_n − dt Σ_{j≤i} a_ij f(Y_j, t + c_j dt) = 0`, and
/// `U_{n+1} = U_n + dt Σ b_i f(Y_i)`. `u` is left untouched on failure.
pub fn dirk_step(
    mut f: impl FnMut(&[f64], f64, &mut [f64]) -> Result<(), TimeError>,
    u: &mut [f64],
    t: f64,
    dt: f64,
    tab: &Tableau,
    newton: &NewtonConfig,
    gmres: &GmresConfig,
) -> Result<StepStats, TimeError> {
    if !(dt > 0.0) {
        return Err(TimeError::Config(format!("time step must be positive, got {dt}")));
    }
    let n = u.len();
    let s = tab.stages();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; s];
    let mut y = u.to_vec();
    let mut base = vec![0.0; n];
    let mut stats = StepStats::default();
    for i in 0..s {
        copy(u, &mut base);
        for j in 0..i {
            if tab.a[i][j] != 0.0 {
                axpy(dt * tab.a[i][j], &k[j], &mut base);
            }
        }
        let ti = t + tab.c[i] * dt;
        let gamma = dt * tab.a[i][i];
        let g = |x: &[f64], out: &mut [f64]| -> Result<(), TimeError> {
            f(x, ti, out)?;
            for m in 0..n {
                out[m] = x[m] - base[m] - gamma * out[m];
            }
            Ok(())
        };
        let res = newton_solve(g, &mut y, newton, gmres)?;
        stats.newton_iterations += res.iterations;
        stats.linear_iterations += res.linear_iterations;
        f(&y, ti, &mut k[i])?;
    }
    for i in 0..s {
        axpy(dt * tab.b[i], &k[i], u);
    }
    Ok(stats)
}

/// DIRK integrator bundling tableau and solver settings.
#[derive(Debug, Clone)]
pub struct Dirk {
    pub tableau: Tableau,
    pub newton: NewtonConfig,
    pub gmres: GmresConfig,
}

impl Dirk {
    pub fn new(tableau: Tableau) -> Self {
        Dirk { tableau, newton: NewtonConfig::default(), gmres: GmresConfig::default() }
    }

    pub fn step(
        &self,
        f: impl FnMut(&[f64], f64, &mut [f64]) -> Result<(), TimeError>,
        u: &mut [f64],
        t: f64,
        dt: f64,
    ) -> Result<StepStats, TimeError> {
        dirk_step(f, u, t, dt, &self.tableau, &self.newton, &self.gmres)
    }

    /// `steps` equal steps from `t0` to `t1`.
    pub fn integrate(
        &self,
        mut f: impl FnMut(&[f64], f64, &mut [f64]) -> Result<(), TimeError>,
        u: &mut [f64],
        t0: f64,
        t1: f64,
        steps: usize,
    ) -> Result<StepStats, TimeError> {
        let dt = (t1 - t0) / steps as f64;
        let mut total = StepStats::default();
        for n in 0..steps {
            total += self.step(&mut f, u, t0 + n as f64 * dt, dt)?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> [Tableau; 3] {
        [Tableau::sdirk2(), Tableau::sdirk3(), Tableau::sdirk4()]
    }

    #[test]
    fn tableau_consistency() {
        for t in all() {
            assert!((t.b.iter().sum::<f64>() - 1.0).abs() < 1e-14, "{}", t.name);
            for i in 0..t.stages() {
                assert!((t.a[i].iter().sum::<f64>() - t.c[i]).abs() < 1e-14, "{} row {i}", t.name);
                assert!(t.a[i][i] > 0.0);
            }
        }
        let g = 0.435_866_521_508_459f64;
        assert!((g.powi(3) - 3.0 * g * g + 1.5 * g - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn order_two_stability_function() {
        let t = Tableau::sdirk2();
        let a = t.a[0][0];
        for i in 0..10 {
            let z = -5.0 + i as f64 * 0.9;
            let want = (1.0 + (1.0 - 2.0 * a) * z) / ((1.0 - a * z) * (1.0 - a * z));
            assert!((t.stability_function(z) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn a_stable_far_field() {
        for t in all() {
            assert!(t.stability_function(-1e6).abs() <= 1.0, "{}", t.name);
        }
    }

    #[test]
    fn stationary_system() {
        let mut u = vec![1.0, -2.0, 3.5];
        let orig = u.clone();
        for t in all() {
            Dirk::new(t)
                .step(
                    |_, _, o| {
                        o.iter_mut().for_each(|v| *v = 0.0);
                        Ok(())
                    },
                    &mut u,
                    0.0,
                    0.1,
                )
                .unwrap();
        }
        assert_eq!(u, orig);
    }

    #[test]
    fn one_step_matches_stability_function() {
        let lambda = -3.0;
        let dt = 0.2;
        for t in all() {
            let mut u = vec![1.0];
            let mut d = Dirk::new(t.clone());
            d.newton.rtol = 1e-13;
            d.step(
                |x, _, o| {
                    o[0] = lambda * x[0];
                    Ok(())
                },
                &mut u,
                0.0,
                dt,
            )
            .unwrap();
            assert!((u[0] - t.stability_function(lambda * dt)).abs() < 1e-10, "{}", t.name);
        }
    }

    #[test]
    fn gmres_identity_and_zero() {
        let cfg = GmresConfig::default();
        let b = vec![1.0, 2.0, 3.0];
        let (x, o) = gmres_solve(
            |v, out| {
                out.copy_from_slice(v);
                Ok(())
            },
            &b,
            &cfg,
        )
        .unwrap();
        assert_eq!(o.iterations, 1);
        assert!(x.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-15));
        let (x, o) = gmres_solve(
            |v, out| {
                out.copy_from_slice(v);
                Ok(())
            },
            &[0.0; 3],
            &cfg,
        )
        .unwrap();
        assert_eq!(o.iterations, 0);
        assert_eq!(x, vec![0.0; 3]);
    }

    #[test]
    fn gmres_restarts_and_reports_stagnation() {
        // 1-D Laplacian, small restart forces several cycles
        let n = 40;
        let lap = |v: &[f64], out: &mut [f64]| -> Result<(), TimeError> {
            for i in 0..v.len() {
                let l = if i > 0 { v[i - 1] } else { 0.0 };
                let r = if i + 1 < v.len() { v[i + 1] } else { 0.0 };
                out[i] = 2.0 * v[i] - l - r;
            }
            Ok(())
        };
        let b = vec![1.0; n];
        let cfg = GmresConfig { restart: 10, max_iters: 2000, rtol: 1e-10 };
        let (x, o) = gmres_solve(lap, &b, &cfg).unwrap();
        assert!(o.iterations > 10);
        let mut ax = vec![0.0; n];
        lap(&x, &mut ax).unwrap();
        let r: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!(r <= 1e-10 * (n as f64).sqrt() * 1.01);
        let tight = GmresConfig { restart: 5, max_iters: 7, rtol: 1e-12 };
        assert!(matches!(gmres_solve(lap, &b, &tight), Err(TimeError::GmresStagnation { .. })));
    }

    #[test]
    fn gmres_stops_at_product_noise_floor() {
        // diagonal operator whose products carry a relative error near 1e-9
        // that changes from call to call, like finite-difference rounding
        let n = 50;
        let mut calls = 0u64;
        let noisy = |v: &[f64], out: &mut [f64]| -> Result<(), TimeError> {
            calls += 1;
            let vn = norm(v);
            for i in 0..v.len() {
                let phase = (calls as f64) * 0.618_033_988_7 + (i as f64) * 1.414_213_56;
                out[i] = (1.0 + i as f64) * v[i] + 1e-9 * vn * (1e3 * phase).sin();
            }
            Ok(())
        };
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let mut mv = noisy;
        let o = gmres_core(&mut mv, &b, &mut x, 60, 1000, 1e-14 * norm(&b)).unwrap();
        assert!(!o.converged);
        assert!(o.stagnated);
        assert!(o.iterations < 200, "{} iterations", o.iterations);
        assert!(o.residual < 1e-6 * norm(&b));
    }

    #[test]
    fn newton_sqrt_follows_exact_recurrence() {
        let mut u = vec![3.0];
        let cfg = NewtonConfig { rtol: 1e-14, atol: 1e-14, max_iters: 20 };
        let out = newton_solve(
            |x, o| {
                o[0] = x[0] * x[0] - 4.0;
                Ok(())
            },
            &mut u,
            &cfg,
            &GmresConfig::default(),
        )
        .unwrap();
        assert!((u[0] - 2.0).abs() < 1e-12);
        // exact Newton iterates u ← (u + 4/u)/2 give these residuals
        let mut v = 3.0f64;
        for h in &out.history[1..] {
            v = 0.5 * (v + 4.0 / v);
            assert!((h - (v * v - 4.0).abs()).abs() < 1e-6 * (1.0 + h));
        }
        // quadratic decay on the last iterations
        let hs = &out.history;
        let n = hs.len();
        if n >= 4 && hs[n - 2] > 1e-7 {
            assert!(hs[n - 1] < 10.0 * hs[n - 2] * hs[n - 2]);
        }
    }

    #[test]
    fn newton_zero_iterations_at_root() {
        let mut u = vec![2.0];
        let out = newton_solve(
            |x, o| {
                o[0] = x[0] * x[0] - 4.0;
                Ok(())
            },
            &mut u,
            &NewtonConfig::default(),
            &GmresConfig::default(),
        )
        .unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(u[0], 2.0);
    }

    #[test]
    fn newton_failure_leaves_state_untouched() {
        let mut u = vec![1.0, 2.0];
        let orig = u.clone();
        let r = dirk_step(
            |x, _, o| {
                // no real root: x² + 1 stage equation diverges
                o[0] = -x[0] * x[0] - 100.0;
                o[1] = 0.0;
                Ok(())
            },
            &mut u,
            0.0,
            1.0,
            &Tableau::sdirk2(),
            &NewtonConfig { max_iters: 5, ..Default::default() },
            &GmresConfig::default(),
        );
        assert!(r.is_err());
        assert_eq!(u, orig);
    }
}
