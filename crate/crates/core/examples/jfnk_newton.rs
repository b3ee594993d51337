//! Jacobian-free Newton-Krylov on a discretised 1-D Bratu problem
//! `u'' + λ e^u = 0`, `u(0) = u(1) = 0`, and a direct GMRES solve of the
//! linearised system.
//!
//! cargo run --release --example jfnk_newton -- [n odd] [lambda]

use plaque_dg::timeint::{gmres_solve, newton_solve, GmresConfig, NewtonConfig, TimeError};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map(|a| a.parse()).transpose()?.unwrap_or(99);
    let lambda: f64 = args.get(1).map(|a| a.parse()).transpose()?.unwrap_or(1.0);
    let h = 1.0 / (n + 1) as f64;

    let laplace = move |u: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let l = if i > 0 { u[i - 1] } else { 0.0 };
            let r = if i + 1 < n { u[i + 1] } else { 0.0 };
            out[i] = (l - 2.0 * u[i] + r) / (h * h);
        }
    };
    let g = |u: &[f64], out: &mut [f64]| -> Result<(), TimeError> {
        laplace(u, out);
        for (o, v) in out.iter_mut().zip(u) {
            *o += lambda * v.exp();
        }
        Ok(())
    };
    let mut u = vec![0.0; n];
    let newton = NewtonConfig { rtol: 1e-10, atol: 1e-12, max_iters: 20 };
    let gmres = GmresConfig { restart: 50, max_iters: 2000, rtol: 1e-8 };
    let out = newton_solve(g, &mut u, &newton, &gmres)?;
    println!("Newton: {} iterations, {} GMRES iterations", out.iterations, out.linear_iterations);
    for (i, r) in out.history.iter().enumerate() {
        println!("  {i}: |G| = {r:.3e}");
    }
    println!("u(1/2) = {:.8}", u[(n - 1) / 2]);

    // the same Laplacian as a linear solve: -u'' = 1 has u(1/2) = 1/8
    let rhs = vec![1.0; n];
    let (x, o) = gmres_solve(
        |v: &[f64], out: &mut [f64]| {
            laplace(v, out);
            out.iter_mut().for_each(|x| *x = -*x);
            Ok(())
        },
        &rhs,
        &GmresConfig { restart: n, max_iters: 4 * n, rtol: 1e-12 },
    )?;
    println!("GMRES Poisson solve: {} iterations, u(1/2) = {:.8}", o.iterations, x[(n - 1) / 2]);
    Ok(())
}
