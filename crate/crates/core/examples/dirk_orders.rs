//! Convergence of the SDIRK tableaus on the stiff Prothero-Robinson problem
//! `y' = λ(y − cos t) − sin t`, and the stability function of each.
//!
//! cargo run --release --example dirk_orders -- [lambda]

use plaque_dg::timeint::{Dirk, GmresConfig, NewtonConfig, Tableau, TimeError};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lambda: f64 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(-2.0);
    for tab in [Tableau::sdirk2(), Tableau::sdirk3(), Tableau::sdirk4()] {
        let mut dirk = Dirk::new(tab.clone());
        dirk.newton = NewtonConfig { rtol: 1e-14, atol: 1e-15, max_iters: 20 };
        dirk.gmres = GmresConfig { restart: 5, max_iters: 50, rtol: 1e-13 };
        print!("{} ({} stages):", tab.name, tab.stages());
        let mut prev: Option<f64> = None;
        for steps in [10, 20, 40, 80] {
            let mut y = vec![1.0];
            let f = |y: &[f64], t: f64, out: &mut [f64]| -> Result<(), TimeError> {
                out[0] = lambda * (y[0] - t.cos()) - t.sin();
                Ok(())
            };
            dirk.integrate(f, &mut y, 0.0, 1.0, steps)?;
            let err = (y[0] - 1f64.cos()).abs();
            match prev {
                Some(p) => print!("  {err:.2e} ({:.2})", (p / err).log2()),
                None => print!("  {err:.2e}"),
            }
            prev = Some(err);
        }
        println!();
        let r: Vec<String> = [-1.0, -10.0, -1e3, -1e6].iter().map(|&z| format!("R({z:e}) = {:.3e}", tab.stability_function(z))).collect();
        println!("    {}", r.join(", "));
    }
    Ok(())
}
