//! L² projection onto the orthonormal modal basis and its convergence
//! under refinement.
//!
//! cargo run --release --example l2_projection

use std::f64::consts::PI;
use std::sync::Arc;

use plaque_dg::analysis::{eoc, l2_error_exact};
use plaque_dg::fespace::{basis_size, Space};
use plaque_dg::mesh::unit_square;

fn exact(x: &[f64; 3], out: &mut [f64]) {
    out[0] = (PI * x[0]).sin() * (PI * x[1]).sin();
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for k in 0..=4 {
        print!("k = {k} ({:2} basis functions):", basis_size(2, k)?);
        let mut prev: Option<f64> = None;
        for n in [2, 4, 8, 16] {
            let space = Space::new(Arc::new(unit_square(n, None)?), k, 1)?;
            let u = space.l2_project(exact);
            let err = l2_error_exact(&u, exact).total;
            match prev {
                Some(p) => print!("  {err:.2e} ({:.2})", eoc(p, err)?),
                None => print!("  {err:.2e}"),
            }
            prev = Some(err);
        }
        println!();
    }

    // totals are exact for the mean-preserving projection
    let space = Space::new(Arc::new(unit_square(4, None)?), 2, 1)?;
    let u = space.l2_project(exact);
    println!("∫u_h = {:.12}, exact {:.12}", u.totals()[0], 4.0 / (PI * PI));
    Ok(())
}
