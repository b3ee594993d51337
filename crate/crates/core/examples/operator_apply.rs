//! Matrix-free application of the DG operator for each diffusion flux:
//! free-stream check, symmetry probe and timing.
//!
//! cargo run --release --example operator_apply -- [order]

use std::sync::Arc;
use std::time::Instant;

use plaque_dg::fespace::Space;
use plaque_dg::flux::{FluxKind, FluxScheme};
use plaque_dg::mesh::unit_square;
use plaque_dg::model::{Heat2d, Model};
use plaque_dg::operator::{DiscreteOperator, OperatorOptions};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(2);
    let model: Arc<dyn Model> = Arc::new(Heat2d);
    let space = Space::new(Arc::new(unit_square(16, None)?), k, 1)?;
    let n = space.num_dofs();
    println!("{} elements, k = {k}, {n} dofs", space.mesh().num_elements());

    // two pseudo-random states
    let v: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
    let w: Vec<f64> = (0..n).map(|i| ((i * 104729) % 97) as f64 / 97.0 - 0.5).collect();

    for kind in FluxKind::ALL {
        let op = DiscreteOperator::new(space.clone(), model.clone(), FluxScheme::new(kind, 2), OperatorOptions::default())?;
        let zero = vec![0.0; n];
        let mut r0 = vec![0.0; n];
        op.apply(&zero, 0.0, &mut r0)?;
        // L is affine in u for heat; remove the boundary data part
        let lin = |u: &[f64]| -> Result<Vec<f64>, Box<dyn std::error::Error>> {
            let mut r = vec![0.0; n];
            op.apply(u, 0.0, &mut r)?;
            Ok(r.iter().zip(&r0).map(|(a, b)| a - b).collect())
        };
        let (lv, lw) = (lin(&v)?, lin(&w)?);
        let asym = (dot(&w, &lv) - dot(&v, &lw)).abs() / dot(&v, &lv).abs();

        let start = Instant::now();
        let mut r = vec![0.0; n];
        let reps = 20;
        for _ in 0..reps {
            op.apply(&v, 0.0, &mut r)?;
        }
        let per = start.elapsed().as_secs_f64() / reps as f64;
        println!("{:>5}: |<w,Lv> - <v,Lw>| / |<v,Lv>| = {asym:.1e}, {:.2} ms per apply", kind.as_str(), per * 1e3);
    }
    Ok(())
}
