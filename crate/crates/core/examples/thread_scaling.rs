//! Operator applications and implicit steps timed across thread counts on
//! a fixed partition. Results are compared bit for bit.
//!
//! cargo run --release --example thread_scaling -- [n] [order]

use std::sync::Arc;
use std::time::Instant;

use plaque_dg::analysis::simulate_steps;
use plaque_dg::fespace::Space;
use plaque_dg::flux::{FluxKind, FluxScheme};
use plaque_dg::mesh::unit_square;
use plaque_dg::model::{Heat2d, Model};
use plaque_dg::operator::{DiscreteOperator, OperatorOptions};
use plaque_dg::timeint::{Dirk, Tableau};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(48);
    let k = args.get(1).copied().unwrap_or(2);
    let model: Arc<dyn Model> = Arc::new(Heat2d);
    let space = Space::new(Arc::new(unit_square(n, None)?), k, 1)?;
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("{} elements, k = {k}, {} dofs, {hw} hardware thread(s)", space.mesh().num_elements(), space.num_dofs());
    let u0 = space.l2_project(|x, o| o[0] = x[0] * (1.0 - x[0]) * x[1]);
    let mut base = None;
    let mut reference: Option<Vec<f64>> = None;
    for threads in [1, 2, 4] {
        let opts = OperatorOptions { threads, parts: Some(4), ..Default::default() };
        let op = DiscreteOperator::new(space.clone(), model.clone(), FluxScheme::new(FluxKind::Cdg2, 2), opts)?;
        let mut r = vec![0.0; space.num_dofs()];
        let start = Instant::now();
        for _ in 0..50 {
            op.apply(u0.coeffs(), 0.0, &mut r)?;
        }
        let apply = start.elapsed().as_secs_f64() / 50.0;
        let start = Instant::now();
        let out = simulate_steps(&op, u0.clone(), 0.0, 1e-4, 5, &Dirk::new(Tableau::sdirk3()), |_, _, _| Ok(()))?;
        let wall = start.elapsed().as_secs_f64();
        let b = *base.get_or_insert(wall);
        let same = reference.get_or_insert_with(|| out.solution.coeffs().to_vec()).as_slice() == out.solution.coeffs();
        println!(
            "threads {threads}: apply {:.2} ms, 5 steps {wall:.2}s, speedup {:.2}, identical to 1 thread: {same}",
            apply * 1e3,
            b / wall
        );
    }
    Ok(())
}
