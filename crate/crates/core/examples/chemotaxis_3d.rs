//! Reduced three-species chemotaxis model on the unit cube: a debris bump
//! produces attractant, immune cells drift towards it. Writes a legacy VTK
//! file of the final state.
//!
//! cargo run --release --example chemotaxis_3d -- [out.vtk]

use std::fs::File;
use std::io::BufWriter;
use std::sync::Arc;

use plaque_dg::analysis::simulate;
use plaque_dg::app::write_vtk;
use plaque_dg::fespace::Space;
use plaque_dg::flux::{FluxKind, FluxScheme};
use plaque_dg::mesh::unit_cube;
use plaque_dg::model::{Model, PlaqueParams, ReducedModel};
use plaque_dg::operator::{DiscreteOperator, OperatorOptions};
use plaque_dg::timeint::{Dirk, Tableau};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "chemotaxis.vtk".into());
    let params = PlaqueParams { chi11_0: 0.05, ..Default::default() };
    let model: Arc<dyn Model> = Arc::new(ReducedModel::new(params)?);
    let space = Space::new(Arc::new(unit_cube(4)?), 1, 3)?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let opts = OperatorOptions { threads, ..Default::default() };
    let op = DiscreteOperator::new(space.clone(), model.clone(), FluxScheme::new(FluxKind::Cdg2, 3), opts)?;
    let u0 = space.l2_project(|x, o| {
        let r2 = (x[0] - 0.3).powi(2) + (x[1] - 0.6).powi(2) + (x[2] - 0.5).powi(2);
        o[0] = 0.2;
        o[1] = (-r2 / 0.02).exp();
        o[2] = 0.0;
    });
    let out = simulate(&op, u0, 0.0, 0.5, 0.1, &Dirk::new(Tableau::sdirk2()), |step, t, u| {
        let f = space.function(u.to_vec())?;
        println!("step {step:2} t = {t:.2} totals {:?}", f.totals().iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>());
        Ok(())
    })?;
    let w = BufWriter::new(File::create(&path)?);
    write_vtk(w, &out.solution, &model.species_names(), "reduced chemotaxis")?;
    println!("wrote {path}");
    Ok(())
}
