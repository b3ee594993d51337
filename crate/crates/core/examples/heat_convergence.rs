//! Convergence of the CDG2 scheme on the manufactured heat problem.
//!
//! cargo run --release --example heat_convergence -- [max_order] [levels]

use plaque_dg::analysis::{eoc_study, Reference, StudyConfig};
use plaque_dg::flux::{FluxKind, FluxScheme};
use plaque_dg::mesh::{unit_square, MeshHierarchy};
use plaque_dg::model::ManufacturedKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let max_order = args.first().copied().unwrap_or(2);
    let levels = args.get(1).copied().unwrap_or(3);
    let hier = MeshHierarchy::new(unit_square(4, None)?, levels - 1)?;
    let model = ManufacturedKind::Heat2d.build();
    for k in 1..=max_order {
        let cfg = StudyConfig::new(model.clone(), FluxScheme::new(FluxKind::Cdg2, 2), k, 0.01, 0.05);
        let rows = eoc_study(&hier, levels, &cfg, &Reference::Exact)?;
        println!("k = {k}");
        for r in rows {
            let eoc = r.eoc.map_or("---".to_string(), |e| format!("{e:.3}"));
            println!("  level {} {:>6} elements  error {:.3e}  eoc {eoc:>6}  {:.2}s", r.level, r.elements, r.error.unwrap_or(f64::NAN), r.wall);
        }
    }
    Ok(())
}
