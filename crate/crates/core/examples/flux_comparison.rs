//! L² errors of the five diffusion fluxes on the manufactured heat problem.
//!
//! cargo run --release --example flux_comparison -- [order] [levels]

use plaque_dg::analysis::{eoc_study, Reference, StudyConfig};
use plaque_dg::flux::{FluxKind, FluxScheme};
use plaque_dg::mesh::{unit_square, MeshHierarchy};
use plaque_dg::model::ManufacturedKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let k = args.first().copied().unwrap_or(1);
    let levels = args.get(1).copied().unwrap_or(3);
    let hier = MeshHierarchy::new(unit_square(4, None)?, levels - 1)?;
    let model = ManufacturedKind::Heat2d.build();
    println!("{:>5} {}", "flux", (0..levels).map(|l| format!("{:>22}", format!("level {l}"))).collect::<String>());
    for kind in FluxKind::ALL {
        let cfg = StudyConfig::new(model.clone(), FluxScheme::new(kind, 2), k, 0.01, 0.05);
        let rows = eoc_study(&hier, levels, &cfg, &Reference::Exact)?;
        let cells: String = rows
            .iter()
            .map(|r| {
                let e = r.error.map_or("failed".into(), |e| format!("{e:.3e}"));
                let o = r.eoc.map_or("---".into(), |o| format!("{o:.2}"));
                format!("{:>22}", format!("{e} ({o})"))
            })
            .collect();
        println!("{:>5} {cells}", kind.as_str());
    }
    Ok(())
}
