//! Species balance of the plaque model: the change of every total is
//! matched against the integrated source and boundary rates.
//!
//! cargo run --release --example conservation_audit

use std::sync::Arc;

use plaque_dg::analysis::{audit_sample, conservation_audit, simulate};
use plaque_dg::fespace::Space;
use plaque_dg::flux::{FluxKind, FluxScheme};
use plaque_dg::mesh::{builtin, BoundaryTag};
use plaque_dg::model::{Model, PlaqueModel, PlaqueParams};
use plaque_dg::operator::{DiscreteOperator, OperatorOptions};
use plaque_dg::timeint::{Dirk, Tableau};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Arc::new(builtin("annulus-sector:171")?);
    let params = PlaqueParams { nu2: 1.0, sigma: 0.5, ..Default::default() };
    let model: Arc<dyn Model> = Arc::new(PlaqueModel::new(params)?);
    let space = Space::new(mesh.clone(), 1, 6)?;
    let op = DiscreteOperator::new(space.clone(), model, FluxScheme::new(FluxKind::Cdg2, 2), OperatorOptions::default())?;
    let u0 = space.l2_project(|x, o| {
        o.fill(0.0);
        o[0] = 0.3 * (-(x[0] * x[0] + (x[1] - 0.5).powi(2)) / 0.1).exp();
        o[3] = 0.1;
    });
    let mut samples = Vec::new();
    let dirk = Dirk::new(Tableau::sdirk2());
    let out = simulate(&op, u0, 0.0, 1.0, 0.05, &dirk, |step, t, u| {
        samples.push(audit_sample(&op, u, step, t)?);
        Ok(())
    })?;
    let rows = conservation_audit(&samples);
    println!("{} steps, {} Newton iterations", out.steps, out.stats.newton_iterations);
    let worst: f64 = rows.iter().flat_map(|r| r.balance.iter()).fold(0.0, |a, b| a.max(b.abs()));
    println!("largest per-step balance residual: {worst:.2e}");
    let last = rows.last().expect("at least one sample");
    let g_in = mesh.boundary_measure(|t| t == BoundaryTag::Gamma1In);
    println!("LDL inflow through Gamma1In: {:.6} (σ ν2 |Γ| T = {:.6})", last.boundary_inflow[4], 0.5 * g_in);
    println!(
        "c2 + c3: {:.6} -> {:.6}",
        samples[0].totals[4] + samples[0].totals[5],
        last.sample.totals[4] + last.sample.totals[5]
    );
    Ok(())
}
