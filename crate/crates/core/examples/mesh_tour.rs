//! Builtin meshes, uniform refinement, boundary tags, partitioning and the
//! Gmsh reader.
//!
//! cargo run --release --example mesh_tour

use plaque_dg::mesh::{builtin, parse_gmsh, partition, BoundaryTag, MeshHierarchy};

const SQUARE_MSH: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 \"Gamma1\"
1 2 \"Gamma2\"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
4
1 1 2 1 1 1 2
2 1 2 2 2 3 4
3 2 2 0 0 1 2 3
4 2 2 0 0 1 3 4
$EndElements
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for spec in ["unit-square:4", "unit-cube:2", "annulus-sector:171"] {
        let m = builtin(spec)?;
        println!(
            "{spec:>20}: dim {}, {} elements, {} faces, volume {:.4}",
            m.dim(),
            m.num_elements(),
            m.faces().len(),
            m.total_volume()
        );
        for tag in [BoundaryTag::Gamma1, BoundaryTag::Gamma1In, BoundaryTag::Gamma2, BoundaryTag::NoFlow] {
            let len = m.boundary_measure(|t| t == tag);
            if len > 0.0 {
                println!("{:>24} measure {len:.4}", format!("{tag:?}"));
            }
        }
    }

    // refinement keeps the corner angle and halves h
    let hier = MeshHierarchy::new(builtin("annulus-sector:171")?, 3)?;
    for (l, m) in hier.levels().iter().enumerate() {
        println!("level {l}: {} elements", m.num_elements());
    }
    let fine = hier.level(3);
    println!("element 1000 on level 3 descends from element {} on level 0", hier.ancestor(3, 1000, 0));

    let parts = partition(fine, 4)?;
    let mut sizes = [0usize; 4];
    for p in parts {
        sizes[p] += 1;
    }
    println!("4-way partition sizes: {sizes:?}");

    let m = parse_gmsh(SQUARE_MSH)?;
    println!("gmsh square: {} elements, Gamma1 length {}", m.num_elements(), m.boundary_measure(|t| t == BoundaryTag::Gamma1));
    Ok(())
}
