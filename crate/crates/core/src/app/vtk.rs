//! Legacy ASCII VTK output of DG fields.

use std::io::Write;

use crate::fespace::DiscreteFunction;
use crate::mesh::reference_vertex;

/// Writes an unstructured grid with one cell array (element mean) and one
/// point array (average of the element traces at each vertex) per species.
pub fn write_vtk<W: Write>(mut w: W, u: &DiscreteFunction, names: &[String], title: &str) -> std::io::Result<()> {
    let space = u.space();
    let mesh = space.mesh();
    let dim = mesh.dim();
    let ns = space.n_species();
    let ne = mesh.num_elements();
    let nv = mesh.num_vertices();
    let nvert = dim + 1;

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2])?;
    }
    writeln!(w, "CELLS {ne} {}", ne * (nvert + 1))?;
    for e in 0..ne {
        write!(w, "{nvert}")?;
        for v in mesh.element(e) {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    let cell_type = if dim == 2 { 5 } else { 10 };
    for _ in 0..ne {
        writeln!(w, "{cell_type}")?;
    }

    let mut means = vec![0.0; ne * ns];
    let mut vsum = vec![0.0; nv * ns];
    let mut vcount = vec![0usize; nv];
    let mut vals = vec![0.0; ns];
    for e in 0..ne {
        u.cell_average(e, &mut means[e * ns..(e + 1) * ns]);
        for (lv, &v) in mesh.element(e).iter().enumerate() {
            u.eval_reference(e, &reference_vertex(dim, lv), &mut vals);
            for s in 0..ns {
                vsum[v * ns + s] += vals[s];
            }
            vcount[v] += 1;
        }
    }

    writeln!(w, "CELL_DATA {ne}")?;
    for (s, name) in names.iter().enumerate().take(ns) {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for e in 0..ne {
            writeln!(w, "{:.10e}", means[e * ns + s])?;
        }
    }
    writeln!(w, "POINT_DATA {nv}")?;
    for (s, name) in names.iter().enumerate().take(ns) {
        writeln!(w, "SCALARS {name}_vertex double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in 0..nv {
            let c = vcount[v].max(1) as f64;
            writeln!(w, "{:.10e}", vsum[v * ns + s] / c)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fespace::Space;
    use crate::mesh::unit_square;

    #[test]
    fn linear_field_vertex_values() {
        let mesh = Arc::new(unit_square(2, None).unwrap());
        let space = Space::new(mesh, 1, 1).unwrap();
        let u = space.l2_project(|x, o| o[0] = 2.0 * x[0] + x[1]);
        let mut buf = Vec::new();
        write_vtk(&mut buf, &u, &["u".into()], "t").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("CELLS 8 32"));
        assert!(text.contains("CELL_TYPES 8"));
        let pd = text.split("SCALARS u_vertex double 1\nLOOKUP_TABLE default\n").nth(1).unwrap();
        let vals: Vec<f64> = pd.lines().take(9).map(|l| l.parse().unwrap()).collect();
        // vertex 4 is the centre (0.5, 0.5)
        assert!((vals[4] - 1.5).abs() < 1e-12);
        assert!((vals[8] - 3.0).abs() < 1e-12);
    }
}
