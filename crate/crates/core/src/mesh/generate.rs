//! Builtin mesh generators.
//!
//! Tag convention: `Gamma1` is the inner/bottom boundary, `Gamma2` the
//! outer/top boundary, `Gamma1In` an optional sub-segment of `Gamma1`, and
//! everything else is `NoFlow`.

use super::{BoundaryMap, BoundaryTag, Mesh, MeshError, MAX_VERTS};

fn key(vs: &[usize]) -> Vec<usize> {
    let mut k = vs.to_vec();
    k.sort_unstable();
    k
}

/// Unit square split into `n x n` squares, each cut along its rising
/// diagonal into two triangles (`2 n^2` elements).
///
/// `inflow` marks the bottom-edge segment `x in [a, b]` as `Gamma1In`.
pub fn unit_square(n: usize, inflow: Option<(f64, f64)>) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::UnknownBuiltin("unit-square:0".into()));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut verts = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            verts.push([i as f64 * h, j as f64 * h, 0.0]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push([a, b, c, usize::MAX]);
            cells.push([a, c, d, usize::MAX]);
        }
    }
    let mut bmap = BoundaryMap::new();
    for i in 0..n {
        let xm = (i as f64 + 0.5) * h;
        let bottom = match inflow {
            Some((lo, hi)) if xm >= lo && xm <= hi => BoundaryTag::Gamma1In,
            _ => BoundaryTag::Gamma1,
        };
        bmap.insert(key(&[id(i, 0), id(i + 1, 0)]), bottom);
        bmap.insert(key(&[id(i, n), id(i + 1, n)]), BoundaryTag::Gamma2);
    }
    Mesh::from_packed(2, verts, cells, &bmap, 0, None)
}

/// Unit cube split into `n^3` cubes, each into six tetrahedra sharing the
/// main diagonal (Kuhn subdivision, conforming across cubes).
pub fn unit_cube(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::UnknownBuiltin("unit-cube:0".into()));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut verts = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                verts.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for p in PERMS {
                    let mut pos = [i, j, k];
                    let mut cell = [0; MAX_VERTS];
                    cell[0] = id(pos[0], pos[1], pos[2]);
                    for (s, &axis) in p.iter().enumerate() {
                        pos[axis] += 1;
                        cell[s + 1] = id(pos[0], pos[1], pos[2]);
                    }
                    cells.push(cell);
                }
            }
        }
    }
    let mut bmap = BoundaryMap::new();
    // bottom z = 0 -> Gamma1, top z = 1 -> Gamma2; each boundary square
    // carries two triangles, register both diagonals' triangles.
    for j in 0..n {
        for i in 0..n {
            for (kk, tag) in [(0, BoundaryTag::Gamma1), (n, BoundaryTag::Gamma2)] {
                let q = [id(i, j, kk), id(i + 1, j, kk), id(i + 1, j + 1, kk), id(i, j + 1, kk)];
                for tri in [[q[0], q[1], q[2]], [q[0], q[2], q[3]], [q[0], q[1], q[3]], [q[1], q[2], q[3]]] {
                    bmap.insert(key(&tri), tag);
                }
            }
        }
    }
    Mesh::from_packed(3, verts, cells, &bmap, 0, None)
}

/// Two-panel polygonal annulus sector: an arterial-wall strip whose lumen
/// side is a polyline with a single kink. The lumen-side angle at the kink is
/// `corner_angle_deg`, so the wall has a re-entrant corner of
/// `360 - corner_angle_deg` degrees there.
///
/// The default (171 degrees, `10 x 2` cells per panel) yields 80 triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusSector {
    pub corner_angle_deg: f64,
    /// Length of each panel along the lumen.
    pub panel_length: f64,
    /// Wall thickness.
    pub thickness: f64,
    /// Cells along each panel.
    pub nx: usize,
    /// Cells across the wall.
    pub ny: usize,
    /// Lumen-side faces whose midpoint is within this distance of the kink
    /// (measured along the panel) are tagged `Gamma1In`.
    pub inflow_half_width: f64,
}

impl Default for AnnulusSector {
    fn default() -> Self {
        AnnulusSector {
            corner_angle_deg: 171.0,
            panel_length: 4.0,
            thickness: 1.0,
            nx: 10,
            ny: 2,
            inflow_half_width: 1.0,
        }
    }
}

impl AnnulusSector {
    pub fn build(&self) -> Result<Mesh, MeshError> {
        annulus_sector(self)
    }
}

pub fn annulus_sector(cfg: &AnnulusSector) -> Result<Mesh, MeshError> {
    if !(cfg.corner_angle_deg > 90.0 && cfg.corner_angle_deg <= 180.0) || cfg.nx == 0 || cfg.ny == 0 {
        return Err(MeshError::UnknownBuiltin(format!("annulus-sector:{}", cfg.corner_angle_deg)));
    }
    let beta = (180.0 - cfg.corner_angle_deg).to_radians() / 2.0;
    let (l, w) = (cfg.panel_length, cfg.thickness);
    let (cb, sb) = (beta.cos(), beta.sin());
    // lumen polyline P0 -> K -> P2, wall above it
    let p0 = [-l * cb, -l * sb];
    let k = [0.0, 0.0];
    let p2 = [l * cb, -l * sb];
    let q0 = [p0[0] - w * sb, p0[1] + w * cb];
    let kk = [0.0, w / cb];
    let q2 = [p2[0] + w * sb, p2[1] + w * cb];

    let nx = cfg.nx;
    let ny = cfg.ny;
    let cols = 2 * nx + 1;
    let id = |i: usize, j: usize| j * cols + i;
    let mut verts = Vec::with_capacity(cols * (ny + 1));
    for j in 0..=ny {
        let t = j as f64 / ny as f64;
        for i in 0..cols {
            // bilinear interpolation inside the panel quadrilateral
            let (a, b, c, d, s) = if i <= nx {
                (p0, k, kk, q0, i as f64 / nx as f64)
            } else {
                (k, p2, q2, kk, (i - nx) as f64 / nx as f64)
            };
            let x = (1.0 - s) * (1.0 - t) * a[0] + s * (1.0 - t) * b[0] + s * t * c[0] + (1.0 - s) * t * d[0];
            let y = (1.0 - s) * (1.0 - t) * a[1] + s * (1.0 - t) * b[1] + s * t * c[1] + (1.0 - s) * t * d[1];
            verts.push([x, y, 0.0]);
        }
    }
    let mut cells = Vec::with_capacity(4 * nx * ny);
    for j in 0..ny {
        for i in 0..2 * nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            // alternate diagonals so the kink column stays symmetric
            if i < nx {
                cells.push([a, b, d, usize::MAX]);
                cells.push([b, c, d, usize::MAX]);
            } else {
                cells.push([a, b, c, usize::MAX]);
                cells.push([a, c, d, usize::MAX]);
            }
        }
    }
    let mut bmap = BoundaryMap::new();
    let panel_dx = l / nx as f64;
    for i in 0..2 * nx {
        let mid = (i as f64 + 0.5) - nx as f64;
        let bottom = if mid.abs() * panel_dx <= cfg.inflow_half_width {
            BoundaryTag::Gamma1In
        } else {
            BoundaryTag::Gamma1
        };
        bmap.insert(key(&[id(i, 0), id(i + 1, 0)]), bottom);
        bmap.insert(key(&[id(i, ny), id(i + 1, ny)]), BoundaryTag::Gamma2);
    }
    Mesh::from_packed(2, verts, cells, &bmap, 0, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{norm, sub};

    #[test]
    fn two_triangle_square() {
        let m = unit_square(1, None).unwrap();
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.faces().len(), 5);
        assert!((m.total_volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_square_volumes() {
        let m = unit_square(4, None).unwrap();
        assert_eq!(m.num_elements(), 32);
        for e in 0..32 {
            assert!((m.geometry(e).volume - 1.0 / 32.0).abs() < 1e-15);
        }
    }

    #[test]
    fn square_tags() {
        let m = unit_square(4, Some((0.25, 0.75))).unwrap();
        let g1 = m.boundary_measure(|t| t == BoundaryTag::Gamma1);
        let g1in = m.boundary_measure(|t| t == BoundaryTag::Gamma1In);
        let g2 = m.boundary_measure(|t| t == BoundaryTag::Gamma2);
        let nf = m.boundary_measure(|t| t == BoundaryTag::NoFlow);
        assert!((g1 - 0.5).abs() < 1e-14);
        assert!((g1in - 0.5).abs() < 1e-14);
        assert!((g2 - 1.0).abs() < 1e-14);
        assert!((nf - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cube_volume_and_tags() {
        let m = unit_cube(2).unwrap();
        assert_eq!(m.num_elements(), 48);
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        assert!((m.boundary_measure(|t| t == BoundaryTag::Gamma1) - 1.0).abs() < 1e-14);
        assert!((m.boundary_measure(|t| t == BoundaryTag::Gamma2) - 1.0).abs() < 1e-14);
        assert!((m.boundary_measure(|t| t == BoundaryTag::NoFlow) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn annulus_sector_has_fixed_corner() {
        let cfg = AnnulusSector::default();
        let m = cfg.build().unwrap();
        assert_eq!(m.num_elements(), 80);
        // kink vertex on the lumen side is at the origin
        let kink = m.vertices().iter().position(|p| norm(p) < 1e-14).unwrap();
        let lumen: Vec<_> = m
            .faces()
            .iter()
            .filter(|f| f.tag.is_some_and(|t| t.is_gamma1()) && f.vertices[..2].contains(&kink))
            .collect();
        assert_eq!(lumen.len(), 2);
        let other = |f: &crate::mesh::Face| {
            let v = if f.vertices[0] == kink { f.vertices[1] } else { f.vertices[0] };
            m.vertices()[v]
        };
        let a = other(lumen[0]);
        let b = other(lumen[1]);
        let ang = (crate::mesh::dot(&a, &b) / (norm(&a) * norm(&b))).acos().to_degrees();
        assert!((ang - 171.0).abs() < 1e-9, "{ang}");
        // wall area: two trapezoid-like panels of thickness 1
        let area = m.total_volume();
        assert!(area > 7.9 && area < 8.2, "{area}");
        let _ = sub(&a, &b);
    }
}
