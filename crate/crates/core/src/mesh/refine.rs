//! Uniform red refinement and nested mesh hierarchies.

use std::collections::HashMap;
use std::sync::Arc;

use super::{local_face_vertices, norm, signed_volume, sub, BoundaryMap, Mesh, MeshError, MAX_VERTS};

/// Splits every triangle into 4 and every tetrahedron into 8 children via
/// edge midpoints. Tetrahedra cut their interior octahedron along the
/// shortest diagonal (ties go to the lexicographically first diagonal).
/// Children of element `e` are stored contiguously at `e * nchildren ..`.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh, MeshError> {
    let dim = mesh.dim();
    let mut verts = mesh.vertices().to_vec();
    // midpoint vertex -> the two parent vertices it came from
    let mut origin: Vec<[usize; 2]> = (0..verts.len()).map(|v| [v, v]).collect();
    let mut edge_mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>, origin: &mut Vec<[usize; 2]>| -> usize {
        let k = (a.min(b), a.max(b));
        *edge_mid.entry(k).or_insert_with(|| {
            let (pa, pb) = (verts[a], verts[b]);
            verts.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])]);
            origin.push([k.0, k.1]);
            verts.len() - 1
        })
    };

    let nchild = if dim == 2 { 4 } else { 8 };
    let mut cells = Vec::with_capacity(mesh.num_elements() * nchild);
    let mut parent = Vec::with_capacity(mesh.num_elements() * nchild);
    for e in 0..mesh.num_elements() {
        let v = mesh.element(e).to_vec();
        let mut m = [[0usize; 4]; 4];
        for i in 0..=dim {
            for j in (i + 1)..=dim {
                let id = midpoint(v[i], v[j], &mut verts, &mut origin);
                m[i][j] = id;
                m[j][i] = id;
            }
        }
        let children: Vec<[usize; MAX_VERTS]> = if dim == 2 {
            vec![
                [v[0], m[0][1], m[0][2], usize::MAX],
                [m[0][1], v[1], m[1][2], usize::MAX],
                [m[0][2], m[1][2], v[2], usize::MAX],
                [m[0][1], m[1][2], m[0][2], usize::MAX],
            ]
        } else {
            let mut ch = vec![
                [v[0], m[0][1], m[0][2], m[0][3]],
                [m[0][1], v[1], m[1][2], m[1][3]],
                [m[0][2], m[1][2], v[2], m[2][3]],
                [m[0][3], m[1][3], m[2][3], v[3]],
            ];
            // octahedron diagonals and their equatorial rings
            let diags = [
                ((m[0][1], m[2][3]), [m[0][2], m[0][3], m[1][3], m[1][2]]),
                ((m[0][2], m[1][3]), [m[0][1], m[0][3], m[2][3], m[1][2]]),
                ((m[0][3], m[1][2]), [m[0][1], m[0][2], m[2][3], m[1][3]]),
            ];
            let len = |(a, b): (usize, usize)| norm(&sub(&verts[a], &verts[b]));
            let mut best = 0;
            for d in 1..3 {
                if len(diags[d].0) < len(diags[best].0) {
                    best = d;
                }
            }
            let ((a, b), ring) = diags[best];
            for r in 0..4 {
                ch.push([a, b, ring[r], ring[(r + 1) % 4]]);
            }
            ch
        };
        for mut c in children {
            let pts: Vec<[f64; 3]> = c[..=dim].iter().map(|&i| verts[i]).collect();
            if signed_volume(dim, &pts) < 0.0 {
                c.swap(dim - 1, dim);
            }
            cells.push(c);
            parent.push(e);
        }
    }

    // inherit boundary tags: a child boundary face's parent vertices span
    // exactly one parent boundary face
    let mut parent_bfaces: BoundaryMap = BoundaryMap::new();
    for f in mesh.faces().iter().filter(|f| f.is_boundary()) {
        let mut k = f.vertices[..dim].to_vec();
        k.sort_unstable();
        parent_bfaces.insert(k, f.tag.expect("boundary face tagged"));
    }
    let mut bmap = BoundaryMap::new();
    for (ci, c) in cells.iter().enumerate() {
        let pe = parent[ci];
        for f in 0..=dim {
            let lv = local_face_vertices(dim, f);
            let fv: Vec<usize> = lv[..dim].iter().map(|&l| c[l]).collect();
            let mut span: Vec<usize> = fv.iter().flat_map(|&x| origin[x]).collect();
            span.sort_unstable();
            span.dedup();
            if span.len() != dim {
                continue;
            }
            if let Some(&tag) = parent_bfaces.get(&span) {
                // the span must belong to the parent element itself
                if span.iter().all(|s| mesh.element(pe).contains(s)) {
                    let mut k = fv.clone();
                    k.sort_unstable();
                    bmap.insert(k, tag);
                }
            }
        }
    }
    Mesh::from_packed(dim, verts, cells, &bmap, mesh.level() + 1, Some(parent))
}

/// A sequence of nested meshes, each a uniform refinement of the previous.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    levels: Vec<Arc<Mesh>>,
}

impl MeshHierarchy {
    pub fn new(base: Mesh, levels: usize) -> Result<Self, MeshError> {
        let mut out = vec![Arc::new(base)];
        for _ in 0..levels {
            let next = refine_uniform(out.last().unwrap())?;
            out.push(Arc::new(next));
        }
        Ok(MeshHierarchy { levels: out })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &Arc<Mesh> {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[Arc<Mesh>] {
        &self.levels
    }

    /// Index of the level holding `mesh` (pointer identity).
    pub fn position(&self, mesh: &Arc<Mesh>) -> Option<usize> {
        self.levels.iter().position(|m| Arc::ptr_eq(m, mesh))
    }

    /// Ancestor of element `e` of level `fine` on level `coarse <= fine`.
    pub fn ancestor(&self, fine: usize, mut e: usize, coarse: usize) -> usize {
        for l in ((coarse + 1)..=fine).rev() {
            e = self.levels[l].parent_map().expect("refined level has parent map")[e];
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_cube, unit_square, BoundaryTag};

    #[test]
    fn square_refinement_counts() {
        let m0 = unit_square(1, None).unwrap();
        let m1 = refine_uniform(&m0).unwrap();
        assert_eq!(m1.num_elements(), 8);
        assert!((m1.total_volume() - 1.0).abs() < 1e-15);
        assert_eq!(m1.level(), 1);
        assert_eq!(m1.parent_map().unwrap()[5], 1);
    }

    #[test]
    fn reference_tet_children() {
        let m = Mesh::new(
            3,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
            &BoundaryMap::new(),
        )
        .unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.num_elements(), 8);
        // each child volume from its own vertex coordinates
        let mut total = 0.0;
        for e in 0..8 {
            let pts: Vec<[f64; 3]> = r.element(e).iter().map(|&v| r.vertices()[v]).collect();
            let a = sub(&pts[1], &pts[0]);
            let b = sub(&pts[2], &pts[0]);
            let c = sub(&pts[3], &pts[0]);
            let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]);
            assert!((det / 6.0 - 1.0 / 48.0).abs() < 1e-15);
            total += det / 6.0;
        }
        assert!((total - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_tags_inherited() {
        let m0 = unit_square(2, Some((0.0, 0.5))).unwrap();
        let m1 = refine_uniform(&m0).unwrap();
        for tag in [BoundaryTag::Gamma1, BoundaryTag::Gamma1In, BoundaryTag::Gamma2, BoundaryTag::NoFlow] {
            let a = m0.boundary_measure(|t| t == tag);
            let b = m1.boundary_measure(|t| t == tag);
            assert!((a - b).abs() < 1e-14, "{tag}: {a} vs {b}");
        }
        let c0 = unit_cube(1).unwrap();
        let c1 = refine_uniform(&c0).unwrap();
        assert_eq!(c1.num_elements(), 48);
        for tag in [BoundaryTag::Gamma1, BoundaryTag::Gamma2, BoundaryTag::NoFlow] {
            let a = c0.boundary_measure(|t| t == tag);
            let b = c1.boundary_measure(|t| t == tag);
            assert!((a - b).abs() < 1e-14, "{tag}: {a} vs {b}");
        }
    }

    #[test]
    fn hierarchy_ancestors() {
        let h = MeshHierarchy::new(unit_square(1, None).unwrap(), 2).unwrap();
        assert_eq!(h.level(2).num_elements(), 32);
        for e in 0..32 {
            let a = h.ancestor(2, e, 0);
            assert_eq!(a, e / 16);
            let c = h.level(2).centroid(e);
            let xi = h.level(0).geometry(a).to_reference(&c);
            assert!(xi[0] >= -1e-14 && xi[1] >= -1e-14 && xi[0] + xi[1] <= 1.0 + 1e-14);
        }
    }
}
