//! Conforming unstructured simplicial meshes (triangles in 2D, tetrahedra in 3D).
//!
//! A [`Mesh`] is immutable once built. Faces are derived from the element
//! connectivity: local face `i` of a simplex is the face opposite its local
//! vertex `i`, and every [`Face`] stores its vertices in the local order of
//! its inside element.

mod generate;
mod gmsh;
mod partition;
mod refine;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{annulus_sector, unit_cube, unit_square, AnnulusSector};
pub use gmsh::parse_gmsh;
pub use partition::partition;
pub use refine::{refine_uniform, MeshHierarchy};

/// Maximum number of vertices of a supported simplex.
pub const MAX_VERTS: usize = 4;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("topology error at element {element}: {msg}")]
    Topology { element: usize, msg: String },
    #[error("degenerate element {element} (volume {volume:e})")]
    Degenerate { element: usize, volume: f64 },
    #[error("invalid partition request: {0}")]
    Partition(String),
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error("unknown builtin mesh {0:?}")]
    UnknownBuiltin(String),
}

/// Boundary classification of a face.
///
/// `Gamma1In` faces are part of `Gamma1`; see [`BoundaryTag::is_gamma1`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    Gamma1,
    Gamma1In,
    Gamma2,
    NoFlow,
}

impl BoundaryTag {
    pub fn is_gamma1(self) -> bool {
        matches!(self, BoundaryTag::Gamma1 | BoundaryTag::Gamma1In)
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "gamma1" => Some(BoundaryTag::Gamma1),
            "gamma1in" | "gamma1_in" => Some(BoundaryTag::Gamma1In),
            "gamma2" => Some(BoundaryTag::Gamma2),
            "noflow" | "no_flow" | "wall" => Some(BoundaryTag::NoFlow),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryTag::Gamma1 => "Gamma1",
            BoundaryTag::Gamma1In => "Gamma1In",
            BoundaryTag::Gamma2 => "Gamma2",
            BoundaryTag::NoFlow => "NoFlow",
        };
        f.write_str(s)
    }
}

/// One side of a face: the adjacent element and the local face index in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceSide {
    pub element: usize,
    pub local_face: usize,
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Face vertices in the local order of the inside element (`dim` entries used).
    pub vertices: [usize; 3],
    pub inside: FaceSide,
    pub outside: Option<FaceSide>,
    /// Unit normal pointing from the inside element to the outside.
    pub normal: [f64; 3],
    /// Length (2D) or area (3D).
    pub measure: f64,
    pub tag: Option<BoundaryTag>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.outside.is_none()
    }
}

/// Affine map `x = origin + J * xi` from the reference simplex onto an element.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub origin: [f64; 3],
    pub jacobian: [[f64; 3]; 3],
    pub inverse: [[f64; 3]; 3],
    pub det: f64,
    pub volume: f64,
    pub diameter: f64,
}

impl ElementGeometry {
    pub fn to_physical(&self, xi: &[f64; 3]) -> [f64; 3] {
        let mut x = self.origin;
        for (r, xr) in x.iter_mut().enumerate() {
            for c in 0..3 {
                *xr += self.jacobian[r][c] * xi[c];
            }
        }
        x
    }

    pub fn to_reference(&self, x: &[f64; 3]) -> [f64; 3] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1], x[2] - self.origin[2]];
        let mut xi = [0.0; 3];
        for (r, xir) in xi.iter_mut().enumerate() {
            for c in 0..3 {
                *xir += self.inverse[r][c] * d[c];
            }
        }
        xi
    }

    /// Physical gradient `J^{-T} g` of a reference gradient `g`.
    #[inline]
    pub fn grad_to_physical(&self, g: &[f64; 3]) -> [f64; 3] {
        let inv = &self.inverse;
        [
            inv[0][0] * g[0] + inv[1][0] * g[1] + inv[2][0] * g[2],
            inv[0][1] * g[0] + inv[1][1] * g[1] + inv[2][1] * g[2],
            inv[0][2] * g[0] + inv[1][2] * g[1] + inv[2][2] * g[2],
        ]
    }

    /// `J^{-1} v`, used to pull physical vectors back so that
    /// `v . (J^{-T} g) = (J^{-1} v) . g`.
    #[inline]
    pub fn pull_back(&self, v: &[f64; 3]) -> [f64; 3] {
        let inv = &self.inverse;
        [
            inv[0][0] * v[0] + inv[0][1] * v[1] + inv[0][2] * v[2],
            inv[1][0] * v[0] + inv[1][1] * v[1] + inv[1][2] * v[2],
            inv[2][0] * v[0] + inv[2][1] * v[1] + inv[2][2] * v[2],
        ]
    }
}

/// Volume of the reference simplex: 1/2 in 2D, 1/6 in 3D.
pub fn reference_volume(dim: usize) -> f64 {
    match dim {
        2 => 0.5,
        3 => 1.0 / 6.0,
        _ => 1.0,
    }
}

/// Reference coordinates of the local vertices of the reference simplex.
pub fn reference_vertex(dim: usize, v: usize) -> [f64; 3] {
    let mut p = [0.0; 3];
    if v > 0 && v <= dim {
        p[v - 1] = 1.0;
    }
    p
}

/// Local vertex indices of local face `f` (all vertices except `f`, ascending).
pub fn local_face_vertices(dim: usize, f: usize) -> [usize; 3] {
    let mut out = [usize::MAX; 3];
    let mut n = 0;
    for v in 0..=dim {
        if v != f {
            out[n] = v;
            n += 1;
        }
    }
    out
}

/// Boundary tag lookup keyed by the sorted vertex set of a boundary face.
pub type BoundaryMap = HashMap<Vec<usize>, BoundaryTag>;

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    cells: Vec<[usize; MAX_VERTS]>,
    faces: Vec<Face>,
    cell_faces: Vec<[usize; MAX_VERTS]>,
    geometry: Vec<ElementGeometry>,
    level: usize,
    parent: Option<Vec<usize>>,
}

pub(crate) fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Signed volume of a simplex given by its vertex coordinates.
pub fn signed_volume(dim: usize, pts: &[[f64; 3]]) -> f64 {
    match dim {
        2 => {
            let a = sub(&pts[1], &pts[0]);
            let b = sub(&pts[2], &pts[0]);
            0.5 * (a[0] * b[1] - a[1] * b[0])
        }
        3 => {
            let a = sub(&pts[1], &pts[0]);
            let b = sub(&pts[2], &pts[0]);
            let c = sub(&pts[3], &pts[0]);
            dot(&a, &cross(&b, &c)) / 6.0
        }
        _ => 0.0,
    }
}

fn invert3(m: &[[f64; 3]; 3]) -> ([[f64; 3]; 3], f64) {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let id = 1.0 / det;
    let inv = [
        [
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * id,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * id,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * id,
        ],
        [
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * id,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * id,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * id,
        ],
        [
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * id,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * id,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * id,
        ],
    ];
    (inv, det)
}

fn element_geometry(dim: usize, pts: &[[f64; 3]]) -> ElementGeometry {
    let mut jac = [[0.0; 3]; 3];
    for c in 0..dim {
        let e = sub(&pts[c + 1], &pts[0]);
        for r in 0..3 {
            jac[r][c] = e[r];
        }
    }
    // Pad the 2D Jacobian with the identity in z so it stays invertible.
    if dim == 2 {
        jac[2][2] = 1.0;
    }
    let (inverse, det) = invert3(&jac);
    let mut diameter: f64 = 0.0;
    for i in 0..=dim {
        for j in (i + 1)..=dim {
            diameter = diameter.max(norm(&sub(&pts[i], &pts[j])));
        }
    }
    ElementGeometry {
        origin: pts[0],
        jacobian: jac,
        inverse,
        det,
        volume: det.abs() * reference_volume(dim),
        diameter,
    }
}

fn face_normal_measure(dim: usize, pts: &[[f64; 3]]) -> ([f64; 3], f64) {
    match dim {
        2 => {
            let t = sub(&pts[1], &pts[0]);
            let len = norm(&t);
            ([t[1] / len, -t[0] / len, 0.0], len)
        }
        _ => {
            let n = cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]));
            let a = norm(&n);
            ([n[0] / a, n[1] / a, n[2] / a], 0.5 * a)
        }
    }
}

impl Mesh {
    /// Builds a mesh from raw connectivity. Elements with negative orientation
    /// are reordered; zero-volume elements and non-manifold faces are errors.
    /// Boundary faces missing from `boundary` are tagged `NoFlow`.
    pub fn new(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        cells: Vec<Vec<usize>>,
        boundary: &BoundaryMap,
    ) -> Result<Self, MeshError> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::Dimension(dim));
        }
        let nv = dim + 1;
        let mut packed = Vec::with_capacity(cells.len());
        for (e, c) in cells.iter().enumerate() {
            if c.len() != nv {
                return Err(MeshError::Topology {
                    element: e,
                    msg: format!("expected {nv} vertices, got {}", c.len()),
                });
            }
            let mut cell = [usize::MAX; MAX_VERTS];
            for (i, &v) in c.iter().enumerate() {
                if v >= vertices.len() {
                    return Err(MeshError::Topology {
                        element: e,
                        msg: format!("vertex index {v} out of range"),
                    });
                }
                cell[i] = v;
            }
            packed.push(cell);
        }
        Self::from_packed(dim, vertices, packed, boundary, 0, None)
    }

    pub(crate) fn from_packed(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        mut cells: Vec<[usize; MAX_VERTS]>,
        boundary: &BoundaryMap,
        level: usize,
        parent: Option<Vec<usize>>,
    ) -> Result<Self, MeshError> {
        let nv = dim + 1;
        let mut geometry = Vec::with_capacity(cells.len());
        for (e, cell) in cells.iter_mut().enumerate() {
            let mut pts = [[0.0; 3]; MAX_VERTS];
            for i in 0..nv {
                pts[i] = vertices[cell[i]];
            }
            let mut vol = signed_volume(dim, &pts[..nv]);
            let scale = (0..nv)
                .flat_map(|i| (0..nv).map(move |j| (i, j)))
                .map(|(i, j)| norm(&sub(&pts[i], &pts[j])))
                .fold(0.0_f64, f64::max);
            if !(vol.abs() > 1e-14 * scale.powi(dim as i32)) {
                return Err(MeshError::Degenerate { element: e, volume: vol });
            }
            if vol < 0.0 {
                cell.swap(nv - 2, nv - 1);
                pts.swap(nv - 2, nv - 1);
                vol = -vol;
            }
            debug_assert!(vol > 0.0);
            geometry.push(element_geometry(dim, &pts[..nv]));
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut cell_faces = vec![[usize::MAX; MAX_VERTS]; cells.len()];
        let mut lookup: HashMap<Vec<usize>, usize> = HashMap::with_capacity(cells.len() * 2);
        for (e, cell) in cells.iter().enumerate() {
            for f in 0..nv {
                let lv = local_face_vertices(dim, f);
                let mut fv = [usize::MAX; 3];
                for i in 0..dim {
                    fv[i] = cell[lv[i]];
                }
                let mut key: Vec<usize> = fv[..dim].to_vec();
                key.sort_unstable();
                match lookup.get(&key) {
                    Some(&fid) => {
                        let face = &mut faces[fid];
                        if face.outside.is_some() {
                            return Err(MeshError::Topology {
                                element: e,
                                msg: format!("face {key:?} shared by more than two elements"),
                            });
                        }
                        face.outside = Some(FaceSide { element: e, local_face: f });
                        cell_faces[e][f] = fid;
                    }
                    None => {
                        let mut pts = [[0.0; 3]; 3];
                        for i in 0..dim {
                            pts[i] = vertices[fv[i]];
                        }
                        let (mut normal, measure) = face_normal_measure(dim, &pts[..dim]);
                        // orient away from the opposite vertex
                        let opp = vertices[cell[f]];
                        if dot(&normal, &sub(&opp, &pts[0])) > 0.0 {
                            normal = [-normal[0], -normal[1], -normal[2]];
                        }
                        let fid = faces.len();
                        faces.push(Face {
                            vertices: fv,
                            inside: FaceSide { element: e, local_face: f },
                            outside: None,
                            normal,
                            measure,
                            tag: None,
                        });
                        lookup.insert(key, fid);
                        cell_faces[e][f] = fid;
                    }
                }
            }
        }
        for face in faces.iter_mut().filter(|f| f.outside.is_none()) {
            let mut key: Vec<usize> = face.vertices[..dim].to_vec();
            key.sort_unstable();
            face.tag = Some(boundary.get(&key).copied().unwrap_or(BoundaryTag::NoFlow));
        }

        let mesh = Mesh { dim, vertices, cells, faces, cell_faces, geometry, level, parent };
        mesh.check_conforming()?;
        Ok(mesh)
    }

    /// Rejects hanging vertices: no vertex of a boundary face may lie in the
    /// relative interior of another boundary face.
    fn check_conforming(&self) -> Result<(), MeshError> {
        let dim = self.dim;
        let bfaces: Vec<&Face> = self.faces.iter().filter(|f| f.is_boundary()).collect();
        if bfaces.is_empty() {
            return Ok(());
        }
        let mut bverts: Vec<usize> = bfaces.iter().flat_map(|f| f.vertices[..dim].to_vec()).collect();
        bverts.sort_unstable();
        bverts.dedup();

        let mean_h = bfaces.iter().map(|f| f.measure).sum::<f64>() / bfaces.len() as f64;
        let cell_size = if dim == 2 { mean_h } else { mean_h.sqrt() }.max(1e-300);
        let key = |p: &[f64; 3]| -> [i64; 3] {
            [
                (p[0] / cell_size).floor() as i64,
                (p[1] / cell_size).floor() as i64,
                (p[2] / cell_size).floor() as i64,
            ]
        };
        let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for &v in &bverts {
            grid.entry(key(&self.vertices[v])).or_default().push(v);
        }
        for face in &bfaces {
            let pts: Vec<[f64; 3]> = face.vertices[..dim].iter().map(|&v| self.vertices[v]).collect();
            let mut lo = pts[0];
            let mut hi = pts[0];
            for p in &pts {
                for c in 0..3 {
                    lo[c] = lo[c].min(p[c]);
                    hi[c] = hi[c].max(p[c]);
                }
            }
            let (klo, khi) = (key(&lo), key(&hi));
            let h = face.measure.powf(1.0 / (dim - 1) as f64);
            for i in klo[0]..=khi[0] {
                for j in klo[1]..=khi[1] {
                    for k in klo[2]..=khi[2] {
                        let Some(cands) = grid.get(&[i, j, k]) else { continue };
                        for &v in cands {
                            if face.vertices[..dim].contains(&v) {
                                continue;
                            }
                            if point_in_face_interior(dim, &pts, &self.vertices[v], h) {
                                return Err(MeshError::Topology {
                                    element: face.inside.element,
                                    msg: format!("hanging vertex {v} on boundary face"),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn num_elements(&self) -> usize {
        self.cells.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    /// Vertex indices of element `e` in stored (positively oriented) order.
    pub fn element(&self, e: usize) -> &[usize] {
        &self.cells[e][..self.dim + 1]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Face ids of element `e`, indexed by local face.
    pub fn element_faces(&self, e: usize) -> &[usize] {
        &self.cell_faces[e][..self.dim + 1]
    }

    pub fn geometry(&self, e: usize) -> &ElementGeometry {
        &self.geometry[e]
    }

    pub fn boundary_tag(&self, face: usize) -> Option<BoundaryTag> {
        self.faces[face].tag
    }

    /// Child-to-parent element map, present on meshes produced by refinement.
    pub fn parent_map(&self) -> Option<&[usize]> {
        self.parent.as_deref()
    }

    pub fn total_volume(&self) -> f64 {
        self.geometry.iter().map(|g| g.volume).sum()
    }

    pub fn centroid(&self, e: usize) -> [f64; 3] {
        let mut c = [0.0; 3];
        let vs = self.element(e);
        for &v in vs {
            for k in 0..3 {
                c[k] += self.vertices[v][k];
            }
        }
        let n = vs.len() as f64;
        [c[0] / n, c[1] / n, c[2] / n]
    }

    /// Maximal number of faces per element (3 for triangles, 4 for tetrahedra).
    pub fn faces_per_element(&self) -> usize {
        self.dim + 1
    }

    /// Total measure of boundary faces carrying a tag accepted by `pred`.
    pub fn boundary_measure(&self, pred: impl Fn(BoundaryTag) -> bool) -> f64 {
        self.faces
            .iter()
            .filter_map(|f| f.tag.map(|t| (t, f.measure)))
            .filter(|(t, _)| pred(*t))
            .map(|(_, m)| m)
            .sum()
    }
}

fn point_in_face_interior(dim: usize, pts: &[[f64; 3]], p: &[f64; 3], h: f64) -> bool {
    let tol = 1e-10 * h;
    match dim {
        2 => {
            let t = sub(&pts[1], &pts[0]);
            let len2 = dot(&t, &t);
            let d = sub(p, &pts[0]);
            let s = dot(&d, &t) / len2;
            let perp = norm(&sub(&d, &[t[0] * s, t[1] * s, t[2] * s]));
            perp < tol && s > 1e-9 && s < 1.0 - 1e-9
        }
        _ => {
            let a = sub(&pts[1], &pts[0]);
            let b = sub(&pts[2], &pts[0]);
            let n = cross(&a, &b);
            let area2 = norm(&n);
            let d = sub(p, &pts[0]);
            if (dot(&d, &n) / area2).abs() > tol {
                return false;
            }
            // barycentric coordinates in the face plane
            let l1 = dot(&cross(&d, &b), &n) / (area2 * area2);
            let l2 = dot(&cross(&a, &d), &n) / (area2 * area2);
            let l0 = 1.0 - l1 - l2;
            let eps = 1e-9;
            l0 > -eps && l1 > -eps && l2 > -eps && (l0 > eps) as u8 + (l1 > eps) as u8 + (l2 > eps) as u8 >= 2
        }
    }
}

/// Input format accepted by [`load_mesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    GmshAscii,
    /// `path` is a builtin generator spec, e.g. `unit-square:4`,
    /// `unit-cube:2`, `annulus-sector:171`.
    Builtin,
}

/// Loads a mesh from a Gmsh MSH 2.2 ASCII file or a builtin generator spec.
pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<Mesh, MeshError> {
    let path = path.as_ref();
    match format {
        MeshFormat::GmshAscii => {
            let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_gmsh(&text)
        }
        MeshFormat::Builtin => builtin(&path.to_string_lossy()),
    }
}

/// Builds a builtin mesh from a `name[:param]` spec.
pub fn builtin(spec: &str) -> Result<Mesh, MeshError> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let int_arg = |default: usize| -> Result<usize, MeshError> {
        match arg {
            None => Ok(default),
            Some(a) => a
                .parse()
                .map_err(|_| MeshError::UnknownBuiltin(spec.to_string())),
        }
    };
    match name {
        "unit-square" => unit_square(int_arg(1)?, None),
        "unit-cube" => unit_cube(int_arg(1)?),
        "annulus-sector" => {
            let angle = match arg {
                None => 171.0,
                Some(a) => a.parse().map_err(|_| MeshError::UnknownBuiltin(spec.to_string()))?,
            };
            AnnulusSector { corner_angle_deg: angle, ..AnnulusSector::default() }.build()
        }
        _ => Err(MeshError::UnknownBuiltin(spec.to_string())),
    }
}
