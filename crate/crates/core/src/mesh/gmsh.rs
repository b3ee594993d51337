//! Reader for a strict subset of Gmsh MSH 2.2 ASCII.
//!
//! Supported: `$MeshFormat`, `$PhysicalNames`, `$Nodes`, `$Elements` with
//! element types 1 (line), 2 (triangle), 4 (tetrahedron) and 15 (point,
//! ignored). Lower-dimensional elements carrying a physical tag label
//! boundary faces; physical names are matched against the boundary tag names
//! (`Gamma1`, `Gamma1In`, `Gamma2`, `NoFlow`), unnamed physical ids map
//! 1 -> Gamma1, 2 -> Gamma2, 3 -> Gamma1In, anything else -> NoFlow.

use std::collections::HashMap;

use super::{BoundaryMap, BoundaryTag, Mesh, MeshError};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, MeshError> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.last = i + 1;
                    let t = l.trim();
                    if !t.is_empty() {
                        return Ok(t);
                    }
                }
                None => {
                    return Err(MeshError::Parse { line: self.last, msg: "unexpected end of file".into() })
                }
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> MeshError {
        MeshError::Parse { line: self.last, msg: msg.into() }
    }

    fn expect(&mut self, tag: &str) -> Result<(), MeshError> {
        let l = self.next()?;
        if l == tag {
            Ok(())
        } else {
            Err(self.err(format!("expected {tag}, found {l:?}")))
        }
    }

    fn count(&mut self) -> Result<usize, MeshError> {
        let l = self.next()?;
        l.parse().map_err(|_| self.err(format!("expected a count, found {l:?}")))
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines, tok: Option<&str>, what: &str) -> Result<T, MeshError> {
    tok.ok_or_else(|| lines.err(format!("missing {what}")))?
        .parse()
        .map_err(|_| lines.err(format!("malformed {what}")))
}

pub fn parse_gmsh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let mut names: HashMap<i64, BoundaryTag> = HashMap::new();
    let mut node_ids: HashMap<i64, usize> = HashMap::new();
    let mut nodes: Vec<[f64; 3]> = Vec::new();
    // (type, physical tag, node ids, line)
    let mut elems: Vec<(u32, i64, Vec<i64>, usize)> = Vec::new();
    let mut seen_format = false;

    loop {
        let l = match lines.next() {
            Ok(l) => l,
            Err(_) if seen_format => break,
            Err(e) => return Err(e),
        };
        match l {
            "$MeshFormat" => {
                let hdr = lines.next()?;
                let mut it = hdr.split_whitespace();
                let ver: String = parse_num(&lines, it.next(), "version")?;
                let ftype: i32 = parse_num(&lines, it.next(), "file type")?;
                if !ver.starts_with("2.") || ftype != 0 {
                    return Err(lines.err(format!("unsupported format {hdr:?} (need 2.x ASCII)")));
                }
                lines.expect("$EndMeshFormat")?;
                seen_format = true;
            }
            "$PhysicalNames" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let row = lines.next()?;
                    let mut it = row.splitn(3, char::is_whitespace);
                    let _dim: i32 = parse_num(&lines, it.next(), "physical dimension")?;
                    let id: i64 = parse_num(&lines, it.next(), "physical id")?;
                    let name = it.next().unwrap_or("").trim().trim_matches('"');
                    if let Some(tag) = BoundaryTag::from_name(name) {
                        names.insert(id, tag);
                    }
                }
                lines.expect("$EndPhysicalNames")?;
            }
            "$Nodes" => {
                let n = lines.count()?;
                nodes.reserve(n);
                for _ in 0..n {
                    let row = lines.next()?;
                    let mut it = row.split_whitespace();
                    let id: i64 = parse_num(&lines, it.next(), "node id")?;
                    let x: f64 = parse_num(&lines, it.next(), "x")?;
                    let y: f64 = parse_num(&lines, it.next(), "y")?;
                    let z: f64 = parse_num(&lines, it.next(), "z")?;
                    if node_ids.insert(id, nodes.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    nodes.push([x, y, z]);
                }
                lines.expect("$EndNodes")?;
            }
            "$Elements" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let row = lines.next()?;
                    let line = lines.last;
                    let toks: Vec<&str> = row.split_whitespace().collect();
                    if toks.len() < 3 {
                        return Err(lines.err("truncated element record"));
                    }
                    let etype: u32 = parse_num(&lines, Some(toks[1]), "element type")?;
                    let ntags: usize = parse_num(&lines, Some(toks[2]), "tag count")?;
                    let nnodes = match etype {
                        1 => 2,
                        2 => 3,
                        4 => 4,
                        15 => 1,
                        other => return Err(lines.err(format!("unsupported element type {other}"))),
                    };
                    if toks.len() != 3 + ntags + nnodes {
                        return Err(lines.err("element record has wrong length"));
                    }
                    let phys: i64 = if ntags > 0 { parse_num(&lines, Some(toks[3]), "physical tag")? } else { 0 };
                    let ids = toks[3 + ntags..]
                        .iter()
                        .map(|t| parse_num(&lines, Some(t), "node reference"))
                        .collect::<Result<Vec<i64>, _>>()?;
                    if etype != 15 {
                        elems.push((etype, phys, ids, line));
                    }
                }
                lines.expect("$EndElements")?;
            }
            other if other.starts_with("$End") => {
                return Err(lines.err(format!("unbalanced section terminator {other}")));
            }
            other if other.starts_with('$') => {
                // skip unknown sections
                let end = format!("$End{}", &other[1..]);
                while lines.next()? != end {}
            }
            other => return Err(lines.err(format!("unexpected content {other:?}"))),
        }
    }
    if !seen_format {
        return Err(MeshError::Parse { line: 0, msg: "missing $MeshFormat".into() });
    }

    let dim = if elems.iter().any(|e| e.0 == 4) { 3 } else { 2 };
    let (cell_type, face_type) = if dim == 3 { (4, 2) } else { (2, 1) };
    let resolve = |ids: &[i64], line: usize| -> Result<Vec<usize>, MeshError> {
        ids.iter()
            .map(|id| {
                node_ids
                    .get(id)
                    .copied()
                    .ok_or(MeshError::Parse { line, msg: format!("unknown node id {id}") })
            })
            .collect()
    };
    let mut cells = Vec::new();
    let mut bmap = BoundaryMap::new();
    for (etype, phys, ids, line) in &elems {
        if *etype == cell_type {
            cells.push(resolve(ids, *line)?);
        } else if *etype == face_type {
            let mut k = resolve(ids, *line)?;
            k.sort_unstable();
            let tag = names.get(phys).copied().unwrap_or(match phys {
                1 => BoundaryTag::Gamma1,
                2 => BoundaryTag::Gamma2,
                3 => BoundaryTag::Gamma1In,
                _ => BoundaryTag::NoFlow,
            });
            bmap.insert(k, tag);
        }
    }
    if cells.is_empty() {
        return Err(MeshError::Parse { line: lines.last, msg: "no volume elements".into() });
    }
    Mesh::new(dim, nodes, cells, &bmap)
}
