//! Plain-text mesh format.
//!
//! ```text
//! mdmesh 1
//! v <x> <y>
//! t <i> <j> <k>
//! f <i> <j> <tag>
//! frac <n> <i1> ... <in>
//! ```
//!
//! Indices are zero-based. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{FaceKind, MixedMesh, Point};
use crate::error::MeshError;

pub fn load_mesh(path: impl AsRef<Path>) -> Result<MixedMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| MeshError::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| MeshError::parse(line, format!("invalid {what} '{tok}'")))
}

fn check_vertex(id: usize, nv: usize, line: usize) -> Result<usize, MeshError> {
    if id < nv {
        Ok(id)
    } else {
        Err(MeshError::parse(
            line,
            format!("vertex id {id} does not exist ({nv} vertices declared)"),
        ))
    }
}

pub fn parse_mesh(text: &str) -> Result<MixedMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match lines.next() {
        Some((_, "mdmesh 1")) => {}
        Some((n, other)) => {
            return Err(MeshError::parse(
                n,
                format!("expected header 'mdmesh 1', got '{other}'"),
            ))
        }
        None => return Err(MeshError::parse(1, "empty mesh file")),
    }

    let mut vertices: Vec<Point> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut tags: Vec<([usize; 2], String)> = Vec::new();
    let mut fractures: Vec<Vec<usize>> = Vec::new();

    // Vertices may be declared anywhere; references are checked once all are known.
    let mut pending: Vec<(usize, &str)> = Vec::new();
    for (n, line) in lines {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x: f64 = parse_num(toks.next(), n, "x coordinate")?;
                let y: f64 = parse_num(toks.next(), n, "y coordinate")?;
                if !x.is_finite() || !y.is_finite() {
                    return Err(MeshError::parse(n, "non-finite coordinate"));
                }
                if toks.next().is_some() {
                    return Err(MeshError::parse(n, "trailing tokens after vertex"));
                }
                vertices.push([x, y]);
            }
            Some("t") | Some("f") | Some("frac") => pending.push((n, line)),
            Some(other) => return Err(MeshError::parse(n, format!("unknown record '{other}'"))),
            None => {}
        }
    }

    let nv = vertices.len();
    for (n, line) in pending {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("t") => {
                let mut tri = [0usize; 3];
                for slot in &mut tri {
                    *slot = check_vertex(parse_num(toks.next(), n, "vertex id")?, nv, n)?;
                }
                if toks.next().is_some() {
                    return Err(MeshError::parse(n, "trailing tokens after triangle"));
                }
                triangles.push(tri);
            }
            Some("f") => {
                let i = check_vertex(parse_num(toks.next(), n, "vertex id")?, nv, n)?;
                let j = check_vertex(parse_num(toks.next(), n, "vertex id")?, nv, n)?;
                let tag = toks.next().ok_or_else(|| MeshError::parse(n, "missing boundary tag"))?;
                if toks.next().is_some() {
                    return Err(MeshError::parse(n, "trailing tokens after boundary face"));
                }
                tags.push(([i, j], tag.to_string()));
            }
            Some("frac") => {
                let count: usize = parse_num(toks.next(), n, "fracture vertex count")?;
                if count < 2 {
                    return Err(MeshError::parse(n, "fracture needs at least two vertices"));
                }
                let ids = toks
                    .map(|tok| check_vertex(parse_num(Some(tok), n, "vertex id")?, nv, n))
                    .collect::<Result<Vec<_>, _>>()?;
                if ids.len() != count {
                    return Err(MeshError::parse(
                        n,
                        format!("fracture declares {count} vertices but lists {}", ids.len()),
                    ));
                }
                fractures.push(ids);
            }
            _ => unreachable!(),
        }
    }

    MixedMesh::from_parts(vertices, triangles, &tags, &fractures)
}

pub fn write_mesh_string(mesh: &MixedMesh) -> String {
    let mut out = String::from("mdmesh 1\n");
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {}", v[0], v[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
    }
    for face in &mesh.faces {
        if let FaceKind::Boundary { tag } = face.kind {
            let _ = writeln!(out, "f {} {} {}", face.vertices[0], face.vertices[1], mesh.tags[tag]);
        }
    }
    for fr in &mesh.fractures {
        let _ = write!(out, "frac {}", fr.vertices.len());
        for v in &fr.vertices {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_mesh(mesh: &MixedMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "mdmesh 1
# unit square split along the diagonal
v 0 0
v 1 0
v 1 1
v 0 1
t 0 1 2
t 0 2 3
f 0 1 bottom
f 1 2 right
f 2 3 top
f 3 0 left
frac 2 0 2
";

    #[test]
    fn parses_square_with_fracture() {
        let mesh = parse_mesh(SQUARE).unwrap();
        assert_eq!(mesh.num_triangles(), 2);
        assert_eq!(mesh.num_fracture_cells(), 1);
        assert_eq!(mesh.tags.len(), 4);
    }

    #[test]
    fn round_trip_preserves_topology() {
        let mesh = parse_mesh(SQUARE).unwrap();
        let again = parse_mesh(&write_mesh_string(&mesh)).unwrap();
        assert_eq!(mesh.vertices, again.vertices);
        assert_eq!(mesh.triangles, again.triangles);
        assert_eq!(mesh.faces, again.faces);
        assert_eq!(mesh.fractures, again.fractures);
    }

    #[test]
    fn negative_area_is_invariant_violation() {
        let text = SQUARE.replace("t 0 1 2", "t 0 2 1");
        assert!(matches!(parse_mesh(&text), Err(MeshError::Invariant { .. })));
    }

    #[test]
    fn unknown_vertex_is_parse_error_with_line() {
        let text = SQUARE.replace("t 0 2 3", "t 0 2 7");
        match parse_mesh(&text) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_header() {
        assert!(matches!(parse_mesh("mesh 2\n"), Err(MeshError::Parse { line: 1, .. })));
        assert!(matches!(parse_mesh(""), Err(MeshError::Parse { .. })));
    }
}
