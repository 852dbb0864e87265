//! Legacy ASCII VTK for matrix cell fields and CSV tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fracsim_core::MixedMesh;

use crate::error::CliError;

/// Shortest representation that reads back to the same value.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Writes a file, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Triangulation with one scalar block per named cell field.
pub fn vtk_string(mesh: &MixedMesh, title: &str, fields: &[(String, &[f64])]) -> String {
    let mut s = String::new();
    let nt = mesh.num_triangles();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.vertices.len());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{} {} 0", fmt_f64(p[0]), fmt_f64(p[1]));
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
    }
    for (name, values) in fields {
        assert_eq!(values.len(), nt, "field {name} has the wrong length");
        let _ = writeln!(
            s,
            "SCALARS {} double 1\nLOOKUP_TABLE default",
            name.replace(char::is_whitespace, "_")
        );
        for v in *values {
            s.push_str(&fmt_f64(*v));
            s.push('\n');
        }
    }
    s
}

/// CSV with a header row.
pub fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_io = |e: csv::Error| CliError::io("formatting csv", e.into());
    w.write_record(header).map_err(to_io)?;
    for r in rows {
        w.write_record(r).map_err(to_io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::io("formatting csv", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Values of the scalar block `name` in a VTK string written by [`vtk_string`].
pub fn vtk_block(text: &str, name: &str) -> Option<Vec<f64>> {
    let mut lines = text.lines();
    let head = format!("SCALARS {name} double 1");
    lines.find(|l| *l == head)?;
    lines.next()?;
    Some(lines.map_while(|l| l.parse::<f64>().ok()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fracsim_core::mesh::build_unit_square_with_fractures;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -0.1, 1e-20, 3.5e17, 123.456, -7.25e-9] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn vtk_layout() {
        let mesh = build_unit_square_with_fractures(&[], 0.5).unwrap();
        let a: Vec<f64> = (0..mesh.num_triangles()).map(|t| t as f64 * 0.1).collect();
        let text = vtk_string(&mesh, "test", &[("a".into(), &a)]);
        assert!(text.starts_with("# vtk DataFile Version 3.0\ntest\nASCII\n"));
        assert!(text.contains(&format!("CELLS {} {}", mesh.num_triangles(), 4 * mesh.num_triangles())));
        assert_eq!(vtk_block(&text, "a").unwrap(), a);
    }

    #[test]
    fn csv_quotes_nothing_numeric() {
        let s = csv_string(&["x".into(), "y".into()], &[vec!["1".into(), "2.5".into()]]).unwrap();
        assert_eq!(s, "x,y\n1,2.5\n");
    }
}
