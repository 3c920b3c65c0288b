//! File formats: legacy VTK snapshots, the per-step energy log and nodal
//! field tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::connectivity::{ComponentDecomposition, NOT_INTERFACE};
use crate::error::{Error, Result};
use crate::flow::StepRecord;
use crate::functionals::EnergyBreakdown;
use crate::mesh::Mesh;

/// Legacy ASCII VTK unstructured grid with nodal `f64` fields and per-cell
/// integer fields.
pub fn vtk_string(
    mesh: &Mesh,
    point_fields: &[(&str, &[f64])],
    cell_fields: &[(&str, &[i64])],
) -> Result<String> {
    let (nn, nt) = (mesh.num_nodes(), mesh.num_elements());
    for (name, f) in point_fields {
        check_field(name, f.len(), nn)?;
    }
    for (name, f) in cell_fields {
        check_field(name, f.len(), nt)?;
    }
    let mut s = String::with_capacity(64 * (nn + nt));
    s.push_str("# vtk DataFile Version 3.0\nphase field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nn} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    if !point_fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nn}");
        for (name, f) in point_fields {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in *f {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    if !cell_fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
        for (name, f) in cell_fields {
            let _ = writeln!(s, "SCALARS {name} int 1\nLOOKUP_TABLE default");
            for v in *f {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    Ok(s)
}

fn check_field(name: &str, len: usize, expected: usize) -> Result<()> {
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Error::InvalidConfig(format!("invalid VTK field name {name:?}")));
    }
    if len != expected {
        return Err(Error::LengthMismatch { expected, found: len });
    }
    Ok(())
}

pub fn write_vtk(
    path: &Path,
    mesh: &Mesh,
    point_fields: &[(&str, &[f64])],
    cell_fields: &[(&str, &[i64])],
) -> Result<()> {
    let s = vtk_string(mesh, point_fields, cell_fields)?;
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Per-element interface flag (0/1) and component id (-1 outside the interface).
pub fn decomposition_cell_data(decomposition: &ComponentDecomposition) -> (Vec<i64>, Vec<i64>) {
    decomposition
        .labels
        .iter()
        .map(|&l| if l == NOT_INTERFACE { (0, -1) } else { (1, l as i64) })
        .unzip()
}

const BASE_COLUMNS: [&str; 9] = [
    "step",
    "time",
    "perimeter",
    "curvature",
    "fidelity",
    "penalty",
    "total",
    "rate",
    "solver_iterations",
];

/// Header of the energy log for `bands` penalty bands.
pub fn energy_log_header(bands: usize) -> Vec<String> {
    let mut h: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for b in 0..bands {
        h.push(format!("band{b}_penalty"));
        h.push(format!("band{b}_components"));
    }
    h
}

pub fn write_energy_log(path: &Path, records: &[StepRecord], bands: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(energy_log_header(bands)).map_err(|e| csv_error(path, e))?;
    for r in records {
        if r.band_penalty.len() != bands || r.components.len() != bands {
            return Err(Error::LengthMismatch {
                expected: bands,
                found: r.band_penalty.len(),
            });
        }
        let e = &r.energy;
        let mut row = vec![
            r.step.to_string(),
            r.time.to_string(),
            e.perimeter.to_string(),
            e.curvature.to_string(),
            e.fidelity.to_string(),
            e.penalty.to_string(),
            e.total.to_string(),
            r.rate.map(|v| v.to_string()).unwrap_or_default(),
            r.solver_iterations.to_string(),
        ];
        for (p, c) in r.band_penalty.iter().zip(&r.components) {
            row.push(p.to_string());
            row.push(c.to_string());
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_energy_log(path: &Path) -> Result<Vec<StepRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let extra = header.len().saturating_sub(BASE_COLUMNS.len());
    if header.len() < BASE_COLUMNS.len() || extra % 2 != 0 || header != energy_log_header(extra / 2) {
        return Err(parse_error(path, 1, "unexpected energy log header"));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| csv_error(path, e))?;
        let f = |k: usize| -> Result<f64> {
            row[k]
                .parse()
                .map_err(|_| parse_error(path, line, &format!("bad number {:?} in column {}", &row[k], header[k])))
        };
        let u = |k: usize| -> Result<usize> {
            row[k]
                .parse()
                .map_err(|_| parse_error(path, line, &format!("bad integer {:?} in column {}", &row[k], header[k])))
        };
        let mut rec = StepRecord {
            step: u(0)?,
            time: f(1)?,
            energy: EnergyBreakdown {
                perimeter: f(2)?,
                curvature: f(3)?,
                fidelity: f(4)?,
                penalty: f(5)?,
                total: f(6)?,
            },
            band_penalty: Vec::new(),
            components: Vec::new(),
            rate: if row[7].is_empty() { None } else { Some(f(7)?) },
            solver_iterations: u(8)?,
        };
        for b in 0..extra / 2 {
            rec.band_penalty.push(f(9 + 2 * b)?);
            rec.components.push(u(10 + 2 * b)?);
        }
        out.push(rec);
    }
    Ok(out)
}

/// Nodal table with columns `x,y,<name>`.
pub fn write_nodal_csv(path: &Path, mesh: &Mesh, name: &str, values: &[f64]) -> Result<()> {
    if values.len() != mesh.num_nodes() {
        return Err(Error::LengthMismatch {
            expected: mesh.num_nodes(),
            found: values.len(),
        });
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["x", "y", name]).map_err(|e| csv_error(path, e))?;
    for (p, v) in mesh.nodes().iter().zip(values) {
        w.write_record(&[p[0].to_string(), p[1].to_string(), v.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the last column of a nodal table written by [`write_nodal_csv`]
/// (any header); the row count must equal `expected_len`.
pub fn read_nodal_csv(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut values = Vec::with_capacity(expected_len);
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let cell = row.get(row.len().saturating_sub(1)).unwrap_or("");
        let v: f64 = cell
            .trim()
            .parse()
            .map_err(|_| parse_error(path, i + 2, &format!("bad number {cell:?}")))?;
        if !v.is_finite() {
            return Err(parse_error(path, i + 2, "non-finite value"));
        }
        values.push(v);
    }
    if values.len() != expected_len {
        return Err(Error::LengthMismatch {
            expected: expected_len,
            found: values.len(),
        });
    }
    Ok(values)
}

fn parse_error(path: &Path, line: usize, message: &str) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => parse_error(path, line, &format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_square_mesh, Mesh, Square};

    fn two_triangles() -> Mesh {
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn vtk_layout() {
        let mesh = two_triangles();
        let u = [0.0, 0.5, 1.0, -0.25];
        let flag = [1i64, 0];
        let s = vtk_string(&mesh, &[("u", &u)], &[("interface", &flag)]).unwrap();
        assert!(s.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(s.contains("\nCELLS 2 8\n3 0 1 2\n3 0 2 3\n"));
        assert!(s.contains("\nCELL_TYPES 2\n5\n5\n"));
        assert!(s.contains("POINT_DATA 4\nSCALARS u double 1\nLOOKUP_TABLE default\n0\n0.5\n1\n-0.25\n"));
        assert!(s.contains("CELL_DATA 2\nSCALARS interface int 1\nLOOKUP_TABLE default\n1\n0\n"));
        assert_eq!(s, vtk_string(&mesh, &[("u", &u)], &[("interface", &flag)]).unwrap());
    }

    #[test]
    fn vtk_rejects_bad_fields() {
        let mesh = two_triangles();
        assert!(vtk_string(&mesh, &[("u", &[0.0; 3])], &[]).is_err());
        assert!(vtk_string(&mesh, &[("a b", &[0.0; 4])], &[]).is_err());
    }

    #[test]
    fn energy_log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("energy.csv");
        let records = vec![
            StepRecord {
                step: 0,
                time: 0.0,
                energy: EnergyBreakdown {
                    perimeter: 1.0 / 3.0,
                    curvature: 0.0,
                    fidelity: 2.5e-7,
                    penalty: 0.1,
                    total: 0.1 + 1.0 / 3.0 + 2.5e-7,
                },
                band_penalty: vec![0.25, 0.0],
                components: vec![2, 1],
                rate: Some(123.456),
                solver_iterations: 7,
            },
            StepRecord {
                step: 1,
                time: 1e-5,
                energy: EnergyBreakdown::default(),
                band_penalty: vec![0.0, 0.0],
                components: vec![1, 1],
                rate: None,
                solver_iterations: 0,
            },
        ];
        write_energy_log(&path, &records, 2).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "step,time,perimeter,curvature,fidelity,penalty,total,rate,solver_iterations,\
             band0_penalty,band0_components,band1_penalty,band1_components"
        );
        assert_eq!(read_energy_log(&path).unwrap(), records);
    }

    #[test]
    fn nodal_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        let mesh = build_square_mesh(3, Square::unit()).unwrap();
        let u: Vec<f64> = (0..mesh.num_nodes()).map(|i| (i as f64).sin()).collect();
        write_nodal_csv(&path, &mesh, "u", &u).unwrap();
        assert_eq!(read_nodal_csv(&path, mesh.num_nodes()).unwrap(), u);
        assert!(matches!(
            read_nodal_csv(&path, 3),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_nodal_csv(Path::new("/nonexistent/u.csv"), 1).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/u.csv"));
    }
}
