//! Gaussian cube volumetric files.
//!
//! Layout: two comment lines; `natoms ox oy oz [nval]`; three `n vx vy vz`
//! axis records; `|natoms|` atom records `Z charge x y z`; when `natoms` is
//! negative, one `m id…` orbital-index record; then `n1·n2·n3` values with
//! z fastest. A positive voxel count means lengths in Bohr, a negative one
//! means Å.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::{OrbitalGrid, ZfsError};
use crate::constants::BOHR_IN_ANGSTROM;

#[derive(Debug, Clone, PartialEq)]
pub struct CubeAtom {
    pub number: i32,
    pub charge: f64,
    /// Å
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeFile {
    pub comments: [String; 2],
    pub atoms: Vec<CubeAtom>,
    pub grid: OrbitalGrid,
}

struct Lines<'a> {
    origin: &'a str,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> ZfsError {
        ZfsError::Parse { path: self.origin.to_owned(), line, message: message.into() }
    }

    fn next(&mut self, record: &str) -> Result<&'a str, ZfsError> {
        match self.iter.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.err(self.line + 1, format!("file ends before the {record} record"))),
        }
    }

    fn numbers(&mut self, record: &str, min: usize) -> Result<Vec<f64>, ZfsError> {
        let l = self.next(record)?;
        let v = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| self.err(self.line, format!("{record} record: {e}")))?;
        if v.len() < min {
            return Err(self.err(self.line, format!("{record} record needs {min} fields, found {}", v.len())));
        }
        Ok(v)
    }
}

fn as_count(x: f64) -> Option<i64> {
    (x.fract() == 0.0 && x.abs() < 1e12).then_some(x as i64)
}

pub fn parse_cube(text: &str, origin: &str) -> Result<CubeFile, ZfsError> {
    let mut lines = Lines { origin, iter: text.lines().enumerate(), line: 0 };
    let c1 = lines.next("first comment")?.trim_end().to_owned();
    let c2 = lines.next("second comment")?.trim_end().to_owned();

    let head = lines.numbers("atom-count/origin", 4)?;
    let head_line = lines.line;
    let natoms = as_count(head[0]).ok_or_else(|| lines.err(head_line, "atom count must be an integer"))?;
    if head.len() > 4 && head[4] != 1.0 {
        return Err(lines.err(head_line, format!("{} values per voxel; only 1 is supported", head[4])));
    }

    let mut counts = [0i64; 3];
    let mut steps = Matrix3::zeros();
    for a in 0..3 {
        let rec = format!("axis {}", a + 1);
        let v = lines.numbers(&rec, 4)?;
        counts[a] = as_count(v[0])
            .filter(|&n| n != 0)
            .ok_or_else(|| lines.err(lines.line, format!("{rec} record: voxel count must be a nonzero integer")))?;
        steps.set_row(a, &Vector3::new(v[1], v[2], v[3]).transpose());
    }
    let unit = if counts[0] > 0 { BOHR_IN_ANGSTROM } else { 1.0 };
    let dims = counts.map(|n| n.unsigned_abs() as usize);

    let mut atoms = Vec::with_capacity(natoms.unsigned_abs() as usize);
    for a in 0..natoms.unsigned_abs() {
        let rec = format!("atom {}", a + 1);
        let v = lines.numbers(&rec, 5)?;
        let number = as_count(v[0]).ok_or_else(|| lines.err(lines.line, format!("{rec} record: atomic number")))?;
        atoms.push(CubeAtom { number: number as i32, charge: v[1], position: [v[2] * unit, v[3] * unit, v[4] * unit] });
    }
    if natoms < 0 {
        let v = lines.numbers("orbital index", 1)?;
        if v[0] != 1.0 {
            return Err(lines.err(lines.line, format!("{} orbitals in one file; only 1 is supported", v[0])));
        }
    }

    let total: usize = dims.iter().product();
    let mut values = Vec::with_capacity(total);
    let mut last_line = lines.line;
    for (i, raw) in lines.iter.by_ref() {
        for tok in raw.split_whitespace() {
            if values.len() == total {
                return Err(ZfsError::Parse {
                    path: origin.to_owned(),
                    line: i + 1,
                    message: format!("more than the {total} expected values"),
                });
            }
            values.push(tok.parse::<f64>().map_err(|e| ZfsError::Parse {
                path: origin.to_owned(),
                line: i + 1,
                message: format!("values record: `{tok}`: {e}"),
            })?);
        }
        last_line = i + 1;
    }
    if values.len() != total {
        return Err(ZfsError::Parse {
            path: origin.to_owned(),
            line: last_line,
            message: format!("values record truncated: expected {total}, found {}", values.len()),
        });
    }
    let o = Vector3::new(head[1], head[2], head[3]) * unit;
    let grid = OrbitalGrid::new(o, steps * unit, dims, values).map_err(|e| ZfsError::Parse {
        path: origin.to_owned(),
        line: head_line,
        message: e.to_string(),
    })?;
    Ok(CubeFile { comments: [c1, c2], atoms, grid })
}

pub fn load_cube(path: &Path) -> Result<OrbitalGrid, ZfsError> {
    Ok(read_cube(path)?.grid)
}

pub fn read_cube(path: &Path) -> Result<CubeFile, ZfsError> {
    parse_cube(&fs::read_to_string(path)?, &path.display().to_string())
}

/// Cube text in Å (negative voxel counts), six values per line.
pub fn to_cube_string(cube: &CubeFile) -> String {
    let g = &cube.grid;
    let mut out = String::new();
    out.push_str(&format!("{}\n{}\n", cube.comments[0], cube.comments[1]));
    let o = g.origin();
    out.push_str(&format!("{:5} {:e} {:e} {:e}\n", cube.atoms.len(), o.x, o.y, o.z));
    for a in 0..3 {
        let s = g.axes().row(a);
        out.push_str(&format!("{:5} {:e} {:e} {:e}\n", -(g.dims()[a] as i64), s[0], s[1], s[2]));
    }
    for at in &cube.atoms {
        let p = at.position;
        out.push_str(&format!("{:5} {:e} {:e} {:e} {:e}\n", at.number, at.charge, p[0], p[1], p[2]));
    }
    let nz = g.dims()[2];
    for row in g.values().chunks(nz) {
        for line in row.chunks(6) {
            let s: Vec<String> = line.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&s.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn write_cube(grid: &OrbitalGrid, path: &Path, comment: &str) -> Result<(), ZfsError> {
    let cube =
        CubeFile { comments: [comment.to_owned(), "orbital amplitude".into()], atoms: Vec::new(), grid: grid.clone() };
    fs::write(path, to_cube_string(&cube))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
minimal
2x2x2
    1   -1.0   -1.0   -1.0
   -2    2.0    0.0    0.0
   -2    0.0    2.0    0.0
   -2    0.0    0.0    2.0
    6    6.0    0.0    0.0    0.0
  0.1 0.2 0.3 0.4 0.5 0.6
  0.7 0.8
";

    #[test]
    fn minimal_file_round_trips() {
        let cube = parse_cube(MINIMAL, "m.cube").unwrap();
        let g = &cube.grid;
        assert_eq!(g.dims(), [2, 2, 2]);
        assert_eq!(g.values(), &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
        assert_eq!(g.position(1, 0, 1), Vector3::new(1.0, -1.0, 1.0));
        assert_eq!(cube.atoms[0].number, 6);
        let back = parse_cube(&to_cube_string(&cube), "back.cube").unwrap();
        assert_eq!(back, cube);
    }

    #[test]
    fn bohr_units_are_scaled() {
        let bohr = MINIMAL.replace("   -2 ", "    2 ");
        let g = parse_cube(&bohr, "b.cube").unwrap().grid;
        let b = BOHR_IN_ANGSTROM;
        assert!((g.origin() - Vector3::new(-b, -b, -b)).norm() < 1e-15);
        assert!((g.axes()[(0, 0)] - 2.0 * b).abs() < 1e-15);
        assert!((g.voxel_volume() - 8.0 * b * b * b).abs() < 1e-14);
    }

    #[test]
    fn orbital_index_record() {
        let text = MINIMAL
            .replacen("    1   -1.0", "   -1   -1.0", 1)
            .replace("0.0    0.0\n  0.1", "0.0    0.0\n 1 23\n  0.1");
        let cube = parse_cube(&text, "mo.cube").unwrap();
        assert_eq!(cube.grid.values()[0], 0.1);
        let two = text.replace(" 1 23\n", " 2 23 24\n");
        assert!(matches!(parse_cube(&two, "mo.cube"), Err(ZfsError::Parse { line: 8, .. })));
    }

    #[test]
    fn malformed_files_name_the_record() {
        let truncated = MINIMAL.replace("  0.7 0.8\n", "");
        match parse_cube(&truncated, "t.cube") {
            Err(ZfsError::Parse { line, message, .. }) => {
                assert_eq!(line, 8);
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let header_only: String = MINIMAL.lines().take(4).map(|l| format!("{l}\n")).collect();
        match parse_cube(&header_only, "h.cube") {
            Err(ZfsError::Parse { line, message, .. }) => {
                assert_eq!(line, 5);
                assert!(message.contains("axis 2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("0.5 0.6", "0.5 x");
        assert!(matches!(parse_cube(&bad, "x.cube"), Err(ZfsError::Parse { line: 8, .. })));
        let extra = format!("{MINIMAL}0.9\n");
        assert!(matches!(parse_cube(&extra, "e.cube"), Err(ZfsError::Parse { line: 10, .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.cube");
        let g = OrbitalGrid::sample(Vector3::new(0.1, 0.2, 0.3), [3, 4, 5], 0.37, |r| (r.x * 1.3).sin() + r.y * r.z)
            .unwrap();
        write_cube(&g, &p, "test").unwrap();
        assert_eq!(load_cube(&p).unwrap(), g);
    }
}
