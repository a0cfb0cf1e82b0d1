use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use glam::DVec3;

use super::tables::normalize_element;
use super::{Atom, Bond, BondSource, IngestError, Molecule};

/// 1-based inclusive fixed column slice; short lines yield "".
fn col(line: &str, start: usize, end: usize) -> &str {
    let bytes = line.as_bytes();
    if bytes.len() < start {
        return "";
    }
    let end = end.min(bytes.len());
    line.get(start - 1..end).unwrap_or("")
}

fn parse_coord(line: &str, lineno: usize, start: usize, end: usize, axis: char) -> Result<f64, IngestError> {
    let field = col(line, start, end).trim();
    let v: f64 = field.parse().map_err(|_| IngestError::Parse {
        line: lineno,
        message: format!("malformed {axis} coordinate '{field}'"),
    })?;
    if !v.is_finite() {
        return Err(IngestError::Parse { line: lineno, message: format!("non-finite {axis} coordinate") });
    }
    Ok(v)
}

fn parse_atom(line: &str, lineno: usize) -> Result<Atom, IngestError> {
    let serial_field = col(line, 7, 11).trim();
    let serial = serial_field.parse::<i64>().map_err(|_| IngestError::Parse {
        line: lineno,
        message: format!("malformed serial '{serial_field}'"),
    })?;
    let name = col(line, 13, 16).trim().to_string();
    let residue_name = col(line, 18, 20).trim().to_string();
    let chain = col(line, 22, 22).chars().next().unwrap_or(' ');
    let seq_field = col(line, 23, 26).trim();
    let residue_seq = if seq_field.is_empty() {
        0
    } else {
        seq_field.parse::<i32>().map_err(|_| IngestError::Parse {
            line: lineno,
            message: format!("malformed residue number '{seq_field}'"),
        })?
    };
    let x = parse_coord(line, lineno, 31, 38, 'x')?;
    let y = parse_coord(line, lineno, 39, 46, 'y')?;
    let z = parse_coord(line, lineno, 47, 54, 'z')?;

    let mut element = normalize_element(col(line, 77, 78));
    if element.is_empty() {
        // Fall back to the atom name: leading letter(s) with digits stripped.
        let letters: String = name.chars().filter(|c| c.is_ascii_alphabetic()).take(1).collect();
        element = normalize_element(&letters);
    }
    if element.is_empty() {
        return Err(IngestError::Parse { line: lineno, message: "missing element symbol".into() });
    }

    Ok(Atom {
        serial,
        name,
        element,
        position: DVec3::new(x, y, z),
        chain,
        residue_name,
        residue_seq,
        hetero: line.starts_with("HETATM"),
    })
}

fn conect_serials(line: &str) -> Vec<i64> {
    // Fixed 5-column fields first; fall back to whitespace separation for
    // hand-written records.
    let fixed: Option<Vec<i64>> = (0..5)
        .map(|k| col(line, 7 + 5 * k, 11 + 5 * k))
        .take_while(|f| !f.is_empty())
        .filter(|f| !f.trim().is_empty())
        .map(|f| f.trim().parse::<i64>().ok())
        .collect();
    match fixed {
        Some(v) if !v.is_empty() => v,
        _ => line
            .get(6..)
            .unwrap_or("")
            .split_whitespace()
            .filter_map(|t| t.parse().ok())
            .collect(),
    }
}

/// Parses ATOM/HETATM and CONECT records of the first model.
pub fn parse_pdb(text: &str) -> Result<Molecule, IngestError> {
    let mut atoms = Vec::new();
    let mut conects: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut seen_model = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        let record = col(line, 1, 6);
        match record.trim_end() {
            "MODEL" => {
                if seen_model {
                    break;
                }
                seen_model = true;
            }
            "ENDMDL" => break,
            "ATOM" | "HETATM" => atoms.push(parse_atom(line, lineno)?),
            "CONECT" => conects.push((lineno, conect_serials(line))),
            _ => {}
        }
    }

    if atoms.is_empty() {
        return Err(IngestError::EmptyInput);
    }

    let index: HashMap<i64, usize> = atoms.iter().enumerate().map(|(i, a)| (a.serial, i)).collect();
    let mut bonds = BTreeSet::new();
    for (_lineno, serials) in conects {
        let Some((&from, rest)) = serials.split_first() else { continue };
        let Some(&a) = index.get(&from) else { continue };
        for s in rest {
            if let Some(&b) = index.get(s) {
                if a != b {
                    bonds.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    let bonds = bonds.into_iter().map(|(a, b)| Bond::new(a, b, BondSource::Conect)).collect();
    Ok(Molecule::new(atoms, bonds))
}

/// Serializes atoms (and CONECT records for explicit bonds) in PDB fixed
/// columns with 3-decimal coordinates.
pub fn write_pdb(molecule: &Molecule) -> String {
    let mut out = String::new();
    for a in &molecule.atoms {
        let record = if a.hetero { "HETATM" } else { "ATOM" };
        let name = if a.name.len() >= 4 { a.name.clone() } else { format!(" {:<3}", a.name) };
        let _ = writeln!(
            out,
            "{:<6}{:>5} {:<4} {:>3} {}{:>4}    {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}",
            record,
            a.serial,
            name,
            a.residue_name,
            a.chain,
            a.residue_seq,
            a.position.x,
            a.position.y,
            a.position.z,
            1.0,
            0.0,
            a.element.to_uppercase(),
        );
    }
    for b in molecule.bonds.iter().filter(|b| b.source == BondSource::Conect) {
        let _ = writeln!(out, "CONECT{:>5}{:>5}", molecule.atoms[b.a].serial, molecule.atoms[b.b].serial);
    }
    out.push_str("END\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MET: &str = "ATOM      1  N   MET A   1      11.104   6.134  -6.504  1.00  0.00           N";

    #[test]
    fn single_atom_line() {
        let m = parse_pdb(MET).unwrap();
        assert_eq!(m.atoms.len(), 1);
        let a = &m.atoms[0];
        assert_eq!(a.position, DVec3::new(11.104, 6.134, -6.504));
        assert_eq!(a.chain, 'A');
        assert_eq!(a.element, "N");
        assert_eq!(a.residue_name, "MET");
        assert_eq!(a.residue_seq, 1);
        assert_eq!(a.serial, 1);
        assert_eq!(a.name, "N");
    }

    #[test]
    fn remarks_only_is_empty_input() {
        let text = "REMARK   1 nothing here\nREMARK   2 still nothing\n";
        assert!(matches!(parse_pdb(text), Err(IngestError::EmptyInput)));
    }

    #[test]
    fn conect_becomes_bond() {
        let text = format!(
            "{MET}\nATOM      2  CA  MET A   1      12.560   6.300  -6.700  1.00  0.00           C\nCONECT 1 2\n"
        );
        let m = parse_pdb(&text).unwrap();
        assert_eq!(m.bonds, vec![Bond { a: 0, b: 1, source: BondSource::Conect }]);
        let aligned = format!(
            "{MET}\nATOM      2  CA  MET A   1      12.560   6.300  -6.700  1.00  0.00           C\nCONECT    2    1\nCONECT    1    2\n"
        );
        assert_eq!(parse_pdb(&aligned).unwrap().bonds.len(), 1);
    }

    #[test]
    fn malformed_coordinate_reports_line() {
        let bad = "REMARK\nATOM      1  N   MET A   1      11.1x4   6.134  -6.504  1.00  0.00           N";
        match parse_pdb(bad) {
            Err(IngestError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains('x'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn element_inferred_from_name_when_blank() {
        let line = "ATOM      5  CB  ALA B   7       1.000   2.000   3.000";
        let m = parse_pdb(line).unwrap();
        assert_eq!(m.atoms[0].element, "C");
        assert_eq!(m.atoms[0].chain, 'B');
    }

    #[test]
    fn only_first_model_is_read() {
        let text = format!("MODEL        1\n{MET}\nENDMDL\nMODEL        2\n{MET}\nENDMDL\n");
        assert_eq!(parse_pdb(&text).unwrap().atoms.len(), 1);
    }

    #[test]
    fn derived_geometry_is_populated() {
        let text = format!(
            "{MET}\nATOM      2  CA  MET A   1      13.104   6.134  -6.504  1.00  0.00           C\n"
        );
        let m = parse_pdb(&text).unwrap();
        assert_eq!(m.aabb.min.x, 11.104);
        assert_eq!(m.aabb.max.x, 13.104);
        assert!((m.principal_axis - DVec3::X).length() < 1e-9);
        assert_eq!(m.whisker_coord, vec![0.0, 1.0]);
    }

    fn arb_atom() -> impl Strategy<Value = (f64, f64, f64)> {
        (-999.0..999.0f64, -999.0..999.0f64, -999.0..999.0f64)
    }

    proptest! {
        #[test]
        fn serialize_then_parse_preserves_coordinates(coords in proptest::collection::vec(arb_atom(), 1..40)) {
            let atoms: Vec<Atom> = coords.iter().enumerate().map(|(i, &(x, y, z))| Atom {
                serial: i as i64 + 1,
                name: "CA".into(),
                element: "C".into(),
                position: DVec3::new(x, y, z),
                chain: 'A',
                residue_name: "GLY".into(),
                residue_seq: i as i32,
                hetero: false,
            }).collect();
            let m = Molecule::new(atoms, vec![]);
            let back = parse_pdb(&write_pdb(&m)).unwrap();
            prop_assert_eq!(back.atoms.len(), m.atoms.len());
            for (a, b) in m.atoms.iter().zip(&back.atoms) {
                prop_assert!((a.position - b.position).abs().max_element() <= 0.0005 + 1e-9);
                prop_assert_eq!(a.serial, b.serial);
                prop_assert_eq!(&a.element, &b.element);
                prop_assert_eq!(a.chain, b.chain);
            }
        }
    }
}
