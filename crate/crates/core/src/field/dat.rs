use std::collections::BTreeMap;

use super::{FieldError, NodeRecord, StructuredGrid};

/// Zero-based column indices of the six required quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSchema {
    pub x: usize,
    pub y: usize,
    pub ux: usize,
    pub uy: usize,
    pub t: usize,
    pub oh: usize,
}

impl Default for ColumnSchema {
    /// `x y Ux Uy T OH`
    fn default() -> Self {
        Self { x: 0, y: 1, ux: 2, uy: 3, t: 4, oh: 5 }
    }
}

impl ColumnSchema {
    fn max_index(&self) -> usize {
        [self.x, self.y, self.ux, self.uy, self.t, self.oh].into_iter().max().unwrap()
    }

    /// Parses a comma-separated list such as `x,y,ux,uy,t,oh` naming the
    /// meaning of each column; unused columns are `_`.
    pub fn from_names(spec: &str) -> Result<Self, FieldError> {
        let mut found: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, name) in spec.split(',').map(str::trim).enumerate() {
            let key = match name.to_ascii_lowercase().as_str() {
                "x" => "x",
                "y" => "y",
                "ux" => "ux",
                "uy" => "uy",
                "t" | "t_k" => "t",
                "oh" => "oh",
                "_" | "" => continue,
                other => return Err(FieldError::InvalidArgument(format!("unknown column '{other}'"))),
            };
            if found.insert(key, i).is_some() {
                return Err(FieldError::InvalidArgument(format!("column '{key}' named twice")));
            }
        }
        let get = |k: &str| found.get(k).copied().ok_or_else(|| FieldError::InvalidArgument(format!("missing column '{k}'")));
        Ok(Self { x: get("x")?, y: get("y")?, ux: get("ux")?, uy: get("uy")?, t: get("t")?, oh: get("oh")? })
    }
}

fn distinct_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Parses whitespace-separated rows into a rectangular grid. Lines starting
/// with `#` and blank lines are skipped. Dimensions come from the distinct x
/// and y coordinates; each row is placed by its coordinates.
pub fn parse_dat(text: &str, schema: &ColumnSchema) -> Result<StructuredGrid, FieldError> {
    let mut width = None;
    let mut rows: Vec<(f64, f64, NodeRecord)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(FieldError::Ragged { line: lineno, expected, found: fields.len() });
        }
        if fields.len() <= schema.max_index() {
            return Err(FieldError::Parse {
                line: lineno,
                message: format!("{} columns, schema needs {}", fields.len(), schema.max_index() + 1),
            });
        }
        let num = |c: usize| -> Result<f64, FieldError> {
            let v: f64 = fields[c].parse().map_err(|_| FieldError::Parse {
                line: lineno,
                message: format!("unparseable number '{}' in column {}", fields[c], c + 1),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(FieldError::Parse { line: lineno, message: format!("non-finite value in column {}", c + 1) })
            }
        };
        let rec = NodeRecord {
            ux: num(schema.ux)? as f32,
            uy: num(schema.uy)? as f32,
            t_k: num(schema.t)? as f32,
            oh: num(schema.oh)? as f32,
        };
        rows.push((num(schema.x)?, num(schema.y)?, rec));
    }

    if rows.is_empty() {
        return Err(FieldError::InvalidGrid("no data rows".into()));
    }
    let xs = distinct_sorted(rows.iter().map(|r| r.0).collect());
    let ys = distinct_sorted(rows.iter().map(|r| r.1).collect());
    let (nx, ny) = (xs.len(), ys.len());
    if nx * ny != rows.len() {
        return Err(FieldError::NonRectangular(format!("{} rows for a {nx}x{ny} coordinate lattice", rows.len())));
    }

    let mut values = vec![None; nx * ny];
    for (x, y, rec) in rows {
        let i = xs.binary_search_by(|v| v.total_cmp(&x)).expect("x is in the lattice");
        let j = ys.binary_search_by(|v| v.total_cmp(&y)).expect("y is in the lattice");
        if values[j * nx + i].replace(rec).is_some() {
            return Err(FieldError::NonRectangular(format!("duplicate node at ({x}, {y})")));
        }
    }
    let values: Vec<NodeRecord> = values.into_iter().map(|v| v.expect("every node filled")).collect();

    let step = |c: &[f64]| if c.len() > 1 { (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64 } else { 1.0 };
    let mut grid = StructuredGrid::new(nx, ny, (step(&xs), step(&ys)), values)?;
    grid.origin = (xs[0], ys[0]);
    let bad = grid.oh_out_of_range();
    if bad > 0 {
        log::warn!("{bad} nodes have OH mass fraction outside [0, 1]");
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID_2X2: &str = "# x y Ux Uy T OH\n0 0 1.5 -2.0 300.0 0.01\n1 0 0 0 300 0\n0 1 0 0 301 0\n1 1 0 0 302 0.5\n";

    #[test]
    fn two_by_two() {
        let g = parse_dat(GRID_2X2, &ColumnSchema::default()).unwrap();
        assert_eq!((g.nx, g.ny), (2, 2));
        assert_eq!(g.spacing, (1.0, 1.0));
        assert_eq!(*g.node(0, 0), NodeRecord { ux: 1.5, uy: -2.0, t_k: 300.0, oh: 0.01 });
        assert_eq!(g.node(1, 1).t_k, 302.0);
        assert_eq!(g.node(0, 1).t_k, 301.0);
    }

    #[test]
    fn rows_placed_by_coordinates() {
        let shuffled = "1 1 0 0 302 0.5\n0 0 1.5 -2.0 300.0 0.01\n0 1 0 0 301 0\n1 0 0 0 300 0\n";
        let a = parse_dat(shuffled, &ColumnSchema::default()).unwrap();
        let b = parse_dat(GRID_2X2, &ColumnSchema::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn five_rows_on_2x2_lattice_rejected() {
        let text = format!("{GRID_2X2}1 1 0 0 303 0\n");
        assert!(matches!(parse_dat(&text, &ColumnSchema::default()), Err(FieldError::NonRectangular(_))));
    }

    #[test]
    fn ragged_and_unparseable() {
        let ragged = "0 0 1 1 300 0\n1 0 1 1 300\n";
        assert!(matches!(parse_dat(ragged, &ColumnSchema::default()), Err(FieldError::Ragged { line: 2, .. })));
        let bad = "0 0 1 1 300 0\n1 0 1 abc 300 0\n";
        match parse_dat(bad, &ColumnSchema::default()) {
            Err(FieldError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn temperature_passes_through() {
        let g = parse_dat("0 0 0 0 300.0 0\n", &ColumnSchema::default()).unwrap();
        assert_eq!(g.node(0, 0).t_k, 300.0);
    }

    #[test]
    fn schema_from_names() {
        let s = ColumnSchema::from_names("T,x,y,_,ux,uy,oh").unwrap();
        assert_eq!(s, ColumnSchema { x: 1, y: 2, ux: 4, uy: 5, t: 0, oh: 6 });
        let g = parse_dat("300 0 0 9 1 2 0.1\n", &s).unwrap();
        assert_eq!(*g.node(0, 0), NodeRecord { ux: 1.0, uy: 2.0, t_k: 300.0, oh: 0.1 });
        assert!(ColumnSchema::from_names("x,y,ux").is_err());
    }

    #[test]
    fn out_of_range_oh_is_kept() {
        let g = parse_dat("0 0 0 0 300 1.5\n", &ColumnSchema::default()).unwrap();
        assert_eq!(g.oh_out_of_range(), 1);
    }
}
