use std::collections::HashMap;

use super::tables::{covalent_radius, FALLBACK_COVALENT_RADIUS};
use super::{Atom, Bond, BondSource, IngestError};

/// Extra distance allowed beyond the sum of covalent radii, Å.
pub const BOND_TOLERANCE: f64 = 0.4;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BondInference {
    /// Sorted by `(a, b)`.
    pub bonds: Vec<Bond>,
    /// One entry per distinct unknown element.
    pub warnings: Vec<String>,
}

/// Distance-based bonds: `|a - b| <= r_cov(a) + r_cov(b) + 0.4 Å`, found with a
/// uniform spatial hash whose cell edge is the largest possible cutoff.
pub fn infer_bonds(atoms: &[Atom]) -> Result<BondInference, IngestError> {
    if atoms.is_empty() {
        return Err(IngestError::InvalidArgument("bond inference needs at least one atom".into()));
    }

    let mut warnings = Vec::new();
    let radii: Vec<f64> = atoms
        .iter()
        .map(|a| {
            covalent_radius(&a.element).unwrap_or_else(|| {
                let w = format!("unknown element '{}', using {FALLBACK_COVALENT_RADIUS} Å", a.element);
                if !warnings.contains(&w) {
                    log::warn!("{w}");
                    warnings.push(w);
                }
                FALLBACK_COVALENT_RADIUS
            })
        })
        .collect();

    let max_r = radii.iter().cloned().fold(0.0, f64::max);
    let cell = 2.0 * max_r + BOND_TOLERANCE;
    let key = |i: usize| {
        let p = atoms[i].position / cell;
        (p.x.floor() as i64, p.y.floor() as i64, p.z.floor() as i64)
    };

    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..atoms.len() {
        grid.entry(key(i)).or_default().push(i);
    }

    let mut bonds = Vec::new();
    for i in 0..atoms.len() {
        let (cx, cy, cz) = key(i);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else { continue };
                    for &j in bucket {
                        if j <= i {
                            continue;
                        }
                        let d = (atoms[i].position - atoms[j].position).length();
                        if d <= radii[i] + radii[j] + BOND_TOLERANCE {
                            bonds.push(Bond { a: i, b: j, source: BondSource::Inferred });
                        }
                    }
                }
            }
        }
    }
    bonds.sort_by_key(|b| (b.a, b.b));
    Ok(BondInference { bonds, warnings })
}
