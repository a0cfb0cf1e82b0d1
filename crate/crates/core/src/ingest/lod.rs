use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{IngestError, Molecule};
use crate::geometry::{cell_index, CellId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LodGroup {
    Core,
    Mid,
    Periphery,
}

impl LodGroup {
    pub const ALL: [LodGroup; 3] = [LodGroup::Core, LodGroup::Mid, LodGroup::Periphery];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodAssignment {
    pub groups: Vec<LodGroup>,
    /// Base LOD level for core, mid, periphery.
    pub base_levels: [u8; 3],
}

impl LodAssignment {
    pub const DEFAULT_BASE_LEVELS: [u8; 3] = [0, 1, 2];

    pub fn base_level(&self, group: LodGroup) -> u8 {
        self.base_levels[group as usize]
    }

    pub fn count(&self, group: LodGroup) -> usize {
        self.groups.iter().filter(|g| **g == group).count()
    }
}

/// A chain and an inclusive residue-number range whose atoms are always core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FocusRegion {
    pub chain: char,
    pub residues: RangeInclusive<i32>,
}

impl FocusRegion {
    pub fn new(chain: char, residues: RangeInclusive<i32>) -> Self {
        Self { chain, residues }
    }
}

impl fmt::Display for FocusRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.chain, self.residues.start(), self.residues.end())
    }
}

/// Parses `A:1-50` or `A` (whole chain).
impl FromStr for FocusRegion {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IngestError::InvalidArgument(format!("focus '{s}' is not CHAIN[:START-END]"));
        let (chain, range) = match s.split_once(':') {
            Some((c, r)) => (c, Some(r)),
            None => (s, None),
        };
        let mut chars = chain.chars();
        let (Some(chain), None) = (chars.next(), chars.next()) else { return Err(bad()) };
        let residues = match range {
            None => i32::MIN..=i32::MAX,
            Some(r) => {
                let (a, b) = r.split_once('-').ok_or_else(bad)?;
                let a: i32 = a.trim().parse().map_err(|_| bad())?;
                let b: i32 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                a..=b
            }
        };
        Ok(FocusRegion { chain, residues })
    }
}

/// Groups atoms for hierarchical LOD.
///
/// Atoms inside any focus region are core. All other atoms are ranked by
/// distance to the centroid (ties by index) and split into terciles: inner
/// third core, middle third mid, outer third periphery. With zero distance
/// spread every atom is core.
pub fn assign_lod_groups(molecule: &Molecule, focus: &[FocusRegion]) -> Result<LodAssignment, IngestError> {
    let chains = molecule.chains();
    for f in focus {
        if !chains.contains(&f.chain) {
            return Err(IngestError::InvalidArgument(format!("focus references absent chain '{}'", f.chain)));
        }
    }

    let n = molecule.atoms.len();
    let centroid = molecule.centroid();
    let dist: Vec<f64> = molecule.atoms.iter().map(|a| (a.position - centroid).length()).collect();
    let lo = dist.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = dist.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut groups = vec![LodGroup::Core; n];
    if n > 0 && hi > lo {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        for (rank, &i) in order.iter().enumerate() {
            groups[i] = LodGroup::ALL[(rank * 3 / n).min(2)];
        }
    }

    for (g, a) in groups.iter_mut().zip(&molecule.atoms) {
        if focus.iter().any(|f| f.chain == a.chain && f.residues.contains(&a.residue_seq)) {
            *g = LodGroup::Core;
        }
    }

    Ok(LodAssignment { groups, base_levels: LodAssignment::DEFAULT_BASE_LEVELS })
}

/// Streaming cell per atom, anchored at the bounds minimum.
pub fn assign_streaming_cells(molecule: &Molecule, cell_size: f64) -> Result<Vec<CellId>, IngestError> {
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(IngestError::InvalidArgument(format!("cell size must be positive, got {cell_size}")));
    }
    Ok(molecule.atoms.iter().map(|a| cell_index(a.position, molecule.aabb.min, cell_size)).collect())
}
