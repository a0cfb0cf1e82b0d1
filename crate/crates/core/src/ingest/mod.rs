//! Molecular structure ingestion: PDB parsing and retrieval, bond inference,
//! LOD grouping and streaming-cell assignment.

mod bonds;
mod fetch;
mod lod;
mod parse;
pub mod tables;

pub use bonds::{infer_bonds, BondInference};
pub use fetch::{fetch_pdb, validate_pdb_id, FetchOptions, DEFAULT_ENDPOINT};
pub use lod::{assign_lod_groups, assign_streaming_cells, FocusRegion, LodAssignment, LodGroup};
pub use parse::{parse_pdb, write_pdb};

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::geometry::{axis_coordinates, principal_axis, Aabb};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("no ATOM/HETATM records found")]
    EmptyInput,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid PDB id '{0}' (expected a digit followed by three alphanumerics)")]
    InvalidId(String),
    #[error("fetch failed: {0}")]
    Fetch(String),
    #[error("fetch timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub serial: i64,
    /// Atom name (columns 13-16), trimmed.
    pub name: String,
    pub element: String,
    /// Ångström.
    pub position: DVec3,
    pub chain: char,
    pub residue_name: String,
    pub residue_seq: i32,
    pub hetero: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondSource {
    Conect,
    Inferred,
}

/// Bond between atom indices `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub source: BondSource,
}

impl Bond {
    pub fn new(i: usize, j: usize, source: BondSource) -> Self {
        Self { a: i.min(j), b: i.max(j), source }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub aabb: Aabb,
    pub principal_axis: DVec3,
    /// Per-atom normalized coordinate along the principal axis.
    pub whisker_coord: Vec<f64>,
}

impl Molecule {
    /// Builds a molecule and its derived geometry (bounds, axis, whisker
    /// coordinates).
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Self {
        let positions: Vec<DVec3> = atoms.iter().map(|a| a.position).collect();
        let aabb = Aabb::from_points(positions.iter().copied());
        let principal_axis = principal_axis(&positions);
        let whisker_coord = axis_coordinates(&positions, principal_axis);
        Self { atoms, bonds, aabb, principal_axis, whisker_coord }
    }

    pub fn positions(&self) -> Vec<DVec3> {
        self.atoms.iter().map(|a| a.position).collect()
    }

    pub fn centroid(&self) -> DVec3 {
        let n = self.atoms.len().max(1) as f64;
        self.atoms.iter().map(|a| a.position).sum::<DVec3>() / n
    }

    pub fn chains(&self) -> std::collections::BTreeSet<char> {
        self.atoms.iter().map(|a| a.chain).collect()
    }

    /// Keeps only atoms of the given chains; bonds are remapped.
    pub fn filter_chains(&self, chains: &[char]) -> Molecule {
        let mut remap = vec![usize::MAX; self.atoms.len()];
        let mut atoms = Vec::new();
        for (i, a) in self.atoms.iter().enumerate() {
            if chains.contains(&a.chain) {
                remap[i] = atoms.len();
                atoms.push(a.clone());
            }
        }
        let bonds = self
            .bonds
            .iter()
            .filter(|b| remap[b.a] != usize::MAX && remap[b.b] != usize::MAX)
            .map(|b| Bond::new(remap[b.a], remap[b.b], b.source))
            .collect();
        Molecule::new(atoms, bonds)
    }
}
