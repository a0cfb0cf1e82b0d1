//! Dataset ids and how they become scenes.
//!
//! * `synth-<count>`: seeded synthetic ball of atoms.
//! * a four-character PDB id: read from `<data_dir>/pdb/<ID>.pdb`, fetched on a miss.
//! * `field:<name>`: transcoded snapshots under `<data_dir>/fields/<name>/`.
//! * a path to a `.pdb` file or a field `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use vizlab_core::ingest::{self, assign_lod_groups, fetch_pdb, infer_bonds, parse_pdb, validate_pdb_id, FetchOptions, Molecule};
use vizlab_core::scene::{scene_from_field, scene_from_molecule, FieldSceneOptions, MoleculeStyle, Scene};
use vizlab_core::synthetic::{parse_synthetic_id, synthetic_scene, DEFAULT_SEED};

use crate::error::{CliError, Result};
use crate::transcode::{load_field, read_manifest, MANIFEST_FILE};

pub const DATA_DIR_ENV: &str = "VIZLAB_DATA_DIR";
pub const ENDPOINT_ENV: &str = "VIZLAB_PDB_ENDPOINT";
/// Largest emitter grid built from a field texture.
pub const MAX_EMITTER_GRID: usize = 64;

#[derive(Debug, Clone)]
pub struct DataConfig {
    pub data_dir: PathBuf,
    pub endpoint: String,
    pub timeout: Duration,
    /// Keep only these chains of molecular datasets; empty keeps all.
    pub chains: Vec<char>,
}

impl DataConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        let defaults = FetchOptions::new(data_dir);
        Self { data_dir: defaults.data_dir, endpoint: defaults.endpoint, timeout: defaults.timeout, chains: Vec::new() }
    }

    pub fn fetch_options(&self) -> FetchOptions {
        FetchOptions { endpoint: self.endpoint.clone(), data_dir: self.data_dir.clone(), timeout: self.timeout }
    }

    pub fn fields_dir(&self) -> PathBuf {
        self.data_dir.join("fields")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    Synthetic(usize),
    Pdb(String),
    PdbFile(PathBuf),
    Field(PathBuf),
}

pub fn classify(id: &str, config: &DataConfig) -> Result<DatasetSource> {
    if let Some(n) = parse_synthetic_id(id) {
        return Ok(DatasetSource::Synthetic(n));
    }
    if let Some(name) = id.strip_prefix("field:") {
        let path = config.fields_dir().join(name).join(MANIFEST_FILE);
        return if path.is_file() { Ok(DatasetSource::Field(path)) } else { Err(CliError::UnknownDataset(id.to_string())) };
    }
    let path = Path::new(id);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pdb")) {
        return if path.is_file() { Ok(DatasetSource::PdbFile(path.to_path_buf())) } else { Err(CliError::UnknownDataset(id.to_string())) };
    }
    if path.file_name().is_some_and(|n| n == MANIFEST_FILE) {
        return if path.is_file() { Ok(DatasetSource::Field(path.to_path_buf())) } else { Err(CliError::UnknownDataset(id.to_string())) };
    }
    match validate_pdb_id(id) {
        Ok(id) => Ok(DatasetSource::Pdb(id)),
        Err(_) => Err(CliError::UnknownDataset(id.to_string())),
    }
}

/// Parsed molecule with CONECT bonds plus distance-inferred bonds.
pub fn molecule_from_text(text: &str, chains: &[char]) -> Result<Molecule> {
    let mut molecule = parse_pdb(text)?;
    if !chains.is_empty() {
        let present = molecule.chains();
        if let Some(c) = chains.iter().find(|c| !present.contains(c)) {
            return Err(CliError::InvalidArgument(format!("chain '{c}' is not in the structure")));
        }
        molecule = molecule.filter_chains(chains);
    }
    let inferred = infer_bonds(&molecule.atoms)?;
    for w in &inferred.warnings {
        log::warn!("{w}");
    }
    let mut bonds: BTreeMap<(usize, usize), ingest::Bond> = inferred.bonds.into_iter().map(|b| ((b.a, b.b), b)).collect();
    for b in &molecule.bonds {
        bonds.insert((b.a, b.b), *b);
    }
    Ok(Molecule::new(molecule.atoms, bonds.into_values().collect()))
}

pub fn molecule_scene(molecule: &Molecule, dataset_id: &str) -> Result<Scene> {
    let lod = assign_lod_groups(molecule, &[])?;
    Ok(scene_from_molecule(molecule, &lod, &MoleculeStyle::default(), dataset_id)?)
}

/// PDB text for `id`, from the cache or the endpoint.
pub fn pdb_text(id: &str, config: &DataConfig) -> Result<String> {
    Ok(fetch_pdb(id, &config.fetch_options())?)
}

pub fn load_scene(id: &str, config: &DataConfig) -> Result<Scene> {
    match classify(id, config)? {
        DatasetSource::Synthetic(n) => Ok(synthetic_scene(n, DEFAULT_SEED)?),
        DatasetSource::Pdb(pdb) => molecule_scene(&molecule_from_text(&pdb_text(&pdb, config)?, &config.chains)?, &pdb),
        DatasetSource::PdbFile(path) => {
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(id).to_string();
            molecule_scene(&molecule_from_text(&text, &config.chains)?, &name)
        }
        DatasetSource::Field(manifest) => {
            let (m, array) = load_field(&manifest)?;
            let grid = (array.width().min(MAX_EMITTER_GRID), array.height().min(MAX_EMITTER_GRID));
            Ok(scene_from_field(&array, grid, None, &FieldSceneOptions::default(), &format!("field:{}", m.name))?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub id: String,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Cached PDB entries and transcoded fields, after the synthetic pattern.
pub fn list_datasets(config: &DataConfig) -> Vec<DatasetInfo> {
    let mut out = vec![DatasetInfo { id: "synth-<count>".into(), kind: "synthetic", detail: Some("seeded atom ball".into()) }];
    let stems = |dir: PathBuf, ext: &str| -> Vec<PathBuf> {
        let mut v: Vec<PathBuf> = fs::read_dir(dir)
            .into_iter()
            .flatten()
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| ext.is_empty() && p.is_dir() || p.extension().is_some_and(|x| x == ext))
            .collect();
        v.sort();
        v
    };
    for p in stems(config.data_dir.join("pdb"), "pdb") {
        if let Some(id) = p.file_stem().and_then(|s| s.to_str()).and_then(|s| validate_pdb_id(s).ok()) {
            out.push(DatasetInfo { id, kind: "pdb", detail: None });
        }
    }
    for dir in stems(config.fields_dir(), "") {
        let manifest = dir.join(MANIFEST_FILE);
        if let (Some(name), Ok(m)) = (dir.file_name().and_then(|s| s.to_str()), read_manifest(&manifest)) {
            let detail = format!("{}x{}, {} slices", m.width, m.height, m.slices.len());
            out.push(DatasetInfo { id: format!("field:{name}"), kind: "field", detail: Some(detail) });
        }
    }
    out
}
