//! Directory of `.dat` snapshots to one EXR per snapshot plus `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vizlab_core::field::{build_time_array, parse_dat, read_exr, transcode, write_exr, ColumnSchema, FieldTextureArray};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSlice {
    /// Path relative to the manifest.
    pub file: String,
    pub time: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldManifest {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub spacing: [f64; 2],
    /// Slice order is array order.
    pub slices: Vec<ManifestSlice>,
}

/// Snapshot timestamps, one per `.dat` file in name order.
#[derive(Debug, Clone, PartialEq)]
pub enum Times {
    Explicit(Vec<f64>),
    /// `start + k * step`.
    Uniform { start: f64, step: f64 },
}

impl Times {
    fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Times::Explicit(v) if v.len() == n => Ok(v.clone()),
            Times::Explicit(v) => Err(CliError::InvalidArgument(format!("{} times given for {n} snapshots", v.len()))),
            Times::Uniform { start, step } if *step > 0.0 && start.is_finite() => {
                Ok((0..n).map(|k| start + k as f64 * step).collect())
            }
            Times::Uniform { step, .. } => Err(CliError::InvalidArgument(format!("time step must be positive, got {step}"))),
        }
    }
}

pub fn dat_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("dat")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn transcode_dir(input: &Path, output: &Path, times: &Times, schema: &ColumnSchema) -> Result<FieldManifest> {
    let files = dat_files(input)?;
    if files.is_empty() {
        return Err(CliError::InvalidArgument(format!("no .dat files in {}", input.display())));
    }
    let times = times.resolve(files.len())?;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::InvalidArgument("snapshot times must be strictly increasing".into()));
    }
    fs::create_dir_all(output).map_err(|e| CliError::io(output, e))?;

    let mut slices = Vec::with_capacity(files.len());
    let mut dims = None;
    let mut spacing = [0.0; 2];
    for (path, time) in files.iter().zip(times) {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let grid = parse_dat(&text, schema).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        let oob = grid.oh_out_of_range();
        if oob > 0 {
            log::warn!("{}: {oob} OH values outside [0, 1]", path.display());
        }
        match dims {
            None => {
                dims = Some((grid.nx, grid.ny));
                spacing = [grid.spacing.0, grid.spacing.1];
            }
            Some(d) if d != (grid.nx, grid.ny) => {
                return Err(CliError::InvalidArgument(format!(
                    "{} is {}x{}, earlier snapshots are {}x{}",
                    path.display(),
                    grid.nx,
                    grid.ny,
                    d.0,
                    d.1
                )));
            }
            Some(_) => {}
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("slice");
        let file = format!("{stem}.exr");
        let target = output.join(&file);
        write_exr(&transcode(&grid), &target)?;
        let source = path.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        slices.push(ManifestSlice { file, time, source });
    }
    let (width, height) = dims.expect("at least one snapshot");
    let name = output.file_name().and_then(|s| s.to_str()).unwrap_or("field").to_string();
    let manifest = FieldManifest { name, width, height, spacing, slices };
    let path = output.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Other(e.to_string()))?;
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<FieldManifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::InvalidArgument(format!("{}: {e}", path.display())))
}

/// Loads every slice named by the manifest into a time array.
pub fn load_field(manifest_path: &Path) -> Result<(FieldManifest, FieldTextureArray)> {
    let manifest = read_manifest(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let slices = manifest.slices.iter().map(|s| read_exr(dir.join(&s.file))).collect::<std::result::Result<Vec<_>, _>>()?;
    let times = manifest.slices.iter().map(|s| s.time).collect();
    let array = build_time_array(slices, times)?;
    Ok((manifest, array))
}
