use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use super::IngestError;

pub const DEFAULT_ENDPOINT: &str = "https://files.rcsb.org/download";

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub endpoint: String,
    /// Cache root; files live under `<data_dir>/pdb/<ID>.pdb`.
    pub data_dir: PathBuf,
    pub timeout: Duration,
}

impl FetchOptions {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self { endpoint: DEFAULT_ENDPOINT.to_string(), data_dir: data_dir.into(), timeout: Duration::from_secs(30) }
    }

    pub fn cache_path(&self, id: &str) -> PathBuf {
        cache_path(&self.data_dir, id)
    }
}

pub fn cache_path(data_dir: &Path, id: &str) -> PathBuf {
    data_dir.join("pdb").join(format!("{}.pdb", id.to_ascii_uppercase()))
}

/// `[0-9][A-Za-z0-9]{3}`; returns the upper-cased id.
pub fn validate_pdb_id(id: &str) -> Result<String, IngestError> {
    let b = id.as_bytes();
    let ok = b.len() == 4 && b[0].is_ascii_digit() && b[1..].iter().all(u8::is_ascii_alphanumeric);
    if ok {
        Ok(id.to_ascii_uppercase())
    } else {
        Err(IngestError::InvalidId(id.to_string()))
    }
}

/// Returns the PDB text for `id`, downloading `{endpoint}/{ID}.pdb` on a cache
/// miss and storing it for later calls.
pub fn fetch_pdb(id: &str, options: &FetchOptions) -> Result<String, IngestError> {
    let id = validate_pdb_id(id)?;
    let path = options.cache_path(&id);
    if path.is_file() {
        return Ok(fs::read_to_string(&path)?);
    }

    let url = format!("{}/{}.pdb", options.endpoint.trim_end_matches('/'), id);
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(options.timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut response = agent.get(&url).call().map_err(|e| match e {
        ureq::Error::Timeout(_) => IngestError::Timeout(options.timeout),
        other => IngestError::Fetch(other.to_string()),
    })?;
    let status = response.status().as_u16();
    if status != 200 {
        return Err(IngestError::Fetch(format!("GET {url} returned HTTP {status}")));
    }
    let body = response
        .body_mut()
        .with_config()
        .limit(u64::MAX)
        .read_to_string()
        .map_err(|e| match e {
            ureq::Error::Timeout(_) => IngestError::Timeout(options.timeout),
            other => IngestError::Fetch(other.to_string()),
        })?;

    // Write-then-rename keeps concurrent readers from seeing partial files.
    let dir = path.parent().expect("cache path has a parent");
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{id}.pdb.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(body)
}
