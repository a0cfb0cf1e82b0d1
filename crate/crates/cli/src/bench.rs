//! Template runs from run requests.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vizlab_core::analytics::summarize;
use vizlab_core::catalog::{validate_profile, RunProfile, ValidatedProfile};
use vizlab_core::scene::Scene;
use vizlab_core::synthetic::with_scaled_params;
use vizlab_core::telemetry::{export_session, session_path, CostModelProbe, Session};
use vizlab_core::templates::{run_template, HarnessConfig, TemplateId};
use vizlab_core::MetricKind;

use crate::datasets::{classify, load_scene, DataConfig};
use crate::error::{CliError, Result};

/// Template id or free flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateChoice {
    Template(TemplateId),
    Free,
}

impl FromStr for TemplateChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("free") {
            return Ok(TemplateChoice::Free);
        }
        s.parse::<TemplateId>()
            .map(TemplateChoice::Template)
            .map_err(|_| CliError::InvalidArgument(format!("unknown template '{s}' (expected t1, t2, t3 or free)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    pub dataset: String,
    pub template: String,
    #[serde(default)]
    pub profile: RunProfile,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
}

/// Reads a profile from JSON, or TOML when the extension says so.
pub fn load_profile(path: &Path) -> Result<RunProfile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Profile(format!("{}: {e}", path.display())))
}

pub fn save_profile(profile: &RunProfile, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(profile).map_err(|e| CliError::Other(e.to_string()))?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Accepts `0.5`, `1/60` and the like.
pub fn parse_timestep(s: &str) -> Result<f64> {
    let bad = || CliError::InvalidArgument(format!("invalid timestep '{s}'"));
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().map_err(|_| bad())? / b.trim().parse::<f64>().map_err(|_| bad())?,
        None => s.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// `WxH`, or `none` to skip rasterization.
pub fn parse_render_size(s: &str) -> Result<Option<(usize, usize)>> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let bad = || CliError::InvalidArgument(format!("invalid render size '{s}' (expected WxH or none)"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h) = (w.parse::<usize>().map_err(|_| bad())?, h.parse::<usize>().map_err(|_| bad())?);
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok(Some((w, h)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub timestep: f64,
    pub render: Option<(usize, usize)>,
    /// Fill unset distance parameters from the scene's bounds.
    pub scaled_params: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        let h = HarnessConfig::default();
        Self { timestep: h.timestep, render: h.render, scaled_params: false }
    }
}

/// Request checks that need no dataset loading.
pub fn precheck(request: &RunRequest, data: &DataConfig) -> Result<TemplateId> {
    let template = match request.template.parse::<TemplateChoice>()? {
        TemplateChoice::Template(t) => t,
        TemplateChoice::Free => {
            return Err(CliError::InvalidArgument("free flight runs in the interactive viewer, not as a bench run".into()))
        }
    };
    validate_profile(request.profile.clone())?;
    classify(&request.dataset, data)?;
    Ok(template)
}

pub fn prepare_profile(profile: &RunProfile, scene: &Scene, options: &BenchOptions) -> Result<ValidatedProfile> {
    let profile = if options.scaled_params { with_scaled_params(profile.clone(), scene) } else { profile.clone() };
    Ok(validate_profile(profile)?)
}

/// Runs the request's template with the cost-model probe.
pub fn run_request(request: &RunRequest, scene: &Scene, template: TemplateId, options: &BenchOptions) -> Result<Session> {
    let profile = prepare_profile(&request.profile, scene, options)?;
    let config = HarnessConfig {
        timestep: options.timestep,
        render: options.render,
        name: request.name.clone(),
        description: request.description.clone(),
        ..Default::default()
    };
    Ok(run_template(scene, &profile, template, &config, &mut CostModelProbe::default())?)
}

/// Loads the dataset, runs, and writes `<out_dir>/<name>.json`.
pub fn bench_to_file(request: &RunRequest, data: &DataConfig, options: &BenchOptions, out_dir: &Path) -> Result<(PathBuf, Session)> {
    let template = precheck(request, data)?;
    let scene = load_scene(&request.dataset, data)?;
    let session = run_request(request, &scene, template, options)?;
    let path = session_path(out_dir, &session.name);
    export_session(&session, &path)?;
    Ok((path, session))
}

/// Short human-readable digest of a session.
pub fn summary_text(session: &Session) -> String {
    let mut out = format!("{}: {} samples over {:.3} s\n", session.name, session.samples.len(), session.duration());
    if let Ok(s) = summarize(session, None) {
        for m in MetricKind::ALL {
            let st = s.metrics[&m];
            out += &format!("  {:<18} mean {:>10.3}  min {:>10.3}  max {:>10.3}\n", m.as_str(), st.mean, st.min, st.max);
        }
        out += &format!("  {:<18} {:>15.3}\n", "1% low fps", s.one_pct_low_fps);
    }
    out
}
