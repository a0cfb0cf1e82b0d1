//! Per-frame sampling, probes and JSON session files.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::metrics::MetricKind;

pub const SCHEMA_VERSION: u32 = 1;
pub const SESSION_SCHEMA: &str = include_str!("../data/session.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    /// Seconds since session start.
    pub t: f64,
    pub fps: f64,
    pub frame_time_ms: f64,
    pub cpu_load_pct: f64,
    pub ram_mb: f64,
    pub gpu_frame_time_ms: f64,
}

impl FrameSample {
    pub fn value(&self, metric: MetricKind) -> f64 {
        match metric {
            MetricKind::Fps => self.fps,
            MetricKind::FrameTimeMs => self.frame_time_ms,
            MetricKind::CpuLoadPct => self.cpu_load_pct,
            MetricKind::RamMb => self.ram_mb,
            MetricKind::GpuFrameTimeMs => self.gpu_frame_time_ms,
        }
    }

    pub fn delta_time(&self) -> f64 {
        self.frame_time_ms / 1000.0
    }

    fn values(&self) -> [f64; 6] {
        [self.t, self.fps, self.frame_time_ms, self.cpu_load_pct, self.ram_mb, self.gpu_frame_time_ms]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub schema_version: u32,
    pub name: String,
    pub description: String,
    pub dataset: String,
    pub template: Option<String>,
    pub optimizations: Vec<String>,
    pub started_at: DateTime<Utc>,
    pub sample_interval_ms: f64,
    pub samples: Vec<FrameSample>,
}

impl Session {
    pub fn new(name: impl Into<String>, dataset: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            description: String::new(),
            dataset: dataset.into(),
            template: None,
            optimizations: Vec::new(),
            started_at: Utc::now(),
            sample_interval_ms: 0.0,
            samples: Vec::new(),
        }
    }

    /// Duration covered by the samples.
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn validate(&self) -> Result<(), TelemetryError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(TelemetryError::UnsupportedVersion(self.schema_version as u64));
        }
        if !(self.sample_interval_ms >= 0.0 && self.sample_interval_ms.is_finite()) {
            return Err(TelemetryError::InvalidValue("sample_interval_ms must be finite and >= 0".into()));
        }
        let catalog = Catalog::builtin();
        for (i, id) in self.optimizations.iter().enumerate() {
            if !catalog.technique(id).is_some_and(|t| t.implemented) {
                return Err(TelemetryError::InvalidValue(format!("optimization '{id}' is not an implemented technique")));
            }
            if self.optimizations[..i].contains(id) {
                return Err(TelemetryError::InvalidValue(format!("optimization '{id}' listed twice")));
            }
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.values().iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(TelemetryError::InvalidValue(format!("sample {i} has a negative or non-finite value")));
            }
            if !(s.fps > 0.0 && s.frame_time_ms > 0.0) {
                return Err(TelemetryError::InvalidValue(format!("sample {i} has zero frame time")));
            }
            if i > 0 && !(s.t > self.samples[i - 1].t) {
                return Err(TelemetryError::NonMonotone { index: i });
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TelemetryError {
    #[error("delta_time must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("unsupported schema_version {0}")]
    UnsupportedVersion(u64),
    #[error("sample times not strictly increasing at index {index}")]
    NonMonotone { index: usize },
    #[error("missing required field '{0}'")]
    MissingField(String),
    #[error("malformed session: {0}")]
    Malformed(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl TelemetryError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            TelemetryError::NonPositiveDelta(_) => "non_positive_delta",
            TelemetryError::UnsupportedVersion(_) => "unsupported_version",
            TelemetryError::NonMonotone { .. } => "non_monotone",
            TelemetryError::MissingField(_) => "missing_field",
            TelemetryError::Malformed(_) => "malformed",
            TelemetryError::InvalidValue(_) => "invalid_value",
            TelemetryError::Io { .. } => "io",
        }
    }
}

/// What a probe may look at for the current frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameContext {
    pub frame_index: u64,
    pub submitted_primitives: u64,
    pub visible_objects: u64,
    /// Measured rasterization time, if the frame was rendered.
    pub render_wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProbeReading {
    pub cpu_load_pct: f64,
    pub ram_mb: f64,
    pub render_stage_ms: f64,
}

pub trait Probe {
    fn read(&mut self, ctx: &FrameContext) -> ProbeReading;

    /// Deterministic probes make sessions reproducible.
    fn is_synthetic(&self) -> bool;
}

/// Replays a fixed schedule of readings, cycling when exhausted.
#[derive(Debug, Clone)]
pub struct ScheduledProbe {
    schedule: Vec<ProbeReading>,
    next: usize,
}

impl ScheduledProbe {
    pub fn new(schedule: Vec<ProbeReading>) -> Self {
        assert!(!schedule.is_empty(), "schedule must not be empty");
        Self { schedule, next: 0 }
    }

    pub fn constant(reading: ProbeReading) -> Self {
        Self::new(vec![reading])
    }
}

impl Probe for ScheduledProbe {
    fn read(&mut self, _: &FrameContext) -> ProbeReading {
        let r = self.schedule[self.next % self.schedule.len()];
        self.next += 1;
        r
    }

    fn is_synthetic(&self) -> bool {
        true
    }
}

/// Deterministic readings derived from frame counters.
///
/// `render_stage_ms = render_base_ms + submitted_primitives / primitives_per_ms`;
/// CPU load and memory are affine in the visible object count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModelProbe {
    pub render_base_ms: f64,
    pub primitives_per_ms: f64,
    pub cpu_base_pct: f64,
    pub cpu_pct_per_kobject: f64,
    pub ram_base_mb: f64,
    pub ram_mb_per_kobject: f64,
}

impl Default for CostModelProbe {
    fn default() -> Self {
        Self {
            render_base_ms: 0.0,
            primitives_per_ms: 2.0e5,
            cpu_base_pct: 12.0,
            cpu_pct_per_kobject: 0.02,
            ram_base_mb: 512.0,
            ram_mb_per_kobject: 0.25,
        }
    }
}

impl CostModelProbe {
    pub fn render_stage_ms(&self, primitives: u64) -> f64 {
        self.render_base_ms + primitives as f64 / self.primitives_per_ms
    }
}

impl Probe for CostModelProbe {
    fn read(&mut self, ctx: &FrameContext) -> ProbeReading {
        let k = ctx.visible_objects as f64 / 1000.0;
        ProbeReading {
            cpu_load_pct: (self.cpu_base_pct + self.cpu_pct_per_kobject * k).min(100.0),
            ram_mb: self.ram_base_mb + self.ram_mb_per_kobject * k,
            render_stage_ms: self.render_stage_ms(ctx.submitted_primitives),
        }
    }

    fn is_synthetic(&self) -> bool {
        true
    }
}

/// System CPU percentage, process resident memory and measured render time.
pub struct PlatformProbe {
    system: sysinfo::System,
    pid: Option<sysinfo::Pid>,
}

impl Default for PlatformProbe {
    fn default() -> Self {
        Self::new()
    }
}

impl PlatformProbe {
    pub fn new() -> Self {
        let mut system = sysinfo::System::new();
        system.refresh_cpu_usage();
        Self { system, pid: sysinfo::get_current_pid().ok() }
    }
}

impl Probe for PlatformProbe {
    fn read(&mut self, ctx: &FrameContext) -> ProbeReading {
        self.system.refresh_cpu_usage();
        let mut ram_mb = 0.0;
        if let Some(pid) = self.pid {
            self.system.refresh_processes(sysinfo::ProcessesToUpdate::Some(&[pid]), false);
            if let Some(p) = self.system.process(pid) {
                ram_mb = p.memory() as f64 / (1024.0 * 1024.0);
            }
        }
        let cpu = self.system.global_cpu_usage() as f64;
        ProbeReading {
            cpu_load_pct: if cpu.is_finite() { cpu.clamp(0.0, 100.0) } else { 0.0 },
            ram_mb,
            render_stage_ms: ctx.render_wall_ms.unwrap_or(0.0),
        }
    }

    fn is_synthetic(&self) -> bool {
        false
    }
}

/// FPS and frame time from `delta_time` (seconds), the rest from the probe.
pub fn sample_frame(t: f64, delta_time: f64, probe: &mut dyn Probe, ctx: &FrameContext) -> Result<FrameSample, TelemetryError> {
    if !(delta_time > 0.0 && delta_time.is_finite()) {
        return Err(TelemetryError::NonPositiveDelta(delta_time));
    }
    let r = probe.read(ctx);
    Ok(FrameSample {
        t,
        fps: 1.0 / delta_time,
        frame_time_ms: 1000.0 * delta_time,
        cpu_load_pct: r.cpu_load_pct,
        ram_mb: r.ram_mb,
        gpu_frame_time_ms: r.render_stage_ms,
    })
}

/// Appends samples to a session, counting rejected frames.
#[derive(Debug, Clone)]
pub struct Recorder {
    session: Session,
    dropped: u64,
}

impl Recorder {
    pub fn new(session: Session) -> Self {
        Self { session, dropped: 0 }
    }

    pub fn record(&mut self, t: f64, delta_time: f64, probe: &mut dyn Probe, ctx: &FrameContext) -> Option<&FrameSample> {
        if self.session.samples.last().is_some_and(|s| !(t > s.t)) || !(t >= 0.0) {
            self.dropped += 1;
            return None;
        }
        match sample_frame(t, delta_time, probe, ctx) {
            Ok(s) => {
                self.session.samples.push(s);
                self.session.samples.last()
            }
            Err(_) => {
                self.dropped += 1;
                None
            }
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn finish(self) -> Session {
        self.session
    }
}

pub fn session_to_json(session: &Session) -> Result<String, TelemetryError> {
    session.validate()?;
    serde_json::to_string_pretty(session).map_err(|e| TelemetryError::Malformed(e.to_string()))
}

/// Writes the session as JSON, replacing any existing file atomically.
pub fn export_session(session: &Session, path: impl AsRef<Path>) -> Result<(), TelemetryError> {
    let path = path.as_ref();
    let io = |source| TelemetryError::Io { path: path.to_owned(), source };
    let json = session_to_json(session)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, json.as_bytes()).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// `<out_dir>/<name>.json`, with path separators in the name replaced.
pub fn session_path(out_dir: &Path, name: &str) -> PathBuf {
    let safe: String = name.chars().map(|c| if c == '/' || c == '\\' || c == '\0' { '_' } else { c }).collect();
    out_dir.join(format!("{safe}.json"))
}

const TOP_FIELDS: [&str; 9] = [
    "schema_version",
    "name",
    "description",
    "dataset",
    "template",
    "optimizations",
    "started_at",
    "sample_interval_ms",
    "samples",
];
const SAMPLE_FIELDS: [&str; 6] = ["t", "fps", "frame_time_ms", "cpu_load_pct", "ram_mb", "gpu_frame_time_ms"];

pub fn session_from_json(text: &str) -> Result<Session, TelemetryError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| TelemetryError::Malformed(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| TelemetryError::Malformed("top level is not an object".into()))?;
    let version = obj.get("schema_version").ok_or_else(|| TelemetryError::MissingField("schema_version".into()))?;
    match version.as_u64() {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(TelemetryError::UnsupportedVersion(v)),
        None => return Err(TelemetryError::Malformed("schema_version is not an unsigned integer".into())),
    }
    if let Some(f) = TOP_FIELDS.iter().find(|f| !obj.contains_key(**f)) {
        return Err(TelemetryError::MissingField((*f).into()));
    }
    if let Some(samples) = obj["samples"].as_array() {
        for (i, s) in samples.iter().enumerate() {
            if let Some(o) = s.as_object() {
                if let Some(f) = SAMPLE_FIELDS.iter().find(|f| !o.contains_key(**f)) {
                    return Err(TelemetryError::MissingField(format!("samples[{i}].{f}")));
                }
            }
        }
    }
    let session: Session = serde_json::from_value(value).map_err(|e| TelemetryError::Malformed(e.to_string()))?;
    session.validate()?;
    Ok(session)
}

pub fn import_session(path: impl AsRef<Path>) -> Result<Session, TelemetryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TelemetryError::Io { path: path.to_owned(), source })?;
    session_from_json(&text)
}
