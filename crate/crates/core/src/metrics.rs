use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The five telemetry channels recorded per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Fps,
    FrameTimeMs,
    CpuLoadPct,
    RamMb,
    GpuFrameTimeMs,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Fps,
        MetricKind::FrameTimeMs,
        MetricKind::CpuLoadPct,
        MetricKind::RamMb,
        MetricKind::GpuFrameTimeMs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Fps => "fps",
            MetricKind::FrameTimeMs => "frame_time_ms",
            MetricKind::CpuLoadPct => "cpu_load_pct",
            MetricKind::RamMb => "ram_mb",
            MetricKind::GpuFrameTimeMs => "gpu_frame_time_ms",
        }
    }

    /// FPS is the only metric where a larger value wins.
    pub fn higher_is_better(self) -> bool {
        matches!(self, MetricKind::Fps)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric '{0}'")]
pub struct UnknownMetric(pub String);

impl FromStr for MetricKind {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMetric(s.to_string()))
    }
}
