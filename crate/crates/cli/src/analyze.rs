//! Analytics over session files, serialized straight from the library types.

use std::path::Path;

use serde::Serialize;
use vizlab_core::analytics::{compare, compare_all, small_multiples, summarize, threshold_report, TimeWindow};
use vizlab_core::telemetry::{import_session, Session};
use vizlab_core::MetricKind;

use crate::error::{CliError, Result};

pub const DEFAULT_POINTS: usize = 100;

pub fn to_json<T: Serialize>(value: &T, pretty: bool) -> Result<String> {
    let r = if pretty { serde_json::to_string_pretty(value) } else { serde_json::to_string(value) };
    r.map_err(|e| CliError::Other(e.to_string()))
}

pub fn parse_metric(s: &str) -> Result<MetricKind> {
    s.parse::<MetricKind>().map_err(|e| CliError::InvalidArgument(e.to_string()))
}

/// A window from optional bounds; an open end extends to the whole session.
pub fn window(t0: Option<f64>, t1: Option<f64>) -> Result<Option<TimeWindow>> {
    match (t0, t1) {
        (None, None) => Ok(None),
        (a, b) => Ok(Some(TimeWindow::new(a.unwrap_or(0.0), b.unwrap_or(f64::MAX))?)),
    }
}

pub fn load_sessions(paths: &[impl AsRef<Path>]) -> Result<Vec<Session>> {
    paths.iter().map(|p| Ok(import_session(p.as_ref())?)).collect()
}

pub fn summary_json(session: &Session, window: Option<TimeWindow>, pretty: bool) -> Result<String> {
    to_json(&summarize(session, window)?, pretty)
}

/// One verdict for a named metric, all five otherwise.
pub fn compare_json(a: &Session, b: &Session, metric: Option<MetricKind>, window: Option<TimeWindow>, pretty: bool) -> Result<String> {
    match metric {
        Some(m) => to_json(&compare(a, b, m, window)?, pretty),
        None => to_json(&compare_all(a, b, window)?, pretty),
    }
}

pub fn threshold_json(sessions: &[Session], metric: MetricKind, value: f64, pretty: bool) -> Result<String> {
    to_json(&threshold_report(sessions, metric, value)?, pretty)
}

pub fn multiples_json(sessions: &[Session], metric: MetricKind, points: usize, pretty: bool) -> Result<String> {
    to_json(&small_multiples(sessions, metric, points)?, pretty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use vizlab_core::telemetry::FrameSample;

    fn session(name: &str, fps: &[f64]) -> Session {
        let mut s = Session::new(name, "synth-1");
        s.samples = fps
            .iter()
            .enumerate()
            .map(|(i, &f)| FrameSample { t: i as f64 * 0.1, fps: f, frame_time_ms: 1000.0 / f, cpu_load_pct: 10.0, ram_mb: 100.0, gpu_frame_time_ms: 1.0 })
            .collect();
        s
    }

    #[test]
    fn windows() {
        assert_eq!(window(None, None).unwrap(), None);
        assert_eq!(window(Some(1.0), None).unwrap().unwrap().t1, f64::MAX);
        assert!(window(Some(2.0), Some(1.0)).is_err());
    }

    #[test]
    fn compare_matches_library() {
        let (a, b) = (session("a", &[30.0, 40.0]), session("b", &[60.0, 50.0]));
        let one = compare_json(&a, &b, Some(MetricKind::Fps), None, false).unwrap();
        assert_eq!(one, serde_json::to_string(&compare(&a, &b, MetricKind::Fps, None).unwrap()).unwrap());
        let all = compare_json(&a, &b, None, None, false).unwrap();
        assert_eq!(all, serde_json::to_string(&compare_all(&a, &b, None).unwrap()).unwrap());
        assert!(compare_json(&a, &b, None, window(Some(5.0), Some(6.0)).unwrap(), false).is_err());
    }
}
