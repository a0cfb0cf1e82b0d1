//! Session summaries, pairwise verdicts, thresholds and downsampled series.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metrics::MetricKind;
use crate::telemetry::{FrameSample, Session};

/// Relative tolerance under which two means tie.
pub const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("no samples in window [{t0}, {t1}]")]
    EmptyWindow { t0: f64, t1: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Closed interval of session time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t0: f64,
    pub t1: f64,
}

impl TimeWindow {
    pub fn new(t0: f64, t1: f64) -> Result<Self, AnalyticsError> {
        if !(t0 >= 0.0 && t0 <= t1 && t1.is_finite()) {
            return Err(AnalyticsError::InvalidArgument(format!("window needs 0 <= t0 <= t1, got [{t0}, {t1}]")));
        }
        Ok(Self { t0, t1 })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t1
    }
}

fn windowed<'a>(session: &'a Session, window: Option<TimeWindow>) -> Result<Vec<&'a FrameSample>, AnalyticsError> {
    let samples: Vec<&FrameSample> = session.samples.iter().filter(|s| window.is_none_or(|w| w.contains(s.t))).collect();
    if samples.is_empty() {
        let w = window.unwrap_or(TimeWindow { t0: 0.0, t1: 0.0 });
        return Err(AnalyticsError::EmptyWindow { t0: w.t0, t1: w.t1 });
    }
    Ok(samples)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub name: String,
    pub metrics: BTreeMap<MetricKind, MetricStats>,
    pub one_pct_low_fps: f64,
    /// Time between the first and last sample in the window.
    pub duration: f64,
    pub sample_count: usize,
}

impl SessionSummary {
    pub fn mean(&self, metric: MetricKind) -> f64 {
        self.metrics[&metric].mean
    }
}

/// Mean FPS over the `ceil(N/100)` samples with the longest frame time;
/// equal frame times keep the earlier sample.
pub fn one_pct_low(samples: &[&FrameSample]) -> f64 {
    let k = samples.len().div_ceil(100);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[b].frame_time_ms.total_cmp(&samples[a].frame_time_ms).then(a.cmp(&b)));
    mean(order[..k].iter().map(|&i| samples[i].fps))
}

pub fn summarize(session: &Session, window: Option<TimeWindow>) -> Result<SessionSummary, AnalyticsError> {
    let samples = windowed(session, window)?;
    let metrics = MetricKind::ALL
        .into_iter()
        .map(|m| {
            let values = || samples.iter().map(|s| s.value(m));
            let stats = MetricStats {
                mean: mean(values()),
                min: values().fold(f64::INFINITY, f64::min),
                max: values().fold(f64::NEG_INFINITY, f64::max),
            };
            (m, stats)
        })
        .collect();
    Ok(SessionSummary {
        name: session.name.clone(),
        metrics,
        one_pct_low_fps: one_pct_low(&samples),
        duration: samples[samples.len() - 1].t - samples[0].t,
        sample_count: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
    #[serde(rename = "tie")]
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub metric: MetricKind,
    pub winner: Winner,
    pub means: (f64, f64),
}

/// Decides between two means under the metric's direction.
pub fn verdict(metric: MetricKind, mean_a: f64, mean_b: f64) -> Verdict {
    let winner = if (mean_a - mean_b).abs() <= TIE_EPSILON * mean_a.abs().max(mean_b.abs()) {
        Winner::Tie
    } else if (mean_a > mean_b) == metric.higher_is_better() {
        Winner::A
    } else {
        Winner::B
    };
    Verdict { metric, winner, means: (mean_a, mean_b) }
}

pub fn compare(a: &Session, b: &Session, metric: MetricKind, window: Option<TimeWindow>) -> Result<Verdict, AnalyticsError> {
    let ma = mean(windowed(a, window)?.iter().map(|s| s.value(metric)));
    let mb = mean(windowed(b, window)?.iter().map(|s| s.value(metric)));
    Ok(verdict(metric, ma, mb))
}

/// All five verdicts.
pub fn compare_all(a: &Session, b: &Session, window: Option<TimeWindow>) -> Result<Vec<Verdict>, AnalyticsError> {
    MetricKind::ALL.into_iter().map(|m| compare(a, b, m, window)).collect()
}

/// Whether `value` satisfies `threshold` (at least for FPS, at most otherwise).
pub fn meets(metric: MetricKind, value: f64, threshold: f64) -> bool {
    if metric.higher_is_better() { value >= threshold } else { value <= threshold }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFraction {
    pub name: String,
    pub sample_count: usize,
    pub meeting: usize,
    /// Zero for an empty session.
    pub fraction_meeting: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub metric: MetricKind,
    pub threshold: f64,
    pub sessions: Vec<SessionFraction>,
}

pub fn threshold_report(sessions: &[Session], metric: MetricKind, threshold: f64) -> Result<ThresholdReport, AnalyticsError> {
    if !threshold.is_finite() {
        return Err(AnalyticsError::InvalidArgument(format!("threshold must be finite, got {threshold}")));
    }
    let sessions = sessions
        .iter()
        .map(|s| {
            let meeting = s.samples.iter().filter(|x| meets(metric, x.value(metric), threshold)).count();
            let n = s.samples.len();
            SessionFraction {
                name: s.name.clone(),
                sample_count: n,
                meeting,
                fraction_meeting: if n == 0 { 0.0 } else { meeting as f64 / n as f64 },
            }
        })
        .collect();
    Ok(ThresholdReport { metric, threshold, sessions })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub metric: MetricKind,
    pub points: Vec<SeriesPoint>,
}

/// Mean per equal-time bucket over `[t_first, t_last]`, at most
/// `target_points` buckets; empty buckets are omitted.
pub fn downsample(samples: &[FrameSample], metric: MetricKind, target_points: usize) -> Vec<SeriesPoint> {
    if samples.len() <= target_points {
        return samples.iter().map(|s| SeriesPoint { t: s.t, value: s.value(metric) }).collect();
    }
    let (t0, t1) = (samples[0].t, samples[samples.len() - 1].t);
    let width = (t1 - t0) / target_points as f64;
    let mut sums = vec![(0.0, 0usize); target_points];
    for s in samples {
        let b = (((s.t - t0) / width).floor() as usize).min(target_points - 1);
        sums[b].0 += s.value(metric);
        sums[b].1 += 1;
    }
    sums.iter()
        .enumerate()
        .filter(|(_, (_, n))| *n > 0)
        .map(|(b, (sum, n))| SeriesPoint { t: t0 + (b as f64 + 0.5) * width, value: sum / *n as f64 })
        .collect()
}

pub fn small_multiples(sessions: &[Session], metric: MetricKind, target_points: usize) -> Result<Vec<Series>, AnalyticsError> {
    if target_points < 2 {
        return Err(AnalyticsError::InvalidArgument(format!("target_points must be at least 2, got {target_points}")));
    }
    Ok(sessions
        .iter()
        .map(|s| Series { name: s.name.clone(), metric, points: downsample(&s.samples, metric, target_points) })
        .collect())
}
