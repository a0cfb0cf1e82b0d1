//! Scripted camera paths and the fixed-timestep run harness.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::catalog::ValidatedProfile;
use crate::geometry::{covariance, symmetric_eigen, Aabb};
use crate::optimizer::{run_pipeline, FrameCullStats};
use crate::render::{render_frame, DrawStats, RenderError, Shading};
use crate::scene::{apply_whisker, Camera, Scene, SceneError, WhiskerFlags};
use crate::telemetry::{FrameContext, Probe, Recorder, Session, TelemetryError};

pub const VFOV: f64 = std::f64::consts::FRAC_PI_3;
pub const ASPECT: f64 = 16.0 / 9.0;
/// Camera distance from the centroid, in bounds radii.
pub const VIEW_DISTANCE: f64 = 2.5;
pub const ORBIT_ELEVATION: f64 = 15.0 * std::f64::consts::PI / 180.0;
pub const START_AZIMUTH: f64 = -std::f64::consts::FRAC_PI_2;

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("scene bounds have zero extent")]
    DegenerateBounds,
    #[error("t = {t} outside [0, {total}]")]
    TimeOutOfRange { t: f64, total: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown template '{0}' (expected t1, t2 or t3)")]
    Unknown(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    T1Spawn,
    T2Lookaround,
    T3Stress,
}

impl TemplateId {
    pub const ALL: [TemplateId; 3] = [TemplateId::T1Spawn, TemplateId::T2Lookaround, TemplateId::T3Stress];

    /// Label stored in session files.
    pub fn label(self) -> &'static str {
        match self {
            TemplateId::T1Spawn => "T1",
            TemplateId::T2Lookaround => "T2",
            TemplateId::T3Stress => "T3",
        }
    }

    pub fn total(self) -> f64 {
        match self {
            TemplateId::T1Spawn | TemplateId::T2Lookaround => 30.0,
            TemplateId::T3Stress => 180.0,
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TemplateId {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "t1" | "t1_spawn" => Ok(TemplateId::T1Spawn),
            "t2" | "t2_lookaround" => Ok(TemplateId::T2Lookaround),
            "t3" | "t3_stress" => Ok(TemplateId::T3Stress),
            _ => Err(TemplateError::Unknown(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: DVec3,
    pub target: DVec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub t: f64,
    pub position: DVec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraController {
    Static(Pose),
    Orbit {
        center: DVec3,
        radius: f64,
        elevation: f64,
        /// Radians per second.
        angular_velocity: f64,
        start_azimuth: f64,
        /// Time at which the azimuth equals `start_azimuth`.
        t0: f64,
    },
    /// Catmull-Rom through the keyframes; the camera looks at the next one.
    Spline { keyframes: Vec<Keyframe>, final_target: DVec3 },
}

fn orbit_point(center: DVec3, radius: f64, elevation: f64, azimuth: f64) -> DVec3 {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    center + radius * DVec3::new(ce * ca, ce * sa, se)
}

impl CameraController {
    pub fn validate(&self) -> Result<(), TemplateError> {
        match self {
            CameraController::Static(p) if !p.position.is_finite() || !p.target.is_finite() => {
                Err(TemplateError::InvalidArgument("static pose must be finite".into()))
            }
            CameraController::Orbit { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(TemplateError::InvalidArgument(format!("orbit radius must be positive, got {radius}")))
            }
            CameraController::Spline { keyframes, .. } => {
                if keyframes.len() < 2 {
                    return Err(TemplateError::InvalidArgument("spline needs at least two keyframes".into()));
                }
                if keyframes.windows(2).any(|w| !(w[1].t > w[0].t)) {
                    return Err(TemplateError::InvalidArgument("spline keyframe times must increase".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn azimuth_at(&self, t: f64) -> Option<f64> {
        match self {
            CameraController::Orbit { angular_velocity, start_azimuth, t0, .. } => Some(start_azimuth + angular_velocity * (t - t0)),
            _ => None,
        }
    }

    pub fn pose_at(&self, t: f64) -> Pose {
        match self {
            CameraController::Static(p) => *p,
            CameraController::Orbit { center, radius, elevation, .. } => {
                let az = self.azimuth_at(t).unwrap();
                Pose { position: orbit_point(*center, *radius, *elevation, az), target: *center }
            }
            CameraController::Spline { keyframes, final_target } => {
                let k = keyframes;
                let last = k.len() - 1;
                let i = k.partition_point(|f| f.t <= t).saturating_sub(1);
                if i >= last {
                    return Pose { position: k[last].position, target: *final_target };
                }
                let tangent = |j: usize| {
                    let (a, b) = (j.saturating_sub(1), (j + 1).min(last));
                    (k[b].position - k[a].position) / (k[b].t - k[a].t)
                };
                let h = k[i + 1].t - k[i].t;
                let s = (t - k[i].t) / h;
                let (s2, s3) = (s * s, s * s * s);
                let position = if s == 0.0 {
                    k[i].position
                } else {
                    k[i].position * (2.0 * s3 - 3.0 * s2 + 1.0)
                        + tangent(i) * (h * (s3 - 2.0 * s2 + s))
                        + k[i + 1].position * (-2.0 * s3 + 3.0 * s2)
                        + tangent(i + 1) * (h * (s3 - s2))
                };
                Pose { position, target: k[i + 1].position }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub start: f64,
    pub end: f64,
    pub controller: CameraController,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub template: TemplateId,
    pub phases: Vec<Phase>,
    pub total: f64,
    /// Fallback target when a pose would look at itself.
    pub centroid: DVec3,
    pub vfov: f64,
    pub aspect: f64,
    pub near: f64,
    pub far: f64,
}

/// Centroid, bounds and principal axes of a scene; the only inputs to a
/// schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneFrame {
    pub bounds: Aabb,
    pub centroid: DVec3,
    /// Unit principal axes, largest variance first.
    pub axes: [DVec3; 3],
    /// Half the extent of the objects along each axis.
    pub semi: [f64; 3],
}

impl SceneFrame {
    pub fn from_scene(scene: &Scene) -> Self {
        let points: Vec<DVec3> = scene.objects.iter().map(|o| o.position).collect();
        Self::from_points(&points)
    }

    pub fn from_points(points: &[DVec3]) -> Self {
        let bounds = Aabb::from_points(points.iter().copied());
        let centroid = points.iter().copied().sum::<DVec3>() / points.len().max(1) as f64;
        let (vals, vecs) = symmetric_eigen(covariance(points));
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        let axes = order.map(|i| {
            let v = vecs[i];
            let first = v.to_array().into_iter().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
            if first < 0.0 { -v } else { v }
        });
        let semi = axes.map(|a| {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let d = (*p - centroid).dot(a);
                (lo.min(d), hi.max(d))
            });
            if lo.is_finite() { 0.5 * (hi - lo) } else { 0.0 }
        });
        Self { bounds, centroid, axes, semi }
    }

    pub fn radius(&self) -> f64 {
        if self.bounds.is_empty() { 0.0 } else { self.bounds.radius() }
    }

    fn axis(&self, i: usize) -> DVec3 {
        self.axes[i] * self.semi[i]
    }

    /// Inside the bounds, pulled 1% of the extent in from each face.
    fn clamp_inside(&self, p: DVec3) -> DVec3 {
        let margin = self.bounds.extent() * 0.01;
        p.clamp(self.bounds.min + margin, self.bounds.max - margin)
    }
}

/// Fly-through waypoints as fractions of the principal semi-axes.
pub const FLY_THROUGH: [(f64, [f64; 3]); 5] = [
    (100.0, [0.0, 0.0, 0.9]),
    (120.0, [0.5, 0.0, 0.3]),
    (140.0, [0.0, 0.1, 0.0]),
    (155.0, [-0.5, 0.0, -0.4]),
    (170.0, [0.0, 0.3, -0.9]),
];

pub fn build_schedule(template: TemplateId, frame: &SceneFrame) -> Result<PhaseSchedule, TemplateError> {
    let r = frame.radius();
    if !(r > 0.0 && r.is_finite()) {
        return Err(TemplateError::DegenerateBounds);
    }
    let c = frame.centroid;
    let distance = VIEW_DISTANCE * r;
    let start = Pose { position: orbit_point(c, distance, ORBIT_ELEVATION, START_AZIMUTH), target: c };
    let orbit = |t0: f64, period: f64| CameraController::Orbit {
        center: c,
        radius: distance,
        elevation: ORBIT_ELEVATION,
        angular_velocity: TAU / period,
        start_azimuth: START_AZIMUTH,
        t0,
    };
    let phase = |start: f64, end: f64, controller| Phase { start, end, controller };
    let phases = match template {
        TemplateId::T1Spawn => vec![phase(0.0, 30.0, CameraController::Static(start))],
        TemplateId::T2Lookaround => vec![phase(0.0, 30.0, orbit(0.0, 30.0))],
        TemplateId::T3Stress => {
            let mut keyframes: Vec<Keyframe> = FLY_THROUGH
                .iter()
                .map(|&(t, f)| {
                    let p = c + frame.axis(0) * f[0] + frame.axis(1) * f[1] + frame.axis(2) * f[2];
                    Keyframe { t, position: frame.clamp_inside(p) }
                })
                .collect();
            keyframes.push(Keyframe { t: 180.0, position: start.position });
            vec![
                phase(0.0, 60.0, CameraController::Static(start)),
                phase(60.0, 100.0, orbit(60.0, 40.0)),
                phase(100.0, 180.0, CameraController::Spline { keyframes, final_target: c }),
            ]
        }
    };
    for p in &phases {
        p.controller.validate()?;
    }
    Ok(PhaseSchedule {
        template,
        phases,
        total: template.total(),
        centroid: c,
        vfov: VFOV,
        aspect: ASPECT,
        near: r * 1e-3,
        far: 6.0 * r,
    })
}

impl PhaseSchedule {
    /// The phase active at `t`; boundaries belong to the later phase.
    pub fn phase_at(&self, t: f64) -> Result<&Phase, TemplateError> {
        if !(t >= 0.0 && t <= self.total) {
            return Err(TemplateError::TimeOutOfRange { t, total: self.total });
        }
        let i = self.phases.partition_point(|p| p.start <= t).saturating_sub(1);
        Ok(&self.phases[i])
    }
}

pub fn camera_at(schedule: &PhaseSchedule, t: f64) -> Result<Camera, TemplateError> {
    let pose = schedule.phase_at(t)?.controller.pose_at(t);
    let s = schedule;
    let look = |target| Camera::look_at(pose.position, target, DVec3::Z, s.vfov, s.aspect, s.near, s.far);
    Ok(look(pose.target).or_else(|_| look(s.centroid)).or_else(|_| look(pose.position + DVec3::Y))?)
}

/// Modelled frame cost for fixed-timestep runs, in milliseconds:
/// `base + per_object * tested + per_primitive * submitted + per_batch * batches`,
/// where `tested` excludes streamed-out objects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameCostModel {
    pub base_ms: f64,
    pub per_object_ms: f64,
    pub per_primitive_ms: f64,
    pub per_batch_ms: f64,
}

impl Default for FrameCostModel {
    fn default() -> Self {
        Self { base_ms: 1.0, per_object_ms: 2.0e-5, per_primitive_ms: 5.0e-6, per_batch_ms: 2.0e-3 }
    }
}

impl FrameCostModel {
    pub fn frame_ms(&self, stats: &FrameCullStats) -> f64 {
        let tested = stats.total_objects - stats.streamed_out;
        self.base_ms
            + self.per_object_ms * tested as f64
            + self.per_primitive_ms * stats.submitted_primitives as f64
            + self.per_batch_ms * stats.batch_count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    /// Simulated seconds per frame.
    pub timestep: f64,
    /// Software-render every frame at this size; `None` skips rasterization.
    pub render: Option<(usize, usize)>,
    pub cost: FrameCostModel,
    /// Session name; derived from dataset, template and profile when empty.
    pub name: String,
    pub description: String,
    /// Fixed start time for reproducible files; `now` when unset.
    pub started_at: Option<DateTime<Utc>>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            timestep: 1.0 / 60.0,
            render: Some((160, 90)),
            cost: FrameCostModel::default(),
            name: String::new(),
            description: String::new(),
            started_at: None,
        }
    }
}

/// Everything the harness knows about one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub index: u64,
    pub t: f64,
    pub camera: Camera,
    pub stats: FrameCullStats,
    pub visible: usize,
    pub draw: Option<DrawStats>,
}

/// Number of steps of `timestep` that fit into `total`.
pub fn step_count(total: f64, timestep: f64) -> usize {
    (total / timestep * (1.0 + 1e-12)).floor() as usize
}

pub fn run_template(
    scene: &Scene,
    profile: &ValidatedProfile,
    template: TemplateId,
    config: &HarnessConfig,
    probe: &mut dyn Probe,
) -> Result<Session, TemplateError> {
    run_template_observed(scene, profile, template, config, probe, |_| {})
}

/// Like [`run_template`], calling `observe` after every step.
pub fn run_template_observed(
    scene: &Scene,
    profile: &ValidatedProfile,
    template: TemplateId,
    config: &HarnessConfig,
    probe: &mut dyn Probe,
    mut observe: impl FnMut(&FrameRecord),
) -> Result<Session, TemplateError> {
    let dt = config.timestep;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(TemplateError::InvalidArgument(format!("timestep must be positive, got {dt}")));
    }
    let schedule = build_schedule(template, &SceneFrame::from_scene(scene))?;
    let whisker = match profile.whisker() {
        Some(sel) if profile.is_enabled(crate::catalog::technique::WHISKER) => apply_whisker(scene, sel),
        _ => WhiskerFlags::none(scene.len()),
    };

    let mut session = Session::new(
        if config.name.is_empty() {
            format!("{}-{}-{}", scene.dataset_id, template.label(), if profile.profile().name.is_empty() { "profile" } else { &profile.profile().name })
        } else {
            config.name.clone()
        },
        scene.dataset_id.clone(),
    );
    session.description = config.description.clone();
    session.template = Some(template.label().to_string());
    session.optimizations = profile.enabled_ids();
    session.sample_interval_ms = dt * 1000.0;
    if let Some(at) = config.started_at {
        session.started_at = at;
    }
    let mut recorder = Recorder::new(session);

    let n = step_count(schedule.total, dt);
    for k in 0..n {
        let t = k as f64 * dt;
        let camera = camera_at(&schedule, t)?;
        let (visible, stats) = run_pipeline(scene, &whisker, &camera, profile);
        let draw = match config.render {
            Some(size) => Some(render_frame(&visible, scene, &camera, size, Shading::Flat)?.1),
            None => None,
        };
        let ctx = FrameContext {
            frame_index: k as u64,
            submitted_primitives: stats.submitted_primitives,
            visible_objects: visible.len() as u64,
            render_wall_ms: draw.map(|d| d.wall_time_ms),
        };
        recorder.record(t, config.cost.frame_ms(&stats) / 1000.0, probe, &ctx);
        observe(&FrameRecord { index: k as u64, t, camera, stats, visible: visible.len(), draw });
    }
    if recorder.dropped() > 0 {
        log::warn!("{} frames dropped", recorder.dropped());
    }
    Ok(recorder.finish())
}
