//! Free-flight terminal viewer with scripted playback.
//!
//! Keys: `W`/`S` move forward/back, `A`/`D` strafe, `E` spawns the dataset,
//! `P` toggles telemetry recording, `Q` stops and saves the session. Dragging
//! with the left mouse button rotates the camera.
//!
//! Playback scripts hold one input per line: a key letter, `drag <dx> <dy>`
//! (terminal cells) or `idle`. Movement, drag and idle inputs each render one
//! frame; `E`, `P` and `Q` act between frames. `#` starts a comment.

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crossterm::event::{self, Event, KeyCode, KeyEventKind, MouseButton, MouseEventKind};
use crossterm::style::{Color, Print, SetBackgroundColor, SetForegroundColor};
use crossterm::{cursor, execute, queue, terminal};
use vizlab_core::catalog::{technique, ValidatedProfile};
use vizlab_core::optimizer::{run_pipeline, FrameCullStats, VisibleSet};
use vizlab_core::render::{render_frame, FrameBuffer, Shading};
use vizlab_core::scene::{apply_whisker, Camera, Scene, WhiskerFlags};
use vizlab_core::telemetry::{export_session, session_path, FrameContext, Probe, Recorder, Session};
use vizlab_core::templates::{build_schedule, camera_at, SceneFrame, TemplateId, VFOV};
use vizlab_core::DVec3;

use crate::error::{CliError, Result};

/// Fraction of the scene radius moved per key press.
pub const MOVE_STEP: f64 = 0.05;
/// Radians per dragged terminal cell.
pub const DRAG_RADIANS: f64 = 0.02;
pub const PLAYBACK_SIZE: (usize, usize) = (64, 36);
const MAX_PITCH: f64 = 89.0 * std::f64::consts::PI / 180.0;
/// Shortest frame time recorded, seconds.
const MIN_FRAME_TIME: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Input {
    Forward,
    Left,
    Back,
    Right,
    Drag { dx: f64, dy: f64 },
    Idle,
    Spawn,
    ToggleRecording,
    Quit,
}

/// Documented key bindings.
pub const KEY_MAP: [(char, Input); 7] = [
    ('W', Input::Forward),
    ('A', Input::Left),
    ('S', Input::Back),
    ('D', Input::Right),
    ('E', Input::Spawn),
    ('P', Input::ToggleRecording),
    ('Q', Input::Quit),
];

impl Input {
    pub fn from_key(c: char) -> Option<Input> {
        let c = c.to_ascii_uppercase();
        KEY_MAP.iter().find(|(k, _)| *k == c).map(|(_, i)| *i)
    }

    /// Whether the input renders a frame.
    pub fn is_frame(&self) -> bool {
        !matches!(self, Input::Spawn | Input::ToggleRecording | Input::Quit)
    }
}

pub fn parse_script(text: &str) -> Result<Vec<Input>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CliError::InvalidArgument(format!("playback line {}: cannot parse '{line}'", i + 1));
        let mut words = line.split_whitespace();
        let head = words.next().ok_or_else(bad)?;
        let input = match head.to_ascii_lowercase().as_str() {
            "idle" => Input::Idle,
            "drag" => {
                let mut num = || words.next().and_then(|w| w.parse::<f64>().ok()).filter(|v| v.is_finite()).ok_or_else(bad);
                Input::Drag { dx: num()?, dy: num()? }
            }
            key if key.chars().count() == 1 => Input::from_key(key.chars().next().unwrap()).ok_or_else(bad)?,
            _ => return Err(bad()),
        };
        if words.next().is_some() {
            return Err(bad());
        }
        out.push(input);
    }
    Ok(out)
}

/// Yaw/pitch camera with Z up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeCamera {
    pub position: DVec3,
    pub yaw: f64,
    pub pitch: f64,
    pub step: f64,
    pub near: f64,
    pub far: f64,
}

impl FreeCamera {
    /// Starts at the spawn pose of the first template.
    pub fn spawn_pose(scene: &Scene) -> Result<Self> {
        let schedule = build_schedule(TemplateId::T1Spawn, &SceneFrame::from_scene(scene))?;
        let cam = camera_at(&schedule, 0.0)?;
        let f = cam.forward;
        Ok(Self {
            position: cam.position,
            yaw: f.y.atan2(f.x),
            pitch: f.z.clamp(-1.0, 1.0).asin(),
            step: MOVE_STEP * SceneFrame::from_scene(scene).radius(),
            near: schedule.near,
            far: schedule.far,
        })
    }

    pub fn forward(&self) -> DVec3 {
        DVec3::new(self.yaw.cos() * self.pitch.cos(), self.yaw.sin() * self.pitch.cos(), self.pitch.sin())
    }

    fn right(&self) -> DVec3 {
        DVec3::new(self.yaw.sin(), -self.yaw.cos(), 0.0)
    }

    pub fn apply(&mut self, input: Input) {
        match input {
            Input::Forward => self.position += self.forward() * self.step,
            Input::Back => self.position -= self.forward() * self.step,
            Input::Right => self.position += self.right() * self.step,
            Input::Left => self.position -= self.right() * self.step,
            Input::Drag { dx, dy } => {
                self.yaw -= dx * DRAG_RADIANS;
                self.pitch = (self.pitch - dy * DRAG_RADIANS).clamp(-MAX_PITCH, MAX_PITCH);
            }
            _ => {}
        }
    }

    pub fn camera(&self, aspect: f64) -> Result<Camera> {
        Ok(Camera::look_at(self.position, self.position + self.forward(), DVec3::Z, VFOV, aspect, self.near, self.far)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameInfo {
    pub visible: usize,
    pub stats: FrameCullStats,
    /// Pipeline plus rasterization, seconds.
    pub work_seconds: f64,
}

pub struct Viewer {
    scene: Scene,
    profile: ValidatedProfile,
    whisker: WhiskerFlags,
    pub camera: FreeCamera,
    pub spawned: bool,
    pub recording: bool,
    recorder: Recorder,
    probe: Box<dyn Probe>,
    frame_index: u64,
    clock: f64,
}

impl Viewer {
    pub fn new(scene: Scene, profile: ValidatedProfile, name: &str, description: &str, probe: Box<dyn Probe>) -> Result<Self> {
        let whisker = match profile.whisker() {
            Some(sel) if profile.is_enabled(technique::WHISKER) => apply_whisker(&scene, sel),
            _ => WhiskerFlags::none(scene.len()),
        };
        let camera = FreeCamera::spawn_pose(&scene)?;
        let mut session = Session::new(name, scene.dataset_id.clone());
        session.description = description.to_string();
        session.optimizations = profile.enabled_ids();
        session.sample_interval_ms = 1000.0 / 60.0;
        Ok(Self {
            scene,
            profile,
            whisker,
            camera,
            spawned: false,
            recording: false,
            recorder: Recorder::new(session),
            probe,
            frame_index: 0,
            clock: 0.0,
        })
    }

    pub fn default_name(dataset: &str, profile: &ValidatedProfile) -> String {
        let p = &profile.profile().name;
        format!("{dataset}-free-{}", if p.is_empty() { "profile" } else { p })
    }

    /// Applies a non-frame input; returns `false` on quit.
    pub fn command(&mut self, input: Input) -> bool {
        match input {
            Input::Spawn => self.spawned = true,
            Input::ToggleRecording => self.recording = !self.recording,
            Input::Quit => return false,
            other => self.camera.apply(other),
        }
        true
    }

    /// Culls and rasterizes the current view.
    pub fn draw(&mut self, size: (usize, usize)) -> Result<(FrameBuffer, FrameInfo)> {
        let start = Instant::now();
        let camera = self.camera.camera(size.0 as f64 / size.1 as f64)?;
        let (visible, stats) = if self.spawned {
            run_pipeline(&self.scene, &self.whisker, &camera, &self.profile)
        } else {
            (VisibleSet::default(), FrameCullStats::default())
        };
        let (fb, _) = render_frame(&visible, &self.scene, &camera, size, Shading::Flat).map_err(|e| CliError::Other(e.to_string()))?;
        let info = FrameInfo { visible: visible.len(), stats, work_seconds: start.elapsed().as_secs_f64() };
        Ok((fb, info))
    }

    /// Records a sample for a frame that took `frame_seconds`, if recording.
    pub fn record(&mut self, info: &FrameInfo, frame_seconds: f64) -> Option<f64> {
        self.frame_index += 1;
        if !self.recording {
            return None;
        }
        let dt = frame_seconds.max(MIN_FRAME_TIME);
        self.clock += dt;
        let ctx = FrameContext {
            frame_index: self.frame_index - 1,
            submitted_primitives: info.stats.submitted_primitives,
            visible_objects: info.visible as u64,
            render_wall_ms: Some(info.work_seconds * 1e3),
        };
        self.recorder.record(self.clock, dt, self.probe.as_mut(), &ctx).map(|s| s.fps)
    }

    pub fn session(&self) -> &Session {
        self.recorder.session()
    }

    pub fn finish(self) -> Session {
        self.recorder.finish()
    }
}

/// Replays `inputs` headlessly; stops at the first `Q` or at the end.
pub fn run_playback(mut viewer: Viewer, inputs: &[Input], size: (usize, usize)) -> Result<Session> {
    for &input in inputs {
        if input.is_frame() {
            viewer.camera.apply(input);
            let (_, info) = viewer.draw(size)?;
            viewer.record(&info, info.work_seconds);
        } else if !viewer.command(input) {
            break;
        }
    }
    Ok(viewer.finish())
}

pub fn save(session: &Session, out_dir: &Path) -> Result<PathBuf> {
    let path = session_path(out_dir, &session.name);
    export_session(session, &path)?;
    Ok(path)
}

pub fn require_terminal() -> Result<()> {
    if std::io::stdout().is_terminal() && std::io::stdin().is_terminal() {
        Ok(())
    } else {
        Err(CliError::UnsupportedMode("the viewer needs a terminal; pass --playback <script> to run headless".into()))
    }
}

struct TerminalGuard;

impl TerminalGuard {
    fn enter() -> std::io::Result<Self> {
        terminal::enable_raw_mode()?;
        execute!(std::io::stdout(), terminal::EnterAlternateScreen, event::EnableMouseCapture, cursor::Hide)?;
        Ok(Self)
    }
}

impl Drop for TerminalGuard {
    fn drop(&mut self) {
        let _ = execute!(std::io::stdout(), event::DisableMouseCapture, terminal::LeaveAlternateScreen, cursor::Show);
        let _ = terminal::disable_raw_mode();
    }
}

fn to_rgb(c: [f32; 3]) -> Color {
    let [r, g, b] = c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8);
    Color::Rgb { r, g, b }
}

/// Two framebuffer rows per terminal row via upper half blocks.
fn present(out: &mut impl Write, fb: &FrameBuffer, status: &str) -> std::io::Result<()> {
    queue!(out, cursor::MoveTo(0, 0))?;
    for y in 0..fb.height / 2 {
        for x in 0..fb.width {
            let top = fb.color[2 * y * fb.width + x];
            let bottom = fb.color[(2 * y + 1) * fb.width + x];
            queue!(out, SetForegroundColor(to_rgb(top)), SetBackgroundColor(to_rgb(bottom)), Print('\u{2580}'))?;
        }
        queue!(out, Print("\r\n"))?;
    }
    queue!(out, SetForegroundColor(Color::White), SetBackgroundColor(Color::Black), terminal::Clear(terminal::ClearType::CurrentLine), Print(status))?;
    out.flush()
}

fn terminal_size() -> std::io::Result<(usize, usize)> {
    let (cols, rows) = terminal::size()?;
    Ok(((cols as usize).max(1), (rows.saturating_sub(1) as usize * 2).max(2)))
}

/// Interactive loop until `Q`; returns the recorded session.
pub fn run_interactive(mut viewer: Viewer) -> Result<Session> {
    let io = |e: std::io::Error| CliError::Other(format!("terminal: {e}"));
    let guard = TerminalGuard::enter().map_err(io)?;
    let mut out = std::io::stdout();
    let mut drag_from: Option<(u16, u16)> = None;
    let mut last = Instant::now();
    let mut fps: Option<f64> = None;
    'outer: loop {
        let mut pending = Vec::new();
        let mut timeout = Duration::from_millis(16);
        while event::poll(timeout).map_err(io)? {
            timeout = Duration::ZERO;
            match event::read().map_err(io)? {
                Event::Key(k) if k.kind != KeyEventKind::Release => {
                    if let KeyCode::Char(c) = k.code {
                        pending.extend(Input::from_key(c));
                    }
                }
                Event::Mouse(m) => match m.kind {
                    MouseEventKind::Down(MouseButton::Left) => drag_from = Some((m.column, m.row)),
                    MouseEventKind::Drag(MouseButton::Left) => {
                        if let Some((c, r)) = drag_from.replace((m.column, m.row)) {
                            let (dx, dy) = (m.column as f64 - c as f64, m.row as f64 - r as f64);
                            pending.push(Input::Drag { dx, dy });
                        }
                    }
                    MouseEventKind::Up(MouseButton::Left) => drag_from = None,
                    _ => {}
                },
                _ => {}
            }
        }
        for input in pending {
            if !viewer.command(input) {
                break 'outer;
            }
        }
        let size = terminal_size().map_err(io)?;
        let (fb, info) = viewer.draw(size)?;
        let now = Instant::now();
        let frame_seconds = now.duration_since(last).as_secs_f64();
        last = now;
        if let Some(f) = viewer.record(&info, frame_seconds) {
            fps = Some(f);
        }
        let status = match (viewer.recording, fps) {
            (true, Some(f)) => format!(" REC {f:6.1} fps  {} samples", viewer.session().samples.len()),
            (true, None) => " REC".to_string(),
            (false, _) if !viewer.spawned => " E spawn  P record  Q quit  WASD move  drag rotate".to_string(),
            (false, _) => String::new(),
        };
        present(&mut out, &fb, &status).map_err(io)?;
    }
    drop(guard);
    Ok(viewer.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use vizlab_core::synthetic::synthetic_scene;
    use vizlab_core::telemetry::CostModelProbe;

    fn viewer() -> Viewer {
        let scene = synthetic_scene(300, 1).unwrap();
        Viewer::new(scene, ValidatedProfile::baseline(), "v", "", Box::new(CostModelProbe::default())).unwrap()
    }

    #[test]
    fn key_map() {
        let keys: String = KEY_MAP.iter().map(|k| k.0).collect();
        assert_eq!(keys, "WASDEPQ");
        assert_eq!(Input::from_key('q'), Some(Input::Quit));
        assert_eq!(Input::from_key('x'), None);
    }

    #[test]
    fn scripts() {
        let s = parse_script("# start\nE\np\ndrag 3 -1.5\nidle  # wait\nw\nQ\n").unwrap();
        assert_eq!(
            s,
            vec![Input::Spawn, Input::ToggleRecording, Input::Drag { dx: 3.0, dy: -1.5 }, Input::Idle, Input::Forward, Input::Quit]
        );
        assert!(parse_script("jump").is_err());
        assert!(parse_script("drag 1").is_err());
        assert!(parse_script("w w").is_err());
    }

    #[test]
    fn movement_and_rotation() {
        let mut c = viewer().camera;
        let start = c;
        c.apply(Input::Forward);
        assert!(((c.position - start.position).length() - c.step).abs() < 1e-9);
        c.apply(Input::Back);
        assert!((c.position - start.position).length() < 1e-9);
        c.apply(Input::Drag { dx: 0.0, dy: -1e6 });
        assert!((c.pitch - MAX_PITCH).abs() < 1e-12);
        assert!(c.camera(1.0).is_ok());
    }

    #[test]
    fn samples_only_while_recording() {
        let inputs = parse_script("idle\nE\nP\nw\nw\nP\nidle\nP\nd\nQ\nw\n").unwrap();
        let s = run_playback(viewer(), &inputs, (16, 9)).unwrap();
        assert_eq!(s.samples.len(), 3);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn spawn_makes_objects_visible() {
        let mut v = viewer();
        assert_eq!(v.draw((16, 9)).unwrap().1.visible, 0);
        v.command(Input::Spawn);
        assert!(v.draw((16, 9)).unwrap().1.visible > 0);
    }
}
