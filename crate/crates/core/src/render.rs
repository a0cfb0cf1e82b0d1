//! Deterministic software rasterizer for sphere impostors.
//!
//! Screen space spans `[-aspect, aspect] x [-1, 1]` with +y up; pixel row 0
//! is the top of the image. Every primitive is a set of sphere impostors,
//! each drawn as a disc of radius `r * focal / depth` whose per-pixel depth is
//! the sphere surface: `depth = cz - sqrt(r^2 - d^2)`.

use std::time::Instant;

use glam::DVec3;
use smallvec::SmallVec;

use crate::field::FieldTextureArray;
use crate::optimizer::{primitive_count, VisibleEntry, VisibleSet};
use crate::scene::{emissive_color, Camera, EmissiveCurve, EmissiveDriver, Scene, SceneObject};

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("framebuffer dimensions must be positive, got {0}x{1}")]
    ZeroSized(usize, usize),
    #[error("visible entry references unknown object {0}")]
    UnknownObject(u32),
}

/// Camera basis cached for repeated projection.
#[derive(Debug, Clone, Copy)]
pub struct Projector {
    origin: DVec3,
    right: DVec3,
    up: DVec3,
    forward: DVec3,
    pub focal: f64,
    pub aspect: f64,
    pub near: f64,
    pub far: f64,
}

/// A sphere impostor projected to screen units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub sx: f64,
    pub sy: f64,
    /// Screen-space radius.
    pub sr: f64,
    /// View-space depth of the center.
    pub cz: f64,
    /// World radius.
    pub r: f64,
}

impl Disc {
    /// Nearest depth any of its pixels can take.
    pub fn near_depth(&self) -> f64 {
        self.cz - self.r
    }
}

impl Projector {
    pub fn new(camera: &Camera) -> Self {
        Self {
            origin: camera.position,
            right: camera.right(),
            up: camera.up,
            forward: camera.forward,
            focal: camera.focal(),
            aspect: camera.aspect,
            near: camera.near,
            far: camera.far,
        }
    }

    #[inline]
    pub fn view(&self, p: DVec3) -> DVec3 {
        let d = p - self.origin;
        DVec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }

    /// `None` when the center is not in front of the near plane.
    #[inline]
    pub fn project(&self, center: DVec3, r: f64) -> Option<Disc> {
        let v = self.view(center);
        if v.z <= self.near {
            return None;
        }
        let k = self.focal / v.z;
        Some(Disc { sx: v.x * k, sy: v.y * k, sr: r * k, cz: v.z, r })
    }
}

/// The spheres an object is drawn as: one for atoms and emitters, the two
/// endpoints and the midpoint for bonds.
pub fn impostors(o: &SceneObject) -> SmallVec<[(DVec3, f64); 3]> {
    let mut out = SmallVec::new();
    match o.endpoints {
        Some([a, b]) => {
            out.push((a, o.radius));
            out.push((o.position, o.radius));
            out.push((b, o.radius));
        }
        None => out.push((o.position, o.radius)),
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    pub width: usize,
    pub height: usize,
    pub color: Vec<[f32; 3]>,
    pub depth: Vec<f64>,
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize, far: f64) -> Result<Self, RenderError> {
        if width == 0 || height == 0 {
            return Err(RenderError::ZeroSized(width, height));
        }
        Ok(Self { width, height, color: vec![[0.0; 3]; width * height], depth: vec![far; width * height] })
    }

    /// Binary PPM (P6), 8 bits per channel.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for c in &self.color {
            out.extend(c.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DrawStats {
    pub primitives_rasterized: u64,
    /// Fragments that passed the depth test.
    pub pixels_shaded: u64,
    /// Fragments missing from the final image: depth-test failures plus
    /// fragments later overwritten by a nearer one.
    pub overdraw_events: u64,
    pub wall_time_ms: f64,
}

impl DrawStats {
    /// Equality of the deterministic counters.
    pub fn same_counters(&self, other: &DrawStats) -> bool {
        (self.primitives_rasterized, self.pixels_shaded, self.overdraw_events)
            == (other.primitives_rasterized, other.pixels_shaded, other.overdraw_events)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Shading<'a> {
    Flat,
    /// Color from the field sampled under each object at time `t`; the
    /// field's unit square maps to `[0, extent]` in world x and y.
    Emissive { field: &'a FieldTextureArray, curve: &'a EmissiveCurve, driver: EmissiveDriver, t: f64, extent: f64 },
}

const NO_OWNER: u32 = u32::MAX;

struct Raster {
    fb: FrameBuffer,
    owner: Vec<u32>,
    proj: Projector,
    shaded: u64,
    overdraw: u64,
}

impl Raster {
    fn new(camera: &Camera, width: usize, height: usize) -> Result<Self, RenderError> {
        Ok(Self {
            fb: FrameBuffer::new(width, height, camera.far)?,
            owner: vec![NO_OWNER; width * height],
            proj: Projector::new(camera),
            shaded: 0,
            overdraw: 0,
        })
    }

    fn draw(&mut self, id: u32, spheres: &[(DVec3, f64)], color: [f32; 3]) {
        for &(c, r) in spheres {
            if let Some(d) = self.proj.project(c, r) {
                self.disc(id, &d, color);
            }
        }
    }

    fn disc(&mut self, id: u32, d: &Disc, color: [f32; 3]) {
        let (w, h) = (self.fb.width, self.fb.height);
        let (wf, hf) = (w as f64, h as f64);
        let a = self.proj.aspect;
        // pixel i has its center at x = ((i + 0.5) / w * 2 - 1) * aspect
        let col = |x: f64| ((x / a + 1.0) * 0.5 * wf - 0.5).floor();
        let row = |y: f64| ((1.0 - y) * 0.5 * hf - 0.5).floor();
        let i0 = col(d.sx - d.sr) - 1.0;
        let i1 = col(d.sx + d.sr) + 1.0;
        let j0 = row(d.sy + d.sr) - 1.0;
        let j1 = row(d.sy - d.sr) + 1.0;
        if i1 < 0.0 || j1 < 0.0 || i0 >= wf || j0 >= hf {
            return;
        }
        let (i0, i1) = (i0.max(0.0) as usize, (i1.min(wf - 1.0)) as usize);
        let (j0, j1) = (j0.max(0.0) as usize, (j1.min(hf - 1.0)) as usize);
        let sr2 = d.sr * d.sr;
        let world_per_screen2 = (d.r / d.sr) * (d.r / d.sr);
        let r2 = d.r * d.r;
        for j in j0..=j1 {
            let py = 1.0 - (j as f64 + 0.5) / hf * 2.0;
            let dy = py - d.sy;
            for i in i0..=i1 {
                let px = ((i as f64 + 0.5) / wf * 2.0 - 1.0) * a;
                let dx = px - d.sx;
                let s2 = dx * dx + dy * dy;
                if s2 > sr2 {
                    continue;
                }
                let depth = d.cz - (r2 - s2 * world_per_screen2).max(0.0).sqrt();
                if depth < self.proj.near || depth > self.proj.far {
                    continue;
                }
                let k = j * w + i;
                if depth < self.fb.depth[k] {
                    if self.owner[k] != NO_OWNER {
                        self.overdraw += 1;
                    }
                    self.fb.depth[k] = depth;
                    self.fb.color[k] = color;
                    self.owner[k] = id;
                    self.shaded += 1;
                } else {
                    self.overdraw += 1;
                }
            }
        }
    }
}

fn to_f32(c: [f64; 3]) -> [f32; 3] {
    c.map(|v| v as f32)
}

/// Draws visible entries in ascending id order.
pub fn render_frame(
    visible: &VisibleSet,
    scene: &Scene,
    camera: &Camera,
    size: (usize, usize),
    shading: Shading<'_>,
) -> Result<(FrameBuffer, DrawStats), RenderError> {
    let start = Instant::now();
    let mut raster = Raster::new(camera, size.0, size.1)?;
    let mut order: Vec<&VisibleEntry> = visible.entries.iter().collect();
    order.sort_unstable_by_key(|e| e.id);
    let mut primitives = 0u64;
    for e in order {
        let o = scene.objects.get(e.id as usize).ok_or(RenderError::UnknownObject(e.id))?;
        primitives += primitive_count(o.kind, e.lod_level) as u64;
        let color = if e.deprioritized {
            [0.0; 3]
        } else {
            match shading {
                Shading::Flat => to_f32(o.color),
                Shading::Emissive { field, curve, driver, t, extent } => {
                    let s = field.sample(o.position.x / extent, o.position.y / extent, t);
                    to_f32(emissive_color(&s, curve, driver))
                }
            }
        };
        raster.draw(e.id, &impostors(o), color);
    }
    let stats = DrawStats {
        primitives_rasterized: primitives,
        pixels_shaded: raster.shaded,
        overdraw_events: raster.overdraw,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((raster.fb, stats))
}

/// Final-image pixel ownership after rendering the whole scene at base LOD
/// with no optimizations.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRender {
    pub frame: FrameBuffer,
    /// Pixels owned per object id.
    pub contributions: Vec<u32>,
}

impl ReferenceRender {
    pub fn contributing(&self) -> impl Iterator<Item = u32> + '_ {
        self.contributions.iter().enumerate().filter(|(_, &n)| n > 0).map(|(i, _)| i as u32)
    }
}

pub fn reference_render(scene: &Scene, camera: &Camera, size: (usize, usize)) -> Result<ReferenceRender, RenderError> {
    let mut raster = Raster::new(camera, size.0, size.1)?;
    for o in &scene.objects {
        raster.draw(o.id, &impostors(o), to_f32(o.color));
    }
    let mut contributions = vec![0u32; scene.objects.len()];
    for &id in &raster.owner {
        if id != NO_OWNER {
            contributions[id as usize] += 1;
        }
    }
    Ok(ReferenceRender { frame: raster.fb, contributions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::ObjectKind;
    use std::f64::consts::PI;

    fn camera(aspect: f64) -> Camera {
        Camera::look_at(DVec3::new(0.0, 0.0, -10.0), DVec3::ZERO, DVec3::Y, PI / 3.0, aspect, 0.1, 100.0).unwrap()
    }

    fn sphere(p: DVec3, r: f64, color: [f64; 3]) -> SceneObject {
        let mut o = SceneObject::new(ObjectKind::AtomSphere, p, r);
        o.color = color;
        o
    }

    fn all_visible(scene: &Scene) -> VisibleSet {
        VisibleSet::from_entries(
            scene.objects.iter().map(|o| VisibleEntry { id: o.id, lod_level: 0, deprioritized: false, kind: o.kind }).collect(),
        )
    }

    #[test]
    fn empty_frame() {
        let s = Scene::new("e", vec![], 1.0).unwrap();
        let (fb, st) = render_frame(&VisibleSet::default(), &s, &camera(1.0), (8, 8), Shading::Flat).unwrap();
        assert!(fb.color.iter().all(|c| *c == [0.0; 3]));
        assert!(fb.depth.iter().all(|&d| d == 100.0));
        assert_eq!((st.primitives_rasterized, st.pixels_shaded, st.overdraw_events), (0, 0, 0));
        assert!(render_frame(&VisibleSet::default(), &s, &camera(1.0), (0, 8), Shading::Flat).is_err());
    }

    #[test]
    fn nearer_drawn_second_wins() {
        let far = sphere(DVec3::new(0.0, 0.0, 0.0), 1.0, [1.0, 0.0, 0.0]);
        let near = sphere(DVec3::new(0.0, 0.0, -2.0), 1.0, [0.0, 1.0, 0.0]);
        let s = Scene::new("c", vec![far, near], 10.0).unwrap();
        let cam = camera(1.0);
        let (fb, st) = render_frame(&all_visible(&s), &s, &cam, (64, 64), Shading::Flat).unwrap();

        let only_far = Scene::new("f", vec![s.objects[0].clone()], 10.0).unwrap();
        let (_, st_far) = render_frame(&all_visible(&only_far), &only_far, &cam, (64, 64), Shading::Flat).unwrap();
        let only_near = Scene::new("n", vec![s.objects[1].clone()], 10.0).unwrap();
        let (_, st_near) = render_frame(&all_visible(&only_near), &only_near, &cam, (64, 64), Shading::Flat).unwrap();

        // the nearer disc covers the farther one entirely, so every far fragment is overwritten
        assert!(st_near.pixels_shaded > st_far.pixels_shaded);
        assert_eq!(st.pixels_shaded, st_far.pixels_shaded + st_near.pixels_shaded);
        assert_eq!(st.overdraw_events, st_far.pixels_shaded);
        assert_eq!(fb.color[32 * 64 + 32], [0.0, 1.0, 0.0]);
        assert!(fb.color.iter().all(|c| *c != [1.0, 0.0, 0.0]));
    }

    #[test]
    fn nearer_drawn_first_causes_depth_fails() {
        let near = sphere(DVec3::new(0.0, 0.0, -2.0), 1.0, [0.0, 1.0, 0.0]);
        let far = sphere(DVec3::new(0.0, 0.0, 0.0), 1.0, [1.0, 0.0, 0.0]);
        let s = Scene::new("c", vec![near, far], 10.0).unwrap();
        let (fb, st) = render_frame(&all_visible(&s), &s, &camera(1.0), (64, 64), Shading::Flat).unwrap();
        let r = reference_render(&s, &camera(1.0), (64, 64)).unwrap();
        assert_eq!(r.contributions[1], 0);
        assert_eq!(st.pixels_shaded as u32, r.contributions[0]);
        assert!(st.overdraw_events > 0);
        assert_eq!(fb, r.frame);
    }

    #[test]
    fn disc_area_matches_pi_r_squared() {
        let (w, h) = (400usize, 300usize);
        let cam = camera(w as f64 / h as f64);
        for (r_px, x) in [(10.0, 0.0), (17.5, 1.3), (40.0, -2.0)] {
            // world radius giving r_px pixels at depth 10 on a 300-pixel-high screen
            let depth = 10.0 + 0.5;
            let r = r_px / (h as f64 / 2.0) * depth / cam.focal();
            // shift along z so the center depth stays fixed
            let o = sphere(DVec3::new(x, 0.4, 0.5), r, [1.0; 3]);
            let s = Scene::new("a", vec![o], 10.0).unwrap();
            let (_, st) = render_frame(&all_visible(&s), &s, &cam, (w, h), Shading::Flat).unwrap();
            let area = PI * r_px * r_px;
            assert!((st.pixels_shaded as f64 - area).abs() <= 0.05 * area, "r={r_px}: {} vs {area}", st.pixels_shaded);
        }
    }

    #[test]
    fn deterministic_and_depth_correct() {
        let mut rng = crate::rng::CounterRng::new(9, 0);
        let objects = (0..300)
            .map(|_| {
                let p = DVec3::new(rng.range(-4.0, 4.0), rng.range(-4.0, 4.0), rng.range(-4.0, 4.0));
                sphere(p, rng.range(0.1, 0.8), [rng.next_f64(), rng.next_f64(), rng.next_f64()])
            })
            .collect();
        let s = Scene::new("d", objects, 2.0).unwrap();
        let cam = camera(1.5);
        let (a, sa) = render_frame(&all_visible(&s), &s, &cam, (96, 64), Shading::Flat).unwrap();
        let (b, sb) = render_frame(&all_visible(&s), &s, &cam, (96, 64), Shading::Flat).unwrap();
        assert_eq!(a, b);
        assert!(sa.same_counters(&sb));

        // every pixel's depth is the minimum over all discs covering it
        let proj = Projector::new(&cam);
        for j in 0..64 {
            for i in 0..96 {
                let px = ((i as f64 + 0.5) / 96.0 * 2.0 - 1.0) * 1.5;
                let py = 1.0 - (j as f64 + 0.5) / 64.0 * 2.0;
                let mut best = cam.far;
                for o in &s.objects {
                    let Some(d) = proj.project(o.position, o.radius) else { continue };
                    let s2 = (px - d.sx).powi(2) + (py - d.sy).powi(2);
                    if s2 <= d.sr * d.sr {
                        let z = d.cz - (d.r * d.r - s2 * (d.r / d.sr).powi(2)).max(0.0).sqrt();
                        if z >= cam.near && z < best {
                            best = z;
                        }
                    }
                }
                assert_eq!(a.depth[j * 96 + i], best);
            }
        }
        let r = reference_render(&s, &cam, (96, 64)).unwrap();
        assert!(r.contributions.iter().map(|&c| c as usize).sum::<usize>() <= 96 * 64);
    }

    #[test]
    fn sole_object_contribution_equals_shaded() {
        let s = Scene::new("s", vec![sphere(DVec3::ZERO, 2.0, [1.0; 3])], 1.0).unwrap();
        let cam = camera(1.0);
        let (_, st) = render_frame(&all_visible(&s), &s, &cam, (50, 50), Shading::Flat).unwrap();
        let r = reference_render(&s, &cam, (50, 50)).unwrap();
        assert_eq!(r.contributions[0] as u64, st.pixels_shaded);
    }

    #[test]
    fn deprioritized_is_black_and_ppm_header() {
        let s = Scene::new("s", vec![sphere(DVec3::ZERO, 2.0, [1.0; 3])], 1.0).unwrap();
        let vs = VisibleSet::from_entries(vec![VisibleEntry { id: 0, lod_level: 3, deprioritized: true, kind: ObjectKind::AtomSphere }]);
        let (fb, st) = render_frame(&vs, &s, &camera(1.0), (20, 20), Shading::Flat).unwrap();
        assert!(st.pixels_shaded > 0);
        assert!(fb.color.iter().all(|c| *c == [0.0; 3]));
        assert_eq!(st.primitives_rasterized, 1);
        assert!(fb.to_ppm().starts_with(b"P6\n20 20\n255\n"));
        assert_eq!(fb.to_ppm().len(), 13 + 20 * 20 * 3);
    }

    #[test]
    fn lod_never_rasterizes_more_primitives() {
        for kind in ObjectKind::ALL {
            for l in 0..3u8 {
                assert!(primitive_count(kind, l + 1) <= primitive_count(kind, l));
            }
        }
    }
}
