//! Visibility, LOD and streaming passes.
//!
//! Passes run in a fixed order (streaming, distance, frustum, occlusion, LOD
//! selection, whisker override, batching). Each removed object is counted
//! against the first pass that removes it.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::catalog::{technique, ValidatedProfile};
use crate::geometry::CellId;
use crate::render::{impostors, Disc, Projector};
use crate::scene::{Camera, ObjectKind, Scene, SceneObject, WhiskerFlags};

/// Coarsest LOD level.
pub const MAX_LOD_LEVEL: u8 = 3;

/// Primitives submitted per object kind and LOD level.
pub const PRIMITIVE_TABLE: [(ObjectKind, [u32; 4]); 3] = [
    (ObjectKind::AtomSphere, [64, 16, 4, 1]),
    (ObjectKind::BondSegment, [48, 12, 3, 1]),
    (ObjectKind::FlowParticleEmitter, [16, 4, 2, 1]),
];

#[inline]
fn kind_index(kind: ObjectKind) -> usize {
    match kind {
        ObjectKind::AtomSphere => 0,
        ObjectKind::BondSegment => 1,
        ObjectKind::FlowParticleEmitter => 2,
    }
}

pub fn primitive_count(kind: ObjectKind, lod_level: u8) -> u32 {
    PRIMITIVE_TABLE[kind_index(kind)].1[lod_level.min(MAX_LOD_LEVEL) as usize]
}

/// `normal . p + offset >= 0` inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: DVec3,
    pub offset: f64,
}

impl Plane {
    fn through(normal: DVec3, point: DVec3) -> Self {
        Self { normal, offset: -normal.dot(point) }
    }

    #[inline]
    pub fn signed_distance(&self, p: DVec3) -> f64 {
        self.normal.dot(p) + self.offset
    }
}

/// Inward-facing planes in the order near, far, left, right, bottom, top.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrustumPlanes {
    pub planes: [Plane; 6],
}

impl FrustumPlanes {
    /// True when the sphere lies entirely outside some plane.
    #[inline]
    pub fn sphere_outside(&self, center: DVec3, radius: f64) -> bool {
        self.planes.iter().any(|p| p.signed_distance(center) < -radius)
    }

    pub fn contains_point(&self, p: DVec3) -> bool {
        self.planes.iter().all(|pl| pl.signed_distance(p) >= 0.0)
    }
}

pub fn extract_frustum_planes(camera: &Camera) -> FrustumPlanes {
    let (f, u, r, o) = (camera.forward, camera.up, camera.right(), camera.position);
    let v = camera.vfov * 0.5;
    let h = (v.tan() * camera.aspect).atan();
    FrustumPlanes {
        planes: [
            Plane::through(f, o + f * camera.near),
            Plane::through(-f, o + f * camera.far),
            Plane::through(r * h.cos() + f * h.sin(), o),
            Plane::through(-r * h.cos() + f * h.sin(), o),
            Plane::through(u * v.cos() + f * v.sin(), o),
            Plane::through(-u * v.cos() + f * v.sin(), o),
        ],
    }
}

/// Ids split into survivors and removed objects, each in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub visible: Vec<u32>,
    pub culled: Vec<u32>,
}

fn partition<'a>(objects: impl IntoIterator<Item = &'a SceneObject>, mut culled: impl FnMut(&SceneObject) -> bool) -> Partition {
    let mut p = Partition::default();
    for o in objects {
        if culled(o) {
            p.culled.push(o.id);
        } else {
            p.visible.push(o.id);
        }
    }
    p
}

pub fn cull_frustum<'a>(objects: impl IntoIterator<Item = &'a SceneObject>, planes: &FrustumPlanes) -> Partition {
    partition(objects, |o| planes.sphere_outside(o.position, o.bounding_radius()))
}

#[inline]
fn distance_culled(o: &SceneObject, eye: DVec3, default_max: f64) -> bool {
    (o.position - eye).length() - o.bounding_radius() > o.max_draw_distance.unwrap_or(default_max)
}

pub fn cull_distance<'a>(objects: impl IntoIterator<Item = &'a SceneObject>, camera: &Camera, default_max: f64) -> Partition {
    partition(objects, |o| distance_culled(o, camera.position, default_max))
}

/// Low-resolution occluder depth with a max-reduction pyramid. Level 0 is
/// `resolution x resolution` texels over the whole screen; each further level
/// halves both dimensions down to 1x1. Texel `(i, j)` at level `l` is
/// `levels[l][j * (resolution >> l) + i]`, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthPyramid {
    pub resolution: usize,
    pub levels: Vec<Vec<f64>>,
    aspect: f64,
}

impl DepthPyramid {
    pub fn root(&self) -> f64 {
        self.levels.last().expect("at least one level")[0]
    }

    pub fn texel(&self, level: usize, i: usize, j: usize) -> f64 {
        self.levels[level][j * (self.resolution >> level) + i]
    }

    /// Level-0 texel column/row holding screen point `(x, y)`, unclamped.
    fn texel_coord(&self, x: f64, y: f64) -> (f64, f64) {
        let n = self.resolution as f64;
        (((x / self.aspect + 1.0) * 0.5 * n).floor(), ((1.0 - y) * 0.5 * n).floor())
    }

    /// Max depth over every level-0 texel meeting the screen rectangle, read
    /// from the level where the rectangle spans at most 2x2 texels. `None`
    /// when the rectangle misses the screen.
    pub fn max_over(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> Option<f64> {
        let n = self.resolution as f64;
        let (ia, ja) = self.texel_coord(x0, y1);
        let (ib, jb) = self.texel_coord(x1, y0);
        if ib < 0.0 || jb < 0.0 || ia >= n || ja >= n {
            return None;
        }
        let clamp = |v: f64| v.clamp(0.0, n - 1.0) as usize;
        let (mut i0, mut i1, mut j0, mut j1) = (clamp(ia), clamp(ib), clamp(ja), clamp(jb));
        let mut level = 0;
        while i1 - i0 > 1 || j1 - j0 > 1 {
            i0 >>= 1;
            i1 >>= 1;
            j0 >>= 1;
            j1 >>= 1;
            level += 1;
        }
        let mut m = f64::NEG_INFINITY;
        for j in j0..=j1 {
            for i in i0..=i1 {
                m = m.max(self.texel(level, i, j));
            }
        }
        Some(m)
    }
}

/// Shrink applied to occluder discs before testing texel coverage.
const COVER_MARGIN: f64 = 1e-9;

/// Rasterizes the `k` largest on-screen occluders (by projected radius, ties
/// by id). An occluder writes its center depth into each texel lying wholly
/// inside its disc; the impostor surface there is never farther than that.
/// Occluders must sit entirely between the near and far planes.
pub fn build_occluder_depth<'a>(
    objects: impl IntoIterator<Item = &'a SceneObject>,
    camera: &Camera,
    resolution: usize,
    k: usize,
) -> DepthPyramid {
    assert!(resolution.is_power_of_two() && resolution <= 256, "occlusion resolution must be a power of two <= 256");
    let proj = Projector::new(camera);
    let mut candidates: Vec<(u32, Disc)> = objects
        .into_iter()
        .filter_map(|o| {
            let d = proj.project(o.position, o.radius)?;
            (d.near_depth() >= camera.near && d.cz <= camera.far).then_some((o.id, d))
        })
        .collect();
    let by_size = |a: &(u32, Disc), b: &(u32, Disc)| b.1.sr.total_cmp(&a.1.sr).then(a.0.cmp(&b.0));
    if candidates.len() > k {
        if k > 0 {
            candidates.select_nth_unstable_by(k - 1, by_size);
        }
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_size);

    let n = resolution;
    let mut base = vec![camera.far; n * n];
    let tw = 2.0 * camera.aspect / n as f64;
    let th = 2.0 / n as f64;
    let x_at = |i: usize| -camera.aspect + i as f64 * tw;
    let y_at = |j: usize| 1.0 - j as f64 * th;
    for (_, d) in &candidates {
        let rr = d.sr * (1.0 - COVER_MARGIN);
        let rr2 = rr * rr;
        let i0 = (((d.sx - rr + camera.aspect) / tw).floor().max(0.0)) as usize;
        let i1 = (((d.sx + rr + camera.aspect) / tw).ceil().min(n as f64)) as usize;
        let j0 = (((1.0 - (d.sy + rr)) / th).floor().max(0.0)) as usize;
        let j1 = (((1.0 - (d.sy - rr)) / th).ceil().min(n as f64)) as usize;
        for j in j0..j1 {
            for i in i0..i1 {
                let inside = [(x_at(i), y_at(j)), (x_at(i + 1), y_at(j)), (x_at(i), y_at(j + 1)), (x_at(i + 1), y_at(j + 1))]
                    .iter()
                    .all(|&(x, y)| (x - d.sx).powi(2) + (y - d.sy).powi(2) <= rr2);
                if inside {
                    let t = &mut base[j * n + i];
                    *t = t.min(d.cz);
                }
            }
        }
    }

    let mut levels = vec![base];
    let mut size = n;
    while size > 1 {
        let prev = levels.last().unwrap();
        let half = size / 2;
        let mut next = vec![0.0; half * half];
        for j in 0..half {
            for i in 0..half {
                let at = |di: usize, dj: usize| prev[(2 * j + dj) * size + 2 * i + di];
                next[j * half + i] = at(0, 0).max(at(1, 0)).max(at(0, 1)).max(at(1, 1));
            }
        }
        levels.push(next);
        size = half;
    }
    DepthPyramid { resolution: n, levels, aspect: camera.aspect }
}

/// Objects whose rendered footprint lies strictly behind the pyramid.
#[inline]
fn occluded(o: &SceneObject, pyramid: &DepthPyramid, proj: &Projector) -> bool {
    if proj.view(o.position).z - o.bounding_radius() < proj.near {
        return false;
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut nearest = f64::INFINITY;
    for (c, r) in impostors(o) {
        let Some(d) = proj.project(c, r) else { return false };
        x0 = x0.min(d.sx - d.sr);
        x1 = x1.max(d.sx + d.sr);
        y0 = y0.min(d.sy - d.sr);
        y1 = y1.max(d.sy + d.sr);
        nearest = nearest.min(d.near_depth());
    }
    match pyramid.max_over(x0, y0, x1, y1) {
        Some(m) => nearest - 1e-9 * (1.0 + nearest.abs()) > m,
        None => false,
    }
}

pub fn cull_occlusion<'a>(objects: impl IntoIterator<Item = &'a SceneObject>, pyramid: &DepthPyramid, camera: &Camera) -> Partition {
    let proj = Projector::new(camera);
    partition(objects, |o| occluded(o, pyramid, &proj))
}

/// `base_level` plus the number of thresholds strictly below the camera
/// distance, capped at [`MAX_LOD_LEVEL`]; deprioritized objects take the cap.
pub fn select_lod(object: &SceneObject, camera: &Camera, thresholds: &[f64], base_level: u8, deprioritized: bool) -> u8 {
    if deprioritized {
        return MAX_LOD_LEVEL;
    }
    let d = (object.position - camera.position).length();
    let steps = thresholds.iter().filter(|&&t| t < d).count();
    (base_level as usize + steps).min(MAX_LOD_LEVEL as usize) as u8
}

/// Cell holding the camera, clamped into the scene's cell range.
pub fn camera_cell(scene: &Scene, camera: &Camera) -> Option<CellId> {
    let (lo, hi) = scene.cell_range()?;
    let c = crate::geometry::cell_index(camera.position, scene.bounds.min, scene.cell_size);
    Some([0, 1, 2].map(|k| c[k].clamp(lo[k], hi[k])))
}

/// Occupied cells within Chebyshev distance `radius_cells` of the camera cell.
pub fn resolve_streaming(scene: &Scene, camera: &Camera, radius_cells: u32) -> BTreeSet<CellId> {
    loaded_cells(scene, camera, radius_cells).map(|(c, _)| *c).collect()
}

fn loaded_cells<'s>(scene: &'s Scene, camera: &Camera, radius_cells: u32) -> impl Iterator<Item = (&'s CellId, &'s Vec<u32>)> + 's {
    let anchor = camera_cell(scene, camera).unwrap_or([0; 3]);
    let r = radius_cells.min(i32::MAX as u32 / 2) as i32;
    let lo = [anchor[0].saturating_sub(r), i32::MIN, i32::MIN];
    let hi = [anchor[0].saturating_add(r), i32::MAX, i32::MAX];
    scene.cells.range(lo..=hi).filter(move |(c, _)| (c[1] - anchor[1]).abs() <= r && (c[2] - anchor[2]).abs() <= r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibleEntry {
    pub id: u32,
    pub kind: ObjectKind,
    pub lod_level: u8,
    pub deprioritized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VisibleSet {
    pub entries: Vec<VisibleEntry>,
    /// Entry count per (kind, LOD level).
    pub batches: BTreeMap<(ObjectKind, u8), u32>,
}

impl VisibleSet {
    pub fn from_entries(entries: Vec<VisibleEntry>) -> Self {
        let mut counts = [[0u32; MAX_LOD_LEVEL as usize + 1]; 3];
        for e in &entries {
            counts[kind_index(e.kind)][e.lod_level.min(MAX_LOD_LEVEL) as usize] += 1;
        }
        let batches = ObjectKind::ALL
            .into_iter()
            .flat_map(|k| (0..=MAX_LOD_LEVEL).map(move |l| (k, l)))
            .filter_map(|(k, l)| {
                let n = counts[kind_index(k)][l as usize];
                (n > 0).then_some(((k, l), n))
            })
            .collect();
        Self { entries, batches }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<u32> {
        self.entries.iter().map(|e| e.id).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameCullStats {
    pub total_objects: u64,
    pub streamed_out: u64,
    pub distance_culled: u64,
    pub frustum_culled: u64,
    pub occlusion_culled: u64,
    pub whisker_deprioritized: u64,
    pub submitted_primitives: u64,
    pub batch_count: u64,
}

impl FrameCullStats {
    /// Removed plus surviving objects.
    pub fn accounted(&self, entries: usize) -> u64 {
        self.streamed_out + self.distance_culled + self.frustum_culled + self.occlusion_culled + entries as u64
    }
}

/// Wall time spent per pass, microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PassTimings {
    pub streaming_us: f64,
    pub distance_frustum_us: f64,
    pub occlusion_us: f64,
    pub lod_batching_us: f64,
}

pub fn run_pipeline(scene: &Scene, whisker: &WhiskerFlags, camera: &Camera, profile: &ValidatedProfile) -> (VisibleSet, FrameCullStats) {
    let (v, s, _) = run_pipeline_timed(scene, whisker, camera, profile);
    (v, s)
}

/// Occluders are drawn from every frustum-visible object of the scene, so
/// the occlusion result does not depend on which earlier passes are enabled.
pub fn run_pipeline_timed(
    scene: &Scene,
    whisker: &WhiskerFlags,
    camera: &Camera,
    profile: &ValidatedProfile,
) -> (VisibleSet, FrameCullStats, PassTimings) {
    let mut stats = FrameCullStats { total_objects: scene.len() as u64, ..Default::default() };
    let mut timings = PassTimings::default();
    let on = |t: &str| profile.is_enabled(t);
    let planes = extract_frustum_planes(camera);

    let clock = Instant::now();
    let candidates: Vec<u32> = if on(technique::LEVEL_STREAMING) {
        let ids: Vec<u32> = loaded_cells(scene, camera, profile.streaming_radius()).flat_map(|(_, v)| v.iter().copied()).collect();
        stats.streamed_out = (scene.len() - ids.len()) as u64;
        ids
    } else {
        (0..scene.len() as u32).collect()
    };
    timings.streaming_us = clock.elapsed().as_secs_f64() * 1e6;

    let clock = Instant::now();
    let (use_distance, use_frustum) = (on(technique::DISTANCE_CULLING), on(technique::FRUSTUM_CULLING));
    let max_distance = profile.max_draw_distance();
    let mut survivors = Vec::with_capacity(candidates.len());
    for id in candidates {
        let o = &scene.objects[id as usize];
        if use_distance && distance_culled(o, camera.position, max_distance) {
            stats.distance_culled += 1;
        } else if use_frustum && planes.sphere_outside(o.position, o.bounding_radius()) {
            stats.frustum_culled += 1;
        } else {
            survivors.push(id);
        }
    }
    timings.distance_frustum_us = clock.elapsed().as_secs_f64() * 1e6;

    let clock = Instant::now();
    if on(technique::OCCLUSION_CULLING) {
        let occluders = scene.objects.iter().filter(|o| !planes.sphere_outside(o.position, o.bounding_radius()));
        let pyramid = build_occluder_depth(occluders, camera, profile.occlusion_resolution() as usize, profile.occluder_count());
        let proj = Projector::new(camera);
        let before = survivors.len();
        survivors.retain(|&id| !occluded(&scene.objects[id as usize], &pyramid, &proj));
        stats.occlusion_culled = (before - survivors.len()) as u64;
    }
    timings.occlusion_us = clock.elapsed().as_secs_f64() * 1e6;

    let clock = Instant::now();
    let use_lod = on(technique::LOD);
    let use_whisker = on(technique::WHISKER);
    let thresholds = profile.lod_thresholds();
    let entries: Vec<VisibleEntry> = survivors
        .into_iter()
        .map(|id| {
            let o = &scene.objects[id as usize];
            let deprioritized = use_whisker && whisker.is_flagged(id);
            let lod_level = match (use_lod, deprioritized) {
                (_, true) => MAX_LOD_LEVEL,
                (true, false) => select_lod(o, camera, thresholds, scene.base_level(o.lod_group), false),
                (false, false) => 0,
            };
            stats.whisker_deprioritized += deprioritized as u64;
            stats.submitted_primitives += primitive_count(o.kind, lod_level) as u64;
            VisibleEntry { id, kind: o.kind, lod_level, deprioritized }
        })
        .collect();
    let visible = VisibleSet::from_entries(entries);
    stats.batch_count = if on(technique::INSTANCING) { visible.batches.len() } else { visible.len() } as u64;
    timings.lod_batching_us = clock.elapsed().as_secs_f64() * 1e6;
    (visible, stats, timings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::RunProfile;
    use crate::ingest::LodGroup;
    use crate::render::reference_render;
    use crate::rng::CounterRng;
    use std::f64::consts::PI;

    fn camera_at(pos: DVec3, target: DVec3) -> Camera {
        Camera::look_at(pos, target, DVec3::Y, PI / 3.0, 16.0 / 9.0, 0.5, 200.0).unwrap()
    }

    fn profile(ids: &[&str]) -> ValidatedProfile {
        let mut p = RunProfile::new("t");
        for id in ids {
            p = p.with(id);
        }
        crate::catalog::validate_profile(p).unwrap()
    }

    fn random_scene(seed: u64, n: usize, half: f64) -> Scene {
        let mut rng = CounterRng::new(seed, 0);
        let groups = LodGroup::ALL;
        let objects = (0..n)
            .map(|i| {
                let p = DVec3::new(rng.range(-half, half), rng.range(-half, half), rng.range(-half, half));
                let mut o = SceneObject::new(ObjectKind::AtomSphere, p, rng.range(0.2, 3.0));
                o.lod_group = groups[i % 3];
                o.whisker_coord = rng.next_f64();
                if i % 17 == 0 {
                    o.max_draw_distance = Some(rng.range(5.0, 40.0));
                }
                o
            })
            .collect();
        Scene::new("r", objects, 10.0).unwrap()
    }

    #[test]
    fn frustum_plane_examples() {
        let cam = camera_at(DVec3::new(1.0, 2.0, 3.0), DVec3::new(4.0, -1.0, 9.0));
        let fp = extract_frustum_planes(&cam);
        for p in &fp.planes {
            assert!((p.normal.length() - 1.0).abs() < 1e-12);
        }
        assert!(fp.contains_point(cam.position + cam.forward * (cam.near + cam.far) / 2.0));
        assert!(fp.planes[0].signed_distance(cam.position - cam.forward) < 0.0);
        assert!(fp.planes[1].signed_distance(cam.position + cam.forward * 2.0 * cam.far) < 0.0);
    }

    #[test]
    fn frustum_spheres() {
        let cam = camera_at(DVec3::ZERO, DVec3::Z);
        let fp = extract_frustum_planes(&cam);
        let mid = SceneObject::new(ObjectKind::AtomSphere, DVec3::Z * 100.0, 1.0);
        let behind = SceneObject::new(ObjectKind::AtomSphere, DVec3::Z * -10.0, 1.0);
        let p = cull_frustum([&mid, &behind], &fp);
        assert_eq!((p.visible.len(), p.culled.len()), (1, 1));
        // straddling the left edge
        let h = ((PI / 6.0).tan() * 16.0 / 9.0).atan();
        let edge = SceneObject::new(ObjectKind::AtomSphere, DVec3::new(50.0 * h.tan() + 0.5, 0.0, 50.0), 1.0);
        assert!(cull_frustum([&edge], &fp).culled.is_empty());
    }

    #[test]
    fn distance_boundary() {
        let cam = camera_at(DVec3::ZERO, DVec3::Z);
        let eps = 1e-9;
        let mut o = SceneObject::new(ObjectKind::AtomSphere, DVec3::Z * (10.0 + 2.0 + eps * 10.0), 2.0);
        assert_eq!(cull_distance([&o], &cam, 10.0).culled.len(), 1);
        o.position = DVec3::Z * 12.0;
        assert!(cull_distance([&o], &cam, 10.0).culled.is_empty());
        o.position = DVec3::Z * 1e12;
        o.max_draw_distance = Some(f64::INFINITY);
        assert!(cull_distance([&o], &cam, 10.0).culled.is_empty());
    }

    #[test]
    fn distance_matches_oracle() {
        let s = random_scene(3, 1000, 60.0);
        let cam = camera_at(DVec3::new(5.0, 1.0, -4.0), DVec3::ZERO);
        let p = cull_distance(&s.objects, &cam, 35.0);
        for o in &s.objects {
            let dx = o.position.x - cam.position.x;
            let dy = o.position.y - cam.position.y;
            let dz = o.position.z - cam.position.z;
            let lim = o.max_draw_distance.unwrap_or(35.0);
            let oracle = (dx * dx + dy * dy + dz * dz).sqrt() - o.radius > lim;
            assert_eq!(p.culled.contains(&o.id), oracle);
        }
    }

    #[test]
    fn pyramid_reduction_and_empty() {
        let cam = camera_at(DVec3::ZERO, DVec3::Z);
        let empty = build_occluder_depth(std::iter::empty(), &cam, 16, 64);
        assert!(empty.levels.iter().flatten().all(|&d| d == cam.far));
        assert_eq!(empty.levels.len(), 5);

        let s = random_scene(5, 200, 20.0);
        let cam = camera_at(DVec3::new(0.0, 0.0, -40.0), DVec3::ZERO);
        let p = build_occluder_depth(&s.objects, &cam, 32, 64);
        for l in 1..p.levels.len() {
            let n = 32 >> l;
            for j in 0..n {
                for i in 0..n {
                    let kids = [(0, 0), (1, 0), (0, 1), (1, 1)].map(|(a, b)| p.texel(l - 1, 2 * i + a, 2 * j + b));
                    assert_eq!(p.texel(l, i, j), kids.into_iter().fold(f64::NEG_INFINITY, f64::max));
                }
            }
        }
    }

    #[test]
    fn full_screen_occluder_sets_root() {
        let cam = Camera::look_at(DVec3::ZERO, DVec3::Z, DVec3::Y, PI / 3.0, 1.0, 0.5, 200.0).unwrap();
        let wall = SceneObject::new(ObjectKind::AtomSphere, DVec3::Z * 30.0, 29.0);
        let p = build_occluder_depth([&wall], &cam, 8, 1);
        assert_eq!(p.root(), 30.0);
        assert!(p.levels[0].iter().all(|&d| d == 30.0));
    }

    #[test]
    fn small_sphere_behind_large_is_culled() {
        let cam = camera_at(DVec3::ZERO, DVec3::Z);
        let big = SceneObject::new(ObjectKind::AtomSphere, DVec3::Z * 20.0, 8.0);
        let mut small = SceneObject::new(ObjectKind::AtomSphere, DVec3::Z * 40.0, 1.0);
        let mut front = SceneObject::new(ObjectKind::AtomSphere, DVec3::Z * 5.0, 0.5);
        small.id = 1;
        front.id = 2;
        let s = Scene::new("o", vec![big.clone(), small.clone(), front.clone()], 100.0).unwrap();
        let pyr = build_occluder_depth([&s.objects[0]], &cam, 64, 64);
        let part = cull_occlusion(&s.objects[1..], &pyr, &cam);
        assert_eq!(part.culled, vec![1]);
        assert_eq!(part.visible, vec![2]);
        let r = reference_render(&s, &cam, (320, 180)).unwrap();
        assert_eq!(r.contributions[1], 0);
    }

    #[test]
    fn lod_rule() {
        let cam = camera_at(DVec3::ZERO, DVec3::Z);
        let th = [10.0, 20.0, 40.0];
        let at = |d: f64| SceneObject::new(ObjectKind::AtomSphere, DVec3::Z * d, 1.0);
        assert_eq!(select_lod(&at(5.0), &cam, &th, 0, false), 0);
        assert_eq!(select_lod(&at(10.0), &cam, &th, 0, false), 0);
        assert_eq!(select_lod(&at(15.0), &cam, &th, 1, false), 2);
        assert_eq!(select_lod(&at(100.0), &cam, &th, 0, false), 3);
        assert_eq!(select_lod(&at(0.0), &cam, &th, 0, true), MAX_LOD_LEVEL);
    }

    #[test]
    fn streaming_neighborhoods() {
        let objects = (0..7 * 7 * 7)
            .map(|k| {
                let p = DVec3::new((k % 7) as f64, ((k / 7) % 7) as f64, (k / 49) as f64) * 10.0 + DVec3::splat(5.0);
                SceneObject::new(ObjectKind::AtomSphere, p, 1.0)
            })
            .collect();
        let s = Scene::new("g", objects, 10.0).unwrap();
        let cam = camera_at(DVec3::splat(35.0), DVec3::ZERO);
        assert_eq!(resolve_streaming(&s, &cam, 1).len(), 27);
        let zero = resolve_streaming(&s, &cam, 0);
        assert_eq!(zero.len(), 1);
        assert_eq!(zero.into_iter().next(), camera_cell(&s, &cam));
        let outside = camera_at(DVec3::new(-500.0, 30.0, 1e4), DVec3::ZERO);
        assert_eq!(camera_cell(&s, &outside), Some([0, 2, 6]));
        assert_eq!(resolve_streaming(&s, &outside, 1).len(), 2 * 3 * 2);
    }

    #[test]
    fn empty_profile_is_identity() {
        let s = random_scene(1, 500, 30.0);
        let cam = camera_at(DVec3::new(0.0, 0.0, -80.0), DVec3::ZERO);
        let (v, st) = run_pipeline(&s, &WhiskerFlags::none(s.len()), &cam, &ValidatedProfile::baseline());
        assert_eq!(v.len(), 500);
        assert!(v.entries.iter().all(|e| e.lod_level == 0 && !e.deprioritized));
        assert_eq!((st.streamed_out, st.distance_culled, st.frustum_culled, st.occlusion_culled), (0, 0, 0, 0));
        assert_eq!(st.submitted_primitives, 500 * 64);
        assert_eq!(st.batch_count, 500);
    }

    #[test]
    fn scene_behind_camera_is_frustum_culled() {
        let mut s = random_scene(2, 300, 5.0);
        s.objects.iter_mut().for_each(|o| o.max_draw_distance = None);
        let cam = camera_at(DVec3::new(0.0, 0.0, -20.0), DVec3::new(0.0, 0.0, -40.0));
        let mut p = RunProfile::new("all");
        for t in all_techniques() {
            p = p.with(t);
        }
        p.params.max_draw_distance = Some(1e6);
        p.params.streaming_radius = Some(64);
        let p = crate::catalog::validate_profile(p).unwrap();
        let (v, st) = run_pipeline(&s, &WhiskerFlags::none(s.len()), &cam, &p);
        assert!(v.is_empty());
        assert_eq!(st.frustum_culled, 300);
    }

    fn all_techniques() -> Vec<&'static str> {
        vec![
            technique::FRUSTUM_CULLING,
            technique::DISTANCE_CULLING,
            technique::OCCLUSION_CULLING,
            technique::LOD,
            technique::INSTANCING,
            technique::LEVEL_STREAMING,
            technique::WHISKER,
        ]
    }

    #[test]
    fn counters_balance_and_monotonicity_on_random_frames() {
        let s = random_scene(4, 400, 40.0);
        let flags = crate::scene::apply_whisker(&s, crate::scene::WhiskerSelection::new(0.6, 0.8).unwrap());
        let mut rng = CounterRng::new(77, 0);
        let ladders: [&[&str]; 5] = [
            &[],
            &[technique::LEVEL_STREAMING],
            &[technique::LEVEL_STREAMING, technique::DISTANCE_CULLING],
            &[technique::LEVEL_STREAMING, technique::DISTANCE_CULLING, technique::FRUSTUM_CULLING],
            &[technique::LEVEL_STREAMING, technique::DISTANCE_CULLING, technique::FRUSTUM_CULLING, technique::OCCLUSION_CULLING],
        ];
        let profiles: Vec<ValidatedProfile> = ladders.iter().map(|l| profile(l)).collect();
        let everything = profile(&all_techniques());
        for _ in 0..1000 {
            let pos = DVec3::new(rng.range(-70.0, 70.0), rng.range(-70.0, 70.0), rng.range(-70.0, 70.0));
            let target = DVec3::new(rng.range(-10.0, 10.0), rng.range(-10.0, 10.0), rng.range(-10.0, 10.0));
            let Ok(cam) = Camera::look_at(pos, target, DVec3::Y, rng.range(0.5, 1.5), 1.5, 0.5, 150.0) else { continue };
            let mut prev: Option<BTreeSet<u32>> = None;
            for p in profiles.iter().chain([&everything]) {
                let (v, st) = run_pipeline(&s, &flags, &cam, p);
                assert_eq!(st.accounted(v.len()), st.total_objects);
                let ids = v.ids();
                assert_eq!(ids.len(), v.len());
                if let Some(prev) = &prev {
                    assert!(ids.is_subset(prev));
                }
                prev = Some(ids);
            }
        }
    }

    #[test]
    fn instancing_batches_by_kind_and_level() {
        let s = random_scene(6, 90, 30.0);
        let cam = camera_at(DVec3::new(0.0, 0.0, -60.0), DVec3::ZERO);
        let (v, st) = run_pipeline(&s, &WhiskerFlags::none(s.len()), &cam, &profile(&[technique::LOD, technique::INSTANCING]));
        assert_eq!(st.batch_count as usize, v.batches.len());
        assert!(st.batch_count <= 4);
        assert_eq!(v.batches.values().sum::<u32>() as usize, v.len());
        let expect: u64 = v.entries.iter().map(|e| primitive_count(e.kind, e.lod_level) as u64).sum();
        assert_eq!(st.submitted_primitives, expect);
    }

    #[test]
    fn whisker_needs_its_technique() {
        let s = random_scene(8, 100, 10.0);
        let flags = crate::scene::apply_whisker(&s, crate::scene::WhiskerSelection::new(0.0, 1.0).unwrap());
        let cam = camera_at(DVec3::new(0.0, 0.0, -60.0), DVec3::ZERO);
        let (v, st) = run_pipeline(&s, &flags, &cam, &ValidatedProfile::baseline());
        assert_eq!(st.whisker_deprioritized, 0);
        assert!(v.entries.iter().all(|e| !e.deprioritized));
        let (v, st) = run_pipeline(&s, &flags, &cam, &profile(&[technique::WHISKER]));
        assert_eq!(st.whisker_deprioritized, 100);
        assert!(v.entries.iter().all(|e| e.deprioritized && e.lod_level == MAX_LOD_LEVEL));
    }

    #[test]
    fn deterministic() {
        let s = random_scene(9, 600, 30.0);
        let cam = camera_at(DVec3::new(3.0, 10.0, -50.0), DVec3::ZERO);
        let p = profile(&all_techniques());
        let flags = WhiskerFlags::none(s.len());
        assert_eq!(run_pipeline(&s, &flags, &cam, &p), run_pipeline(&s, &flags, &cam, &p));
    }
}
