//! Renderable scenes built from molecules and flow fields, cameras, whisker
//! overlays and emissive color curves.

use std::collections::{BTreeMap, HashMap};

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::field::{percentile, FieldError, FieldSample, FieldTextureArray, ScalarPlane};
use crate::geometry::{axis_coordinates, cell_index, principal_axis, Aabb, CellId};
use crate::ingest::{tables, LodAssignment, LodGroup, Molecule};

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    AtomSphere,
    BondSegment,
    FlowParticleEmitter,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 3] = [ObjectKind::AtomSphere, ObjectKind::BondSegment, ObjectKind::FlowParticleEmitter];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::AtomSphere => "atom_sphere",
            ObjectKind::BondSegment => "bond_segment",
            ObjectKind::FlowParticleEmitter => "flow_particle_emitter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    /// Equal to the object's index in [`Scene::objects`].
    pub id: u32,
    pub kind: ObjectKind,
    pub position: DVec3,
    pub radius: f64,
    pub color: [f64; 3],
    pub lod_group: LodGroup,
    pub cell: CellId,
    pub whisker_coord: f64,
    pub max_draw_distance: Option<f64>,
    /// Bond endpoints; `position` is their midpoint.
    pub endpoints: Option<[DVec3; 2]>,
}

impl SceneObject {
    pub fn new(kind: ObjectKind, position: DVec3, radius: f64) -> Self {
        Self {
            id: 0,
            kind,
            position,
            radius,
            color: [1.0; 3],
            lod_group: LodGroup::Core,
            cell: [0; 3],
            whisker_coord: 0.0,
            max_draw_distance: None,
            endpoints: None,
        }
    }

    /// Radius of a sphere around `position` enclosing the whole primitive.
    pub fn bounding_radius(&self) -> f64 {
        match self.endpoints {
            Some([a, b]) => (b - a).length() * 0.5 + self.radius,
            None => self.radius,
        }
    }
}

/// Objects plus a uniform streaming grid anchored at the bounds minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub dataset_id: String,
    pub objects: Vec<SceneObject>,
    pub bounds: Aabb,
    pub cell_size: f64,
    pub cells: BTreeMap<CellId, Vec<u32>>,
    /// Base LOD level per group (core, mid, periphery).
    pub base_levels: [u8; 3],
    /// Principal axis used for whisker coordinates.
    pub whisker_axis: DVec3,
}

impl Scene {
    /// Assigns ids and streaming cells. Objects keep their whisker
    /// coordinates and LOD groups.
    pub fn new(dataset_id: impl Into<String>, mut objects: Vec<SceneObject>, cell_size: f64) -> Result<Self, SceneError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(SceneError::InvalidArgument(format!("cell size must be positive, got {cell_size}")));
        }
        if objects.len() > u32::MAX as usize {
            return Err(SceneError::InvalidArgument("too many objects".into()));
        }
        if let Some(o) = objects.iter().find(|o| !(o.radius > 0.0) || !o.position.is_finite()) {
            return Err(SceneError::InvalidArgument(format!("object with radius {} at {}", o.radius, o.position)));
        }
        let bounds = Aabb::from_points(objects.iter().map(|o| o.position));
        let mut cells: BTreeMap<CellId, Vec<u32>> = BTreeMap::new();
        for (i, o) in objects.iter_mut().enumerate() {
            o.id = i as u32;
            o.cell = cell_index(o.position, bounds.min, cell_size);
            o.whisker_coord = o.whisker_coord.clamp(0.0, 1.0);
            cells.entry(o.cell).or_default().push(o.id);
        }
        Ok(Self {
            dataset_id: dataset_id.into(),
            objects,
            bounds,
            cell_size,
            cells,
            base_levels: LodAssignment::DEFAULT_BASE_LEVELS,
            whisker_axis: DVec3::X,
        })
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn base_level(&self, group: LodGroup) -> u8 {
        self.base_levels[group as usize]
    }

    /// Inclusive min and max cell ids present, or `None` for an empty scene.
    pub fn cell_range(&self) -> Option<(CellId, CellId)> {
        if self.is_empty() {
            return None;
        }
        let hi = cell_index(self.bounds.max, self.bounds.min, self.cell_size);
        Some(([0; 3], hi))
    }

    pub fn centroid(&self) -> DVec3 {
        let n = self.objects.len().max(1) as f64;
        self.objects.iter().map(|o| o.position).sum::<DVec3>() / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeStyle {
    pub atom_radius_scale: f64,
    /// Per-element overrides of the CPK palette.
    pub element_colors: HashMap<String, [f64; 3]>,
    pub bond_radius: f64,
    pub cell_size: f64,
}

impl Default for MoleculeStyle {
    fn default() -> Self {
        Self { atom_radius_scale: 1.0, element_colors: HashMap::new(), bond_radius: 0.15, cell_size: 20.0 }
    }
}

impl MoleculeStyle {
    fn color(&self, element: &str) -> [f64; 3] {
        self.element_colors.get(element).copied().unwrap_or_else(|| tables::cpk_color(element))
    }
}

/// One atom sphere per atom followed by one bond segment per bond.
pub fn scene_from_molecule(
    molecule: &Molecule,
    lod: &LodAssignment,
    style: &MoleculeStyle,
    dataset_id: &str,
) -> Result<Scene, SceneError> {
    if lod.groups.len() != molecule.atoms.len() {
        return Err(SceneError::DimensionMismatch(format!(
            "{} LOD groups for {} atoms",
            lod.groups.len(),
            molecule.atoms.len()
        )));
    }
    if !(style.atom_radius_scale > 0.0) || !(style.bond_radius > 0.0) {
        return Err(SceneError::InvalidArgument("radii must be positive".into()));
    }
    let mut objects = Vec::with_capacity(molecule.atoms.len() + molecule.bonds.len());
    for (i, atom) in molecule.atoms.iter().enumerate() {
        let mut o = SceneObject::new(
            ObjectKind::AtomSphere,
            atom.position,
            tables::vdw_radius(&atom.element) * style.atom_radius_scale,
        );
        o.color = style.color(&atom.element);
        o.lod_group = lod.groups[i];
        o.whisker_coord = molecule.whisker_coord[i];
        objects.push(o);
    }
    for bond in &molecule.bonds {
        let (pa, pb) = (molecule.atoms[bond.a].position, molecule.atoms[bond.b].position);
        let mut o = SceneObject::new(ObjectKind::BondSegment, (pa + pb) * 0.5, style.bond_radius);
        let (ca, cb) = (style.color(&molecule.atoms[bond.a].element), style.color(&molecule.atoms[bond.b].element));
        o.color = [0, 1, 2].map(|k| (ca[k] + cb[k]) * 0.5);
        o.lod_group = lod.groups[bond.a].min(lod.groups[bond.b]);
        o.whisker_coord = (molecule.whisker_coord[bond.a] + molecule.whisker_coord[bond.b]) * 0.5;
        o.endpoints = Some([pa, pb]);
        objects.push(o);
    }
    let mut scene = Scene::new(dataset_id, objects, style.cell_size)?;
    scene.base_levels = lod.base_levels;
    scene.whisker_axis = molecule.principal_axis;
    Ok(scene)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSceneOptions {
    /// World size of the unit texture domain.
    pub extent: f64,
    pub cell_size: f64,
    pub curve: EmissiveCurve,
    pub driver: EmissiveDriver,
}

impl Default for FieldSceneOptions {
    fn default() -> Self {
        Self { extent: 100.0, cell_size: 12.5, curve: EmissiveCurve::flame(), driver: EmissiveDriver::TK }
    }
}

/// Percentile filter over emitter cells.
#[derive(Debug, Clone, Copy)]
pub struct EmitterFilter<'a> {
    pub plane: &'a ScalarPlane,
    pub percentile: f64,
}

/// One emitter per cell of a `gx`x`gy` grid over the field domain (z = 0),
/// optionally keeping only cells whose filter value reaches the percentile.
/// Colors come from the emissive curve at the first slice.
pub fn scene_from_field(
    array: &FieldTextureArray,
    emitter_grid: (usize, usize),
    filter: Option<EmitterFilter<'_>>,
    options: &FieldSceneOptions,
    dataset_id: &str,
) -> Result<Scene, SceneError> {
    let (gx, gy) = emitter_grid;
    if gx == 0 || gy == 0 {
        return Err(SceneError::InvalidArgument("emitter grid must be at least 1x1".into()));
    }
    if !(options.extent > 0.0) {
        return Err(SceneError::InvalidArgument("extent must be positive".into()));
    }
    let cutoff = match filter {
        Some(f) => {
            if (f.plane.width, f.plane.height) != (gx, gy) {
                return Err(SceneError::DimensionMismatch(format!(
                    "filter plane is {}x{}, emitter grid is {gx}x{gy}",
                    f.plane.width, f.plane.height
                )));
            }
            Some(percentile(f.plane, f.percentile)?)
        }
        None => None,
    };
    let t0 = array.times()[0];
    let radius = 0.5 * options.extent / gx.max(gy) as f64;
    let mut objects = Vec::new();
    for j in 0..gy {
        for i in 0..gx {
            if let (Some(f), Some(c)) = (filter, cutoff) {
                if f.plane.get(i, j) < c {
                    continue;
                }
            }
            let (u, v) = ((i as f64 + 0.5) / gx as f64, (j as f64 + 0.5) / gy as f64);
            let mut o = SceneObject::new(
                ObjectKind::FlowParticleEmitter,
                DVec3::new(u * options.extent, v * options.extent, 0.0),
                radius,
            );
            o.color = emissive_color(&array.sample(u, v, t0), &options.curve, options.driver);
            objects.push(o);
        }
    }
    let positions: Vec<DVec3> = objects.iter().map(|o| o.position).collect();
    let axis = principal_axis(&positions);
    for (o, w) in objects.iter_mut().zip(axis_coordinates(&positions, axis)) {
        o.whisker_coord = w;
    }
    let mut scene = Scene::new(dataset_id, objects, options.cell_size)?;
    scene.whisker_axis = axis;
    Ok(scene)
}

/// A looking camera. `forward` and `up` are orthonormal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: DVec3,
    pub forward: DVec3,
    pub up: DVec3,
    /// Vertical field of view, radians.
    pub vfov: f64,
    pub aspect: f64,
    pub near: f64,
    pub far: f64,
}

impl Camera {
    pub fn new(position: DVec3, forward: DVec3, up: DVec3, vfov: f64, aspect: f64, near: f64, far: f64) -> Result<Self, SceneError> {
        let c = Self { position, forward, up, vfov, aspect, near, far };
        c.validate()?;
        Ok(c)
    }

    /// Looks from `position` at `target`, with `up` orthogonalized against
    /// the view direction (falling back to +z, then +x, when parallel).
    pub fn look_at(position: DVec3, target: DVec3, world_up: DVec3, vfov: f64, aspect: f64, near: f64, far: f64) -> Result<Self, SceneError> {
        let forward = (target - position).try_normalize().ok_or_else(|| {
            SceneError::InvalidArgument("camera target coincides with its position".into())
        })?;
        let up = [world_up, DVec3::Z, DVec3::X]
            .into_iter()
            .find_map(|u| (u - forward * u.dot(forward)).try_normalize().filter(|v| v.dot(forward).abs() < 1e-9))
            .expect("some axis is not parallel to forward");
        Self::new(position, forward, up, vfov, aspect, near, far)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::InvalidArgument(m.to_owned()));
        if !(self.near > 0.0 && self.near < self.far) {
            return bad("camera needs 0 < near < far");
        }
        if (self.forward.length() - 1.0).abs() > 1e-9 || (self.up.length() - 1.0).abs() > 1e-9 {
            return bad("camera axes must be unit length");
        }
        if self.forward.dot(self.up).abs() > 1e-9 {
            return bad("camera forward and up must be orthogonal");
        }
        if !(self.vfov > 0.0 && self.vfov < std::f64::consts::PI) || !(self.aspect > 0.0) {
            return bad("camera needs 0 < vfov < pi and positive aspect");
        }
        if !self.position.is_finite() {
            return bad("camera position must be finite");
        }
        Ok(())
    }

    pub fn right(&self) -> DVec3 {
        self.forward.cross(self.up)
    }

    /// Camera-space coordinates: x right, y up, z depth along forward.
    pub fn to_view(&self, p: DVec3) -> DVec3 {
        let d = p - self.position;
        DVec3::new(d.dot(self.right()), d.dot(self.up), d.dot(self.forward))
    }

    /// `1 / tan(vfov / 2)`: maps view-space slope to screen units, where the
    /// screen spans `[-aspect, aspect] x [-1, 1]`.
    pub fn focal(&self) -> f64 {
        1.0 / (self.vfov * 0.5).tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiskerSelection {
    pub lo: f64,
    pub hi: f64,
}

impl WhiskerSelection {
    pub fn new(lo: f64, hi: f64) -> Result<Self, SceneError> {
        let s = Self { lo, hi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if (0.0..=1.0).contains(&self.lo) && (0.0..=1.0).contains(&self.hi) && self.lo <= self.hi {
            Ok(())
        } else {
            Err(SceneError::InvalidArgument(format!("whisker [{}, {}] must satisfy 0 <= lo <= hi <= 1", self.lo, self.hi)))
        }
    }

    pub fn contains(&self, coord: f64) -> bool {
        self.lo <= coord && coord <= self.hi
    }
}

/// Per-object deprioritization flags, indexed by object id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WhiskerFlags(Vec<bool>);

impl WhiskerFlags {
    pub fn none(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn is_flagged(&self, id: u32) -> bool {
        self.0.get(id as usize).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

/// Flags objects whose whisker coordinate lies in `[lo, hi]`.
pub fn apply_whisker(scene: &Scene, selection: WhiskerSelection) -> WhiskerFlags {
    WhiskerFlags(scene.objects.iter().map(|o| selection.contains(o.whisker_coord)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmissiveDriver {
    #[serde(rename = "T_K")]
    TK,
    #[serde(rename = "OH")]
    Oh,
}

/// Piecewise-linear RGB curve over ascending scalar control points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissiveCurve {
    points: Vec<(f64, [f64; 3])>,
}

impl EmissiveCurve {
    pub fn new(points: Vec<(f64, [f64; 3])>) -> Result<Self, SceneError> {
        if points.len() < 2 {
            return Err(SceneError::InvalidArgument("an emissive curve needs at least 2 control points".into()));
        }
        if points.iter().any(|p| !p.0.is_finite()) || points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(SceneError::InvalidArgument("control points must be strictly ascending".into()));
        }
        Ok(Self { points })
    }

    /// Black through red and yellow to white over 300-2400 K.
    pub fn flame() -> Self {
        Self::new(vec![
            (300.0, [0.0, 0.0, 0.0]),
            (900.0, [0.6, 0.05, 0.0]),
            (1500.0, [1.0, 0.45, 0.0]),
            (2000.0, [1.0, 0.85, 0.3]),
            (2400.0, [1.0, 1.0, 1.0]),
        ])
        .expect("static curve is valid")
    }

    pub fn points(&self) -> &[(f64, [f64; 3])] {
        &self.points
    }

    pub fn eval(&self, s: f64) -> [f64; 3] {
        let p = &self.points;
        if !(s > p[0].0) {
            return p[0].1;
        }
        let last = p.len() - 1;
        if s >= p[last].0 {
            return p[last].1;
        }
        let k = p.partition_point(|q| q.0 <= s) - 1;
        let (s0, c0) = p[k];
        let (s1, c1) = p[k + 1];
        let w = (s - s0) / (s1 - s0);
        [0, 1, 2].map(|i| if w == 0.0 { c0[i] } else { c0[i] + (c1[i] - c0[i]) * w })
    }
}

pub fn emissive_color(sample: &FieldSample, curve: &EmissiveCurve, driver: EmissiveDriver) -> [f64; 3] {
    curve.eval(match driver {
        EmissiveDriver::TK => sample.t_k,
        EmissiveDriver::Oh => sample.oh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_time_array, FieldTexture};
    use crate::ingest::{Atom, Bond, BondSource};
    use proptest::prelude::*;

    fn atom(e: &str, p: DVec3) -> Atom {
        Atom {
            serial: 1,
            name: e.into(),
            element: e.into(),
            position: p,
            chain: 'A',
            residue_name: "GLY".into(),
            residue_seq: 1,
            hetero: false,
        }
    }

    fn two_atoms(bonds: Vec<Bond>) -> Molecule {
        Molecule::new(vec![atom("C", DVec3::ZERO), atom("N", DVec3::new(1.5, 0.0, 0.0))], bonds)
    }

    fn lod_for(m: &Molecule) -> LodAssignment {
        crate::ingest::assign_lod_groups(m, &[]).unwrap()
    }

    #[test]
    fn molecule_object_counts() {
        let m = two_atoms(vec![Bond::new(0, 1, BondSource::Inferred)]);
        let s = scene_from_molecule(&m, &lod_for(&m), &MoleculeStyle::default(), "t").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.objects[2].kind, ObjectKind::BondSegment);
        assert_eq!(s.objects[2].position, DVec3::new(0.75, 0.0, 0.0));
        assert_eq!(s.objects[2].bounding_radius(), 0.75 + 0.15);
        let m = two_atoms(vec![]);
        let s = scene_from_molecule(&m, &lod_for(&m), &MoleculeStyle::default(), "t").unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.objects.iter().all(|o| o.kind == ObjectKind::AtomSphere));
    }

    #[test]
    fn carbon_radius_from_vdw_table() {
        let m = two_atoms(vec![]);
        let s = scene_from_molecule(&m, &lod_for(&m), &MoleculeStyle::default(), "t").unwrap();
        assert_eq!(s.objects[0].radius, tables::vdw_radius("C"));
        assert_eq!(s.objects[0].radius, 1.70);
        let style = MoleculeStyle { atom_radius_scale: 0.5, ..Default::default() };
        let s = scene_from_molecule(&m, &lod_for(&m), &style, "t").unwrap();
        assert_eq!(s.objects[0].radius, 0.85);
    }

    #[test]
    fn cells_partition_objects() {
        let atoms = (0..50).map(|i| atom("C", DVec3::new(i as f64 * 0.9, (i % 7) as f64, 0.0))).collect();
        let m = Molecule::new(atoms, vec![]);
        let style = MoleculeStyle { cell_size: 5.0, ..Default::default() };
        let s = scene_from_molecule(&m, &lod_for(&m), &style, "t").unwrap();
        let mut ids: Vec<u32> = s.cells.values().flatten().copied().collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..50).collect::<Vec<_>>());
        for o in &s.objects {
            assert!(s.cells[&o.cell].contains(&o.id));
            assert!(s.bounds.contains(o.position));
        }
    }

    fn flat_array(w: usize, h: usize) -> FieldTextureArray {
        let mut t = FieldTexture::zeros(w, h);
        t.b.iter_mut().for_each(|v| *v = 1000.0);
        build_time_array(vec![t], vec![0.0]).unwrap()
    }

    #[test]
    fn field_emitters() {
        let arr = flat_array(8, 8);
        let opts = FieldSceneOptions::default();
        assert_eq!(scene_from_field(&arr, (4, 4), None, &opts, "f").unwrap().len(), 16);

        let plane = ScalarPlane::new(10, 10, (1..=100).map(f64::from).collect()).unwrap();
        let kept = |p: f64| {
            scene_from_field(&arr, (10, 10), Some(EmitterFilter { plane: &plane, percentile: p }), &opts, "f")
                .unwrap()
                .len()
        };
        assert_eq!(kept(95.0), 6);
        assert_eq!(kept(100.0), 1);

        let wrong = ScalarPlane::new(3, 3, vec![0.0; 9]).unwrap();
        assert!(matches!(
            scene_from_field(&arr, (4, 4), Some(EmitterFilter { plane: &wrong, percentile: 50.0 }), &opts, "f"),
            Err(SceneError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn whisker_intervals() {
        let objects = (0..=10)
            .map(|i| {
                let mut o = SceneObject::new(ObjectKind::AtomSphere, DVec3::new(i as f64, 0.0, 0.0), 1.0);
                o.whisker_coord = i as f64 / 10.0;
                o
            })
            .collect();
        let s = Scene::new("w", objects, 1.0).unwrap();
        assert_eq!(apply_whisker(&s, WhiskerSelection::new(0.0, 1.0).unwrap()).count(), 11);
        let mid = apply_whisker(&s, WhiskerSelection::new(0.5, 0.5).unwrap());
        assert_eq!(mid.count(), 1);
        assert!(mid.is_flagged(5));
        let low = apply_whisker(&s, WhiskerSelection::new(0.0, 0.0).unwrap());
        assert_eq!((low.count(), low.is_flagged(0)), (1, true));
        assert!(WhiskerSelection::new(0.8, 0.6).is_err());
        assert!(WhiskerSelection::new(-0.1, 0.6).is_err());
    }

    proptest! {
        #[test]
        fn whisker_is_monotone(coords in proptest::collection::vec(0.0..=1.0f64, 1..60),
                               a in 0.0..=1.0f64, b in 0.0..=1.0f64, grow in 0.0..=0.5f64) {
            let objects = coords.iter().enumerate().map(|(i, &c)| {
                let mut o = SceneObject::new(ObjectKind::AtomSphere, DVec3::new(i as f64, 0.0, 0.0), 1.0);
                o.whisker_coord = c;
                o
            }).collect();
            let s = Scene::new("w", objects, 4.0).unwrap();
            let inner = WhiskerSelection::new(a.min(b), a.max(b)).unwrap();
            let outer = WhiskerSelection::new((a.min(b) - grow).max(0.0), (a.max(b) + grow).min(1.0)).unwrap();
            let fi = apply_whisker(&s, inner);
            let fo = apply_whisker(&s, outer);
            for id in 0..s.len() as u32 {
                prop_assert!(!fi.is_flagged(id) || fo.is_flagged(id));
            }
            prop_assert_eq!(fi.len(), s.len());
        }
    }

    #[test]
    fn emissive_curve() {
        let bw = EmissiveCurve::new(vec![(0.0, [0.0; 3]), (1.0, [1.0; 3])]).unwrap();
        let at = |t_k: f64| emissive_color(&FieldSample { t_k, ..Default::default() }, &bw, EmissiveDriver::TK);
        assert_eq!(at(-3.0), [0.0; 3]);
        assert_eq!(at(0.5), [0.5; 3]);
        assert_eq!(at(1.0), [1.0; 3]);
        let flame = EmissiveCurve::flame();
        for &(s, c) in flame.points() {
            assert_eq!(flame.eval(s), c);
        }
        let oh = emissive_color(&FieldSample { oh: 7.0, ..Default::default() }, &bw, EmissiveDriver::Oh);
        assert_eq!(oh, [1.0; 3]);
        assert!(EmissiveCurve::new(vec![(1.0, [0.0; 3]), (0.0, [1.0; 3])]).is_err());
        assert!(EmissiveCurve::new(vec![(1.0, [0.0; 3])]).is_err());
    }

    #[test]
    fn look_at_is_orthonormal() {
        let c = Camera::look_at(DVec3::new(0.0, 5.0, 0.0), DVec3::ZERO, DVec3::Y, 1.0, 1.5, 0.1, 100.0).unwrap();
        assert!((c.forward + DVec3::Y).length() < 1e-12);
        assert!(c.up.dot(c.forward).abs() < 1e-12);
        let v = c.to_view(DVec3::ZERO);
        assert!((v.z - 5.0).abs() < 1e-12 && v.x.abs() < 1e-12 && v.y.abs() < 1e-12);
        assert!(Camera::look_at(DVec3::ZERO, DVec3::ZERO, DVec3::Y, 1.0, 1.0, 0.1, 1.0).is_err());
    }
}
