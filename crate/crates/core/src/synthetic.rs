//! Seeded synthetic datasets, addressed as `synth-<count>`.

use glam::DVec3;

use crate::catalog::{ProfileParams, RunProfile};
use crate::geometry::{cell_index, Aabb};
use crate::ingest::{assign_lod_groups, Atom, Molecule};
use crate::rng::CounterRng;
use crate::scene::{scene_from_molecule, MoleculeStyle, Scene, SceneError};

pub const DEFAULT_SEED: u64 = 0x5eed;
/// Ball radius per cube root of the atom count, Ångström.
pub const RADIUS_PER_CBRT: f64 = 3.0;

const ELEMENTS: [(&str, f64); 4] = [("C", 0.62), ("N", 0.17), ("O", 0.19), ("S", 0.02)];

/// Parses `synth-<count>`.
pub fn parse_synthetic_id(id: &str) -> Option<usize> {
    id.strip_prefix("synth-")?.parse().ok().filter(|&n| n > 0)
}

pub fn ball_radius(count: usize) -> f64 {
    RADIUS_PER_CBRT * (count as f64).cbrt()
}

fn cell_size(count: usize) -> f64 {
    (ball_radius(count) / 4.0).max(1.0)
}

/// `count` atoms uniform in a ball around the origin, without bonds; chain
/// `A`, ten atoms per residue. Atoms are ordered by streaming cell, as
/// residue order makes real structures spatially coherent.
pub fn synthetic_molecule(count: usize, seed: u64) -> Molecule {
    let radius = ball_radius(count);
    let mut rng = CounterRng::new(seed, 0);
    let mut placed: Vec<(DVec3, &str)> = (0..count)
        .map(|_| {
            let p = loop {
                let p = DVec3::new(rng.next_f64(), rng.next_f64(), rng.next_f64()) * 2.0 - DVec3::ONE;
                if p.length_squared() <= 1.0 {
                    break p * radius;
                }
            };
            let u = rng.next_f64();
            let mut acc = 0.0;
            let element = ELEMENTS.iter().find(|(_, w)| { acc += w; u < acc }).map_or("C", |e| e.0);
            (p, element)
        })
        .collect();
    let origin = Aabb::from_points(placed.iter().map(|a| a.0)).min;
    let size = cell_size(count);
    placed.sort_by_key(|a| cell_index(a.0, origin, size));
    let atoms = placed
        .into_iter()
        .enumerate()
        .map(|(i, (position, element))| Atom {
            serial: i as i64 + 1,
            name: element.to_string(),
            element: element.to_string(),
            position,
            chain: 'A',
            residue_name: "UNK".into(),
            residue_seq: (i / 10) as i32 + 1,
            hetero: false,
        })
        .collect();
    Molecule::new(atoms, Vec::new())
}

pub fn synthetic_scene(count: usize, seed: u64) -> Result<Scene, SceneError> {
    let molecule = synthetic_molecule(count, seed);
    let lod = assign_lod_groups(&molecule, &[]).map_err(|e| SceneError::InvalidArgument(e.to_string()))?;
    let style = MoleculeStyle { cell_size: cell_size(count), ..Default::default() };
    scene_from_molecule(&molecule, &lod, &style, &format!("synth-{count}"))
}

/// Parameters proportional to the scene's bounds radius `r`: draw distance
/// `3r`, LOD thresholds `[0.5r, r, 2r]`, three streaming cells.
pub fn scaled_params(scene: &Scene) -> ProfileParams {
    let r = scene.bounds.radius().max(1.0);
    ProfileParams {
        max_draw_distance: Some(3.0 * r),
        lod_thresholds: Some(vec![0.5 * r, r, 2.0 * r]),
        streaming_radius: Some(3),
        ..Default::default()
    }
}

/// `profile` with [`scaled_params`] filling any unset parameter.
pub fn with_scaled_params(mut profile: RunProfile, scene: &Scene) -> RunProfile {
    let s = scaled_params(scene);
    let p = &mut profile.params;
    p.max_draw_distance = p.max_draw_distance.or(s.max_draw_distance);
    p.lod_thresholds = p.lod_thresholds.take().or(s.lod_thresholds);
    p.streaming_radius = p.streaming_radius.or(s.streaming_radius);
    profile
}
