//! Deterministic particles advected through a sampled velocity field.

use glam::DVec2;
use serde::{Deserialize, Serialize};

use crate::field::FieldTextureArray;
use crate::rng::unit_f64;

#[derive(Debug, thiserror::Error)]
pub enum ParticleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    #[default]
    Rk2,
}

/// Axis-aligned spawn rectangle in domain coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Emitter {
    pub min: DVec2,
    pub max: DVec2,
    pub color: [f64; 3],
}

impl Emitter {
    pub fn new(min: DVec2, max: DVec2) -> Self {
        Self { min, max, color: [1.0; 3] }
    }

    fn area(&self) -> f64 {
        let e = self.max - self.min;
        e.x * e.y
    }

    fn point(&self, u: f64, v: f64) -> DVec2 {
        self.min + (self.max - self.min) * DVec2::new(u, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: DVec2,
    pub age: f64,
    pub color: [f64; 3],
    pub emitter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleConfig {
    pub dt: f64,
    pub integrator: Integrator,
    pub max_age: f64,
    /// Domain rectangle; the field's unit texture square maps onto it.
    pub domain_min: DVec2,
    pub domain_max: DVec2,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self { dt: 1.0 / 60.0, integrator: Integrator::Rk2, max_age: 5.0, domain_min: DVec2::ZERO, domain_max: DVec2::ONE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub particles: Vec<Particle>,
    pub rng_seed: u64,
    pub config: ParticleConfig,
    pub emitters: Vec<Emitter>,
    /// Steps taken so far; part of every random draw's key.
    pub steps: u64,
}

/// Draw counter for the initial spawn (step 0) and each later respawn.
fn draw(seed: u64, particle: usize, step: u64, k: u64) -> f64 {
    unit_f64(seed, particle as u64, step * 3 + k)
}

fn spawn(emitters: &[Emitter], weights: &[f64], seed: u64, index: usize, step: u64, emitter: Option<usize>) -> Particle {
    let e = emitter.unwrap_or_else(|| {
        let total = *weights.last().unwrap();
        let u = draw(seed, index, step, 0) * total;
        weights.partition_point(|&w| w <= u).min(emitters.len() - 1)
    });
    let position = emitters[e].point(draw(seed, index, step, 1), draw(seed, index, step, 2));
    Particle { position, age: 0.0, color: emitters[e].color, emitter: e }
}

/// Places `count` particles uniformly over the union of the emitters
/// (emitters chosen in proportion to their area).
pub fn seed(count: usize, emitters: &[Emitter], rng_seed: u64, config: ParticleConfig) -> Result<ParticleSystem, ParticleError> {
    if !(config.dt > 0.0) || !(config.max_age > 0.0) {
        return Err(ParticleError::InvalidArgument("dt and max_age must be positive".into()));
    }
    if !(config.domain_max - config.domain_min).cmpgt(DVec2::ZERO).all() {
        return Err(ParticleError::InvalidArgument("domain must have positive extent".into()));
    }
    if count > 0 && emitters.is_empty() {
        return Err(ParticleError::InvalidArgument("particles need at least one emitter".into()));
    }
    if emitters.iter().any(|e| !(e.max - e.min).cmpge(DVec2::ZERO).all() || !e.min.is_finite() || !e.max.is_finite()) {
        return Err(ParticleError::InvalidArgument("emitter rectangles must have max >= min".into()));
    }
    let weights = cumulative_weights(emitters);
    let particles = (0..count).map(|i| spawn(emitters, &weights, rng_seed, i, 0, None)).collect();
    Ok(ParticleSystem { particles, rng_seed, config, emitters: emitters.to_vec(), steps: 0 })
}

fn cumulative_weights(emitters: &[Emitter]) -> Vec<f64> {
    let all_flat = emitters.iter().all(|e| e.area() == 0.0);
    let mut acc = 0.0;
    emitters
        .iter()
        .map(|e| {
            acc += if all_flat { 1.0 } else { e.area() };
            acc
        })
        .collect()
}

impl ParticleSystem {
    fn velocity(&self, field: &FieldTextureArray, p: DVec2, t: f64) -> DVec2 {
        let size = self.config.domain_max - self.config.domain_min;
        let uv = (p - self.config.domain_min) / size;
        let s = field.sample(uv.x, uv.y, t);
        DVec2::new(s.ux, s.uy)
    }

    fn inside(&self, p: DVec2) -> bool {
        p.is_finite() && p.cmpge(self.config.domain_min).all() && p.cmple(self.config.domain_max).all()
    }

    /// Advances every particle by `dt` from time `t`. Particles leaving the
    /// domain or older than `max_age` respawn at their own emitter.
    pub fn step(&mut self, field: &FieldTextureArray, t: f64) {
        let dt = self.config.dt;
        self.steps += 1;
        let weights = cumulative_weights(&self.emitters);
        for i in 0..self.particles.len() {
            let p = self.particles[i].position;
            let v1 = self.velocity(field, p, t);
            let next = match self.config.integrator {
                Integrator::Euler => p + v1 * dt,
                Integrator::Rk2 => {
                    let v2 = self.velocity(field, p + v1 * dt, t + dt);
                    p + (v1 + v2) * (dt * 0.5)
                }
            };
            let age = self.particles[i].age + dt;
            let emitter = self.particles[i].emitter;
            if !self.inside(next) || age > self.config.max_age {
                self.particles[i] = spawn(&self.emitters, &weights, self.rng_seed, i, self.steps, Some(emitter));
            } else {
                self.particles[i].position = next;
                self.particles[i].age = age;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}
