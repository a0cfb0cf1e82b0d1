//! Multiphysics field transcoding: structured ASCII grids to 4-channel f32
//! textures (R=Ux, G=Uy, B=T_K, A=OH), OpenEXR I/O, time arrays and sampling.

mod dat;
mod derive;
mod exr;

pub use dat::{parse_dat, ColumnSchema};
pub use derive::{derive_vorticity, percentile, ScalarPlane};
pub use exr::{decode_exr, encode_exr, read_exr, write_exr};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ragged row at line {line}: expected {expected} columns, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("coordinates do not form a rectangular lattice: {0}")]
    NonRectangular(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("times must be strictly increasing")]
    NonMonotoneTimes,
    #[error("texture contains non-finite values")]
    NonFinite,
    #[error("EXR format: {0}")]
    Format(String),
    #[error("empty plane")]
    EmptyPlane,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One grid node: velocity components, temperature in Kelvin and OH mass
/// fraction, stored as in the texture (f32).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeRecord {
    pub ux: f32,
    pub uy: f32,
    pub t_k: f32,
    pub oh: f32,
}

/// Regular 2D lattice, node `(i, j)` at index `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGrid {
    pub nx: usize,
    pub ny: usize,
    pub origin: (f64, f64),
    pub spacing: (f64, f64),
    pub values: Vec<NodeRecord>,
}

impl StructuredGrid {
    pub fn new(nx: usize, ny: usize, spacing: (f64, f64), values: Vec<NodeRecord>) -> Result<Self, FieldError> {
        if nx == 0 || ny == 0 {
            return Err(FieldError::InvalidGrid("empty grid".into()));
        }
        if values.len() != nx * ny {
            return Err(FieldError::InvalidGrid(format!("{} records for {nx}x{ny} nodes", values.len())));
        }
        if values.iter().any(|v| ![v.ux, v.uy, v.t_k, v.oh].iter().all(|x| x.is_finite())) {
            return Err(FieldError::NonFinite);
        }
        Ok(Self { nx, ny, origin: (0.0, 0.0), spacing, values })
    }

    pub fn node(&self, i: usize, j: usize) -> &NodeRecord {
        &self.values[j * self.nx + i]
    }

    /// Nodes whose OH fraction lies outside `[0, 1]`.
    pub fn oh_out_of_range(&self) -> usize {
        self.values.iter().filter(|v| !(0.0..=1.0).contains(&v.oh)).count()
    }
}

/// Four f32 planes, texel `(i, j)` at index `j * width + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTexture {
    pub width: usize,
    pub height: usize,
    pub r: Vec<f32>,
    pub g: Vec<f32>,
    pub b: Vec<f32>,
    pub a: Vec<f32>,
}

impl FieldTexture {
    pub fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        Self { width, height, r: vec![0.0; n], g: vec![0.0; n], b: vec![0.0; n], a: vec![0.0; n] }
    }

    pub fn texel(&self, i: usize, j: usize) -> [f32; 4] {
        let k = j * self.width + i;
        [self.r[k], self.g[k], self.b[k], self.a[k]]
    }

    pub fn set_texel(&mut self, i: usize, j: usize, v: [f32; 4]) {
        let k = j * self.width + i;
        self.r[k] = v[0];
        self.g[k] = v[1];
        self.b[k] = v[2];
        self.a[k] = v[3];
    }

    pub fn is_finite(&self) -> bool {
        [&self.r, &self.g, &self.b, &self.a].iter().all(|p| p.iter().all(|x| x.is_finite()))
    }

    /// Inverse of [`transcode`].
    pub fn to_grid(&self, spacing: (f64, f64)) -> Result<StructuredGrid, FieldError> {
        let values = (0..self.width * self.height)
            .map(|k| NodeRecord { ux: self.r[k], uy: self.g[k], t_k: self.b[k], oh: self.a[k] })
            .collect();
        StructuredGrid::new(self.width, self.height, spacing, values)
    }
}

/// Bitwise copy of grid records into texture channels.
pub fn transcode(grid: &StructuredGrid) -> FieldTexture {
    let mut tex = FieldTexture::zeros(grid.nx, grid.ny);
    for (k, v) in grid.values.iter().enumerate() {
        tex.r[k] = v.ux;
        tex.g[k] = v.uy;
        tex.b[k] = v.t_k;
        tex.a[k] = v.oh;
    }
    tex
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldSample {
    pub ux: f64,
    pub uy: f64,
    pub t_k: f64,
    pub oh: f64,
}

impl FieldSample {
    fn lerp(self, other: FieldSample, w: f64) -> FieldSample {
        FieldSample {
            ux: lerp(self.ux, other.ux, w),
            uy: lerp(self.uy, other.uy, w),
            t_k: lerp(self.t_k, other.t_k, w),
            oh: lerp(self.oh, other.oh, w),
        }
    }
}

#[inline]
fn lerp(a: f64, b: f64, w: f64) -> f64 {
    if w == 0.0 {
        a
    } else {
        a + (b - a) * w
    }
}

/// Time-ordered stack of equally sized textures.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTextureArray {
    slices: Vec<FieldTexture>,
    times: Vec<f64>,
}

pub fn build_time_array(slices: Vec<FieldTexture>, times: Vec<f64>) -> Result<FieldTextureArray, FieldError> {
    if slices.is_empty() {
        return Err(FieldError::InvalidArgument("at least one slice required".into()));
    }
    if slices.len() != times.len() {
        return Err(FieldError::DimensionMismatch(format!("{} slices but {} times", slices.len(), times.len())));
    }
    let (w, h) = (slices[0].width, slices[0].height);
    if let Some(k) = slices.iter().position(|s| s.width != w || s.height != h) {
        return Err(FieldError::DimensionMismatch(format!(
            "slice {k} is {}x{}, expected {w}x{h}",
            slices[k].width, slices[k].height
        )));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|p| p[1] <= p[0]) {
        return Err(FieldError::NonMonotoneTimes);
    }
    Ok(FieldTextureArray { slices, times })
}

impl FieldTextureArray {
    pub fn slices(&self) -> &[FieldTexture] {
        &self.slices
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn width(&self) -> usize {
        self.slices[0].width
    }

    pub fn height(&self) -> usize {
        self.slices[0].height
    }

    fn sample_slice(&self, k: usize, x: f64, y: f64) -> FieldSample {
        let tex = &self.slices[k];
        let axis = |c: f64, n: usize| {
            let u = if c.is_finite() { c * n as f64 - 0.5 } else { 0.0 };
            let u = u.clamp(0.0, (n - 1) as f64);
            let i0 = (u.floor() as usize).min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, u - i0 as f64)
        };
        let (i0, i1, fx) = axis(x, tex.width);
        let (j0, j1, fy) = axis(y, tex.height);
        let at = |i: usize, j: usize| {
            let [r, g, b, a] = tex.texel(i, j);
            FieldSample { ux: r as f64, uy: g as f64, t_k: b as f64, oh: a as f64 }
        };
        let bottom = at(i0, j0).lerp(at(i1, j0), fx);
        let top = at(i0, j1).lerp(at(i1, j1), fx);
        bottom.lerp(top, fy)
    }

    /// Bilinear in space (texel centers at `(i + 0.5) / w`, clamp-to-edge) and
    /// linear in time between bracketing slices (clamped at the ends).
    pub fn sample(&self, x: f64, y: f64, t: f64) -> FieldSample {
        let last = self.times.len() - 1;
        if self.times.len() == 1 || !(t > self.times[0]) {
            return self.sample_slice(0, x, y);
        }
        if t >= self.times[last] {
            return self.sample_slice(last, x, y);
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.sample_slice(k, x, y).lerp(self.sample_slice(k + 1, x, y), w)
    }
}
