//! Bounds, principal axes and normalized axis coordinates.

use glam::DVec3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: DVec3,
    pub max: DVec3,
}

impl Aabb {
    pub fn new(min: DVec3, max: DVec3) -> Self {
        Self { min, max }
    }

    /// An inverted box that any point will expand.
    pub fn empty() -> Self {
        Self { min: DVec3::splat(f64::INFINITY), max: DVec3::splat(f64::NEG_INFINITY) }
    }

    pub fn from_points<I: IntoIterator<Item = DVec3>>(points: I) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: DVec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn contains(&self, p: DVec3) -> bool {
        p.cmpge(self.min).all() && p.cmple(self.max).all()
    }

    /// Strict interior test.
    pub fn contains_strict(&self, p: DVec3) -> bool {
        p.cmpgt(self.min).all() && p.cmplt(self.max).all()
    }

    pub fn center(&self) -> DVec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> DVec3 {
        self.max - self.min
    }

    pub fn half_extent(&self) -> DVec3 {
        self.extent() * 0.5
    }

    /// Half the diagonal length.
    pub fn radius(&self) -> f64 {
        self.half_extent().length()
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matching unit eigenvectors (columns).
pub fn symmetric_eigen(m: [[f64; 3]; 3]) -> ([f64; 3], [DVec3; 3]) {
    let mut a = m;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _sweep in 0..64 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        let scale = a[0][0].powi(2) + a[1][1].powi(2) + a[2][2].powi(2);
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let vals = [a[0][0], a[1][1], a[2][2]];
    let vecs = [0, 1, 2].map(|j| DVec3::new(v[0][j], v[1][j], v[2][j]).normalize());
    (vals, vecs)
}

pub fn covariance(points: &[DVec3]) -> [[f64; 3]; 3] {
    let n = points.len().max(1) as f64;
    let mean = points.iter().copied().sum::<DVec3>() / n;
    let mut c = [[0.0; 3]; 3];
    for p in points {
        let d = (*p - mean).to_array();
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] += d[i] * d[j];
            }
        }
    }
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x /= n;
        }
    }
    c
}

/// Eigenvector of the largest covariance eigenvalue.
///
/// When the top eigenvalue is degenerate the axis is the projection of +x
/// (then +y, then +z) onto the degenerate eigenspace. The sign is chosen so the
/// first non-zero of (x, y, z) components is positive.
pub fn principal_axis(points: &[DVec3]) -> DVec3 {
    let (vals, vecs) = symmetric_eigen(covariance(points));
    let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * top.abs().max(1e-300);
    let space: Vec<DVec3> = (0..3).filter(|&i| (vals[i] - top).abs() <= tol).map(|i| vecs[i]).collect();

    let mut axis = if space.len() == 1 {
        space[0]
    } else {
        let mut chosen = DVec3::X;
        for probe in [DVec3::X, DVec3::Y, DVec3::Z] {
            let proj: DVec3 = space.iter().map(|e| *e * e.dot(probe)).sum();
            if proj.length() > 1e-9 {
                chosen = proj.normalize();
                break;
            }
        }
        chosen
    };
    for c in axis.to_array() {
        if c.abs() > 1e-12 {
            if c < 0.0 {
                axis = -axis;
            }
            break;
        }
    }
    axis
}

/// Min-max normalized projections onto `axis`; all zero when the extent along
/// the axis is zero.
pub fn axis_coordinates(points: &[DVec3], axis: DVec3) -> Vec<f64> {
    let proj: Vec<f64> = points.iter().map(|p| p.dot(axis)).collect();
    let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0.0; points.len()];
    }
    proj.iter().map(|s| ((s - lo) / span).clamp(0.0, 1.0)).collect()
}


/// Integer streaming-cell coordinate.
pub type CellId = [i32; 3];

/// `floor((p - origin) / size)` componentwise.
pub fn cell_index(p: DVec3, origin: DVec3, size: f64) -> CellId {
    let q = ((p - origin) / size).floor();
    [q.x as i32, q.y as i32, q.z as i32]
}
