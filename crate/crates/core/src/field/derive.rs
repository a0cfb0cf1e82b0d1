use super::{FieldError, StructuredGrid};

/// Real-valued plane aligned with a grid, value `(i, j)` at `j * width + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPlane {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ScalarPlane {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != width * height {
            return Err(FieldError::DimensionMismatch(format!("{} values for {width}x{height}", values.len())));
        }
        Ok(Self { width, height, values })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }
}

/// Derivative of `f` along one axis at index `k` of `n`: central difference
/// inside, one-sided at the two ends.
#[inline]
fn diff(f: impl Fn(usize) -> f64, k: usize, n: usize, h: f64) -> f64 {
    if k == 0 {
        (f(1) - f(0)) / h
    } else if k == n - 1 {
        (f(n - 1) - f(n - 2)) / h
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// `dUy/dx - dUx/dy` on every node.
pub fn derive_vorticity(grid: &StructuredGrid) -> Result<ScalarPlane, FieldError> {
    let (nx, ny) = (grid.nx, grid.ny);
    if nx < 2 || ny < 2 {
        return Err(FieldError::InvalidGrid(format!("vorticity needs at least 2x2 nodes, got {nx}x{ny}")));
    }
    let (dx, dy) = grid.spacing;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let duy_dx = diff(|k| grid.node(k, j).uy as f64, i, nx, dx);
            let dux_dy = diff(|k| grid.node(i, k).ux as f64, j, ny, dy);
            values.push(duy_dx - dux_dy);
        }
    }
    Ok(ScalarPlane { width: nx, height: ny, values })
}

/// Nearest-rank percentile: the value at ascending index `ceil(p/100 * N) - 1`.
pub fn percentile(plane: &ScalarPlane, p: f64) -> Result<f64, FieldError> {
    percentile_of(&plane.values, p)
}

pub(crate) fn percentile_of(values: &[f64], p: f64) -> Result<f64, FieldError> {
    if values.is_empty() {
        return Err(FieldError::EmptyPlane);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(FieldError::InvalidArgument(format!("percentile {p} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // p * N first keeps integral ranks exact (95 * 100 / 100, not 0.95 * 100)
    let rank = (p * n as f64 / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}
