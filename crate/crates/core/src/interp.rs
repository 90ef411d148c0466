//! Cubic Lagrange interpolation on periodic grids (tensor product in 2-D).

use crate::field::C64;
use crate::grid::SpatialGrid;

/// Weights of the 4-point Lagrange cubic through offsets −1, 0, 1, 2 at
/// fractional position `s ∈ [0, 1)`.
pub fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Derivative of [`cubic_weights`] with respect to `s`.
pub fn cubic_weight_derivatives(s: f64) -> [f64; 4] {
    [
        -(3.0 * s * s - 6.0 * s + 2.0) / 6.0,
        (3.0 * s * s - 4.0 * s - 1.0) / 2.0,
        -(3.0 * s * s - 2.0 * s - 2.0) / 2.0,
        (3.0 * s * s - 1.0) / 6.0,
    ]
}

/// Interpolation nodes and weights for one off-grid point.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    nodes: [usize; 16],
    weights: [f64; 16],
    len: usize,
}

impl Stencil {
    /// Cubic stencil at `x` (wrapped periodically into the box).
    pub fn cubic(grid: &SpatialGrid, x: &[f64]) -> Self {
        Self::build(grid, x, None)
    }

    /// Stencil of ∂/∂x_axis of the cubic interpolant.
    pub fn cubic_derivative(grid: &SpatialGrid, x: &[f64], axis: usize) -> Self {
        Self::build(grid, x, Some(axis))
    }

    fn build(grid: &SpatialGrid, x: &[f64], deriv: Option<usize>) -> Self {
        let mut idx = [[0usize; 4]; 2];
        let mut w = [[1.0, 0.0, 0.0, 0.0]; 2];
        for (d, a) in grid.axes().iter().enumerate() {
            let f = a.fractional_index(x[d]);
            let base = f.floor();
            let s = f - base;
            let base = base as isize;
            for (k, slot) in idx[d].iter_mut().enumerate() {
                *slot = a.wrap_index(base - 1 + k as isize);
            }
            w[d] = if deriv == Some(d) {
                let dx = a.dx();
                cubic_weight_derivatives(s).map(|v| v / dx)
            } else {
                cubic_weights(s)
            };
        }
        let mut st = Stencil { nodes: [0; 16], weights: [0.0; 16], len: 0 };
        if grid.dim() == 1 {
            for k in 0..4 {
                st.nodes[k] = idx[0][k];
                st.weights[k] = w[0][k];
            }
            st.len = 4;
        } else {
            for i in 0..4 {
                for j in 0..4 {
                    st.nodes[st.len] = grid.ravel([idx[0][i], idx[1][j]]);
                    st.weights[st.len] = w[0][i] * w[1][j];
                    st.len += 1;
                }
            }
        }
        st
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.len]
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        self.nodes().iter().zip(&self.weights).map(|(&i, w)| w * values[i]).sum()
    }

    pub fn apply_complex(&self, values: &[C64]) -> C64 {
        self.nodes().iter().zip(&self.weights).map(|(&i, w)| values[i] * *w).sum()
    }

    pub fn touches(&self, mask: &[bool]) -> bool {
        self.nodes().iter().any(|&i| mask[i])
    }
}

/// Cubic interpolation of grid data at `x`.
pub fn interpolate(grid: &SpatialGrid, values: &[f64], x: &[f64]) -> f64 {
    Stencil::cubic(grid, x).apply(values)
}

/// Cubic Hermite interpolation on `[t0, t1]` from values and slopes.
pub fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * m1
}
