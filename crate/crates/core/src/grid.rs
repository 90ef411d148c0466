//! Uniform periodic grids over one- or two-dimensional configuration space.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest number of points accepted along any axis.
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("axis {axis}: {n} points (need a power of two >= {MIN_POINTS})")]
    Points { axis: usize, n: usize },
    #[error("axis {axis}: empty or non-finite extent [{qmin}, {qmax})")]
    Extent { axis: usize, qmin: f64, qmax: f64 },
}

/// One periodic axis `[qmin, qmax)` sampled at `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub qmin: f64,
    pub qmax: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(n: usize, qmin: f64, qmax: f64) -> Self {
        Self { qmin, qmax, n }
    }

    pub fn length(&self) -> f64 {
        self.qmax - self.qmin
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.qmin + i as f64 * self.dx()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / self.length();
        let n = self.n as isize;
        (0..n).map(|j| if j < n / 2 { j as f64 * dk } else { (j - n) as f64 * dk }).collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Maps `q` into `[qmin, qmax)`.
    pub fn wrap(&self, q: f64) -> f64 {
        let l = self.length();
        let mut r = (q - self.qmin).rem_euclid(l);
        if r >= l {
            r = 0.0;
        }
        self.qmin + r
    }

    /// Fractional index of `q`, wrapped into `[0, n)`.
    pub fn fractional_index(&self, q: f64) -> f64 {
        let s = (self.wrap(q) - self.qmin) / self.dx();
        if s >= self.n as f64 {
            0.0
        } else {
            s
        }
    }

    pub fn wrap_index(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    fn validate(&self, axis: usize) -> Result<(), GridError> {
        if self.n < MIN_POINTS || !self.n.is_power_of_two() {
            return Err(GridError::Points { axis, n: self.n });
        }
        if !(self.qmin.is_finite() && self.qmax.is_finite() && self.qmax > self.qmin) {
            return Err(GridError::Extent { axis, qmin: self.qmin, qmax: self.qmax });
        }
        Ok(())
    }
}

/// Periodic tensor-product grid. Nodes are stored row-major: axis 0 is the
/// slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Axis>", into = "Vec<Axis>")]
pub struct SpatialGrid {
    axes: Vec<Axis>,
}

impl TryFrom<Vec<Axis>> for SpatialGrid {
    type Error = GridError;

    fn try_from(axes: Vec<Axis>) -> Result<Self, Self::Error> {
        Self::new(axes)
    }
}

impl From<SpatialGrid> for Vec<Axis> {
    fn from(g: SpatialGrid) -> Self {
        g.axes
    }
}

impl SpatialGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self, GridError> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(GridError::Dimension(axes.len()));
        }
        for (i, a) in axes.iter().enumerate() {
            a.validate(i)?;
        }
        Ok(Self { axes })
    }

    pub fn line(n: usize, qmin: f64, qmax: f64) -> Result<Self, GridError> {
        Self::new(vec![Axis::new(n, qmin, qmax)])
    }

    pub fn plane(x: Axis, y: Axis) -> Result<Self, GridError> {
        Self::new(vec![x, y])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `Π dx_i`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::dx).product()
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Stride between neighbours along `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.n).product()
    }

    /// Multi-index of flat node `idx`.
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.dim() {
            1 => [idx, 0],
            _ => [idx / self.axes[1].n, idx % self.axes[1].n],
        }
    }

    pub fn ravel(&self, i: [usize; 2]) -> usize {
        match self.dim() {
            1 => i[0],
            _ => i[0] * self.axes[1].n + i[1],
        }
    }

    /// Flat index of the neighbour `offset` steps along `axis`, with periodic wrap.
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let mut m = self.unravel(idx);
        m[axis] = self.axes[axis].wrap_index(m[axis] as isize + offset);
        self.ravel(m)
    }

    /// Coordinates of node `idx` (unused trailing entries are zero).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let m = self.unravel(idx);
        let mut p = [0.0; 2];
        for (d, a) in self.axes.iter().enumerate() {
            p[d] = a.coord(m[d]);
        }
        p
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.axes.iter().zip(x).all(|(a, &q)| q.is_finite() && q >= a.qmin && q < a.qmax)
    }

    /// Indices of all 1-D lines running along `axis`.
    pub fn lines(&self, axis: usize) -> Vec<Vec<usize>> {
        let n = self.axes[axis].n;
        let stride = self.stride(axis);
        let count = self.len() / n;
        (0..count)
            .map(|c| {
                let start = if stride == 1 { c * n } else { c };
                (0..n).map(|i| start + i * stride).collect()
            })
            .collect()
    }
}
