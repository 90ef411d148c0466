//! Amplitude/phase decomposition ψ = R e^{iS/ħ} with a continuously unwrapped
//! phase.
//!
//! In 1-D the phase is unwrapped by a flood sweep that starts at the node of
//! largest |ψ|, runs to the upper end of the box and then back down to the
//! lower end. In 2-D a quality-guided flood (quality = |ψ|) grows the unwrapped
//! region from the same seed; phase residues (plaquettes whose wrapped phase
//! differences do not sum to zero) are recorded rather than smoothed over.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::field::{FieldError, WaveField, C64};
use crate::grid::SpatialGrid;
use crate::spectral::{DiffMethod, SpectralOps};

/// Default relative node threshold.
pub const DEFAULT_NODE_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarError {
    #[error("every node lies below the node threshold")]
    AllNodes,
    #[error("node threshold must be positive and finite, got {0}")]
    Threshold(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Wraps an angle into `[-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    x - 2.0 * PI * (x / (2.0 * PI)).round()
}

/// A 2×2 plaquette whose wrapped phase circulation is `2π·charge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Residue {
    /// Lower-left node of the plaquette.
    pub cell: [usize; 2],
    pub charge: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    grid: SpatialGrid,
    time: f64,
    hbar: f64,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
    node_mask: Vec<bool>,
    residues: Vec<Residue>,
    inconsistent_edges: usize,
}

#[derive(Clone, Copy)]
struct Queued {
    quality: f64,
    idx: usize,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // Max-heap on quality; ties broken towards the lower index for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        self.quality.total_cmp(&other.quality).then_with(|| other.idx.cmp(&self.idx))
    }
}

fn phase_step(from: C64, to: C64) -> f64 {
    (to * from.conj()).arg()
}

fn argmax_abs(values: &[C64]) -> usize {
    let mut best = 0;
    let mut m = -1.0;
    for (i, z) in values.iter().enumerate() {
        let a = z.norm();
        if a > m {
            m = a;
            best = i;
        }
    }
    best
}

fn unwrap_line(values: &[C64], start: usize, hbar: f64) -> Vec<f64> {
    let n = values.len();
    let mut s = vec![0.0; n];
    s[start] = hbar * values[start].arg();
    for i in start + 1..n {
        s[i] = s[i - 1] + hbar * phase_step(values[i - 1], values[i]);
    }
    for i in (0..start).rev() {
        s[i] = s[i + 1] + hbar * phase_step(values[i + 1], values[i]);
    }
    s
}

fn unwrap_quality_guided(grid: &SpatialGrid, values: &[C64], start: usize, hbar: f64) -> Vec<f64> {
    let mut s = vec![0.0; values.len()];
    let mut done = vec![false; values.len()];
    let mut heap = BinaryHeap::new();
    s[start] = hbar * values[start].arg();
    done[start] = true;
    heap.push(Queued { quality: values[start].norm(), idx: start });
    let shape = [grid.axis(0).n, grid.axis(1).n];
    while let Some(Queued { idx, .. }) = heap.pop() {
        let m = grid.unravel(idx);
        for axis in 0..2 {
            for off in [-1isize, 1] {
                let j = m[axis] as isize + off;
                if j < 0 || j as usize >= shape[axis] {
                    continue;
                }
                let mut nm = m;
                nm[axis] = j as usize;
                let nb = grid.ravel(nm);
                if done[nb] {
                    continue;
                }
                done[nb] = true;
                s[nb] = s[idx] + hbar * phase_step(values[idx], values[nb]);
                heap.push(Queued { quality: values[nb].norm(), idx: nb });
            }
        }
    }
    s
}

fn find_residues(grid: &SpatialGrid, values: &[C64]) -> Vec<Residue> {
    let (n0, n1) = (grid.axis(0).n, grid.axis(1).n);
    let mut out = Vec::new();
    for i in 0..n0 - 1 {
        for j in 0..n1 - 1 {
            let loop_ = [[i, j], [i + 1, j], [i + 1, j + 1], [i, j + 1], [i, j]];
            let circ: f64 =
                loop_.windows(2).map(|w| phase_step(values[grid.ravel(w[0])], values[grid.ravel(w[1])])).sum();
            let charge = (circ / (2.0 * PI)).round() as i32;
            if charge != 0 {
                out.push(Residue { cell: [i, j], charge });
            }
        }
    }
    out
}

/// Madelung decomposition of `psi`.
///
/// Nodes with `|ψ| < node_eps · max|ψ|` are masked; their phase is still
/// filled in by the sweep but carries no meaning.
pub fn to_polar(psi: &WaveField, node_eps: f64, hbar: f64) -> Result<PolarField, PolarError> {
    if !(node_eps > 0.0 && node_eps.is_finite()) {
        return Err(PolarError::Threshold(node_eps));
    }
    let grid = psi.grid().clone();
    let values = psi.values();
    let amplitude: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    let max = amplitude.iter().copied().fold(0.0, f64::max);
    let threshold = node_eps * max;
    let node_mask: Vec<bool> = amplitude.iter().map(|&a| !(a >= threshold) || a == 0.0).collect();
    if node_mask.iter().all(|&m| m) {
        return Err(PolarError::AllNodes);
    }
    let start = argmax_abs(values);
    let (phase, residues) = match grid.dim() {
        1 => (unwrap_line(values, start, hbar), Vec::new()),
        _ => (unwrap_quality_guided(&grid, values, start, hbar), find_residues(&grid, values)),
    };
    let mut polar =
        PolarField { grid, time: psi.time(), hbar, amplitude, phase, node_mask, residues, inconsistent_edges: 0 };
    polar.inconsistent_edges = polar.count_inconsistent_edges();
    Ok(polar)
}

/// Rebuilds ψ = R e^{iS/ħ}.
pub fn from_polar(polar: &PolarField) -> Result<WaveField, FieldError> {
    polar.to_wave()
}

impl PolarField {
    /// Assembles a polar field from explicit amplitude and phase (action
    /// units). Nodes are masked with the same relative rule as [`to_polar`].
    pub fn from_parts(
        grid: SpatialGrid,
        amplitude: Vec<f64>,
        phase: Vec<f64>,
        hbar: f64,
        time: f64,
        node_eps: f64,
    ) -> Result<Self, PolarError> {
        if amplitude.len() != grid.len() || phase.len() != grid.len() {
            return Err(FieldError::Length { expected: grid.len(), got: amplitude.len().min(phase.len()) }.into());
        }
        if let Some(i) = amplitude.iter().zip(&phase).position(|(a, s)| !(a.is_finite() && s.is_finite()) || *a < 0.0) {
            return Err(FieldError::NonFinite(i).into());
        }
        let max = amplitude.iter().copied().fold(0.0, f64::max);
        let node_mask: Vec<bool> = amplitude.iter().map(|&a| a < node_eps * max || a == 0.0).collect();
        if node_mask.iter().all(|&m| m) {
            return Err(PolarError::AllNodes);
        }
        let mut p = Self { grid, time, hbar, amplitude, phase, node_mask, residues: Vec::new(), inconsistent_edges: 0 };
        p.inconsistent_edges = p.count_inconsistent_edges();
        Ok(p)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// R = |ψ|.
    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    /// S in action units.
    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn node_mask(&self) -> &[bool] {
        &self.node_mask
    }

    pub fn has_nodes(&self) -> bool {
        self.node_mask.iter().any(|&m| m)
    }

    pub fn residues(&self) -> &[Residue] {
        &self.residues
    }

    /// Unmasked neighbour pairs (non-periodic) whose phase difference is at
    /// least πħ. Always zero in 1-D; non-zero in 2-D only around residues.
    pub fn inconsistent_edges(&self) -> usize {
        self.inconsistent_edges
    }

    fn count_inconsistent_edges(&self) -> usize {
        let mut count = 0;
        for idx in 0..self.grid.len() {
            let m = self.grid.unravel(idx);
            for (axis, &mi) in m.iter().enumerate().take(self.grid.dim()) {
                if mi + 1 >= self.grid.axis(axis).n {
                    continue;
                }
                let nb = self.grid.neighbor(idx, axis, 1);
                if self.node_mask[idx] || self.node_mask[nb] {
                    continue;
                }
                if (self.phase[nb] - self.phase[idx]).abs() >= PI * self.hbar {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn to_wave(&self) -> Result<WaveField, FieldError> {
        let values = self.amplitude.iter().zip(&self.phase).map(|(&r, &s)| C64::from_polar(r, s / self.hbar)).collect();
        WaveField::new(self.grid.clone(), values, self.time)
    }

    /// Same amplitude and phase read with a different ħ.
    pub fn with_hbar(&self, hbar: f64) -> Self {
        Self { hbar, ..self.clone() }
    }

    /// ∇S, one component per axis.
    ///
    /// `None` picks the spectral route for node-free fields and the
    /// fourth-order stencil otherwise. Both routes difference the phase modulo
    /// 2πħ, so the seam of a field with net winding is handled.
    pub fn phase_gradient(&self, method: Option<DiffMethod>) -> Vec<Vec<f64>> {
        let method =
            method.unwrap_or(if self.has_nodes() { DiffMethod::FiniteDifference4 } else { DiffMethod::Spectral });
        match method {
            DiffMethod::Spectral => self.phase_gradient_spectral(),
            DiffMethod::FiniteDifference4 => self.phase_gradient_fd4(),
        }
    }

    fn phase_gradient_spectral(&self) -> Vec<Vec<f64>> {
        let h = self.hbar;
        (0..self.grid.dim())
            .map(|axis| {
                let a = self.grid.axis(axis);
                let n = a.n;
                let mut out = vec![0.0; self.grid.len()];
                let line_grid = SpatialGrid::line(n, a.qmin, a.qmax).expect("axis of a valid grid");
                let ops = SpectralOps::new(&line_grid);
                for line in self.grid.lines(axis) {
                    let s: Vec<f64> = line.iter().map(|&i| self.phase[i]).collect();
                    // Jump across the seam: a multiple of 2πħ for a periodic ψ.
                    let last = s[n - 1];
                    let jump = last + h * wrap_angle((s[0] - last) / h) - s[0];
                    let detrended: Vec<f64> =
                        s.iter().enumerate().map(|(i, v)| v - jump * i as f64 / n as f64).collect();
                    let d = ops.derivative_real(&detrended, 0);
                    for (&i, v) in line.iter().zip(d) {
                        out[i] = v + jump / a.length();
                    }
                }
                out
            })
            .collect()
    }

    fn phase_gradient_fd4(&self) -> Vec<Vec<f64>> {
        let h = self.hbar;
        (0..self.grid.dim())
            .map(|axis| {
                (0..self.grid.len())
                    .map(|i| {
                        let raw: Vec<f64> = (-2..=2).map(|o| self.phase[self.grid.neighbor(i, axis, o)]).collect();
                        let mut s = raw.clone();
                        for k in [3usize, 4] {
                            s[k] = s[k - 1] + h * wrap_angle((raw[k] - s[k - 1]) / h);
                        }
                        for k in [1usize, 0] {
                            s[k] = s[k + 1] + h * wrap_angle((raw[k] - s[k + 1]) / h);
                        }
                        fd4_derivative_stencil(&s) / self.grid.axis(axis).dx()
                    })
                    .collect()
            })
            .collect()
    }
}

fn fd4_derivative_stencil(s: &[f64]) -> f64 {
    (s[0] - 8.0 * s[1] + 8.0 * s[3] - s[4]) / 12.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    fn line(n: usize, a: f64, b: f64) -> SpatialGrid {
        SpatialGrid::line(n, a, b).unwrap()
    }

    #[test]
    fn plane_wave_phase_is_linear() {
        let g = line(128, -2.0 * PI, 2.0 * PI);
        let psi = WaveField::plane_wave(&g, &[1.0], 1.0).unwrap();
        let p = to_polar(&psi, DEFAULT_NODE_EPS, 1.0).unwrap();
        let r0 = p.amplitude()[0];
        assert!(p.amplitude().iter().all(|r| (r - r0).abs() < 1e-14));
        // S(q) = q up to a constant multiple of 2π fixed by the seed node.
        let offset = p.phase()[0] - g.point(0)[0];
        assert!((offset / (2.0 * PI)).fract().abs() < 1e-12);
        for (i, s) in p.phase().iter().enumerate() {
            assert!((s - g.point(i)[0] - offset).abs() < 1e-12);
        }
        let grad = p.phase_gradient(None);
        assert!(grad[0].iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn real_gaussian_has_zero_phase() {
        let g = line(256, -10.0, 10.0);
        let psi = WaveField::gaussian(&g, &[0.0], 1.0, &[0.0], 1.0).unwrap();
        let p = to_polar(&psi, DEFAULT_NODE_EPS, 1.0).unwrap();
        assert!(p.phase().iter().all(|&s| s == 0.0));
        for (r, z) in p.amplitude().iter().zip(psi.values()) {
            assert_eq!(*r, z.norm());
        }
    }

    #[test]
    fn cosine_nodes_are_masked() {
        // ψ = e^{ipq} + e^{-ipq} ∝ cos(pq); zeros at q = (k + 1/2)π/p.
        let p = 3.0;
        let g = line(512, 0.0, 2.0 * PI);
        let psi = WaveField::from_fn(&g, 0.0, |q| C64::new(2.0 * (p * q[0]).cos(), 0.0)).unwrap();
        let dx = g.axis(0).dx();
        // |cos(pq)| ≤ p·dx/2 at the grid node nearest a zero, so this threshold
        // masks that node and nothing farther than 0.6 dx from a zero.
        let pol = to_polar(&psi, 0.6 * p * dx, 1.0).unwrap();
        // Brute-force scan for sign changes of cos(pq) on a fine grid.
        let fine: Vec<f64> = (0..200_000).map(|i| i as f64 * 2.0 * PI / 200_000.0).collect();
        let zeros: Vec<f64> = fine
            .windows(2)
            .filter(|w| (p * w[0]).cos() * (p * w[1]).cos() <= 0.0)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect();
        assert_eq!(zeros.len(), 6);
        for (i, &m) in pol.node_mask().iter().enumerate() {
            let q = g.point(i)[0];
            let near = zeros.iter().any(|z| (q - z).abs() <= dx);
            if m {
                assert!(near, "masked node at {q} is not within a cell of a zero");
            }
        }
        for z in &zeros {
            assert!(
                pol.node_mask().iter().enumerate().any(|(i, &m)| m && (g.point(i)[0] - z).abs() <= dx),
                "zero at {z} not masked"
            );
        }
        // 1-D unwrapping keeps unmasked neighbours within π.
        assert_eq!(pol.inconsistent_edges(), 0);
    }

    #[test]
    fn on_grid_zeros_masked_with_default_threshold() {
        // cos(4q) on 512 nodes over [0, 2π): zeros at π/8 + kπ/4 fall on nodes 32 + 64k.
        let g = line(512, 0.0, 2.0 * PI);
        let psi = WaveField::from_fn(&g, 0.0, |q| C64::new((4.0 * q[0]).cos(), 0.0)).unwrap();
        let pol = to_polar(&psi, DEFAULT_NODE_EPS, 1.0).unwrap();
        let masked: Vec<usize> = (0..512).filter(|&i| pol.node_mask()[i]).collect();
        assert_eq!(masked, (0..8).map(|k| 32 + 64 * k).collect::<Vec<_>>());
    }

    #[test]
    fn all_nodes_and_threshold_errors() {
        let g = line(16, 0.0, 1.0);
        let psi = WaveField::new(g.clone(), vec![C64::default(); 16], 0.0).unwrap();
        assert_eq!(to_polar(&psi, 1e-6, 1.0), Err(PolarError::AllNodes));
        let psi = WaveField::new(g, vec![C64::new(1.0, 0.0); 16], 0.0).unwrap();
        assert_eq!(to_polar(&psi, 0.0, 1.0), Err(PolarError::Threshold(0.0)));
        assert_eq!(to_polar(&psi, 2.0, 1.0), Err(PolarError::AllNodes));
    }

    #[test]
    fn vortex_residue_is_flagged_in_2d() {
        let g = SpatialGrid::plane(Axis::new(32, -4.0, 4.0), Axis::new(32, -4.0, 4.0)).unwrap();
        // Off-grid vortex so that no node sits exactly on the singularity.
        let psi = WaveField::from_fn(&g, 0.0, |q| {
            let (x, y) = (q[0] - 0.1, q[1] - 0.13);
            C64::new(x, y) * (-(x * x + y * y) / 4.0).exp()
        })
        .unwrap();
        let p = to_polar(&psi, 1e-6, 1.0).unwrap();
        assert_eq!(p.residues().len(), 1);
        assert_eq!(p.residues()[0].charge, 1);
        assert!(p.inconsistent_edges() > 0);
        let back = p.to_wave().unwrap();
        for ((a, b), m) in back.values().iter().zip(psi.values()).zip(p.node_mask()) {
            if !m {
                assert!((a - b).norm() <= 1e-10 * b.norm());
            }
        }
    }

    #[test]
    fn smooth_2d_field_unwraps_cleanly() {
        let g = SpatialGrid::plane(Axis::new(32, -4.0, 4.0), Axis::new(32, -4.0, 4.0)).unwrap();
        let psi = WaveField::from_fn(&g, 0.0, |q| {
            C64::from_polar((-(q[0] * q[0] + q[1] * q[1]) / 8.0).exp(), 1.3 * q[0] * q[0] - 0.4 * q[1])
        })
        .unwrap();
        let p = to_polar(&psi, 1e-6, 1.0).unwrap();
        assert!(p.residues().is_empty());
        assert_eq!(p.inconsistent_edges(), 0);
    }
}
