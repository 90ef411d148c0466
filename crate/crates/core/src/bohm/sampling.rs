//! Initial ensembles: Born-rule sampling of |ψ|², uniform and explicit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BohmError;
use crate::field::WaveField;
use crate::grid::SpatialGrid;
use crate::ode::{point, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Born,
    Uniform,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialEnsemble {
    pub positions: Vec<Point>,
    pub dim: usize,
    pub sampler: Sampler,
    pub seed: Option<u64>,
}

/// Generator for member `i`: every member owns a ChaCha stream, so the
/// ensemble does not depend on thread scheduling or member count.
pub fn member_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Piecewise-linear density on a periodic line, with its CDF.
#[derive(Debug, Clone)]
pub struct LineDensity {
    qmin: f64,
    dx: f64,
    rho: Vec<f64>,
    cum: Vec<f64>,
}

impl LineDensity {
    pub fn new(qmin: f64, dx: f64, rho: Vec<f64>) -> Self {
        let n = rho.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let seg = 0.5 * dx * (rho[i] + rho[(i + 1) % n]);
            cum.push(cum[i] + seg);
        }
        let total = cum[n];
        cum.iter_mut().for_each(|c| *c /= total);
        let rho = rho.into_iter().map(|r| r / total).collect();
        Self { qmin, dx, rho, cum }
    }

    pub fn from_wave(psi: &WaveField) -> Self {
        let a = psi.grid().axis(0);
        Self::new(a.qmin, a.dx(), psi.values().iter().map(|z| z.norm_sqr()).collect())
    }

    /// CDF on `[qmin, qmax]`, clamped outside.
    pub fn cdf(&self, q: f64) -> f64 {
        let n = self.rho.len();
        let s = (q - self.qmin) / self.dx;
        if s <= 0.0 {
            return 0.0;
        }
        if s >= n as f64 {
            return 1.0;
        }
        let i = s.floor() as usize;
        let u = s - i as f64;
        let (a, b) = (self.rho[i], self.rho[(i + 1) % n]);
        self.cum[i] + self.dx * (a * u + 0.5 * (b - a) * u * u)
    }

    /// Inverse CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.rho.len();
        let i = self.cum.partition_point(|&c| c <= p).clamp(1, n) - 1;
        let (a, b) = (self.rho[i], self.rho[(i + 1) % n]);
        let target = (p - self.cum[i]) / self.dx;
        // a u + (b − a) u²/2 = target on u ∈ [0, 1]
        let c = 0.5 * (b - a);
        let u = if c.abs() < 1e-14 * a.abs().max(1e-300) {
            if a > 0.0 {
                target / a
            } else {
                0.5
            }
        } else {
            let disc = (a * a + 4.0 * c * target).max(0.0);
            2.0 * target / (a + disc.sqrt())
        };
        self.qmin + self.dx * (i as f64 + u.clamp(0.0, 1.0))
    }
}

fn bilinear(grid: &SpatialGrid, rho: &[f64], x: &Point) -> f64 {
    let (a0, a1) = (grid.axis(0), grid.axis(1));
    let (f0, f1) = (a0.fractional_index(x[0]), a1.fractional_index(x[1]));
    let (i0, i1) = (f0.floor() as isize, f1.floor() as isize);
    let (u, v) = (f0 - i0 as f64, f1 - i1 as f64);
    let at = |di: isize, dj: isize| rho[grid.ravel([a0.wrap_index(i0 + di), a1.wrap_index(i1 + dj)])];
    (1.0 - u) * (1.0 - v) * at(0, 0) + u * (1.0 - v) * at(1, 0) + (1.0 - u) * v * at(0, 1) + u * v * at(1, 1)
}

/// `n` positions distributed as |ψ|² (piecewise-linear in 1-D, bilinear in
/// 2-D by rejection).
pub fn sample_born(psi: &WaveField, n: usize, seed: u64) -> Result<InitialEnsemble, BohmError> {
    let grid = psi.grid();
    let positions = if grid.dim() == 1 {
        let dens = LineDensity::from_wave(psi);
        (0..n).map(|i| [dens.quantile(member_rng(seed, i).random::<f64>()), 0.0]).collect()
    } else {
        let rho: Vec<f64> = psi.values().iter().map(|z| z.norm_sqr()).collect();
        let top = rho.iter().copied().fold(0.0, f64::max);
        let (a0, a1) = (grid.axis(0), grid.axis(1));
        (0..n)
            .map(|i| {
                let mut rng = member_rng(seed, i);
                loop {
                    let x = [a0.qmin + a0.length() * rng.random::<f64>(), a1.qmin + a1.length() * rng.random::<f64>()];
                    if rng.random::<f64>() * top < bilinear(grid, &rho, &x) {
                        break x;
                    }
                }
            })
            .collect()
    };
    Ok(InitialEnsemble { positions, dim: grid.dim(), sampler: Sampler::Born, seed: Some(seed) })
}

/// `n` positions uniform over the box (a non-equilibrium start).
pub fn sample_uniform(grid: &SpatialGrid, n: usize, seed: u64) -> Result<InitialEnsemble, BohmError> {
    let positions = (0..n)
        .map(|i| {
            let mut rng = member_rng(seed, i);
            let mut p = [0.0; 2];
            for (d, a) in grid.axes().iter().enumerate() {
                p[d] = a.qmin + a.length() * rng.random::<f64>();
            }
            p
        })
        .collect();
    Ok(InitialEnsemble { positions, dim: grid.dim(), sampler: Sampler::Uniform, seed: Some(seed) })
}

pub fn explicit(positions: &[Vec<f64>], dim: usize) -> Result<InitialEnsemble, BohmError> {
    if let Some(p) = positions.iter().find(|p| p.len() != dim) {
        return Err(BohmError::Dimension { expected: dim, got: p.len() });
    }
    Ok(InitialEnsemble {
        positions: positions.iter().map(|p| point(p)).collect(),
        dim,
        sampler: Sampler::Explicit,
        seed: None,
    })
}
