//! Hamilton principal functions of the free particle.

use serde::{Deserialize, Serialize};

use super::ClassicalError;
use crate::grid::SpatialGrid;
use crate::interp::Stencil;
use crate::ode::Point;

/// S sampled on a grid at a single instant (e.g. the output of transport).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAction {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ActionForm {
    /// S = P·q − P²t/2m + S0.
    PlaneWave {
        momentum: Vec<f64>,
        s0: f64,
    },
    /// S = m|q − Q0|²/2t, defined for t > 0 only.
    Circular {
        center: Vec<f64>,
    },
    GridTransported(GridAction),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionField {
    pub form: ActionForm,
    pub mass: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ActionField {
    pub fn plane_wave(momentum: &[f64], s0: f64, mass: f64) -> Self {
        Self { form: ActionForm::PlaneWave { momentum: momentum.to_vec(), s0 }, mass }
    }

    pub fn circular(center: &[f64], mass: f64) -> Self {
        Self { form: ActionForm::Circular { center: center.to_vec() }, mass }
    }

    pub fn grid(action: GridAction, mass: f64) -> Self {
        Self { form: ActionForm::GridTransported(action), mass }
    }

    pub fn dim(&self) -> usize {
        match &self.form {
            ActionForm::PlaneWave { momentum, .. } => momentum.len(),
            ActionForm::Circular { center } => center.len(),
            ActionForm::GridTransported(g) => g.grid.dim(),
        }
    }

    fn check(&self, q: &[f64], t: f64) -> Result<(), ClassicalError> {
        if q.len() != self.dim() {
            return Err(ClassicalError::Dimension { expected: self.dim(), got: q.len() });
        }
        match &self.form {
            ActionForm::Circular { .. } if !(t > 0.0) => Err(ClassicalError::UndefinedGradient { t }),
            ActionForm::GridTransported(g) if (t - g.time).abs() > 1e-12 * g.time.abs().max(1.0) => {
                Err(ClassicalError::OutsideValidity { t, valid_at: g.time })
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, q: &[f64], t: f64) -> Result<f64, ClassicalError> {
        self.check(q, t)?;
        let m = self.mass;
        Ok(match &self.form {
            ActionForm::PlaneWave { momentum, s0 } => dot(momentum, q) - dot(momentum, momentum) * t / (2.0 * m) + s0,
            ActionForm::Circular { center } => {
                let r2: f64 = q.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                m * r2 / (2.0 * t)
            }
            ActionForm::GridTransported(g) => Stencil::cubic(&g.grid, q).apply(&g.values),
        })
    }

    pub fn gradient(&self, q: &[f64], t: f64) -> Result<Point, ClassicalError> {
        self.check(q, t)?;
        let mut out = [0.0; 2];
        match &self.form {
            ActionForm::PlaneWave { momentum, .. } => out[..momentum.len()].copy_from_slice(momentum),
            ActionForm::Circular { center } => {
                for (d, (a, c)) in q.iter().zip(center).enumerate() {
                    out[d] = self.mass * (a - c) / t;
                }
            }
            ActionForm::GridTransported(g) => {
                for (d, o) in out.iter_mut().enumerate().take(g.grid.dim()) {
                    *o = Stencil::cubic_derivative(&g.grid, q, d).apply(&g.values);
                }
            }
        }
        Ok(out)
    }

    /// ∂S/∂t (analytic forms only).
    pub fn time_derivative(&self, q: &[f64], t: f64) -> Result<f64, ClassicalError> {
        self.check(q, t)?;
        let m = self.mass;
        match &self.form {
            ActionForm::PlaneWave { momentum, .. } => Ok(-dot(momentum, momentum) / (2.0 * m)),
            ActionForm::Circular { center } => {
                let r2: f64 = q.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                Ok(-m * r2 / (2.0 * t * t))
            }
            ActionForm::GridTransported(_) => Err(ClassicalError::NotAnalytic),
        }
    }

    /// ∂²S/∂q² on a line (analytic forms exact, grid form by finite
    /// differences of the interpolant).
    pub fn curvature(&self, q: f64, t: f64) -> Result<f64, ClassicalError> {
        self.check(&[q], t)?;
        Ok(match &self.form {
            ActionForm::PlaneWave { .. } => 0.0,
            ActionForm::Circular { .. } => self.mass / t,
            ActionForm::GridTransported(g) => {
                let h = 1e-3 * g.grid.axis(0).dx();
                let d = |x: f64| Stencil::cubic_derivative(&g.grid, &[x], 0).apply(&g.values);
                (d(q + h) - d(q - h)) / (2.0 * h)
            }
        })
    }

    /// ∂S/∂t + |∇S|²/2m + V.
    pub fn hj_residual(&self, q: &[f64], t: f64, v: f64) -> Result<f64, ClassicalError> {
        let g = self.gradient(q, t)?;
        Ok(self.time_derivative(q, t)? + (g[0] * g[0] + g[1] * g[1]) / (2.0 * self.mass) + v)
    }
}
