//! Classical Hamilton-Jacobi mechanics on the same footing as the pilot wave.

mod action;
mod semiclassical;
mod trajectory;
mod transport;

use thiserror::Error;

pub use action::{ActionField, ActionForm, GridAction};
pub use semiclassical::{semiclassical_compare, strictly_decreasing, SemiclassicalPoint, SemiclassicalSetup};
pub use trajectory::{
    classical_trajectory, holland_nonuniqueness, newton_trajectory, sampled_hj_residual, ClassicalState, HollandReport,
    MOMENTUM_TOLERANCE,
};
pub use transport::{
    classical_continuity_residual, transport_classical, CharacteristicSnapshot, ClassicalDensity, ClassicalTransport,
    Resampled, TransportStatus, CAUSTIC_THRESHOLD, MASSLESS_FRACTION,
};

use crate::bohm::BohmError;
use crate::field::FieldError;
use crate::schrodinger::PropagationError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicalError {
    #[error("action gradient is undefined at t = {t}; supply an explicit momentum")]
    UndefinedGradient { t: f64 },
    #[error("grid action is valid at t = {valid_at} only, asked for t = {t}")]
    OutsideValidity { t: f64, valid_at: f64 },
    #[error("grid action has no analytic time derivative")]
    NotAnalytic,
    #[error("supplied momentum disagrees with the action gradient by {mismatch:e}")]
    InconsistentMomentum { mismatch: f64 },
    #[error("expected dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Bohm(#[from] BohmError),
}
