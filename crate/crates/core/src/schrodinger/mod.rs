//! Time evolution under iħ ∂ψ/∂t = −(ħ²/2m)∇²ψ + Vψ on a periodic box.

mod continuity;
mod potential;
mod propagator;
mod states;

pub use continuity::{continuity_residual, ContinuityError};
pub use potential::{Potential, PotentialKind};
pub use propagator::{
    edge_amplitude, energy, propagate, propagate_backward, Propagation, PropagationError, PropagationWarning,
    Propagator, PropagatorConfig, Splitting, EDGE_AMPLITUDE_LIMIT, SPECTRAL_TAIL_LIMIT,
};
pub use states::{harmonic_coherent_state, make_double_slit_state, StateError};
