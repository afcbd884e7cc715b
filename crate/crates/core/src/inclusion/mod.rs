//! Velocity sets, Hamiltonians, solution envelopes and integral funnels.

mod envelope;
mod flux;
mod funnel;
mod residual;
mod velocity;

pub use envelope::{
    envelope_constant, envelope_exponential, envelope_perturbed, envelope_piecewise, BoundsEnvelope,
};
pub use flux::{critical_values, Drift, FluxModel, Nonlinearity};
pub use funnel::{
    funnel_convergence, propagate, propagate_funnel, velocity_set, ConstantInclusion, ConvergenceRow, Direction,
    FluxInclusion, Funnel, Inclusion, DEFAULT_NSAMP,
};
pub use residual::{proximal_residual, ResidualStats};
pub use velocity::{hamiltonian, VelocitySet};
