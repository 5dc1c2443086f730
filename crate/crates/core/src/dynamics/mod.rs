//! Conservative dynamics: mixed quantum-classical integration, the Dirac spin
//! particle, Dirac–Frenkel variational reduction, and the Koopman embedding of
//! classical mechanics.

mod dirac;
mod frenkel;
mod hybrid;
mod koopman;

pub use dirac::{dirac_alpha, dirac_beta, dirac_spin_hamiltonian, DiracParticle};
pub use frenkel::{
    dirac_frenkel_reduce, oscillator_hamiltonian, oscillator_momentum, oscillator_position, CoherentFamily,
    DiracFrenkelOptions, FullStateFamily, HarmonicCoherentFamily, ParameterTrajectory,
};
pub use hybrid::{
    check_gradients, ehrenfest_rhs, hybrid_step, hybrid_step_pure, integrate, ClassicalOscillator, HybridModel,
    HybridState, PhaseSpaceOperator, PureHybridState, SpinBoson, StaticModel,
};
pub use koopman::{
    gaussian_density, koopman_build, koopman_evolve, koopman_evolve_with, transported_density, ClassicalHamiltonian, Harmonic,
    KoopmanModel, KoopmanRun,
};
