//! Quantum, semiclassical and classical phase-space dynamics of
//! non-Hermitian quasiperiodic lattices.
//!
//! Everything is generic over the scalar type through [`Real`]; the `*F64`
//! and `*F32` aliases pin the common choices.

pub mod error;
pub mod evolve;
pub mod fiber;
pub mod fit;
pub mod fock;
pub mod husimi;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod phase;
pub mod scalar;
pub mod semiclassical;

pub use error::{Error, Result};
pub use fiber::{evolve_fibers, FiberOptions, FiberSnapshot};
pub use fock::{build_continuum_hamiltonian, evolve_quantum, make_fock_operators, ContinuumBasis, FockOperators};
pub use husimi::{husimi_variance, purity, quantum_husimi, HusimiField, PhaseSpaceGrid};
pub use lattice::{
    build_lattice_hamiltonian, coherent_initial_state, evolve_lattice, sigma_squared_lattice, velocity, LatticeState,
    TransportRecord,
};
pub use linalg::{DenseOperator, Operator, Tridiagonal};
pub use model::{golden_beta, ComplexEnergy, ModelParams, PhaseFlow, PhasePoint, Variant};
pub use phase::{
    bracket_critical_potential, critical_potential, ehrenfest_time, fixed_points, integrate_trajectory,
    jacobian_eigenvalues, saddle_energy_match, separatrix_geometry, separatrix_line_residual, special_beta,
    Classification, FixedPointReport, SeparatrixGeometry, Stability, Trajectory,
};
pub use scalar::Real;
pub use semiclassical::{
    backward_characteristic, quadratic_exactness_check, semiclassical_husimi, CharacteristicResult,
};

pub type ModelParamsF64 = ModelParams<f64>;
pub type ModelParamsF32 = ModelParams<f32>;
pub type PhasePointF64 = PhasePoint<f64>;
pub type PhasePointF32 = PhasePoint<f32>;
pub type PhaseSpaceGridF64 = PhaseSpaceGrid<f64>;
pub type PhaseSpaceGridF32 = PhaseSpaceGrid<f32>;
pub type HusimiFieldF64 = HusimiField<f64>;
pub type HusimiFieldF32 = HusimiField<f32>;
pub type LatticeStateF64 = LatticeState<f64>;
pub type LatticeStateF32 = LatticeState<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
