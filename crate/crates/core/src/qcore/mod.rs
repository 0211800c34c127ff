//! Complex 2×2 / 4×4 linear algebra and single-qubit state primitives.

pub mod eigen;
pub mod matrix;
pub mod state;

pub use eigen::{eigh2, eigh4, spectral_map2, spectral_map4, Eigen2, Eigen4};
pub use matrix::{unvec, vec, ComplexMat2, ComplexMat4, C64};
pub use state::{
    bloch_from_density, density_from_bloch, evolve_state, frobenius_distance, measurement_matrix, pauli,
    project_simplex, psd_unit_trace_project, unitary_from_hamiltonian, Axis, BlochVector, DensityMatrix,
    MeasurementMatrix,
};
