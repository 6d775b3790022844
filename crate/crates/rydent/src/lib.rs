//! Rydberg-array entanglement toolkit: exact ground states of arrays of
//! interacting two-level atoms, Shannon/von Neumann/Renyi entropies of those
//! states and their measured bitstring distributions, adiabatic state
//! preparation, and shot-sampled count analysis.
//!
//! Conventions used throughout:
//! - energies and rates in rad/us, distances in um, times in us
//! - bitstrings read atom 0 first; 'g' = ground = 0, 'r' = Rydberg = 1;
//!   atom 0 is the most significant bit of a basis index
//! - all entropies use the natural logarithm

pub mod counts;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod spectra;

pub use counts::{
    empirical, ensemble_stats, parse_counts, sample, truncate, truncate_exact, Counts,
    EnsembleStats, MeanSe, RunEnsemble,
};
pub use dynamics::{
    evolve, standard_schedule, EvolutionConfig, Schedule, ScheduleVariant,
    TimeDependentHamiltonian, Waveform,
};
pub use entropy::{
    probabilities, reduce, reduced_density_matrix, renyi2_distribution, renyi2_state, report,
    shannon, von_neumann, DensityMatrix, EntropyReport, ProbabilityTable,
};
pub use error::{Error, Result};
pub use hamiltonian::{
    interaction, BasisConvention, DriveParams, HamiltonianMatrix, DENSE_ATOM_CAP, SPARSE_ATOM_CAP,
};
pub use lattice::{DeviceLimits, Geometry, Partition, PartitionMode, Violation};
pub use spectra::{
    dense_ground_state, dense_lowest, ground_state, EigenResult, HermitianOp, StateVector,
};
