//! Microcanonical thermodynamics of the spin-1/2 Heisenberg chain from
//! energy-filtered random-phase states.
//!
//! The stochastic pipeline prepares a random-phase state, evolves it with a
//! first-order Trotter product of exponential-SWAP gates, records the kernels
//! `K(t) = <phi|U(t)|phi>` and `L(t) = <phi|H U(t)|phi>`, and turns them into
//! Gaussian-filtered traces `Tr[G]`, `Tr[HG]` by a trapezoidal Fourier
//! quadrature. Entropy, inverse temperature and the energy expectation value
//! follow from those traces. Full diagonalization of small chains provides
//! the exact reference for every stochastic quantity.
//!
//! Basis convention: bit `k` of a computational-basis index is qubit `k`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod error;
pub mod evolve;
pub mod exact;
pub mod filter;
pub mod model;
pub mod random;
pub mod sampling;
pub mod state;
pub mod thermo;

pub use error::{Error, Result};
pub use evolve::{evolve_and_record, trotter_step, KernelTrace, TrotterPlan};
pub use exact::{full_diagonalize, DiagMethod, DiagOptions, Spectrum};
pub use filter::{quadrature_filtered_pair, FilterParams, FilteredPair};
pub use model::{Boundary, SpinChainModel};
pub use random::{EnsembleKind, RandomStateSpec};
pub use sampling::{run_samples, SampleSet, TraceEstimate};
pub use state::StateVector;
pub use thermo::{derive_thermo, ThermoPoint};

pub use num_complex::Complex64;
