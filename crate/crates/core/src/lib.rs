//! Digital zero-noise extrapolation (dZNE) toolkit.
//!
//! The crate simulates small noisy circuits exactly (density matrix, up to 12
//! qubits), amplifies noise by unitary gate folding, optionally composes Pauli
//! twirling and readout-error mitigation, and extrapolates expectation values
//! back to the zero-noise limit. Everything is deterministic given a seed, so
//! the study harnesses in [`pipeline`] reproduce bit-identical tables.
//!
//! Module map:
//!
//! * [`circuits`]: native gate set, circuit builders, Pauli observables, text
//!   serialization.
//! * [`sim`]: density-matrix simulation, noise channels, shot sampling.
//! * [`folding`]: fold planning and application (local, global, partial).
//! * [`twirl`]: Pauli twirling of two-qubit gates.
//! * [`readout`]: confusion-matrix calibration and inversion.
//! * [`extrapolate`]: weighted polynomial and exponential fits plus stability
//!   diagnostics and model selection.
//! * [`pipeline`]: the mitigated estimator and the study/benchmark harnesses.

pub mod circuits;
pub mod error;
pub mod extrapolate;
pub mod folding;
pub mod pipeline;
pub mod readout;
pub mod seeds;
pub mod sim;
pub mod twirl;

pub use error::{Error, Result};

/// Hard cap on simulated register width; the dense representation needs
/// `4^n` complex amplitudes and 12 qubits is already 256 MiB.
pub const MAX_QUBITS: usize = 12;
