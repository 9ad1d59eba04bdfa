//! Quantum-state-transfer (QST) power of two-qubit operations.
//!
//! The power of a channel `E` on qubits A and B is the best Haar-averaged
//! probability that an unknown state prepared on A ends up on B, optimized
//! over B's initial pure state and over the frame used to identify A's basis
//! with B's. It ranges from 1/2 (local operations) to 1 (SWAP).
//!
//! Three independent routes are provided:
//!
//! * [`power::optimize_power`] maximizes the Pauli-tensor objective for any
//!   Kraus-form channel by multi-start alternating maximization.
//! * [`cartan::power_of_unitary`] evaluates the closed form for unitaries from
//!   their canonical parameters.
//! * [`oracle::mc_average`] integrates the transfer probability directly over
//!   Haar-random input states.

pub mod cartan;
pub mod error;
pub mod haar;
pub mod oracle;
pub mod power;
pub mod quantum;
pub mod stats;
pub mod sweep;

pub use cartan::{
    canonical_decompose, canonical_gate, closed_form_maximizer, closed_form_power, f_value,
    max_f_closed_form, power_of_unitary, CanonicalParams, FValue, LocalFactors, ObjectiveAngles,
};
pub use error::{Error, Result};
pub use haar::{frame_of, sample_su2, FrameComponents, RandomSource};
pub use oracle::{check_agreement, mc_average, mc_power, transfer_probability, McEstimate};
pub use power::{
    best_frame_given_t, best_t_given_frame, bloch_from_angles, extract_pauli_tensors,
    frame_from_angles, objective_g, optimize_power, Method, OptimizerConfig, PauliTensors,
    PowerResult, RotationFrame,
};
pub use quantum::{
    apply_channel, bloch_to_pure, partial_trace_a, pauli, tensor, unitary_channel, validate_cptp,
    BipartiteChannel, BlochVector, DensityMatrix, Mat2, Mat4, PauliIndex, C64,
};
