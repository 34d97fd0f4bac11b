//! Simulation and calibration toolkit for two fixed-frequency transmons
//! coupled by a driven high-coherence resonator.
//!
//! The crate covers the full workflow: deriving the dressed Kerr model from
//! bare circuit parameters, solving the drive amplitude at which the
//! dynamical ZZ coupling cancels the static one, time-domain propagation in
//! lab / rotating / displaced frames with optional Lindblad dissipation,
//! cross-resonance CNOT and adiabatic CZ gate simulation and calibration,
//! analytic error budgets, and qubit-chain residual-coupling analysis.

pub mod chain;
pub mod circuit;
pub mod config;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod gates;
pub mod lindblad;
pub mod linalg;
pub mod operators;
pub mod optimize;
pub mod presets;
pub mod pulses;

pub use circuit::{
    build_full_hamiltonian, calibrate_bare_to_dressed, diagonalize_and_label,
    extract_dressed_params, extract_drive_coefficients, transmon_spectrum, CouplingSpec,
    DressedModel, DressedTargets, LabeledSpectrum, ResonatorSpec, SpecSet, TransmonSpec,
};
pub use effective::{
    ezp, four_wave_coefficient, sizzle_crosscheck, solve_cancellation, stark_shifts, zz_dynamic_leading,
    zz_total, CancellationSolution, DriveParams,
};
pub use error::{Error, Result};
pub use pulses::{drag_pair, EnvelopeKind, PulseEnvelope};
