//! Simulation toolkit for an on-chip time-bin to path qubit encoding converter.
//!
//! The toolkit models a photonic circuit that converts qubits encoded in two
//! time bins separated by `Δt` into qubits encoded in two waveguide paths,
//! using a high-speed electro-optic switch (EOS) and matched optical delay
//! lines (MODL). It covers the device physics (finite switch extinction,
//! delay/phase bookkeeping, detector jitter and windows), photon-pair
//! statistics, single-qubit state tomography with maximum-likelihood
//! reconstruction, two-photon interference fringe experiments, and
//! entanglement-based BBM92 key distribution.
//!
//! Modules:
//! - [`statekit`]: dense complex linear algebra for 1- and 2-qubit states.
//! - [`devices`]: transfer-matrix models of the on-chip components and the
//!   composite converter, including temporal-slot bookkeeping.
//! - [`stochastics`]: Monte Carlo layer for sources, channels, detectors and
//!   coincidence counting.
//! - [`tomography`]: projective measurement settings, linear inversion and
//!   maximum-likelihood reconstruction.
//! - [`experiments`]: end-to-end experiment orchestration (conversion +
//!   tomography, fringe scans, QKD) over a [`experiments::Scenario`].

pub mod devices;
pub mod experiments;
mod linalg;
pub mod statekit;
pub mod stochastics;
pub mod tomography;
