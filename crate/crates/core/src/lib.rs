//! Magnetic-induction wireless power transfer with a three-orthogonal-coil
//! transmitter and multiple single-coil receivers: coupled resonant-circuit
//! simulation, transmit drive optimization, and a reproducible Monte-Carlo
//! experiment harness.

pub mod beamforming;
pub mod circuit;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod oracle;
