//! Finite element solver for non-Fickian diffusion coupled to a viscoelastic
//! stress, written in the transformed stress variable.

pub mod coefficients;
pub mod diagnostics;
pub mod discretization;
pub mod linalg;
pub mod solver;
pub mod config;
pub mod scenario;
