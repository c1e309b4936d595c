//! Pseudo-spectral experiments on relaxation enhancement by time-periodic
//! incompressible flows on the unit torus.

pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod harness;
pub mod floquet;
pub mod flow;
pub mod porous;
pub mod rng;
pub mod solver;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
pub use flow::{FlowBounds, FlowSpec};
pub use solver::{Formulation, SolverConfig, Substepping, TrajectoryRecord};
pub use spectral::{GridField, SpectralField, WaveIndex};
