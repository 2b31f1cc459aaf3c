//! Asymptotic structure of finite-dimensional quantum Markov processes and
//! reconstruction of their asymptotic trajectories as generalized
//! Gibbs–von Neumann states.
//!
//! The pipeline runs bottom-up:
//!
//! * [`operators`]: dense operators, Hilbert–Schmidt geometry, Hermitian functional calculus.
//! * [`process`]: Kraus channels and Lindbladians, superoperators, evolution.
//! * [`attractors`]: peripheral spectrum, attractor and dual bases, T-state and T-projector.
//! * [`motion`]: constants and integrals of motion built from the dual attractors.
//! * [`jaynes`]: Gibbs states, log-partition, relative entropy and the constrained
//!   relative-entropy reconstructions.

pub mod attractors;
pub mod channels;
pub mod error;
pub mod jaynes;
mod linalg;
pub mod motion;
pub mod operators;
pub mod process;
pub mod tolerances;
pub mod verify;

pub use num_complex::Complex64 as C64;

pub use attractors::{decompose, AttractorDecomposition, PeripheralEigenvalue, Trajectory};
pub use error::{Error, Result};
pub use jaynes::{FitResult, FitStatus, GibbsModel};
pub use linalg::CMatrix;
pub use motion::{ConstantOfMotion, MotionBasis};
pub use operators::{hs_inner, DensityMatrix, Operator, SupportProjector};
pub use process::{ProcessKind, ProcessSpec, Propagator, Superoperator, Time};
pub use tolerances::Tolerances;
