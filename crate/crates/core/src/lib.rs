//! Moduli of continuity, rearrangements, Besov seminorms and variational
//! Sobolev/Besov capacities of grid-sampled functions and lattice sets.

pub mod besov;
pub mod capacity;
pub mod error;
pub mod grid;
pub mod limits;
pub mod modulus;
pub mod mollify;
pub mod rearrange;
pub mod sets;
pub mod verify;

pub use besov::{BesovEvaluation, Regime};
pub use capacity::{AdmissibleFamily, CapacityEstimate, EstimateKind, Space};
pub use error::{Error, Result};
pub use grid::{Exponents, GridFunction};
pub use limits::SweepResult;
pub use modulus::ModulusCurve;
pub use rearrange::RearrangementProfile;
pub use sets::DiscreteSet;
