//! Simulation and certification of coherence transfer.
//!
//! The crate covers three kinds of networks:
//!
//! * photonic entanglement networks built from polarization-entangled pairs,
//!   photonic fusion and Bell-state measurements ([`optics`], [`networks`]);
//! * the single-particle triangle network ([`networks::triangle`]);
//! * electron transport through a double quantum dot, integrated as a
//!   Lindblad master equation ([`dynamics`]).
//!
//! Each scenario produces population data, and [`capability`] minimizes the
//! criterion kernel over every process that cannot create coherence. The
//! minimization reduces to a linear program over column-stochastic matrices,
//! solved by the dense simplex in [`optimizer`].

pub mod capability;
pub mod dynamics;
pub mod error;
pub mod networks;
pub mod optics;
pub mod optimizer;
pub mod qcore;

pub use error::{Error, Result};
pub use qcore::{ComplexMatrix, DensityMatrix, PureState};
