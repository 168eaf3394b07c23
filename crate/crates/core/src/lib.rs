//! Conditional expectation (CE), absolute probability (AP) and conditional
//! probability (CP) of quantum observables, evaluated through conditional
//! density operators `ρ_A = ρ I_A`:
//!
//! ```text
//! E[Ô|A]  = Tr[Ô ρ_A] / Tr[ρ_A]
//! P(A)    = Tr[ρ_A]
//! P(A|B)  = Tr[ρ I_A I_B] / Tr[ρ I_B]
//! ```
//!
//! Each system type computes these quantities along two routes (the
//! conditional-distribution definition and the trace formula) so results
//! can be cross-checked:
//!
//! - [`discrete`]: one observable with a discrete spectrum.
//! - [`grid`]: position observables sampled on 1D and 2D grids.
//! - [`fock`]: grand-canonical statistics of non-interacting particles.
//! - [`evolution`]: unitary evolution under a time-independent Hamiltonian.
//! - [`noncommutative`]: momentum-given-position diagnostics.
//!
//! The [`cli`] module backs the `qprob` binary.

pub mod cli;
pub mod discrete;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod grid;
pub mod noncommutative;
pub mod probability;
pub mod tolerance;

pub use error::{Error, Result};
pub use probability::{Basis, DensityOperator, Event, Indicator, RouteComparison};
