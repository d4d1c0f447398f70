//! Matroid partition, multiplicity systems and Frobenius like structures with their Q and L polynomials.
//!
//! - [`matroid`]: independence oracles (linear over `Q`, uniform, lifted) and exhaustive
//!   axiom checks.
//! - [`partition`]: matroid partition, its brute-force criterion, `A_min` and `A_par`.
//! - [`systems`]: multiplicity vectors, strong and good decompositions, the local relation
//!   between good decompositions and the graph of equivalence classes.
//! - [`frobenius`]: axiom verification for a Frobenius like structure and construction of
//!   its potentials of the first and second kind.
//! - [`arrangements`]: Frobenius like structures of weighted hyperplane arrangement
//!   families, evaluated numerically at critical points of the master function.

pub mod arrangements;
pub mod error;
pub mod exec;
pub mod fd;
pub mod frobenius;
pub mod matroid;
pub mod partition;
pub mod polynomial;
pub mod roots;
pub mod set;
pub mod systems;

pub use error::{Error, Result};
pub use exec::Execution;
pub use set::ElementSet;
