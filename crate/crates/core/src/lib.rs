//! Numerical tools for testing the semiclassical chaos criterion: entropy
//! of dynamical refinements, Lyapunov spectra, polynomial Moyal calculus and
//! a non-Hermitian Gamow model whose operator-product traces are tested for
//! exponential decay.

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fit;
pub mod gamow;
pub mod geometry;
pub mod lyapunov;
pub mod partition;
pub mod pipeline;
pub mod weyl;

pub use error::{Error, Result};
pub use exec::Exec;
