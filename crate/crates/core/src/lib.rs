//! Numerical laboratory for nonlocal energies with `(p, q)`-Orlicz growth.

pub mod degiorgi;
pub mod domain;
pub mod energy;
pub mod error;
pub mod growth;
pub mod kernel;
pub mod regularity;
pub mod serde_float;
pub mod solve;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/growth.md")]
    struct Growth;
    #[doc = include_str!("../../../book/src/domain-energy.md")]
    struct DomainEnergy;
    #[doc = include_str!("../../../book/src/solver.md")]
    struct Solver;
    #[doc = include_str!("../../../book/src/degiorgi.md")]
    struct DeGiorgi;
    #[doc = include_str!("../../../book/src/regularity.md")]
    struct Regularity;
    #[doc = include_str!("../../../README.md")]
    struct Readme;
}
