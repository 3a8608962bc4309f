//! Noisy-gate Bayesian networks compiled from assessment rubrics.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the pure parts
//! of the toolkit: dense factor algebra, canonical CPT constructors, exact
//! inference by variable elimination, the rubric-to-network compiler and the
//! Cross Array Task case study. File formats and the command-line interface
//! live in the `rubricnet` crate.
//!
//! ```
//! use rubricnet_core::{engine, gates, Network, Query, Variable, VarId, Evidence};
//!
//! let skill = VarId(0);
//! let answer = VarId(1);
//! let net = Network::new(
//!     vec![Variable::binary(skill, "skill"), Variable::binary(answer, "answer")],
//!     vec![
//!         gates::prior_cpt(skill, 0.5).unwrap(),
//!         gates::noisy_or_cpt(&gates::NoisyOrSpec::new(vec![(skill, 0.2)]).with_leak(0.9), answer).unwrap(),
//!     ],
//! )
//! .unwrap();
//! let mut evidence = Evidence::new();
//! evidence.insert(answer, 1).unwrap();
//! let post = engine::posterior(&net, &Query::new(skill, evidence).unwrap()).unwrap();
//! assert!((post[1] - 0.82 / 0.92).abs() < 1e-12);
//! ```
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cat;
pub mod engine;
mod error;
pub mod factor;
pub mod gates;
pub mod network;
pub mod rubric;

pub use engine::{EliminationOrder, Query};
pub use error::{Error, Result};
pub use factor::{Evidence, Factor, VarId, Variable};
pub use network::{Cpt, Network, ValidationIssue, ValidationReport};
