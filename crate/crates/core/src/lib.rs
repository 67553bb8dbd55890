//! Desk-scale computations for renorming theory on trees.
//!
//! Trees are given by finite presentations and realised as finite unfoldings.
//! On top of them sit increasing weights and their point classification,
//! the explicit operators into `c₀`-type spaces, exact or certified norm
//! evaluators, and probes for convexity, Kadec and smoothness behaviour.

pub mod error;
pub mod exact;
pub mod norms;
pub mod operators;
pub mod probes;
pub mod tree;
pub mod weights;

pub use error::{Error, Result};
pub use exact::{NormValue, Rational};
pub use tree::{FiniteTree, NodeId, TreeFn, TreePresentation};
