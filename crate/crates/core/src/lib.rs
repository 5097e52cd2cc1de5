pub mod admissible;
pub mod cli;
pub mod derivation;
pub mod error;
pub mod script;
pub mod search;
pub mod semantics;
pub mod sexpr;
pub mod structural;
pub mod syntax;
pub mod terms;

pub use derivation::{check, Derivation};
pub use error::ProofError;
pub use terms::{Formula, PreorderOracle, Sequent, Term};
