use thiserror::Error;

use crate::terms::{SchemaError, TermError};

/// Location of a node inside a derivation: premiss indices, ω-branch bodies
/// and exception entries, from the root down.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodePath(pub Vec<PathStep>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathStep {
    Premiss(usize),
    Body,
    Exception(u64),
}

impl NodePath {
    pub fn child(&self, step: PathStep) -> NodePath {
        let mut steps = self.0.clone();
        steps.push(step);
        NodePath(steps)
    }
}

impl std::fmt::Display for NodePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "root")?;
        for step in &self.0 {
            match step {
                PathStep::Premiss(i) => write!(f, "/{i}")?,
                PathStep::Body => write!(f, "/body")?,
                PathStep::Exception(n) => write!(f, "/exc{n}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("rule mismatch at {path}: expected {expected}, found {found}")]
    RuleMismatch { path: NodePath, expected: String, found: String },
    #[error("basic relation not given by the oracle at {path}: {sequent}")]
    BasicNotInOracle { path: NodePath, sequent: String },
    #[error("parameter `{param}` occurs in the conclusion of its ω-node at {path}")]
    ParameterEscape { path: NodePath, param: String },
    #[error("succedent is not a meet: {0}")]
    NotAMeetSuccedent(String),
    #[error("succedent is not a negation: {0}")]
    NotANegSuccedent(String),
    #[error("succedent is not an ω-meet: {0}")]
    NotAnOmegaSuccedent(String),
    #[error("cut formula mismatch: {0}")]
    ConclusionMismatch(String),
    #[error("variable `{0}` is not free in the conclusion")]
    VariableNotFree(String),
    #[error("not a step derivation A(a) -> A(a'): {0}")]
    ShapeMismatch(String),
    #[error("oracle decides neither -> P nor P -> for {0}")]
    OracleUndecided(String),
    #[error("oracle violates its invariants: {0}")]
    OracleInvariant(String),
    #[error("induction-backed branch cannot be opened at a parameter")]
    RecipeOpaque,
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

impl ProofError {
    pub(crate) fn mismatch(expected: impl Into<String>, found: impl Into<String>) -> ProofError {
        ProofError::RuleMismatch { path: NodePath::default(), expected: expected.into(), found: found.into() }
    }
}
