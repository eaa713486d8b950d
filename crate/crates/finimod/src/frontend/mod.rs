//! Input scripts, the command line, benchmark generation and test oracles.

pub mod cli;
pub mod generator;
pub mod oracle;
pub mod parser;

use thiserror::Error;

use crate::kernel::{Store, TermId};
use crate::purifier::{PurifiedProblem, PurifyError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] parser::ParseError),
    #[error(transparent)]
    Purify(#[from] PurifyError),
}

/// A script ready for solving.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub store: Store,
    pub assertions: Vec<TermId>,
    pub problem: PurifiedProblem,
    pub options: Vec<(String, String)>,
    pub get_model: bool,
}

pub fn load(text: &str) -> Result<Loaded, LoadError> {
    let script = parser::parse(text)?;
    let p = parser::elaborate(&script)?;
    let mut store = p.store;
    let mut problem = PurifiedProblem::new();
    for &a in &p.assertions {
        problem.purify(&mut store, a)?;
    }
    Ok(Loaded { store, assertions: p.assertions, problem, options: p.options, get_model: p.get_model })
}
