// SPDX-License-Identifier: Apache-2.0

//! Boolean formulas over typed atoms and the SAT machinery behind them.

mod expr;
mod models;
pub mod sat;

pub use expr::{Assignment, Atom, Expr, Kind, Polarity};
pub use models::{enum_models, equivalent, is_sat, solve, ModelStream, Models, SatContext};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("assignment has no value for atom {0}")]
    MissingAtom(Atom),
}
