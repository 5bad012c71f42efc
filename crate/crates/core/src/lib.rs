// SPDX-License-Identifier: Apache-2.0

//! Decision procedure for acyclic and straight-line string constraints.
//! Constraints compile to succinct alternating automata and transducers
//! whose emptiness is decided as reachability in Boolean transition
//! systems.

pub mod formula;
pub mod automata;
pub mod transduce;
pub mod acsolve;
pub mod slsolve;
pub mod reach;
pub mod cli;
pub mod par;

#[cfg(test)]
mod testgen;
