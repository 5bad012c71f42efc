// SPDX-License-Identifier: Apache-2.0

//! Fixtures, random instance generators and brute-force oracles shared by
//! the integration tests, the acceptance runner and the benches.

pub mod fixtures;
pub mod gen;
pub mod oracle;
pub mod script;
