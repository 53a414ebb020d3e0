// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for the `kerr-wigner` library.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;

pub use commands::{exit_code, run, Outcome};
pub use config::{CommandKind, RunConfig};
