// SPDX-License-Identifier: Apache-2.0

//! Exact evolution of a single bosonic mode in a self-Kerr medium with
//! photon loss.
//!
//! The dynamics are
//!
//! ```text
//! dρ/dt = -iχ[(a†a)², ρ] + γ(2aρa† - a†aρ - ρa†a)
//! ```
//!
//! and the crate provides three independent routes to the evolved state:
//!
//! * [`channel`]: closed-form operator-sum solution on a truncated Fock space;
//! * [`wigner`]: the Wigner-function evolution series and its limits;
//! * [`oracle`]: brute-force RK4 integration and direct quadrature.
//!
//! Wigner functions follow the convention W(α) = Tr[Δ(α)ρ] with
//! Δ(α) = D(2α)(-1)^{a†a}/π, under which ∫W d²α = 1/2.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod density;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod photon_stats;
pub mod quadrature;
pub mod special_fn;
pub mod verify;
pub mod wigner;

pub use channel::ChannelParams;
pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use wigner::{InitialState, WignerGrid};
