//! Simulator and estimation toolkit for continuous-variable remote state
//! preparation (RSP) of squeezed microwave states.
//!
//! The crate propagates Gaussian states through a modeled microwave network
//! (squeezers, hybrid ring, losses, phase-sensitive feedforward amplifier,
//! directional coupler), predicts the remotely prepared squeezed state,
//! audits one-time-pad security through Gaussian entropies, and fits model
//! parameters to measured or synthetic sweep data.
//!
//! Conventions used throughout:
//!
//! * quadrature ordering `(q1, p1, q2, p2, ...)`;
//! * `a = q + i p`, `[q, p] = i/2`, vacuum variance 1/4 per quadrature;
//! * squeezing / antisqueezing levels in dB relative to the vacuum variance,
//!   `S = -10 log10(sigma_s^2 / 0.25)`;
//! * angles in radians internally, degrees at the CLI/config boundary;
//! * dB-valued losses convert as `eps = 1 - 10^(-chi/10)`, coupler
//!   transmissivity as `tau = 1 - 10^(beta/10)`.

pub mod components;
pub mod config;
pub mod estimation;
pub mod gaussian;
pub mod moments;
pub mod observables;
pub mod oracle;
pub mod output;
pub mod protocol;
pub mod tomography;

#[cfg(test)]
pub(crate) mod testutil;

pub use gaussian::{apply_channel, GaussianError, GaussianState, LinearChannel};
pub use moments::{moments_from_state, state_from_moments, MomentKey, MomentSet};
pub use protocol::{
    find_optimal_gain, optimal_point_prediction, run_rsp, summarize_prepared, PreparedStateSummary,
    RspParams,
};
