//! Link budgets for free-space optical relay chains and distribution-time
//! analysis for a two-segment multiplexed quantum repeater.

pub mod atmosphere;
pub mod beam;
pub mod coupling;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod relay_chain;
pub mod repeater_rates;
pub mod repeater_sim;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
