//! First-price auctions with discounts.
//!
//! Two discount families are modeled: pre-auction bid augmentation (the
//! submitted bid is scored higher than it pays) and post-auction price
//! reduction (the winner pays less than the clearing bid). The crate
//! provides the auction mechanics themselves, numeric equilibrium solving
//! for asymmetric two-type markets, valuation recovery from bid logs,
//! expected-outcome computation under varying discount rates, and
//! floating-point equivalence checks between the two families.

pub mod analytic;
pub mod auction;
pub mod dist;
pub mod equivalence;
pub mod error;
pub mod estimation;
pub mod outcomes;
pub mod solver;

pub use error::{Error, Result};
