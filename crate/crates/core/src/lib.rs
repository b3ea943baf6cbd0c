//! Capacity, capacity-achieving inputs and achievable rates of the complex
//! AWGN channel under peak-power constraints.

pub mod analysis;
pub mod cad;
pub mod channel;
pub mod constellation;
pub mod error;
pub mod numerics;
pub mod rates;

pub use error::{Error, Result};
