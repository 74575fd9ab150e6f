pub mod cli;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod oscillation;
pub mod plot;
pub mod readout;
pub mod reservoir;
pub mod seeding;
pub mod topology;

pub use error::{Error, Result};
