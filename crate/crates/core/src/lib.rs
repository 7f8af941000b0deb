pub mod cli;
pub mod corpus;
pub mod error;
pub mod lexicon;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod rng;
pub mod textprep;

pub use error::{Error, Result};
