pub mod algebra;
pub mod cli;
pub mod engine;
pub mod error;
pub mod gauge;
pub mod lattice;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod predictions;
pub mod noise;
pub mod state;

pub use error::{Error, Result};
