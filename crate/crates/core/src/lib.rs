//! Topic detection over windowed word co-occurrence graphs.

pub mod community;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod synthetic;
pub mod textprep;
pub mod trends;

pub use error::{Error, Result};
