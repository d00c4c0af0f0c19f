pub mod alignment;
pub mod dpo;
pub mod error;
pub mod eval;
pub mod genmock;
pub mod jsonl;
pub mod model;
pub mod pairs;
pub mod pipeline;
pub mod seeds;

pub use error::{Error, Result};
