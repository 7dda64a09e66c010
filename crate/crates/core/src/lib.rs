pub mod baselines;
pub mod bench;
pub mod domain;
pub mod env;
pub mod error;
pub mod nav;
pub mod policy;

pub use error::{Error, Result};
