//! Continuous-time dynamics models in the Laplace domain, delayed control
//! environments, and MPPI planning over learned models.

pub mod envs;
pub mod error;
pub mod eval;
pub mod laplace;
pub mod models;
pub mod mppi;
pub mod pipeline;
pub mod policy;
pub mod tensor;

pub use error::{Error, Result};
