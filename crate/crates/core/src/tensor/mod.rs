//! Dense arrays, reverse-mode differentiation, layers and optimization.

mod adam;
mod array;
mod checkpoint;
pub mod kernels;
mod nn;
mod params;
mod tape;

pub use adam::AdamState;
pub use array::Array;
pub use checkpoint::Checkpoint;
pub use nn::{GruLayer, GruScratch, GruVars, Linear, LinearVars};
pub use params::{ParamId, Params};
pub use tape::{Gradients, Node, Tape, Var};
