//! Riemann-sphere projection and the numerical inverse Laplace transform.

mod ilt;
mod projection;

pub use ilt::{ilt_fsi, ilt_query, ilt_reconstruct, IltParams, IltQuery};
pub use projection::{inverse_stereographic, stereographic_project, ComplexVal, Projection, RiemannCoord, POLE_CLAMP};
