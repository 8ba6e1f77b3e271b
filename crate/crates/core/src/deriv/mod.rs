//! Differentiation kernel: order-4 Taylor jets and a finite-difference oracle.

pub mod fd;
pub mod jet;
pub mod scalar;

pub use fd::{default_step, fd_partial};
pub use jet::{jet_arith, multi_indices, Jet4, JetOp, MAX_DIM, ORDER};
pub use scalar::Scalar;
