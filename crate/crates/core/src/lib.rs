//! Geometrothermodynamics on the contact phase space of a fundamental
//! relation: Legendre and representation maps, the Quevedo metric families,
//! induced metrics on the equilibrium manifold, their scalar curvature, and a
//! checker for the representation-change propositions.

pub mod contact;
pub mod curvature;
pub mod deriv;
pub mod error;
pub mod expr;
pub mod grid;
pub mod metric;
pub mod relation;
pub mod report;
pub mod verify;

pub use error::{GtdError, Result};
