//! C1 cubic Powell–Sabin splines for isogeometric analysis on triangulations.

pub mod assembly;
pub mod bernstein;
pub mod boundary;
pub mod error;
pub mod geom;
pub mod geometry;
pub mod io;
pub mod lagrange;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod psbasis;
pub mod quadrature;
pub mod space;
pub mod study;

pub use error::{Error, Result};
