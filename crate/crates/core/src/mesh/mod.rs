//! Triangulations, refinement and the Powell–Sabin 6-split.

pub mod builders;
mod powell_sabin;
mod refine;
mod triangulation;

pub use powell_sabin::{MicroTriangle, PsRefinement, LOCATE_TOL};
pub use refine::{dyadic_refine, local_refine};
pub use triangulation::{GreenPair, Triangulation, VertexKind, COLLINEAR_SINE_TOL};
