//! Numerical laboratory for best uniform approximation by harmonic
//! polynomials on sampled compact sets.
//!
//! Compact sets are represented by finite quasi-uniform samples, so every
//! sup norm is a finite maximum and every extremal problem (minimax fits,
//! condenser extremal functions, Bernstein ratios, two-constants checks)
//! reduces to a dense linear program.

pub mod basis;
pub mod chi;
pub mod cli;
pub mod geometry;
pub mod lp;
pub mod minimax;
pub mod rates;
pub mod regularity;
pub mod report;
pub mod scenario;
pub mod two_constants;
pub mod uniqueness;

pub use basis::{BasisSpec, HarmonicPoly};
pub use geometry::{Point, SampledSet, Scene, ShapeDescriptor};
pub use lp::{LpProblem, LpSolution, LpStatus};
pub use minimax::{ApproxResult, TargetFunction};
pub use rates::{Classification, DecayReport};
