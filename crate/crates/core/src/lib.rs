//! Minimum crossing numbers of perturbed piecewise-linear maps `φ = γ∘λ`
//! of a graph `G` onto a plane-drawn host graph `H`.
//!
//! The exact solver handles cycles without spurs; the evaluator and the
//! brute-force oracle handle any guest of maximum degree two. The `reduce`
//! module builds the 3SAT hardness instances for the spur case.

// geometry errors carry exact points; they are rare and not worth boxing
#![allow(clippy::result_large_err)]

pub mod corpus;
pub mod evaluate;
pub mod expand;
pub mod geometry;
pub mod model;
pub mod normalize;
pub mod oracle;
pub mod rat;
pub mod reduce;
pub mod render;
pub mod solve;
pub mod text;

pub use evaluate::{check_certificate, evaluate, Evaluation};
pub use model::{
    ClusterId, CrossingLedger, EdgeId, Embedded, GuestGraph, HostGraph, Instance, Pipe, PipeId,
    PipeOrderSet, Point, RotationSystem, Shape, SimplicialMap, Skeleton, VertexId,
};
pub use oracle::oracle;
pub use rat::Rat;
pub use solve::{solve, SolveError, SolveTrace};
