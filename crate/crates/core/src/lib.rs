//! Classical emulation of Schrodingerized IMEX solvers for multiscale linear
//! systems `du/dt = (1/eps) L1 u + L2 u + (1/eps) b1 + b2`.
//!
//! The IMEX time stepper is recast as one block-bidiagonal linear system,
//! that system is solved by its steady-state (Richardson) flow, and the flow
//! is made unitary by the warped-phase transformation. Everything here runs
//! on a classical machine: the unitary stages are integrated exactly, mode by
//! mode, so the quantum pipeline can be checked against a plain sequential
//! IMEX solve.
//!
//! All numerics are generic over [`Real`] (`f32`/`f64`); the aliases at the
//! crate root fix the scalar to `f64`.

pub mod complexity_model;
pub mod error;
pub mod evoltime_bounds;
pub mod imex_engine;
pub mod pde_frontends;
pub mod richardson_embed;
pub mod scalar;
pub mod schrodingerizer;
pub mod spectral_core;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use scalar::{CMat, CVec, Cx, Real};

pub type Complex64 = Cx<f64>;
pub type Mat = CMat<f64>;
pub type Vector = CVec<f64>;

pub type MultiscaleProblem = imex_engine::MultiscaleProblem<f64>;
pub type ImexSystem = imex_engine::ImexSystem<f64>;
pub type ImexStep = imex_engine::ImexStep<f64>;
pub type Trajectory = imex_engine::Trajectory<f64>;
pub type BlockSystem = richardson_embed::BlockSystem<f64>;
pub type HomogeneousEmbedding = richardson_embed::HomogeneousEmbedding<f64>;
pub type PGrid = schrodingerizer::PGrid<f64>;
pub type SchrState = schrodingerizer::SchrState<f64>;
pub type BoundCurve = evoltime_bounds::BoundCurve<f64>;

pub type MatF32 = CMat<f32>;
pub type ImexSystemF32 = imex_engine::ImexSystem<f32>;
pub type BlockSystemF32 = richardson_embed::BlockSystem<f32>;
