//! Warped-phase transformation of a linear flow `dv/dt = A v` into a family
//! of Hamiltonian systems, one per Fourier mode of the auxiliary variable
//! `p`, and the inverse step that reads `v(t)` back off the warped state.
//!
//! Convention: with `A = A1 + i A2` (`A1`, `A2` Hermitian), the warped state
//! `w(t,p)` starts from `e^{-|p|} v(0)` and obeys
//! `dw/dt = -A1 dw/dp + i A2 w`. Mode `l` evolves under
//! `H_l = mu_l A1 - A2`, and `v(t) = e^{p} w(t,p)` for every `p` above
//! `p_diamond = max(lambda_max(A1) t, 0)`.

mod bessel;
mod grid;
mod pipeline;
mod propagator;
mod state;

pub use bessel::bessel_j_sequence;
pub use grid::{build_grid, build_grid_for_flow, GridReport, PGrid, BOUNDARY_THRESHOLD, PROBE_RATES};
pub use pipeline::{run_embedding, solve_schrodingerized, EmbeddingRun, PDiamondRule, PipelineOptions, PipelineResult};
pub use propagator::{HermitianPair, PropagatorKind, CHEBYSHEV_TOL};
pub use state::{evolve, mode_norms, reconstruct, sample_p_space, warp, Reconstruction, SchrState};
