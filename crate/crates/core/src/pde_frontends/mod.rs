//! Builders for the heat equation in `d` dimensions and the multiscale
//! telegraph equation, plus the telegraph convergence study toward the
//! dissipative limit.

mod heat;
mod order_study;
mod telegraph;

use std::sync::Arc;

pub use heat::{heat_build, heat_grid, heat_problem, HeatConfig, HEAT_STATE_CAP};
pub use order_study::{dissipative_order_study, manufactured_telegraph, ManufacturedTelegraph, OrderStudy};
pub use telegraph::{
    telegraph_build, telegraph_build_unrescaled, telegraph_recover, BoundaryForm, TelegraphConfig, TelegraphSystem,
};

/// Coefficient or boundary trace as a function of time.
pub type TimeFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
/// Field on the spatial domain; the slice holds one coordinate per axis.
pub type FieldFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
/// Space-time field `(t, x)`.
pub type SpaceTimeFn<T> = Arc<dyn Fn(T, &[T]) -> T + Send + Sync>;

/// `ceil(horizon / dt)`, at least 1.
pub fn steps_for_dt<T: crate::Real>(horizon: T, dt: T) -> crate::Result<usize> {
    if !(horizon > T::zero() && dt > T::zero()) {
        return crate::error::invalid("steps_for_dt: horizon and dt must be positive");
    }
    // guard against 0.1 / (0.1 / 52) landing a hair above 52
    let r = (horizon / dt).to_f64();
    let n = (r - 1e-9 * r.max(1.0)).ceil().max(1.0);
    Ok(n as usize)
}
