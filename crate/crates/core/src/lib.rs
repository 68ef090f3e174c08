//! Simulation and analysis of a delayed Hill-type population model with
//! time-varying coefficients and proportional (seasonal or rotational)
//! harvesting.
//!
//! ```text
//! N'(t) = [ r(t) / (1 + (N(t - theta(t)) / K(t))^gamma) - (eta(t) - lambda(t)) ] N(t)
//! ```
//!
//! * [`model`]: coefficient functions, harvest schedules and the right-hand side.
//! * [`dde`]: method-of-steps RK4 integration with Hermite dense output.
//! * [`analysis`]: hypothesis checks, persistence bounds and periodicity margins.
//! * [`periodic`]: Picard iteration of the period map.
//! * [`scenario`] and [`cli`]: JSON scenarios, CSV/JSON outputs, the command line.
//!
//! ```
//! use harvest_dde::{integrate, persistence_bounds, History, IntegrationConfig, ModelParams};
//!
//! let params = ModelParams::constant(2.0, 1.0, 0.0, 1.0, 1.0, 0.5);
//! let traj = integrate(&params, &History::constant(0.5), &IntegrationConfig::new(1.0 / 64.0, 20.0))?;
//! let bounds = persistence_bounds(&params, 0.5, 20.0, 512, 16)?;
//! let n = traj.evaluate(20.0)?;
//! assert!(bounds.lower <= n && n <= bounds.upper);
//! # Ok::<(), harvest_dde::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dde;
pub mod error;
pub mod model;
pub mod periodic;
pub mod quadrature;
pub mod scenario;

pub use analysis::{
    periodicity_margins, persistence_bounds, validate_premises, verify_bounds, BoundsReport,
    PeriodicityCondition, PeriodicityReport, Premise, PremiseReport,
};
pub use dde::{
    integrate, integrate_equation, DelayEquation, DelayFn, IntegrationConfig, Trajectory,
};
pub use error::{Error, Result};
pub use model::{rotational_harvest, seasonal_harvest, Coefficient, History, ModelParams};
pub use periodic::{
    find_periodic, period_map, solve_periodic, HistorySegment, PeriodicConfig, PeriodicSolveResult,
};
pub use scenario::Scenario;
