//! Numerical search for periodic solutions by Picard iteration of the period map.
//!
//! The state of the iteration is the solution restricted to one delay window
//! `[-theta_max, 0]`, sampled on a uniform grid. One application of the
//! period map integrates the model over `[0, T]` from that data and samples
//! the result on `[T - theta_max, T]`. With `T`-periodic coefficients a fixed
//! point is the initial window of a `T`-periodic solution.

use serde::{Deserialize, Serialize};

use crate::analysis::{periodicity_margins, PeriodicityReport, DEFAULT_GRID_N};
use crate::dde::{integrate, IntegrationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::model::{Coefficient, Extension, History, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodicConfig {
    /// Integration step.
    pub step: f64,
    pub n_samples: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Points per step for the periodicity check of the converged solution.
    pub oversample: usize,
    /// Grid used to maximise `theta` over one period.
    pub theta_grid_n: usize,
    pub max_lag_iterations: usize,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        PeriodicConfig {
            step: 1.0 / 256.0,
            n_samples: 256,
            max_iter: 200,
            tol: 1e-8,
            oversample: 8,
            theta_grid_n: DEFAULT_GRID_N,
            max_lag_iterations: 3,
        }
    }
}

impl PeriodicConfig {
    fn integration(&self, t_end: f64) -> IntegrationConfig {
        IntegrationConfig {
            step: self.step,
            t_end,
            positivity_floor: 0.0,
            max_lag_iterations: self.max_lag_iterations,
        }
    }
}

/// Samples of `N` on a uniform grid over `[-theta_max, 0]`; the last sample is `N(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistorySegment {
    pub theta_max: f64,
    pub samples: Vec<f64>,
}

impl HistorySegment {
    pub fn new(theta_max: f64, samples: Vec<f64>) -> Result<Self> {
        let seg = HistorySegment { theta_max, samples };
        seg.validate()?;
        Ok(seg)
    }

    pub fn constant(theta_max: f64, n_samples: usize, value: f64) -> Result<Self> {
        Self::new(theta_max, vec![value; n_samples])
    }

    /// Segment for `params` with `theta_max` maximised over one period.
    pub fn constant_for(params: &ModelParams, cfg: &PeriodicConfig, value: f64) -> Result<Self> {
        let period = declared_period(params)?;
        Self::constant(
            params.max_delay(period, cfg.theta_grid_n),
            cfg.n_samples,
            value,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::InvalidInput(
                "a history segment needs at least 2 samples".into(),
            ));
        }
        if !(self.theta_max >= 0.0 && self.theta_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "theta_max must be >= 0, got {}",
                self.theta_max
            )));
        }
        if let Some((i, &v)) = self
            .samples
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidInput(format!(
                "history segment sample {i} is not positive ({v})"
            )));
        }
        Ok(())
    }

    pub fn terminal(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    /// Sample times relative to the end of the window.
    pub fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.samples.len() - 1;
        (0..=n).map(move |i| -self.theta_max * (n - i) as f64 / n as f64)
    }

    /// Initial data that interpolates the samples linearly.
    pub fn to_history(&self) -> History {
        let phi = if self.theta_max > 0.0 {
            Coefficient::Tabulated {
                knots: self.offsets().zip(self.samples.iter().copied()).collect(),
                extension: Extension::Clamped,
            }
        } else {
            Coefficient::constant(self.terminal())
        };
        History::new(phi, self.terminal())
    }

    /// Sup-norm distance between two segments on the same grid.
    pub fn distance(&self, other: &HistorySegment) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn declared_period(params: &ModelParams) -> Result<f64> {
    params
        .period
        .filter(|p| *p > 0.0)
        .ok_or_else(|| Error::InvalidInput("the period map needs a declared period T".into()))
}

/// One period of the model started from `seg`, sampled back onto the segment grid.
pub fn period_map(
    params: &ModelParams,
    seg: &HistorySegment,
    cfg: &PeriodicConfig,
) -> Result<HistorySegment> {
    let period = declared_period(params)?;
    seg.validate()?;
    let traj = integrate(params, &seg.to_history(), &cfg.integration(period))?;
    let samples = seg
        .offsets()
        .map(|off| traj.evaluate(period + off))
        .collect::<Result<Vec<_>>>()?;
    Ok(HistorySegment {
        theta_max: seg.theta_max,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSolveResult {
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm change of the segment in the last iteration.
    pub residual: f64,
    pub residual_trace: Vec<f64>,
    /// `sup |N(t + T) - N(t)|` over an oversampled grid on `[0, T]`, from a
    /// two-period run started at the final segment. `None` unless converged.
    pub periodicity_residual: Option<f64>,
    pub margins: Option<PeriodicityReport>,
    pub final_segment: HistorySegment,
    pub trajectory_one_period: Trajectory,
}

/// Picard iteration that always returns its diagnostics; `converged` tells
/// whether the tolerance was reached.
pub fn solve_periodic(
    params: &ModelParams,
    seed: &HistorySegment,
    cfg: &PeriodicConfig,
) -> Result<PeriodicSolveResult> {
    let period = declared_period(params)?;
    let margins = match periodicity_margins(params, DEFAULT_GRID_N) {
        Ok(m) => {
            if !m.condition.guarantees_existence() {
                log::warn!(
                    "neither margin condition holds (m = {}, M = {}); a periodic solution is not guaranteed",
                    m.inf_margin,
                    m.sup_margin
                );
            }
            Some(m)
        }
        Err(e) => {
            log::warn!("periodicity margins unavailable: {e}");
            None
        }
    };

    let mut seg = seed.clone();
    seg.validate()?;
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let next = period_map(params, &seg, cfg)?;
        let residual = next.distance(&seg);
        trace.push(residual);
        log::debug!("picard iteration {}: residual {residual:e}", trace.len());
        seg = next;
        if residual <= cfg.tol {
            converged = true;
            break;
        }
    }

    let history = seg.to_history();
    let trajectory_one_period = integrate(params, &history, &cfg.integration(period))?;
    let periodicity_residual = if converged {
        let two = integrate(params, &history, &cfg.integration(2.0 * period))?;
        Some(periodicity_defect(
            &two,
            period,
            cfg.step / cfg.oversample.max(1) as f64,
        )?)
    } else {
        None
    };

    Ok(PeriodicSolveResult {
        converged,
        iterations: trace.len(),
        residual: trace.last().copied().unwrap_or(f64::INFINITY),
        residual_trace: trace,
        periodicity_residual,
        margins,
        final_segment: seg,
        trajectory_one_period,
    })
}

/// Like [`solve_periodic`], but failing with `NotConverged` when the tolerance is not met.
pub fn find_periodic(
    params: &ModelParams,
    seed: &HistorySegment,
    cfg: &PeriodicConfig,
) -> Result<PeriodicSolveResult> {
    let result = solve_periodic(params, seed, cfg)?;
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NotConverged {
            residual: result.residual,
            iterations: result.iterations,
        })
    }
}

/// `sup |N(t + T) - N(t)|` for `t` on a grid of spacing `dt` over `[0, T]`.
pub fn periodicity_defect(traj: &Trajectory, period: f64, dt: f64) -> Result<f64> {
    let n = (period / dt).round().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            let t = period * i as f64 / n as f64;
            Ok((traj.evaluate(t + period)? - traj.evaluate(t)?).abs())
        })
        .try_fold(0.0, |acc: f64, d: Result<f64>| Ok(acc.max(d?)))
}
