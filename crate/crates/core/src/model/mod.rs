//! The delayed Hill-type growth model with proportional harvesting:
//!
//! ```text
//! N'(t) = [ r(t) / (1 + (N(g(t)) / K(t))^gamma) - b(t) ] N(t),   b = eta - lambda,
//! g(t)  = t - theta(t)
//! ```

mod coefficient;

pub use coefficient::{rotational_harvest, seasonal_harvest, Coefficient, Extension};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full parameter set of the harvested population model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Abruptness of density dependence.
    pub gamma: f64,
    /// Fecundity.
    pub r: Coefficient,
    /// Natural mortality.
    pub eta: Coefficient,
    /// Per-capita harvest rate.
    #[serde(alias = "lambda")]
    pub lam: Coefficient,
    /// Carrying capacity.
    #[serde(rename = "K")]
    pub capacity: Coefficient,
    /// Maturation delay; the growth term reads `N(t - theta(t))`.
    pub theta: Coefficient,
    /// Declared common period of all coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "T")]
    pub period: Option<f64>,
}

impl ModelParams {
    /// Constant-coefficient model.
    pub fn constant(r: f64, eta: f64, lam: f64, capacity: f64, gamma: f64, theta: f64) -> Self {
        ModelParams {
            gamma,
            r: r.into(),
            eta: eta.into(),
            lam: lam.into(),
            capacity: capacity.into(),
            theta: theta.into(),
            period: None,
        }
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    /// Structural validation of every coefficient and of the declared period.
    ///
    /// The sign conditions on the coefficients are checked on a sampling grid
    /// by [`crate::analysis::validate_premises`], not here.
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "gamma must be finite, got {}",
                self.gamma
            )));
        }
        for (name, c) in self.coefficients() {
            c.validate()
                .map_err(|e| Error::InvalidInput(format!("coefficient `{name}`: {e}")))?;
        }
        if let Some(period) = self.period {
            if !(period.is_finite() && period > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "period must be > 0, got {period}"
                )));
            }
            for (name, c) in self.coefficients() {
                if !c.is_periodic_with(period) {
                    log::warn!("coefficient `{name}` is not {period}-periodic");
                }
            }
        }
        Ok(())
    }

    pub fn coefficients(&self) -> [(&'static str, &Coefficient); 5] {
        [
            ("r", &self.r),
            ("eta", &self.eta),
            ("lam", &self.lam),
            ("K", &self.capacity),
            ("theta", &self.theta),
        ]
    }

    /// Effective per-capita loss rate `b(t) = eta(t) - lambda(t)`.
    pub fn loss_rate(&self, t: f64) -> f64 {
        self.eta.eval(t) - self.lam.eval(t)
    }

    /// The lagged time `g(t) = t - theta(t)`.
    pub fn lag_time(&self, t: f64) -> Result<f64> {
        let theta = self.theta.eval(t);
        if theta < 0.0 || theta.is_nan() {
            return Err(Error::InvalidDelay { t, theta });
        }
        Ok(t - theta)
    }

    /// Right-hand side of the model at time `t` given `N(t)` and `N(g(t))`.
    pub fn rhs(&self, t: f64, n: f64, n_lag: f64) -> Result<f64> {
        if n < 0.0 || n_lag < 0.0 || n.is_nan() || n_lag.is_nan() {
            return Err(Error::InvalidState { t, n, n_lag });
        }
        Ok(self.growth_factor(t, n_lag) * n)
    }

    /// Per-capita growth `r / (1 + (N_lag/K)^gamma) - b`; its sign is the sign of the rhs for `N > 0`.
    pub fn growth_factor(&self, t: f64, n_lag: f64) -> f64 {
        let hill = 1.0 + (n_lag / self.capacity.eval(t)).powf(self.gamma);
        self.r.eval(t) / hill - self.loss_rate(t)
    }

    /// `K (r/b - 1)^(1/gamma)` with coefficients frozen at `t`.
    ///
    /// For constant coefficients this is the unique positive equilibrium.
    pub fn equilibrium(&self, t: f64) -> Result<f64> {
        let r = self.r.eval(t);
        let b = self.loss_rate(t);
        if !(b > 0.0 && r > b) {
            return Err(Error::NoPositiveEquilibrium { t, r, b });
        }
        Ok(self.capacity.eval(t) * (r / b - 1.0).powf(1.0 / self.gamma))
    }

    /// Largest delay sampled on `grid_n` points over `[0, horizon]`.
    pub fn max_delay(&self, horizon: f64, grid_n: usize) -> f64 {
        let n = grid_n.max(2);
        (0..n)
            .map(|i| self.theta.eval(horizon * i as f64 / (n - 1) as f64))
            .fold(0.0, f64::max)
    }
}

/// Initial data: `N(t) = phi(t)` for `t < 0` and `N(0) = N0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct History {
    pub phi: Coefficient,
    #[serde(rename = "N0", alias = "n0")]
    pub n0: f64,
}

impl History {
    pub fn new(phi: Coefficient, n0: f64) -> Self {
        History { phi, n0 }
    }

    /// `phi ≡ value` and `N0 = value`.
    pub fn constant(value: f64) -> Self {
        History {
            phi: Coefficient::constant(value),
            n0: value,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            self.phi.eval(t)
        } else {
            self.n0
        }
    }

    /// Checks `N0 > 0` and `phi >= 0` on `grid_n` samples of `[-depth, 0)`.
    pub fn validate(&self, depth: f64, grid_n: usize) -> Result<()> {
        self.phi.validate()?;
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return Err(Error::PremiseViolation {
                premise: "N0 > 0".into(),
                t: 0.0,
                value: self.n0,
            });
        }
        let n = grid_n.max(1);
        for i in 0..n {
            let t = -depth * (n - i) as f64 / n as f64;
            let v = self.phi.eval(t);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::PremiseViolation {
                    premise: "phi(t) ≥ 0".into(),
                    t,
                    value: v,
                });
            }
        }
        Ok(())
    }
}
