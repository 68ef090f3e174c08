//! Time-varying scalar coefficients and harvest schedules.
//!
//! Every coefficient of the model (fecundity, mortality, harvest rate,
//! carrying capacity, maturation delay) is a [`Coefficient`]. The cosine
//! form is `base + amplitude * cos(omega * pi * (t - phase))`, so its period
//! is `2 / omega`; annual forcing uses `omega = 2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_peak() -> f64 {
    0.5
}

/// How a tabulated coefficient is continued outside its knot range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Extension {
    /// Hold the first/last knot value.
    Clamped,
    /// Repeat with the given period, starting at the first knot.
    Periodic { period: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coefficient {
    Constant {
        value: f64,
    },
    Cosine {
        base: f64,
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// Half-sine pulse over `(n + t_start, n + t_start + H)` in every year `n`.
    SeasonalPulse {
        #[serde(default = "default_peak")]
        peak: f64,
        #[serde(rename = "H")]
        window: f64,
        t_start: f64,
    },
    /// Seasonal pulse that is only open in years with `n mod cycle == open_offset`.
    RotationalPulse {
        #[serde(default = "default_peak")]
        peak: f64,
        #[serde(rename = "H")]
        window: f64,
        t_start: f64,
        cycle: u32,
        open_offset: u32,
    },
    /// Piecewise-linear interpolation through `(t, value)` knots.
    Tabulated {
        knots: Vec<(f64, f64)>,
        extension: Extension,
    },
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Coefficient::Constant { value }
    }

    pub fn cosine(base: f64, amplitude: f64, omega: f64, phase: f64) -> Self {
        Coefficient::Cosine {
            base,
            amplitude,
            omega,
            phase,
        }
    }

    pub fn seasonal(peak: f64, window: f64, t_start: f64) -> Self {
        Coefficient::SeasonalPulse {
            peak,
            window,
            t_start,
        }
    }

    pub fn rotational(peak: f64, window: f64, t_start: f64, cycle: u32, open_offset: u32) -> Self {
        Coefficient::RotationalPulse {
            peak,
            window,
            t_start,
            cycle,
            open_offset,
        }
    }

    /// Builds a tabulated coefficient, rejecting knots that are not strictly increasing.
    pub fn tabulated(knots: Vec<(f64, f64)>, extension: Extension) -> Result<Self> {
        let c = Coefficient::Tabulated { knots, extension };
        c.validate()?;
        Ok(c)
    }

    /// Checks the structural constraints of each variant.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "{name} must be finite, got {v}"
                )))
            }
        };
        match *self {
            Coefficient::Constant { value } => finite("value", value),
            Coefficient::Cosine {
                base,
                amplitude,
                omega,
                phase,
            } => {
                finite("base", base)?;
                finite("amplitude", amplitude)?;
                finite("omega", omega)?;
                finite("phase", phase)
            }
            Coefficient::SeasonalPulse {
                peak,
                window,
                t_start,
            } => check_window(peak, window, t_start),
            Coefficient::RotationalPulse {
                peak,
                window,
                t_start,
                cycle,
                open_offset,
            } => {
                check_window(peak, window, t_start)?;
                if cycle == 0 {
                    return Err(Error::InvalidInput(
                        "rotation cycle must be at least 1".into(),
                    ));
                }
                if open_offset >= cycle {
                    return Err(Error::InvalidInput(format!(
                        "open_offset {open_offset} must be below cycle {cycle}"
                    )));
                }
                Ok(())
            }
            Coefficient::Tabulated {
                ref knots,
                extension,
            } => {
                if knots.is_empty() {
                    return Err(Error::InvalidInput(
                        "tabulated coefficient has no knots".into(),
                    ));
                }
                for &(t, v) in knots {
                    finite("knot time", t)?;
                    finite("knot value", v)?;
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidInput(
                        "tabulated knots must be strictly increasing in t".into(),
                    ));
                }
                if let Extension::Periodic { period } = extension {
                    let span = knots[knots.len() - 1].0 - knots[0].0;
                    if !(period.is_finite() && period > span) {
                        return Err(Error::InvalidInput(format!(
                            "periodic extension period {period} must exceed the knot span {span}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Coefficient::Constant { value } => value,
            Coefficient::Cosine {
                base,
                amplitude,
                omega,
                phase,
            } => base + amplitude * (omega * PI * (t - phase)).cos(),
            Coefficient::SeasonalPulse {
                peak,
                window,
                t_start,
            } => seasonal_harvest(t, peak, window, t_start),
            Coefficient::RotationalPulse {
                peak,
                window,
                t_start,
                cycle,
                open_offset,
            } => rotational_harvest(t, peak, window, t_start, cycle, open_offset),
            Coefficient::Tabulated {
                ref knots,
                extension,
            } => eval_tabulated(knots, extension, t),
        }
    }

    /// The smallest period of the coefficient, or `None` if it is constant.
    pub fn natural_period(&self) -> Option<f64> {
        match *self {
            Coefficient::Constant { .. } => None,
            Coefficient::Cosine {
                amplitude, omega, ..
            } => (amplitude != 0.0 && omega != 0.0).then(|| 2.0 / omega.abs()),
            Coefficient::SeasonalPulse { .. } => Some(1.0),
            Coefficient::RotationalPulse { cycle, .. } => Some(f64::from(cycle)),
            Coefficient::Tabulated { extension, .. } => match extension {
                Extension::Periodic { period } => Some(period),
                Extension::Clamped => Some(f64::INFINITY),
            },
        }
    }

    /// Whether the coefficient is periodic with period `period` (up to a relative 1e-9).
    pub fn is_periodic_with(&self, period: f64) -> bool {
        match self.natural_period() {
            None => true,
            Some(p) if p.is_finite() => {
                let ratio = period / p;
                ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0)
            }
            Some(_) => false,
        }
    }
}

impl From<f64> for Coefficient {
    fn from(value: f64) -> Self {
        Coefficient::Constant { value }
    }
}

fn check_window(peak: f64, window: f64, t_start: f64) -> Result<()> {
    if !(peak.is_finite() && peak >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "pulse peak must be >= 0, got {peak}"
        )));
    }
    if !(window > 0.0) {
        return Err(Error::InvalidInput(format!(
            "harvest window H must be > 0, got {window}"
        )));
    }
    if !(t_start >= 0.0 && t_start + window <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "harvest window [{t_start}, {}] must lie within one year",
            t_start + window
        )));
    }
    Ok(())
}

/// Half-sine harvest pulse: `peak * sin(pi (t - n - t_start) / H)` inside the
/// open window of year `n = floor(t)`, zero elsewhere.
pub fn seasonal_harvest(t: f64, peak: f64, window: f64, t_start: f64) -> f64 {
    let n = t.floor();
    let s = t - n - t_start;
    if s > 0.0 && s < window {
        peak * (PI * s / window).sin()
    } else {
        0.0
    }
}

/// Seasonal pulse restricted to the open year of each `cycle`-year rotation.
pub fn rotational_harvest(
    t: f64,
    peak: f64,
    window: f64,
    t_start: f64,
    cycle: u32,
    open_offset: u32,
) -> f64 {
    let year = t.floor() as i64;
    if year.rem_euclid(i64::from(cycle.max(1))) == i64::from(open_offset) {
        seasonal_harvest(t, peak, window, t_start)
    } else {
        0.0
    }
}

fn eval_tabulated(knots: &[(f64, f64)], extension: Extension, t: f64) -> f64 {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    match extension {
        Extension::Clamped => {
            if t <= first.0 {
                first.1
            } else if t >= last.0 {
                last.1
            } else {
                interpolate(knots, t)
            }
        }
        Extension::Periodic { period } => {
            let local = first.0 + (t - first.0).rem_euclid(period);
            if local >= last.0 {
                // wrap segment between the last knot and the first knot one period later
                let w = (local - last.0) / (first.0 + period - last.0);
                last.1 + w * (first.1 - last.1)
            } else {
                interpolate(knots, local)
            }
        }
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let i = knots.partition_point(|k| k.0 <= t);
    if i == 0 {
        return knots[0].1;
    }
    if i == knots.len() {
        return knots[i - 1].1;
    }
    let (t0, v0) = knots[i - 1];
    let (t1, v1) = knots[i];
    if t == t0 {
        return v0;
    }
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}
