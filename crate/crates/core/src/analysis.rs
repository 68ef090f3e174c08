//! Hypothesis checks, persistence bounds and periodicity margins.
//!
//! Every `sup`/`inf` over `t >= 0` is approximated by extrema over a uniform
//! sampling grid: one period `[0, T)` when the model declares a period `T`
//! and the horizon equals it, otherwise the closed interval `[0, horizon]`.
//! Integrals over the lag window `[g(t), t]` use composite Simpson.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dde::Trajectory;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::simpson;

/// Lower floor used for the `b(t) >= b > 0` and `K(t) >= k > 0` checks.
pub const DEFAULT_FLOOR: f64 = 1e-9;
pub const DEFAULT_GRID_N: usize = 2048;
pub const DEFAULT_QUAD_N: usize = 64;
/// Absolute slack for trajectory containment checks.
pub const DEFAULT_VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    /// Half-open `[start, end)` when periodic, closed otherwise.
    pub periodic: bool,
}

impl SamplingGrid {
    pub fn for_model(params: &ModelParams, horizon: f64, grid_n: usize) -> Self {
        let periodic = params
            .period
            .is_some_and(|p| (p - horizon).abs() <= 1e-12 * p.max(1.0));
        SamplingGrid {
            start: 0.0,
            end: horizon,
            points: grid_n.max(2),
            periodic,
        }
    }

    pub fn one_period(period: f64, grid_n: usize) -> Self {
        SamplingGrid {
            start: 0.0,
            end: period,
            points: grid_n.max(2),
            periodic: true,
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let span = self.end - self.start;
        let div = if self.periodic {
            self.points
        } else {
            self.points - 1
        } as f64;
        (0..self.points).map(move |i| self.start + span * i as f64 / div)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Premise {
    GammaPositive,
    FecundityPositive,
    LossRateFloor,
    CapacityFloor,
    DelayNonNegative,
    /// Needed by the persistence bounds and the periodicity margins, not by
    /// the integrator.
    FecundityExceedsLoss,
}

impl Premise {
    pub const ALL: [Premise; 6] = [
        Premise::GammaPositive,
        Premise::FecundityPositive,
        Premise::LossRateFloor,
        Premise::CapacityFloor,
        Premise::DelayNonNegative,
        Premise::FecundityExceedsLoss,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Premise::GammaPositive => "γ > 0",
            Premise::FecundityPositive => "r(t) > 0",
            Premise::LossRateFloor => "b(t) ≥ b > 0",
            Premise::CapacityFloor => "K(t) ≥ k > 0",
            Premise::DelayNonNegative => "θ(t) ≥ 0",
            Premise::FecundityExceedsLoss => "r(t) > b(t)",
        }
    }
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiseCheck {
    pub premise: Premise,
    pub label: String,
    pub passed: bool,
    /// Grid time with the smallest margin.
    pub worst_t: f64,
    /// The checked quantity at `worst_t` (for `r > b` this is `r - b`).
    pub worst_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiseReport {
    pub grid: SamplingGrid,
    pub floor: f64,
    pub checks: Vec<PremiseCheck>,
}

impl PremiseReport {
    pub fn check(&self, premise: Premise) -> &PremiseCheck {
        self.checks
            .iter()
            .find(|c| c.premise == premise)
            .expect("every premise is checked")
    }

    pub fn passed(&self, premise: Premise) -> bool {
        self.check(premise).passed
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// First failure among the conditions the model itself requires.
    pub fn first_model_failure(&self) -> Option<&PremiseCheck> {
        self.checks
            .iter()
            .find(|c| !c.passed && c.premise != Premise::FecundityExceedsLoss)
    }

    pub fn first_failure(&self) -> Option<&PremiseCheck> {
        self.checks.iter().find(|c| !c.passed)
    }

    /// `Err(PremiseViolation)` naming the first failed model condition.
    pub fn require_model(&self) -> Result<()> {
        match self.first_model_failure() {
            Some(c) => Err(violation(c)),
            None => Ok(()),
        }
    }

    pub fn require_all(&self) -> Result<()> {
        match self.first_failure() {
            Some(c) => Err(violation(c)),
            None => Ok(()),
        }
    }
}

fn violation(c: &PremiseCheck) -> Error {
    Error::PremiseViolation {
        premise: c.label.clone(),
        t: c.worst_t,
        value: c.worst_value,
    }
}

pub fn validate_premises(params: &ModelParams, horizon: f64, grid_n: usize) -> PremiseReport {
    validate_premises_with_floor(params, horizon, grid_n, DEFAULT_FLOOR)
}

/// Samples the coefficients and reports every hypothesis with its worst grid point.
pub fn validate_premises_with_floor(
    params: &ModelParams,
    horizon: f64,
    grid_n: usize,
    floor: f64,
) -> PremiseReport {
    let grid = SamplingGrid::for_model(params, horizon, grid_n);
    // (worst_t, worst_value) per grid-sampled premise
    let mut worst = [(0.0, f64::INFINITY); 5];
    for t in grid.times() {
        let r = params.r.eval(t);
        let b = params.loss_rate(t);
        let values = [r, b, params.capacity.eval(t), params.theta.eval(t), r - b];
        for (w, v) in worst.iter_mut().zip(values) {
            // NaN always counts as worst
            if v.is_nan() || v < w.1 {
                *w = (t, v);
            }
        }
    }
    let check = |premise: Premise, (t, v): (f64, f64), ok: bool| PremiseCheck {
        premise,
        label: premise.label().to_string(),
        passed: ok,
        worst_t: t,
        worst_value: v,
    };
    let [r, b, k, theta, margin] = worst;
    let checks = vec![
        check(
            Premise::GammaPositive,
            (0.0, params.gamma),
            params.gamma > 0.0,
        ),
        check(Premise::FecundityPositive, r, r.1 > 0.0 && r.1.is_finite()),
        check(Premise::LossRateFloor, b, b.1 >= floor && b.1.is_finite()),
        check(Premise::CapacityFloor, k, k.1 >= floor && k.1.is_finite()),
        check(
            Premise::DelayNonNegative,
            theta,
            theta.1 >= 0.0 && theta.1.is_finite(),
        ),
        check(Premise::FecundityExceedsLoss, margin, margin.1 > 0.0),
    ];
    PremiseReport {
        grid,
        floor,
        checks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsPremises {
    pub r_exceeds_b: bool,
    pub b_floor: bool,
    pub k_floor: bool,
    pub sup_int_b_finite: bool,
    pub sup_int_rb_finite: bool,
}

impl BoundsPremises {
    pub fn all(&self) -> bool {
        self.r_exceeds_b
            && self.b_floor
            && self.k_floor
            && self.sup_int_b_finite
            && self.sup_int_rb_finite
    }
}

/// Lower and upper persistence bounds of a solution with initial value `N0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    /// `inf K (r/b - 1)^(1/gamma)` over the grid.
    pub inner_inf: f64,
    pub inner_sup: f64,
    /// `sup ∫_{g(t)}^t b(s) ds` over the grid.
    pub sup_int_b: f64,
    /// `sup ∫_{g(t)}^t (r(s) - b(s)) ds` over the grid.
    pub sup_int_rb: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    pub premises_ok: BoundsPremises,
    pub grid: SamplingGrid,
    pub quad_n: usize,
}

pub fn persistence_bounds(
    params: &ModelParams,
    n0: f64,
    horizon: f64,
    grid_n: usize,
    quad_n: usize,
) -> Result<BoundsReport> {
    persistence_bounds_with_floor(params, n0, horizon, grid_n, quad_n, DEFAULT_FLOOR)
}

/// Bounds
///
/// ```text
/// lower = min{ N0, inf K (r/b - 1)^(1/gamma) * exp(-sup ∫_{g(t)}^t b) }
/// upper = max{ N0, sup K (r/b - 1)^(1/gamma) * exp( sup ∫_{g(t)}^t (r - b)) }
/// ```
///
/// Fails with `PremiseViolation` where `r <= b` or `b <= 0` on the grid,
/// since `(r/b - 1)^(1/gamma)` is then undefined.
pub fn persistence_bounds_with_floor(
    params: &ModelParams,
    n0: f64,
    horizon: f64,
    grid_n: usize,
    quad_n: usize,
    floor: f64,
) -> Result<BoundsReport> {
    let grid = SamplingGrid::for_model(params, horizon, grid_n);
    let quad_n = quad_n.max(2);
    let b = |s: f64| params.loss_rate(s);
    let rb = |s: f64| params.r.eval(s) - params.loss_rate(s);

    let mut inner_inf = f64::INFINITY;
    let mut inner_sup = f64::NEG_INFINITY;
    let mut sup_int_b = f64::NEG_INFINITY;
    let mut sup_int_rb = f64::NEG_INFINITY;
    let mut premises = BoundsPremises {
        r_exceeds_b: true,
        b_floor: true,
        k_floor: true,
        sup_int_b_finite: true,
        sup_int_rb_finite: true,
    };

    for t in grid.times() {
        let r_t = params.r.eval(t);
        let b_t = b(t);
        let k_t = params.capacity.eval(t);
        if !(b_t > 0.0) {
            return Err(Error::PremiseViolation {
                premise: Premise::LossRateFloor.label().into(),
                t,
                value: b_t,
            });
        }
        if !(r_t > b_t) {
            return Err(Error::PremiseViolation {
                premise: Premise::FecundityExceedsLoss.label().into(),
                t,
                value: r_t - b_t,
            });
        }
        premises.b_floor &= b_t >= floor;
        premises.k_floor &= k_t >= floor;

        let inner = k_t * (r_t / b_t - 1.0).powf(1.0 / params.gamma);
        inner_inf = inner_inf.min(inner);
        inner_sup = inner_sup.max(inner);

        let lag = params.lag_time(t)?;
        let ib = simpson(b, lag, t, quad_n);
        let irb = simpson(rb, lag, t, quad_n);
        premises.sup_int_b_finite &= ib.is_finite();
        premises.sup_int_rb_finite &= irb.is_finite();
        sup_int_b = sup_int_b.max(ib);
        sup_int_rb = sup_int_rb.max(irb);
    }

    let lower = n0.min(inner_inf * (-sup_int_b).exp());
    let upper = n0.max(inner_sup * sup_int_rb.exp());
    Ok(BoundsReport {
        lower,
        upper,
        inner_inf,
        inner_sup,
        sup_int_b,
        sup_int_rb,
        n0,
        premises_ok: premises,
        grid,
        quad_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsVerdict {
    pub passed: bool,
    pub tol: f64,
    pub nodes_checked: usize,
    pub min_n: f64,
    pub max_n: f64,
    /// `(t, N)` pairs outside `[lower - tol, upper + tol]`.
    pub violations: Vec<(f64, f64)>,
}

/// Checks every node of `traj` against the bounds of `report`.
pub fn verify_bounds(traj: &Trajectory, report: &BoundsReport, tol: f64) -> BoundsVerdict {
    let (lo, hi) = (report.lower - tol, report.upper + tol);
    let mut min_n = f64::INFINITY;
    let mut max_n = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for node in traj.nodes() {
        min_n = min_n.min(node.n);
        max_n = max_n.max(node.n);
        if !(node.n >= lo && node.n <= hi) {
            violations.push((node.t, node.n));
        }
    }
    BoundsVerdict {
        passed: violations.is_empty(),
        tol,
        nodes_checked: traj.nodes().len(),
        min_n,
        max_n,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PeriodicityCondition {
    B1Holds,
    B2Holds,
    Both,
    Neither,
}

impl PeriodicityCondition {
    /// Whether a positive periodic solution is guaranteed to exist.
    pub fn guarantees_existence(self) -> bool {
        !matches!(self, PeriodicityCondition::Neither)
    }
}

impl fmt::Display for PeriodicityCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeriodicityCondition::B1Holds => "B1_HOLDS",
            PeriodicityCondition::B2Holds => "B2_HOLDS",
            PeriodicityCondition::Both => "BOTH",
            PeriodicityCondition::Neither => "NEITHER",
        })
    }
}

/// Extremes of `v(t) = (r/b - 1) K^gamma` over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityReport {
    #[serde(rename = "m")]
    pub inf_margin: f64,
    #[serde(rename = "M")]
    pub sup_margin: f64,
    /// `(1/gamma) sup ln v(t)`.
    #[serde(rename = "B")]
    pub log_bound: f64,
    pub condition: PeriodicityCondition,
    #[serde(rename = "T")]
    pub period: f64,
    pub grid_n: usize,
}

pub fn periodicity_margins(params: &ModelParams, grid_n: usize) -> Result<PeriodicityReport> {
    let period = params
        .period
        .ok_or_else(|| Error::InvalidInput("periodicity margins need a declared period".into()))?;
    let grid = SamplingGrid::one_period(period, grid_n);
    let mut m = f64::INFINITY;
    let mut big_m = f64::NEG_INFINITY;
    for t in grid.times() {
        let r = params.r.eval(t);
        let b = params.loss_rate(t);
        if !(b > 0.0) {
            return Err(Error::PremiseViolation {
                premise: Premise::LossRateFloor.label().into(),
                t,
                value: b,
            });
        }
        if !(r > b) {
            return Err(Error::PremiseViolation {
                premise: Premise::FecundityExceedsLoss.label().into(),
                t,
                value: r - b,
            });
        }
        let v = (r / b - 1.0) * params.capacity.eval(t).powf(params.gamma);
        m = m.min(v);
        big_m = big_m.max(v);
    }
    let condition = match (m > 1.0, big_m < 1.0) {
        (true, true) => PeriodicityCondition::Both,
        (true, false) => PeriodicityCondition::B1Holds,
        (false, true) => PeriodicityCondition::B2Holds,
        (false, false) => PeriodicityCondition::Neither,
    };
    Ok(PeriodicityReport {
        inf_margin: m,
        sup_margin: big_m,
        log_bound: big_m.ln() / params.gamma,
        condition,
        period,
        grid_n: grid.points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::{integrate, IntegrationConfig};
    use crate::model::{Coefficient, History};

    fn base() -> ModelParams {
        ModelParams::constant(2.0, 1.0, 0.0, 1.0, 1.0, 0.5)
    }

    #[test]
    fn constant_scenario_passes_premises() {
        assert!(validate_premises(&base(), 10.0, 64).all_passed());
    }

    #[test]
    fn overharvest_fails_loss_rate_floor() {
        let mut p = base();
        p.lam = 1.5.into();
        let report = validate_premises(&p, 10.0, 64);
        let c = report.check(Premise::LossRateFloor);
        assert!(!c.passed);
        assert_eq!(c.worst_value, -0.5);
        assert_eq!(report.first_model_failure().unwrap().label, "b(t) ≥ b > 0");
    }

    #[test]
    fn seasonal_fecundity_dips_below_mortality() {
        let mut p = base();
        p.r = Coefficient::cosine(2.0, 1.0, 2.0, 0.25);
        p.eta = 1.9.into();
        p.period = Some(1.0);
        let report = validate_premises(&p, 1.0, 2048);
        let c = report.check(Premise::FecundityExceedsLoss);
        assert!(!c.passed);
        assert!((c.worst_t - 0.75).abs() < 1e-3, "worst at {}", c.worst_t);
        assert!((c.worst_value - (1.0 - 1.9)).abs() < 1e-6);
        assert!(report.first_model_failure().is_none());
    }

    #[test]
    fn periodic_grid_is_half_open() {
        let p = base().with_period(1.0);
        let g = SamplingGrid::for_model(&p, 1.0, 4);
        assert!(g.periodic);
        assert_eq!(g.times().collect::<Vec<_>>(), vec![0.0, 0.25, 0.5, 0.75]);
        let g = SamplingGrid::for_model(&p, 2.0, 3);
        assert_eq!(g.times().collect::<Vec<_>>(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn closed_form_bounds() {
        let r = persistence_bounds(&base(), 1.0, 10.0, 128, 16).unwrap();
        assert!((r.lower - (-0.5f64).exp()).abs() < 1e-10);
        assert!((r.upper - 0.5f64.exp()).abs() < 1e-10);
        assert!(r.premises_ok.all());

        let mut p = base();
        p.theta = 0.0.into();
        let r = persistence_bounds(&p, 1.0, 10.0, 128, 16).unwrap();
        assert_eq!((r.lower, r.upper), (1.0, 1.0));

        let p = ModelParams::constant(2.0, 1.0, 0.0, 7.0, 3.0, 1.0);
        let r = persistence_bounds(&p, 5.0, 10.0, 128, 16).unwrap();
        assert!((r.lower - 7.0 / std::f64::consts::E).abs() < 1e-10);
        assert!((r.upper - 7.0 * std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn bounds_reject_r_not_above_b() {
        let p = ModelParams::constant(1.0, 1.0, 0.0, 1.0, 1.0, 0.5);
        let err = persistence_bounds(&p, 1.0, 10.0, 16, 4).unwrap_err();
        assert!(
            matches!(err, Error::PremiseViolation { ref premise, .. } if premise == "r(t) > b(t)")
        );
    }

    #[test]
    fn verify_examples() {
        let p = base();
        let report = persistence_bounds(&p, 1.0, 10.0, 128, 16).unwrap();
        let eq = integrate(
            &p,
            &History::constant(1.0),
            &IntegrationConfig::new(0.125, 10.0),
        )
        .unwrap();
        assert!(verify_bounds(&eq, &report, DEFAULT_VERIFY_TOL).passed);

        // N ≡ 2 is the equilibrium of K = 2, which lies above e^0.5
        let q = ModelParams::constant(2.0, 1.0, 0.0, 2.0, 1.0, 0.5);
        let two = integrate(
            &q,
            &History::constant(2.0),
            &IntegrationConfig::new(0.125, 10.0),
        )
        .unwrap();
        let verdict = verify_bounds(&two, &report, DEFAULT_VERIFY_TOL);
        assert!(!verdict.passed);
        assert_eq!(verdict.violations.len(), verdict.nodes_checked);

        let mut pinched = base();
        pinched.theta = 0.0.into();
        let tight = persistence_bounds(&pinched, 1.0, 10.0, 128, 16).unwrap();
        assert!(verify_bounds(&eq, &tight, 1e-9).passed);
    }

    #[test]
    fn margins_examples() {
        let p = ModelParams::constant(2.0, 1.0, 0.0, 2.0, 1.0, 0.5).with_period(1.0);
        let r = periodicity_margins(&p, 64).unwrap();
        assert_eq!((r.inf_margin, r.sup_margin), (2.0, 2.0));
        assert!((r.log_bound - 2f64.ln()).abs() < 1e-12);
        assert_eq!(r.condition, PeriodicityCondition::B1Holds);

        let p = ModelParams::constant(1.5, 1.0, 0.0, 1.0, 1.0, 0.5).with_period(1.0);
        let r = periodicity_margins(&p, 64).unwrap();
        assert_eq!(r.inf_margin, 0.5);
        assert_eq!(r.condition, PeriodicityCondition::B2Holds);
        assert!(r.log_bound < 0.0);

        let mut p = ModelParams::constant(2.0, 1.0, 0.0, 1.0, 1.0, 0.5).with_period(1.0);
        p.capacity = Coefficient::cosine(1.0, 0.5, 2.0, 0.75);
        let r = periodicity_margins(&p, 2048).unwrap();
        assert!((r.inf_margin - 0.5).abs() < 1e-12);
        assert!((r.sup_margin - 1.5).abs() < 1e-12);
        assert_eq!(r.condition, PeriodicityCondition::Neither);
    }

    #[test]
    fn margins_need_period() {
        assert!(matches!(
            periodicity_margins(&base(), 16),
            Err(Error::InvalidInput(_))
        ));
    }
}
