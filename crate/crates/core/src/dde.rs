//! Method-of-steps integration of scalar delay differential equations.
//!
//! Steps are fixed-size classical Runge–Kutta. Lagged values come from the
//! initial function for `g(t) < 0`, from the cubic Hermite interpolant of the
//! accepted nodes for `0 <= g(t) <= t_n`, and, when the delay is shorter than
//! the step, from the interpolant of the step being computed, which is then
//! refined by a few rounds of fixed-point iteration.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{History, ModelParams};

/// A scalar delay equation `y'(t) = f(t, y(t), y(g(t)))`.
pub trait DelayEquation {
    /// The lagged time `g(t)`; must not exceed `t`.
    fn lag(&self, t: f64) -> Result<f64>;

    fn derivative(&self, t: f64, y: f64, y_lag: f64) -> Result<f64>;

    /// Population models require strictly positive states; generic test
    /// equations may opt out.
    fn requires_positivity(&self) -> bool {
        true
    }
}

impl DelayEquation for ModelParams {
    fn lag(&self, t: f64) -> Result<f64> {
        self.lag_time(t)
    }

    fn derivative(&self, t: f64, y: f64, y_lag: f64) -> Result<f64> {
        self.rhs(t, y, y_lag)
    }
}

/// Closure-backed delay equation.
pub struct DelayFn<G, F> {
    lag: G,
    f: F,
    positive: bool,
}

impl<G, F> DelayFn<G, F>
where
    G: Fn(f64) -> f64,
    F: Fn(f64, f64, f64) -> f64,
{
    pub fn new(lag: G, f: F) -> Self {
        DelayFn {
            lag,
            f,
            positive: true,
        }
    }

    /// Disables the positivity checks of the integrator.
    pub fn allow_negative(mut self) -> Self {
        self.positive = false;
        self
    }
}

impl<G, F> DelayEquation for DelayFn<G, F>
where
    G: Fn(f64) -> f64,
    F: Fn(f64, f64, f64) -> f64,
{
    fn lag(&self, t: f64) -> Result<f64> {
        Ok((self.lag)(t))
    }

    fn derivative(&self, t: f64, y: f64, y_lag: f64) -> Result<f64> {
        Ok((self.f)(t, y, y_lag))
    }

    fn requires_positivity(&self) -> bool {
        self.positive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    pub step: f64,
    pub t_end: f64,
    /// Nodes and stages must stay strictly above this value.
    pub positivity_floor: f64,
    /// Correction rounds when a lag falls inside the current step.
    pub max_lag_iterations: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            step: 1.0 / 64.0,
            t_end: 50.0,
            positivity_floor: 0.0,
            max_lag_iterations: 3,
        }
    }
}

impl IntegrationConfig {
    pub fn new(step: f64, t_end: f64) -> Self {
        IntegrationConfig {
            step,
            t_end,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "t_end must be > 0, got {}",
                self.t_end
            )));
        }
        if !(self.positivity_floor >= 0.0) {
            return Err(Error::InvalidInput("positivity_floor must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub t: f64,
    pub n: f64,
    /// Derivative at the node.
    pub dn: f64,
}

/// Dense-output solution on `[t0, t_end]` with node spacing `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    t0: f64,
    step: f64,
    nodes: Vec<Node>,
    history: History,
}

fn hermite(a: &Node, b: &Node, h: f64, t: f64) -> f64 {
    let s = (t - a.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * a.n + h10 * h * a.dn + h01 * b.n + h11 * h * b.dn
}

impl Trajectory {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Time of the last node; the integrator stops at the first node at or after the requested end.
    pub fn t_end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].t
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// `N(t)`: the initial function before `t0`, node values at nodes, cubic
    /// Hermite interpolation in between.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        let t_end = self.t_end();
        if t.is_nan() || t > t_end + 1e-9 * self.step {
            return Err(Error::OutOfRange { t, t_end });
        }
        if t < self.t0 {
            return Ok(self.history.eval(t - self.t0));
        }
        Ok(dense_eval(&self.nodes, self.t0, self.step, t))
    }

    /// Node `(t, N)` pairs, optionally with `oversample - 1` interpolated points per step.
    pub fn samples(&self, oversample: usize) -> Vec<(f64, f64)> {
        let k = oversample.max(1);
        let mut out = Vec::with_capacity((self.nodes.len() - 1) * k + 1);
        for w in self.nodes.windows(2) {
            out.push((w[0].t, w[0].n));
            for j in 1..k {
                let t = w[0].t + self.step * j as f64 / k as f64;
                out.push((t, hermite(&w[0], &w[1], self.step, t)));
            }
        }
        let last = self.nodes[self.nodes.len() - 1];
        out.push((last.t, last.n));
        out
    }

    /// Writes `t,N` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W, oversample: usize) -> io::Result<()> {
        writeln!(out, "t,N")?;
        for (t, n) in self.samples(oversample) {
            writeln!(out, "{},{}", fmt_f64(t), fmt_f64(n))?;
        }
        Ok(())
    }
}

/// Lossless decimal rendering with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn dense_eval(nodes: &[Node], t0: f64, h: f64, t: f64) -> f64 {
    let x = (t - t0) / h;
    let nearest = x.round();
    if nearest >= 0.0 && (nearest as usize) < nodes.len() && nodes[nearest as usize].t == t {
        return nodes[nearest as usize].n;
    }
    if nodes.len() == 1 {
        return nodes[0].n;
    }
    let i = (x.floor().max(0.0) as usize).min(nodes.len() - 2);
    hermite(&nodes[i], &nodes[i + 1], h, t)
}

/// State shared by the stage evaluations of one step.
struct StepContext<'a> {
    nodes: &'a [Node],
    history: &'a History,
    h: f64,
    /// Estimate of the step being computed: the previous correction round, or
    /// a linear extrapolation from the last node on the first round.
    current: Option<Node>,
    /// Set when some lag fell inside the current step.
    lag_in_step: bool,
}

impl StepContext<'_> {
    fn lagged_value(&mut self, t: f64, lag: f64) -> Result<f64> {
        if lag > t + 1e-12 * self.h.max(t.abs()) {
            return Err(Error::LagAhead { t, lag });
        }
        let last = self.nodes[self.nodes.len() - 1];
        if lag < 0.0 {
            return Ok(self.history.eval(lag));
        }
        // roundoff slack: a lag equal to the last node time up to 1e-12 h is on known data
        if lag <= last.t + 1e-12 * self.h {
            return Ok(dense_eval(self.nodes, 0.0, self.h, lag.min(last.t)));
        }
        self.lag_in_step = true;
        Ok(match self.current {
            Some(next) => hermite(&last, &next, self.h, lag),
            None => last.n + last.dn * (lag - last.t),
        })
    }

    fn derivative<E: DelayEquation + ?Sized>(&mut self, eq: &E, t: f64, y: f64) -> Result<f64> {
        let lag = eq.lag(t)?;
        let y_lag = self.lagged_value(t, lag)?;
        eq.derivative(t, y, y_lag)
    }
}

/// Integrates the model equation from the given initial data.
pub fn integrate(
    params: &ModelParams,
    history: &History,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    params.validate()?;
    if !(history.n0 > 0.0) {
        return Err(Error::PremiseViolation {
            premise: "N0 > 0".into(),
            t: 0.0,
            value: history.n0,
        });
    }
    integrate_equation(params, history, cfg)
}

/// Integrates an arbitrary scalar delay equation on `[0, cfg.t_end]`.
pub fn integrate_equation<E: DelayEquation + ?Sized>(
    eq: &E,
    history: &History,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let h = cfg.step;
    let positive = eq.requires_positivity();
    let floor = cfg.positivity_floor;
    let check = |t: f64, value: f64| -> Result<()> {
        if positive && !(value > floor) {
            Err(Error::PositivityLoss { t, value })
        } else if !value.is_finite() {
            Err(Error::InvalidInput(format!(
                "non-finite state {value} at t = {t}"
            )))
        } else {
            Ok(())
        }
    };

    let steps = ((cfg.t_end / h) - 1e-9).ceil().max(1.0) as usize;
    let mut nodes = Vec::with_capacity(steps + 1);
    let y0 = history.n0;
    check(0.0, y0)?;
    let dy0 = {
        let lag = eq.lag(0.0)?;
        if lag > 0.0 {
            return Err(Error::LagAhead { t: 0.0, lag });
        }
        // g(0) = 0 reads N0, anything earlier reads phi
        eq.derivative(0.0, y0, history.eval(lag))?
    };
    nodes.push(Node {
        t: 0.0,
        n: y0,
        dn: dy0,
    });

    for i in 0..steps {
        let last = nodes[i];
        let t = last.t;
        let t_next = (i + 1) as f64 * h;
        let mut current: Option<Node> = None;
        let mut rounds = 0;
        let next = loop {
            let mut ctx = StepContext {
                nodes: &nodes,
                history,
                h,
                current,
                lag_in_step: false,
            };
            let k1 = last.dn;
            let y2 = last.n + 0.5 * h * k1;
            check(t + 0.5 * h, y2)?;
            let k2 = ctx.derivative(eq, t + 0.5 * h, y2)?;
            let y3 = last.n + 0.5 * h * k2;
            check(t + 0.5 * h, y3)?;
            let k3 = ctx.derivative(eq, t + 0.5 * h, y3)?;
            let y4 = last.n + h * k3;
            check(t_next, y4)?;
            let k4 = ctx.derivative(eq, t_next, y4)?;
            let y_next = last.n + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            check(t_next, y_next)?;
            let dy_next = ctx.derivative(eq, t_next, y_next)?;
            let node = Node {
                t: t_next,
                n: y_next,
                dn: dy_next,
            };
            if !ctx.lag_in_step || rounds >= cfg.max_lag_iterations {
                break node;
            }
            current = Some(node);
            rounds += 1;
        };
        nodes.push(next);
    }

    Ok(Trajectory {
        t0: 0.0,
        step: h,
        nodes,
        history: history.clone(),
    })
}
