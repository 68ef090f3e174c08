//! Integrates the scalar test equation y'(t) = -y(t - 1), y = 1 on t <= 0,
//! and compares against its piecewise-polynomial solution.

use harvest_dde::dde::{integrate_equation, DelayFn, IntegrationConfig};
use harvest_dde::History;

fn exact(t: f64) -> f64 {
    match t {
        t if t <= 1.0 => 1.0 - t,
        t if t <= 2.0 => 1.0 - t + (t - 1.0).powi(2) / 2.0,
        t => {
            let u = t - 2.0;
            -0.5 + u * u / 2.0 - u.powi(3) / 6.0
        }
    }
}

fn main() -> harvest_dde::Result<()> {
    let eq = DelayFn::new(|t| t - 1.0, |_t, _y, y_lag| -y_lag).allow_negative();
    let traj = integrate_equation(
        &eq,
        &History::constant(1.0),
        &IntegrationConfig::new(1.0 / 64.0, 3.0),
    )?;

    println!(
        "{:>6} {:>22} {:>22} {:>10}",
        "t", "numeric", "exact", "error"
    );
    for i in 0..=12 {
        let t = 0.25 * f64::from(i);
        let y = traj.evaluate(t)?;
        println!(
            "{t:>6.2} {y:>22.16} {:>22.16} {:>10.2e}",
            exact(t),
            (y - exact(t)).abs()
        );
    }
    Ok(())
}
