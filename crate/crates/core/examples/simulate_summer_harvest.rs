//! Simulates a population harvested for three months each summer and checks
//! that the trajectory stays within the persistence bounds.

use harvest_dde::{
    integrate, persistence_bounds, verify_bounds, Coefficient, History, IntegrationConfig,
    ModelParams,
};

fn main() -> harvest_dde::Result<()> {
    let mut params = ModelParams::constant(2.0, 1.0, 0.0, 1.0, 1.0, 0.25).with_period(1.0);
    params.lam = Coefficient::seasonal(0.5, 0.25, 0.25);

    let history = History::constant(1.0);
    let traj = integrate(&params, &history, &IntegrationConfig::new(1.0 / 64.0, 20.0))?;
    let bounds = persistence_bounds(&params, history.n0, 1.0, 2048, 64)?;
    let verdict = verify_bounds(&traj, &bounds, 1e-6);

    println!("bounds      [{:.6}, {:.6}]", bounds.lower, bounds.upper);
    println!("trajectory  [{:.6}, {:.6}]", verdict.min_n, verdict.max_n);
    println!("contained   {}", verdict.passed);
    println!();
    println!("last year, monthly:");
    for month in 0..=12 {
        let t = 19.0 + f64::from(month) / 12.0;
        println!(
            "  t = {t:7.4}  lambda = {:.4}  N = {:.6}",
            params.lam.eval(t),
            traj.evaluate(t)?
        );
    }
    Ok(())
}
