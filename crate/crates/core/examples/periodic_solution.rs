//! Searches for the periodic solution of a model with seasonally varying
//! carrying capacity and reports the margin condition alongside.

use harvest_dde::periodic::periodicity_defect;
use harvest_dde::{
    find_periodic, integrate, periodicity_margins, Coefficient, HistorySegment, IntegrationConfig,
    ModelParams, PeriodicConfig,
};

fn main() -> harvest_dde::Result<()> {
    let mut params = ModelParams::constant(2.0, 1.0, 0.0, 1.0, 1.0, 0.25).with_period(1.0);
    params.capacity = Coefficient::cosine(1.0, 0.25, 2.0, 0.75);

    let margins = periodicity_margins(&params, 2048)?;
    println!(
        "m = {:.4}, M = {:.4}, B = {:.4}: {}",
        margins.inf_margin, margins.sup_margin, margins.log_bound, margins.condition
    );

    let cfg = PeriodicConfig::default();
    let seed = HistorySegment::constant_for(&params, &cfg, 1.0)?;
    let result = find_periodic(&params, &seed, &cfg)?;
    println!(
        "converged after {} iterations, residual {:.2e}",
        result.iterations, result.residual
    );
    for (i, r) in result.residual_trace.iter().enumerate().step_by(4) {
        println!("  iteration {:>3}: {r:.3e}", i + 1);
    }

    let two = integrate(
        &params,
        &result.final_segment.to_history(),
        &IntegrationConfig::new(cfg.step, 2.0),
    )?;
    println!(
        "sup |N(t + 1) - N(t)| = {:.2e}",
        periodicity_defect(&two, 1.0, cfg.step)?
    );
    println!();
    for i in 0..=8 {
        let t = f64::from(i) / 8.0;
        println!(
            "  t = {t:.3}  K = {:.4}  N = {:.6}",
            params.capacity.eval(t),
            result.trajectory_one_period.evaluate(t)?
        );
    }
    Ok(())
}
