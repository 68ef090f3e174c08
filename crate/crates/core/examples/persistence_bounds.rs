//! Persistence bounds for the constant-coefficient model as the delay grows,
//! next to their closed form `K (r/b - 1)^(1/gamma) exp(-b theta)` and
//! `K (r/b - 1)^(1/gamma) exp((r - b) theta)`.

use harvest_dde::{persistence_bounds, ModelParams};

fn main() -> harvest_dde::Result<()> {
    let (r, b, k, gamma) = (2.0, 1.0, 1.0, 1.0);
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "theta", "lower", "closed", "upper", "closed"
    );
    for i in 0..=8 {
        let theta = 0.25 * f64::from(i);
        let params = ModelParams::constant(r, b, 0.0, k, gamma, theta);
        let report = persistence_bounds(&params, 1.0, 10.0, 2048, 64)?;
        let inner = k * (r / b - 1.0f64).powf(1.0 / gamma);
        println!(
            "{theta:>6.2} {:>12.8} {:>12.8} {:>12.8} {:>12.8}",
            report.lower,
            (inner * (-b * theta).exp()).min(1.0),
            report.upper,
            (inner * ((r - b) * theta).exp()).max(1.0),
        );
    }
    Ok(())
}
