//! Compares harvesting every summer with a three-year rotation in which the
//! area is open one year in three.

use harvest_dde::{
    integrate, persistence_bounds, Coefficient, History, IntegrationConfig, ModelParams,
};

fn main() -> harvest_dde::Result<()> {
    let base = ModelParams::constant(2.0, 1.0, 0.0, 1.0, 1.0, 1.5);
    let schedules = [
        (
            "every year",
            Coefficient::rotational(0.5, 0.25, 0.25, 1, 0),
            1.0,
        ),
        (
            "one year in three",
            Coefficient::rotational(0.5, 0.25, 0.25, 3, 0),
            3.0,
        ),
    ];

    for (name, lam, period) in schedules {
        let params = ModelParams {
            lam,
            ..base.clone()
        }
        .with_period(period);
        let traj = integrate(
            &params,
            &History::constant(1.0),
            &IntegrationConfig::new(1.0 / 64.0, 30.0),
        )?;
        let bounds = persistence_bounds(&params, 1.0, period, 2048, 64)?;
        let tail: Vec<f64> = traj
            .nodes()
            .iter()
            .filter(|n| n.t >= 24.0)
            .map(|n| n.n)
            .collect();
        let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("{name}");
        println!("  open years in [0, 6): {:?}", open_years(&params.lam, 6));
        println!(
            "  bounds            [{:.5}, {:.5}]",
            bounds.lower, bounds.upper
        );
        println!("  N over [24, 30]   [{min:.5}, {max:.5}]");
    }
    Ok(())
}

fn open_years(lam: &Coefficient, years: i32) -> Vec<i32> {
    (0..years)
        .filter(|&y| lam.eval(f64::from(y) + 0.375) > 0.0)
        .collect()
}
