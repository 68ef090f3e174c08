//! Sweeps the harvest peak and window of a loaded scenario and prints the
//! bounds and margins per cell.

use std::path::Path;

use harvest_dde::cli::run_sweep;
use harvest_dde::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/harvest_sweep.json");
    let scenario = Scenario::load(&path)?;
    let spec = scenario
        .sweep
        .clone()
        .ok_or("scenario has no sweep section")?;
    let out = std::env::temp_dir().join("harvest-dde-sweep");
    let rows = run_sweep(&scenario, &spec, &out)?;

    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
    println!(
        "{:>5} {:>6} {:>6} {:>9} {:>9} {:>8}  note",
        "peak", "H", "ok", "lower", "upper", "M"
    );
    for row in &rows {
        println!(
            "{:>5} {:>6} {:>6} {:>9} {:>9} {:>8}  {}",
            row.values[0],
            row.values[1],
            row.premises_ok,
            fmt(row.lower),
            fmt(row.upper),
            fmt(row.big_m),
            row.failed_premise.as_deref().unwrap_or(""),
        );
    }
    println!("wrote {}", out.join(&scenario.outputs.sweep).display());
    Ok(())
}
