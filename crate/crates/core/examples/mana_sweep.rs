//! Harvested mana per lambda^2 against omega * sigma_t, written as CSV.
//!
//! ```bash
//! cargo run --release --example mana_sweep > sweep.csv
//! cargo run --release --example mana_sweep -- quadrature > sweep.csv
//! ```

use magic_harvest::harvest::{sweep, write_csv, HarvestParams, Method, SweepRange};

fn main() -> magic_harvest::Result<()> {
    let method = match std::env::args().nth(1).as_deref() {
        Some("quadrature") => Method::Quadrature,
        _ => Method::Closed,
    };
    let (steps, lambda) = (51, 0.1);
    let rows = sweep(
        &SweepRange::new(0.0, 5.0, steps)?,
        &HarvestParams::from_omega_sigma(lambda, 1.0)?,
        method,
    )?;
    write_csv(&rows, std::io::stdout().lock())?;

    let peak = rows
        .iter()
        .max_by(|a, b| a.mana_general_per_lambda2.total_cmp(&b.mana_general_per_lambda2))
        .expect("non-empty sweep");
    eprintln!(
        "peak on the grid: omega*sigma = {:.2}, M/lambda^2 = {:.4e}",
        peak.omega_sigma, peak.mana_general_per_lambda2
    );
    Ok(())
}
