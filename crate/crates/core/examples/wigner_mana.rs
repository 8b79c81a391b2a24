//! Discrete Wigner function and mana of a few qutrit states.
//!
//! ```bash
//! cargo run --example wigner_mana
//! ```

use magic_harvest::phase_space::{DensityMatrix, PhaseSpace, WeylIndex};
use num_complex::Complex64;

fn print_grid(name: &str, space: &PhaseSpace, rho: &DensityMatrix) -> magic_harvest::Result<()> {
    let w = space.wigner(rho)?;
    println!("{name}: mana = {:.12}", w.mana());
    for a in 0..space.dim() {
        let row: Vec<String> = (0..space.dim())
            .map(|ap| format!("{:+.4}", w.get(WeylIndex::new(a, ap))))
            .collect();
        println!("    {}", row.join("  "));
    }
    Ok(())
}

fn main() -> magic_harvest::Result<()> {
    let space = PhaseSpace::new(3)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64| Complex64::new(re, 0.0);

    print_grid("|0><0|", &space, &DensityMatrix::basis(3, 0)?)?;
    print_grid("I/3", &space, &DensityMatrix::maximally_mixed(3)?)?;
    let strange = DensityMatrix::pure(&[c(0.0), c(s), c(-s)])?;
    print_grid("(|1> - |2>)/sqrt2", &space, &strange)?;
    println!("ln(5/3) = {:.12}", (5.0f64 / 3.0).ln());

    // a state read from the JSON exchange format
    let text = r#"{"dim": 3, "entries": [[[0.5,0],[0,0],[0.2,0.1]],
                                         [[0,0],[0.25,0],[0,0]],
                                         [[0.2,-0.1],[0,0],[0.25,0]]]}"#;
    print_grid("from JSON", &space, &DensityMatrix::from_json(text)?)?;
    Ok(())
}
