//! The three-level detector: selection rules of the monopole moment and the
//! mana of the `(p, q, beta)` state family.

use magic_harvest::detector::{family_mana, parity_support, DetectorFamilyState};
use magic_harvest::phase_space::PhaseSpace;
use num_complex::Complex64;

fn main() -> magic_harvest::Result<()> {
    for taus in [vec![0.3], vec![0.3, -1.2], vec![0.1, 0.5, 2.0], vec![1.0, -1.0, 0.2, 0.7]] {
        println!("{} factors reach {:?}", taus.len(), parity_support(&taus, 1.0, 1.4));
    }

    let space = PhaseSpace::new(3)?;
    let (q, beta) = (0.02, Complex64::new(-0.015, 0.004));
    for p in [0.5, 0.7, 0.9, 0.95] {
        let state = DetectorFamilyState::new(p, q, beta)?;
        let general = space.mana(&state.assemble()?)?;
        println!("p = {p:.2}: mana from Wigner function {general:.15}, closed formula {:.15}", state.mana());
    }

    // beta = -q/2 is the boundary of the zero-mana region
    println!("family_mana(q, -q/2) = {:e}", family_mana(q, Complex64::new(-q / 2.0, 0.0)));
    Ok(())
}
