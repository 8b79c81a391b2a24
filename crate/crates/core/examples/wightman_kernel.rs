//! The regulated vacuum two-point function along an inertial worldline.

use magic_harvest::field_kernel::{momentum_space_prefactor, InertialMasslessScalar, RegulatedField, TwoPointFunction};

fn main() -> magic_harvest::Result<()> {
    println!("prefactor at d = 3: {:.15} (1/4pi^2 = {:.15})", momentum_space_prefactor(3.0), 0.25 / std::f64::consts::PI.powi(2));
    for eps in [0.1, 0.01, 0.001] {
        let w = InertialMasslessScalar.kernel(eps)?;
        println!("eps = {eps}:");
        for dt in [0.0, eps, 3.0 * eps, 1.0] {
            let v = w.value(dt, 0.0);
            println!("    W(dt = {dt:<6}) = {:+.6e} {:+.6e}i", v.re, v.im);
        }
    }
    Ok(())
}
