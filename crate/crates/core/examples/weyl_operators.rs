//! Weyl-Heisenberg operators and phase-point operators in odd dimension.

use magic_harvest::phase_space::{hermitian_deviation, trace_product, weyl, PhaseSpace, WeylIndex};

fn main() -> magic_harvest::Result<()> {
    for n in [3, 5, 7] {
        let space = PhaseSpace::new(n)?;
        let t = weyl(n, WeylIndex::new(1, 1))?;
        println!("n = {n}: T(1,1)^n = I ? {}", {
            let mut p = t.clone();
            for _ in 1..n {
                p *= &t;
            }
            (p - magic_harvest::phase_space::CMatrix::identity(n, n))
                .iter()
                .all(|z| z.norm() < 1e-12)
        });

        let origin = space.phase_point(WeylIndex::new(0, 0));
        let other = space.phase_point(WeylIndex::new(1, 2 % n));
        println!(
            "    A_0 Hermitian deviation {:.1e}, Tr A_0 = {:.3}, Tr(A_0 A_0) = {:.3}, Tr(A_0 A_b) = {:.1e}",
            hermitian_deviation(origin),
            origin.trace().re,
            trace_product(origin, origin).re,
            trace_product(origin, other).norm()
        );

        // displacing A_a by T_b lands on A_(a+b)
        let (a, b) = (WeylIndex::new(1, 0), WeylIndex::new(2, 1));
        let moved = space.displace(b, space.phase_point(a));
        let target = space.phase_point(a.add(n, b));
        let dev = (moved - target).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        println!("    covariance deviation {dev:.1e}");
    }
    Ok(())
}
