//! Regulated response integrals by quadrature, extrapolated to zero
//! regulator and compared with the closed forms.
//!
//! ```bash
//! cargo run --release --example quadrature_oracle
//! ```

use magic_harvest::harvest::{
    beta_closed_per_lambda2, f_beta_quadrature, f_q_quadrature, q_closed_per_lambda2, HarvestParams,
};

fn main() -> magic_harvest::Result<()> {
    let x = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let p = HarvestParams::from_omega_sigma(0.1, x)?;

    let q = f_q_quadrature(&p)?;
    println!("F_q at omega*sigma = {x}");
    for s in &q.samples {
        println!("    eps = {:.3e}  F_q = {:.12e}  (quadrature error {:.1e})", s.epsilon, s.value.re, s.quad_error);
    }
    println!(
        "    limit {:.12e} +- {:.1e}, closed form {:.12e}",
        q.limit.value,
        q.limit.error,
        q_closed_per_lambda2(x)
    );

    let b = f_beta_quadrature(&p)?;
    println!("F_beta");
    for (s, plateau) in b.samples.iter().zip(&b.im_eps_plateau) {
        println!("    eps = {:.3e}  Re = {:+.12e}  eps*Im = {:.6e}", s.epsilon, s.value.re, plateau);
    }
    let re = b.re_limit.expect("equal gaps");
    println!(
        "    Re limit {:.12e} +- {:.1e}, closed form {:.12e}",
        re.value,
        re.error,
        beta_closed_per_lambda2(x)
    );
    Ok(())
}
