//! A single run of the pipeline, printed as JSON, plus the three mana routes
//! side by side.

use magic_harvest::harvest::{run_pipeline, HarvestParams, Method};

fn main() -> magic_harvest::Result<()> {
    let p = HarvestParams::new(0.1, 2.0, 0.5)?;
    let closed = run_pipeline(&p, Method::Closed)?;
    let quad = run_pipeline(&p, Method::Quadrature)?;
    for r in [&closed, &quad] {
        println!(
            "{:?}: q = {:.9e}, beta = {:.9e}, mana general {:.9e}, family {:.9e}, closed {:.9e}",
            r.method, r.q, r.beta.re, r.mana_general, r.mana_family, r.mana_closed
        );
    }
    println!("{}", quad.to_json());
    Ok(())
}
