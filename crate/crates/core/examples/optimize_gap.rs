//! Gap-time product that maximizes the harvested mana.

use magic_harvest::harvest::{mana_closed_per_lambda2, optimize};

fn main() -> magic_harvest::Result<()> {
    for lambda in [0.01, 0.1] {
        let opt = optimize(lambda)?;
        println!(
            "lambda = {lambda}: x* = {:.9}, M* = {:.6e}, M*/lambda^2 = {:.9e}",
            opt.x_star, opt.mana_star, opt.mana_star_per_lambda2
        );
    }
    // the optimum is where d/dx [x erfc(x / sqrt 2)] changes sign
    let x = optimize(0.1)?.x_star;
    let h = 1e-5;
    let slope = (mana_closed_per_lambda2(x + h) - mana_closed_per_lambda2(x - h)) / (2.0 * h);
    println!("slope at x*: {slope:.1e}");
    Ok(())
}
