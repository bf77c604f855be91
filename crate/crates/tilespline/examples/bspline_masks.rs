//! Tile B-spline masks: binomial coefficients along the digit, sum rules, JSON form.

use tilespline::lattice::Preset;
use tilespline::mask::{bspline_mask, sum_rules_order, symmetrize};

fn main() -> tilespline::Result<()> {
    let (m, d) = Preset::Bear.system();
    for n in 0..=4 {
        let mask = bspline_mask(&m, &d, n)?;
        let coeffs: Vec<String> = mask.coeffs().values().map(|c| c.to_string()).collect();
        println!(
            "bear B{n}: {} coefficients [{}], sum rules of order {:?}",
            mask.len(),
            coeffs.join(", "),
            sum_rules_order(&mask)
        );
    }
    let sym = symmetrize(&bspline_mask(&m, &d, 1)?);
    println!("symmetrized bear B1 has {} coefficients", sym.len());
    let json = serde_json::to_string_pretty(&bspline_mask(&m, &d, 2)?.to_json())?;
    println!("{json}");
    Ok(())
}
