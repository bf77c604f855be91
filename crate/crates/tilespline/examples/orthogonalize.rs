//! Orthogonalized refinement coefficients of Bear-2 and the Gram check of the new basis.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use tilespline::lattice::Preset;
use tilespline::mask::bspline_mask;
use tilespline::ortho::{gram_check, inv_sqrt_fourier, ortho_mask, phi_coeffs};

fn main() -> tilespline::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-output".into()));
    fs::create_dir_all(&out)?;
    let (m, d) = Preset::Bear.system();
    let mask = bspline_mask(&m, &d, 1)?;
    let phi = phi_coeffs(&mask)?;
    println!("Φ has {} coefficients, min on grid {:.4}", phi.coeffs.len(), phi.min_on_grid(256));
    let b = inv_sqrt_fourier(&phi, 256)?;
    println!("Gram deviation of φ_1 = Σ b_k φ(· − k): {:.1e}", gram_check(&b, &phi, 256));
    let c = ortho_mask(&mask, &phi, 256)?;
    println!("{} coefficients, sum {:.12}", c.len(), c.sum());
    for (k, x) in c.sorted_by_magnitude().into_iter().take(12) {
        println!("  c{k:?} = {x:+.5}");
    }
    c.write_csv(BufWriter::new(File::create(out.join("bear2_ortho.csv"))?))?;
    println!("wrote {}", out.join("bear2_ortho.csv").display());
    Ok(())
}
