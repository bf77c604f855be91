//! Exact values of a tile B-spline on refined lattices.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use tilespline::lattice::Preset;
use tilespline::mask::bspline_mask;
use tilespline::refine::{eval_point, integer_values, partition_of_unity_deviation, refine_values, transition_family};
use tilespline::tile::omega_set;

fn main() -> tilespline::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-output".into()));
    fs::create_dir_all(&out)?;
    let (m, d) = Preset::Dragon.system();
    let mask = bspline_mask(&m, &d, 2)?;
    let omega = omega_set(&mask, &d)?;
    let tf = transition_family(&mask, &d, &omega);
    let v = integer_values(&tf)?;
    println!("Ω has {} points; integer values:", omega.len());
    for (a, x) in omega.elems().iter().zip(v.iter()).filter(|(_, x)| x.abs() > 1e-12) {
        println!("  φ({a:?}) = {x:.6}");
    }
    for q in [4, 8, 12] {
        let lf = refine_values(&tf, &v, q);
        println!(
            "depth {q:>2}: {:>7} nodes, max {:.6}, partition of unity deviation {:.1e}",
            lf.values.len(),
            lf.values.values().fold(0.0f64, |a, &b| a.max(b)),
            partition_of_unity_deviation(&lf)
        );
    }
    println!("φ(0.3, 1.1) ≈ {:.6}", eval_point(&tf, &v, &[0.3, 1.1], 16));
    let lf = refine_values(&tf, &v, 8);
    lf.write_csv(BufWriter::new(File::create(out.join("dragon_b2.csv"))?))?;
    println!("wrote {}", out.join("dragon_b2.csv").display());
    Ok(())
}
